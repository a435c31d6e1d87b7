#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crumbs/masking.hpp"

namespace crumbs {

struct TaskScore {
    double merged_accuracy = 0.0;
    double finetuned_accuracy = 0.0;
    double normalized_accuracy = 0.0;
};

struct EvalReport {
    std::map<std::string, TaskScore> per_task;
    double average_normalized_accuracy = 0.0;
    std::vector<std::string> observed_tasks;
};

// merged_acc / ft_acc. May exceed 1. Throws on ft_acc == 0.
double normalized_accuracy(double merged_acc, double ft_acc);

// Builds a report from raw accuracies; average over observed tasks.
EvalReport make_report(const std::map<std::string, double>& merged_acc,
                       const std::map<std::string, double>& finetuned_acc);

struct SimilarityMatrix {
    std::vector<std::string> task_ids;
    // row-major task_ids.size()^2; nullopt where a zero-norm vector makes the
    // cosine undefined.
    std::vector<std::optional<double>> values;

    std::optional<double> at(size_t i, size_t j) const { return values[i * task_ids.size() + j]; }
    // Mean |cos| over i != j pairs with defined entries.
    double mean_abs_off_diagonal() const;
};

// Pairwise cosine over full flattened parameter vectors, float64 accumulation.
// With a mask spec, each vector is masked with its own mask before flattening.
SimilarityMatrix cosine_matrix(std::span<const TaskVector> tvs,
                               const std::optional<MaskSpec>& mask_spec = std::nullopt,
                               uint64_t seed = 0);

struct DeltaStats {
    std::string name;
    int64_t size = 0;
    double min_abs = 0.0;
    double max_abs = 0.0;
    double mean_abs = 0.0;
    // |value| quantiles at 0.25 / 0.5 / 0.75 / 0.9 / 0.99 by the masking rank
    // convention (index floor(q*N) of the ascending sort, clamped).
    std::map<double, double> quantiles;
};

std::vector<DeltaStats> delta_stats(const TaskVector& tv);

} // namespace crumbs
