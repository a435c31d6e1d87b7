#pragma once

#include <functional>

#include "crumbs/analysis.hpp"
#include "crumbs/merging.hpp"

namespace crumbs {

// Returns per-task accuracy of a merged model on the given tasks.
using Evaluator = std::function<std::map<std::string, double>(
    const Checkpoint& merged, const std::vector<std::string>& task_ids)>;

struct GridSpec {
    std::vector<double> alphas;
    std::vector<double> betas = {0.0};
    std::vector<double> gammas = {1.0};
    std::vector<double> ties_keeps = {0.2};
    MergeMethod method = MergeMethod::breadcrumbs;
    MaskScope scope = MaskScope::per_layer;
    MaskVariant variant = MaskVariant::two_tailed;

    // Deduplicated, sorted, validity-filtered cross product (beta > gamma
    // cells are skipped). Deterministic ordering.
    std::vector<MergeConfig> expand(uint64_t seed) const;

    // Grid centered on the operating points the method is typically run at.
    static GridSpec defaults(MergeMethod method);
};

struct SweepEntry {
    MergeConfig config;
    EvalReport report;
    double wall_seconds = 0.0;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    size_t best = 0; // max average_normalized_accuracy, ties -> smallest (alpha, beta, gamma)
};

SweepResult grid_search(const Checkpoint& base, std::span<const TaskVector> tvs,
                        const GridSpec& grid, const Evaluator& evaluator,
                        const std::map<std::string, double>& finetuned_acc, uint64_t seed = 0);

// Tune on the first k tasks, freeze the winner, then merge the first n tasks
// for n = k..|tvs| and evaluate over all n observed tasks. One report per n.
struct ValidationFreeResult {
    MergeConfig frozen;
    SweepResult tuning; // grid search over the first k tasks
    std::vector<EvalReport> reports; // n = k .. |tvs|
};

ValidationFreeResult validation_free_run(const Checkpoint& base, std::span<const TaskVector> tvs,
                                         size_t k, const GridSpec& grid, const Evaluator& evaluator,
                                         const std::map<std::string, double>& finetuned_acc,
                                         uint64_t seed = 0);

enum class EvalScope { all_tasks, observed_only };

struct SubsetEntry {
    std::vector<std::string> task_ids;
    EvalReport report;
};

struct SubsetScanResult {
    std::vector<SubsetEntry> entries; // every non-empty subset, bitmask order
    std::map<size_t, double> mean_by_size; // mean avg normalized accuracy per subset size
};

// Guard: at most 12 task vectors (2^n subsets).
SubsetScanResult subset_scan(const Checkpoint& base, std::span<const TaskVector> tvs,
                             const MergeConfig& cfg, const Evaluator& evaluator,
                             const std::map<std::string, double>& finetuned_acc,
                             EvalScope eval_scope);

} // namespace crumbs
