#pragma once

#include <span>

#include "crumbs/masking.hpp"

namespace crumbs {

enum class MergeMethod { breadcrumbs, task_arithmetic, ties, random_sparse };

const char* to_string(MergeMethod m);
MergeMethod merge_method_from_string(const std::string& s);

struct MergeConfig {
    MergeMethod method = MergeMethod::breadcrumbs;
    double alpha = 1.0;
    MaskSpec mask_spec;                // breadcrumbs / random_sparse
    double ties_keep_fraction = 0.2;   // ties trim level, in (0,1]
    uint64_t seed = 0;
    // The base may itself be a fine-tuned model; task vectors then carry the
    // fingerprint of the original pre-trained model, not of the merge base.
    bool allow_base_mismatch = false;

    void validate() const;
};

// Dispatch on cfg.method.
Checkpoint merge(const Checkpoint& base, std::span<const TaskVector> tvs, const MergeConfig& cfg);

// base + alpha * sum_t mask(tv_t) . tv_t, summed in ascending task_id order,
// float64 accumulation, one rounding to float32 per element.
Checkpoint merge_breadcrumbs(const Checkpoint& base, std::span<const TaskVector> tvs,
                             const MergeConfig& cfg);

Checkpoint merge_task_arithmetic(const Checkpoint& base, std::span<const TaskVector> tvs,
                                 const MergeConfig& cfg);

Checkpoint merge_random_sparse(const Checkpoint& base, std::span<const TaskVector> tvs,
                               const MergeConfig& cfg);

// Trim (global top-keep per task vector), elect sign by summed trimmed values
// (zero elects +), disjoint mean over sign-matching nonzero entries, then
// base + alpha * mean.
Checkpoint merge_ties(const Checkpoint& base, std::span<const TaskVector> tvs,
                      const MergeConfig& cfg);

} // namespace crumbs
