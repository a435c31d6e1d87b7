#include "crumbs/merging.hpp"

#include <algorithm>
#include <cmath>

#include "crumbs/fingerprint.hpp"
#include "crumbs/parallel.hpp"

namespace crumbs {

const char* to_string(MergeMethod m) {
    switch (m) {
        case MergeMethod::breadcrumbs: return "breadcrumbs";
        case MergeMethod::task_arithmetic: return "task_arithmetic";
        case MergeMethod::ties: return "ties";
        case MergeMethod::random_sparse: return "random_sparse";
    }
    return "?";
}

MergeMethod merge_method_from_string(const std::string& s) {
    if (s == "breadcrumbs") return MergeMethod::breadcrumbs;
    if (s == "task_arithmetic") return MergeMethod::task_arithmetic;
    if (s == "ties") return MergeMethod::ties;
    if (s == "random_sparse") return MergeMethod::random_sparse;
    throw ConfigError("unknown merge method '" + s + "'");
}

void MergeConfig::validate() const {
    if (!(alpha > 0.0))
        throw ConfigError("merge config: alpha must be positive, got " + std::to_string(alpha));
    if (method == MergeMethod::breadcrumbs || method == MergeMethod::random_sparse)
        mask_spec.validate();
    if (method == MergeMethod::random_sparse && mask_spec.variant != MaskVariant::random)
        throw ConfigError("merge config: random_sparse requires mask variant 'random'");
    if (method == MergeMethod::ties && !(ties_keep_fraction > 0.0 && ties_keep_fraction <= 1.0))
        throw ConfigError("merge config: ties_keep_fraction must be in (0,1], got " +
                          std::to_string(ties_keep_fraction));
}

namespace {

// Index order for ascending task_id summation; also checks fingerprints.
std::vector<size_t> check_and_order(const Checkpoint& base, std::span<const TaskVector> tvs,
                                    const MergeConfig& cfg) {
    if (tvs.empty()) throw ConfigError("merge: need at least one task vector");
    for (const auto& tv : tvs) assert_compatible(base, tv.deltas);
    for (size_t i = 1; i < tvs.size(); ++i)
        if (tvs[i].base_fingerprint != tvs[0].base_fingerprint)
            throw CompatError("merge: task '" + tvs[i].task_id +
                              "' has a different base_fingerprint than task '" + tvs[0].task_id + "'");
    if (!cfg.allow_base_mismatch && tvs[0].base_fingerprint != 0 &&
        checkpoint_fingerprint(base) != tvs[0].base_fingerprint)
        throw CompatError("merge: task vectors were not derived from this base checkpoint "
                          "(pass an explicit override to merge into a different model)");
    std::vector<size_t> order(tvs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return tvs[a].task_id < tvs[b].task_id; });
    return order;
}

Checkpoint masked_sum_merge(const Checkpoint& base, std::span<const TaskVector> tvs,
                            const MergeConfig& cfg, bool masked) {
    auto order = check_and_order(base, tvs, cfg);
    std::vector<MaskSet> masks;
    if (masked) {
        masks.reserve(tvs.size());
        for (const auto& tv : tvs)
            masks.push_back(build_mask(tv, cfg.mask_spec, derive_seed(cfg.seed, "mask.task:" + tv.task_id)));
    }
    std::vector<TensorRecord> results(base.tensors().size());
    parallel_for(base.tensors().size(), [&](size_t ti) {
        const TensorRecord& b = base.tensors()[ti];
        std::vector<double> acc(b.data.size(), 0.0);
        for (size_t k : order) {
            const TensorRecord& d = tvs[k].deltas.tensors()[ti];
            if (masked) {
                const auto& keep = masks[k].masks[ti].keep;
                for (size_t j = 0; j < acc.size(); ++j)
                    if (keep[j]) acc[j] += static_cast<double>(d.data[j]);
            } else {
                for (size_t j = 0; j < acc.size(); ++j) acc[j] += static_cast<double>(d.data[j]);
            }
        }
        TensorRecord r;
        r.name = b.name;
        r.shape = b.shape;
        r.data.resize(b.data.size());
        for (size_t j = 0; j < acc.size(); ++j)
            r.data[j] = static_cast<float>(static_cast<double>(b.data[j]) + cfg.alpha * acc[j]);
        results[ti] = std::move(r);
    });
    Checkpoint out;
    for (auto& r : results) out.add(std::move(r));
    return out;
}

} // namespace

Checkpoint merge_breadcrumbs(const Checkpoint& base, std::span<const TaskVector> tvs,
                             const MergeConfig& cfg) {
    cfg.validate();
    return masked_sum_merge(base, tvs, cfg, /*masked=*/true);
}

Checkpoint merge_task_arithmetic(const Checkpoint& base, std::span<const TaskVector> tvs,
                                 const MergeConfig& cfg) {
    cfg.validate();
    return masked_sum_merge(base, tvs, cfg, /*masked=*/false);
}

Checkpoint merge_random_sparse(const Checkpoint& base, std::span<const TaskVector> tvs,
                               const MergeConfig& cfg) {
    cfg.validate();
    if (cfg.mask_spec.variant != MaskVariant::random)
        throw ConfigError("merge_random_sparse: mask variant must be 'random'");
    return masked_sum_merge(base, tvs, cfg, /*masked=*/true);
}

Checkpoint merge_ties(const Checkpoint& base, std::span<const TaskVector> tvs,
                      const MergeConfig& cfg) {
    cfg.validate();
    auto order = check_and_order(base, tvs, cfg);

    // Trim: per task vector, keep the top ties_keep_fraction by global |.|
    // ranking, zero the rest. Expressed as a global bottom-only mask.
    MaskSpec trim_spec;
    trim_spec.beta = 1.0 - cfg.ties_keep_fraction;
    trim_spec.gamma = 1.0;
    trim_spec.scope = MaskScope::global;
    trim_spec.variant = MaskVariant::bottom_only;
    std::vector<TaskVector> trimmed;
    trimmed.reserve(tvs.size());
    for (const auto& tv : tvs) trimmed.push_back(apply_mask(tv, build_mask(tv, trim_spec)));

    Checkpoint out;
    for (size_t ti = 0; ti < base.tensors().size(); ++ti) {
        const TensorRecord& b = base.tensors()[ti];
        TensorRecord r;
        r.name = b.name;
        r.shape = b.shape;
        r.data.resize(b.data.size());
        for (size_t j = 0; j < b.data.size(); ++j) {
            double total = 0.0;
            for (size_t k : order)
                total += static_cast<double>(trimmed[k].deltas.tensors()[ti].data[j]);
            double elected = total < 0.0 ? -1.0 : 1.0; // zero total elects +
            double sum = 0.0;
            int64_t count = 0;
            for (size_t k : order) {
                double v = static_cast<double>(trimmed[k].deltas.tensors()[ti].data[j]);
                if (v != 0.0 && ((v > 0.0) == (elected > 0.0))) {
                    sum += v;
                    ++count;
                }
            }
            double mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
            r.data[j] = static_cast<float>(static_cast<double>(b.data[j]) + cfg.alpha * mean);
        }
        out.add(std::move(r));
    }
    return out;
}

Checkpoint merge(const Checkpoint& base, std::span<const TaskVector> tvs, const MergeConfig& cfg) {
    switch (cfg.method) {
        case MergeMethod::breadcrumbs: return merge_breadcrumbs(base, tvs, cfg);
        case MergeMethod::task_arithmetic: return merge_task_arithmetic(base, tvs, cfg);
        case MergeMethod::ties: return merge_ties(base, tvs, cfg);
        case MergeMethod::random_sparse: return merge_random_sparse(base, tvs, cfg);
    }
    throw ConfigError("merge: unknown method");
}

} // namespace crumbs
