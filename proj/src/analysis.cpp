#include "crumbs/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "crumbs/fingerprint.hpp"

namespace crumbs {

double normalized_accuracy(double merged_acc, double ft_acc) {
    if (!(ft_acc > 0.0))
        throw ConfigError("normalized_accuracy: fine-tuned accuracy must be > 0");
    return merged_acc / ft_acc;
}

EvalReport make_report(const std::map<std::string, double>& merged_acc,
                       const std::map<std::string, double>& finetuned_acc) {
    EvalReport rep;
    double sum = 0.0;
    for (const auto& [task, acc] : merged_acc) {
        auto it = finetuned_acc.find(task);
        if (it == finetuned_acc.end())
            throw ConfigError("make_report: no fine-tuned accuracy for task '" + task + "'");
        TaskScore s;
        s.merged_accuracy = acc;
        s.finetuned_accuracy = it->second;
        s.normalized_accuracy = normalized_accuracy(acc, it->second);
        sum += s.normalized_accuracy;
        rep.observed_tasks.push_back(task);
        rep.per_task[task] = s;
    }
    if (rep.observed_tasks.empty()) throw ConfigError("make_report: no tasks");
    rep.average_normalized_accuracy = sum / static_cast<double>(rep.observed_tasks.size());
    return rep;
}

double SimilarityMatrix::mean_abs_off_diagonal() const {
    double sum = 0.0;
    int64_t count = 0;
    size_t n = task_ids.size();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            if (i != j && values[i * n + j]) {
                sum += std::fabs(*values[i * n + j]);
                ++count;
            }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

SimilarityMatrix cosine_matrix(std::span<const TaskVector> tvs,
                               const std::optional<MaskSpec>& mask_spec, uint64_t seed) {
    if (tvs.size() < 2) throw ConfigError("cosine_matrix: need at least 2 task vectors");
    for (size_t i = 1; i < tvs.size(); ++i) assert_compatible(tvs[0].deltas, tvs[i].deltas);

    std::vector<TaskVector> masked;
    std::span<const TaskVector> use = tvs;
    if (mask_spec) {
        masked.reserve(tvs.size());
        for (const auto& tv : tvs)
            masked.push_back(apply_mask(tv, build_mask(tv, *mask_spec,
                                                       derive_seed(seed, "mask.task:" + tv.task_id))));
        use = masked;
    }

    size_t n = use.size();
    SimilarityMatrix sm;
    for (const auto& tv : use) sm.task_ids.push_back(tv.task_id);
    sm.values.assign(n * n, std::nullopt);

    std::vector<double> norms(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (const auto& t : use[i].deltas.tensors())
            for (float v : t.data) s += static_cast<double>(v) * static_cast<double>(v);
        norms[i] = std::sqrt(s);
    }
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i; j < n; ++j) {
            if (norms[i] == 0.0 || norms[j] == 0.0) continue; // undefined entry
            double dot = 0.0;
            for (size_t ti = 0; ti < use[i].deltas.tensors().size(); ++ti) {
                const auto& a = use[i].deltas.tensors()[ti].data;
                const auto& b = use[j].deltas.tensors()[ti].data;
                for (size_t k = 0; k < a.size(); ++k)
                    dot += static_cast<double>(a[k]) * static_cast<double>(b[k]);
            }
            double c = dot / (norms[i] * norms[j]);
            sm.values[i * n + j] = c;
            sm.values[j * n + i] = c;
        }
    }
    return sm;
}

std::vector<DeltaStats> delta_stats(const TaskVector& tv) {
    static const double kQuantiles[] = {0.25, 0.5, 0.75, 0.9, 0.99};
    std::vector<DeltaStats> out;
    for (const auto& t : tv.deltas.tensors()) {
        DeltaStats s;
        s.name = t.name;
        s.size = t.numel();
        if (s.size == 0) {
            out.push_back(std::move(s));
            continue;
        }
        std::vector<double> mags;
        mags.reserve(t.data.size());
        double sum = 0.0;
        for (float v : t.data) {
            double m = std::fabs(static_cast<double>(v));
            mags.push_back(m);
            sum += m;
        }
        std::sort(mags.begin(), mags.end());
        s.min_abs = mags.front();
        s.max_abs = mags.back();
        s.mean_abs = sum / static_cast<double>(mags.size());
        for (double q : kQuantiles) {
            int64_t idx = std::min<int64_t>(tail_count(q, s.size), s.size - 1);
            s.quantiles[q] = mags[static_cast<size_t>(idx)];
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace crumbs
