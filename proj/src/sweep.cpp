#include "crumbs/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <tuple>

namespace crumbs {

namespace {

std::vector<double> clean_axis(std::vector<double> v, const char* name) {
    if (v.empty()) throw ConfigError(std::string("grid: empty ") + name + " axis");
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::tuple<double, double, double> config_key(const MergeConfig& c) {
    return {c.alpha, c.mask_spec.beta, c.mask_spec.gamma};
}

} // namespace

std::vector<MergeConfig> GridSpec::expand(uint64_t seed) const {
    auto alphas_c = clean_axis(alphas, "alpha");
    auto betas_c = clean_axis(betas, "beta");
    auto gammas_c = clean_axis(gammas, "gamma");
    auto keeps_c = clean_axis(ties_keeps, "ties_keep");

    std::vector<MergeConfig> out;
    auto push = [&](double a, double b, double g, double keep) {
        MergeConfig cfg;
        cfg.method = method;
        cfg.alpha = a;
        cfg.mask_spec.beta = b;
        cfg.mask_spec.gamma = g;
        cfg.mask_spec.scope = scope;
        cfg.mask_spec.variant = method == MergeMethod::random_sparse ? MaskVariant::random : variant;
        cfg.ties_keep_fraction = keep;
        cfg.seed = seed;
        cfg.validate();
        out.push_back(cfg);
    };

    switch (method) {
        case MergeMethod::breadcrumbs:
        case MergeMethod::random_sparse:
            for (double a : alphas_c)
                for (double b : betas_c)
                    for (double g : gammas_c)
                        if (b <= g) push(a, b, g, keeps_c.front());
            break;
        case MergeMethod::task_arithmetic:
            for (double a : alphas_c) push(a, 0.0, 1.0, keeps_c.front());
            break;
        case MergeMethod::ties:
            for (double a : alphas_c)
                for (double keep : keeps_c) push(a, 0.0, 1.0, keep);
            break;
    }
    if (out.empty()) throw ConfigError("grid: no valid cells (beta > gamma everywhere?)");
    return out;
}

GridSpec GridSpec::defaults(MergeMethod method) {
    GridSpec g;
    g.method = method;
    g.alphas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    if (method == MergeMethod::breadcrumbs || method == MergeMethod::random_sparse) {
        g.betas = {0.0, 0.5, 0.8, 0.85, 0.9, 0.95};
        g.gammas = {0.99, 0.992, 0.994, 0.996, 0.998, 1.0};
    }
    if (method == MergeMethod::ties) g.ties_keeps = {0.1, 0.2, 0.3};
    return g;
}

SweepResult grid_search(const Checkpoint& base, std::span<const TaskVector> tvs,
                        const GridSpec& grid, const Evaluator& evaluator,
                        const std::map<std::string, double>& finetuned_acc, uint64_t seed) {
    if (tvs.empty()) throw ConfigError("grid_search: no task vectors");
    std::vector<std::string> task_ids;
    for (const auto& tv : tvs) task_ids.push_back(tv.task_id);
    std::sort(task_ids.begin(), task_ids.end());

    SweepResult res;
    for (const MergeConfig& cfg : grid.expand(seed)) {
        auto t0 = std::chrono::steady_clock::now();
        Checkpoint merged;
        std::map<std::string, double> scores;
        try {
            merged = merge(base, tvs, cfg);
            scores = evaluator(merged, task_ids);
        } catch (const Error& e) {
            throw Error(std::string(e.what()) + " [config: method=" + to_string(cfg.method) +
                        " alpha=" + std::to_string(cfg.alpha) +
                        " beta=" + std::to_string(cfg.mask_spec.beta) +
                        " gamma=" + std::to_string(cfg.mask_spec.gamma) + "]");
        }
        SweepEntry entry;
        entry.config = cfg;
        entry.report = make_report(scores, finetuned_acc);
        entry.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.entries.push_back(std::move(entry));
    }
    res.best = 0;
    for (size_t i = 1; i < res.entries.size(); ++i) {
        double si = res.entries[i].report.average_normalized_accuracy;
        double sb = res.entries[res.best].report.average_normalized_accuracy;
        if (si > sb ||
            (si == sb && config_key(res.entries[i].config) < config_key(res.entries[res.best].config)))
            res.best = i;
    }
    return res;
}

ValidationFreeResult validation_free_run(const Checkpoint& base, std::span<const TaskVector> tvs,
                                         size_t k, const GridSpec& grid, const Evaluator& evaluator,
                                         const std::map<std::string, double>& finetuned_acc,
                                         uint64_t seed) {
    if (k < 1 || k > tvs.size())
        throw ConfigError("validation_free_run: k must be in [1, " + std::to_string(tvs.size()) + "]");
    ValidationFreeResult out;
    out.tuning = grid_search(base, tvs.subspan(0, k), grid, evaluator, finetuned_acc, seed);
    out.frozen = out.tuning.entries[out.tuning.best].config;
    for (size_t n = k; n <= tvs.size(); ++n) {
        auto head = tvs.subspan(0, n);
        Checkpoint merged = merge(base, head, out.frozen);
        std::vector<std::string> observed;
        for (const auto& tv : head) observed.push_back(tv.task_id);
        std::sort(observed.begin(), observed.end());
        out.reports.push_back(make_report(evaluator(merged, observed), finetuned_acc));
    }
    return out;
}

SubsetScanResult subset_scan(const Checkpoint& base, std::span<const TaskVector> tvs,
                             const MergeConfig& cfg, const Evaluator& evaluator,
                             const std::map<std::string, double>& finetuned_acc,
                             EvalScope eval_scope) {
    if (tvs.empty()) throw ConfigError("subset_scan: no task vectors");
    if (tvs.size() > 12)
        throw ConfigError("subset_scan: at most 12 task vectors (2^n subsets), got " +
                          std::to_string(tvs.size()));
    std::vector<std::string> all_ids;
    for (const auto& tv : tvs) all_ids.push_back(tv.task_id);
    std::sort(all_ids.begin(), all_ids.end());

    SubsetScanResult res;
    std::map<size_t, std::pair<double, int64_t>> agg; // size -> (sum, count)
    for (uint64_t mask = 1; mask < (uint64_t{1} << tvs.size()); ++mask) {
        std::vector<TaskVector> subset;
        for (size_t i = 0; i < tvs.size(); ++i)
            if (mask & (uint64_t{1} << i)) subset.push_back(tvs[i]);
        Checkpoint merged = merge(base, subset, cfg);
        std::vector<std::string> observed;
        for (const auto& tv : subset) observed.push_back(tv.task_id);
        std::sort(observed.begin(), observed.end());
        const std::vector<std::string>& eval_ids =
            eval_scope == EvalScope::all_tasks ? all_ids : observed;
        SubsetEntry e;
        e.task_ids = observed;
        e.report = make_report(evaluator(merged, eval_ids), finetuned_acc);
        auto& [sum, count] = agg[subset.size()];
        sum += e.report.average_normalized_accuracy;
        ++count;
        res.entries.push_back(std::move(e));
    }
    for (const auto& [size, sc] : agg)
        res.mean_by_size[size] = sc.first / static_cast<double>(sc.second);
    return res;
}

} // namespace crumbs
