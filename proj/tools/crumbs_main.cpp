// crumbs: merge fine-tuned model checkpoints via two-tailed sparse masking,
// with task-arithmetic / TIES / random-sparse baselines, analysis tools, a
// hyperparameter sweep harness and a synthetic fixture lab.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "crumbs/analysis.hpp"
#include "crumbs/fingerprint.hpp"
#include "crumbs/fixture.hpp"
#include "crumbs/io.hpp"
#include "crumbs/merging.hpp"
#include "crumbs/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace crumbs;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// exit 1 usage, 2 data, 3 runtime
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

// Failed runs must leave no truncated outputs: write to a temp name in the
// same directory, rename into place once complete.
void write_checkpoint_atomic(const Checkpoint& ckpt, const fs::path& path) {
    fs::path tmp = path;
    tmp += ".tmp";
    write_checkpoint(ckpt, tmp);
    fs::rename(tmp, path);
}

void write_text_atomic(const std::string& text, const fs::path& path) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        os << text;
        if (!os) throw Error("I/O failure writing '" + path.string() + "'");
    }
    fs::rename(tmp, path);
}

void write_recipe(const json& recipe, const fs::path& path) {
    write_text_atomic(recipe.dump(2) + "\n", path);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Round-trippable form for machine-readable dumps, so downstream
// recomputations from the CSVs can match the in-process values exactly.
std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string shape_str(const std::vector<int64_t>& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// ---------------------------------------------------------------------------
// Shared option blocks

struct MaskOpts {
    double beta = 0.0;
    double gamma = 1.0;
    std::string variant = "two_tailed";
    std::string scope = "per_layer";

    void attach(CLI::App* cmd) {
        cmd->add_option("--beta", beta, "left-tail mask fraction (smallest magnitudes)")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--gamma", gamma, "right-tail quantile; the top (1-gamma) is masked")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--variant", variant, "mask variant")
            ->check(CLI::IsMember({"two_tailed", "bottom_only", "top_only", "none", "random"}));
        cmd->add_option("--scope", scope, "mask scope")
            ->check(CLI::IsMember({"per_layer", "global"}));
    }

    MaskSpec spec() const {
        MaskSpec s;
        s.beta = beta;
        s.gamma = gamma;
        s.variant = mask_variant_from_string(variant);
        s.scope = mask_scope_from_string(scope);
        s.validate();
        return s;
    }
};

std::vector<TaskVector> load_vectors(const std::vector<std::string>& paths) {
    std::vector<TaskVector> tvs;
    for (const auto& p : paths) tvs.push_back(load_task_vector(p));
    return tvs;
}

// ---------------------------------------------------------------------------
// Fixture directory layout helpers (produced by `fixtures`, consumed by
// `sweep` and `subsets`).

struct FixtureDir {
    Checkpoint base;
    std::vector<std::string> task_ids;
    std::vector<TaskVector> vectors;
    std::map<std::string, SplitDataset> datasets;
    std::map<std::string, double> ft_val_acc, ft_test_acc;
};

FixtureDir load_fixture_dir(const fs::path& dir) {
    FixtureDir fd;
    fd.base = read_checkpoint(dir / "base.mbc");
    std::ifstream accs(dir / "accuracies.json");
    if (!accs) throw Error("missing '" + (dir / "accuracies.json").string() + "'");
    json j = json::parse(accs);
    for (auto& [task, entry] : j.items()) {
        fd.task_ids.push_back(task);
        fd.ft_val_acc[task] = entry.at("val").get<double>();
        fd.ft_test_acc[task] = entry.at("test").get<double>();
    }
    std::sort(fd.task_ids.begin(), fd.task_ids.end());
    for (const auto& id : fd.task_ids) {
        fd.vectors.push_back(load_task_vector(dir / "vectors" / (id + ".mbc")));
        fd.datasets[id] = load_dataset(dir / "datasets" / (id + ".mbc"));
    }
    return fd;
}

Evaluator make_evaluator(const FixtureDir& fd, const std::string& split) {
    return [&fd, split](const Checkpoint& merged, const std::vector<std::string>& ids) {
        std::map<std::string, double> acc;
        for (const auto& id : ids) {
            auto it = fd.datasets.find(id);
            if (it == fd.datasets.end()) throw Error("no dataset for task '" + id + "'");
            const Dataset& ds = split == "test" ? it->second.test
                              : split == "train" ? it->second.train
                                                 : it->second.val;
            acc[id] = evaluate(merged, ds);
        }
        return acc;
    };
}

const std::map<std::string, double>& ft_acc_for_split(const FixtureDir& fd,
                                                      const std::string& split) {
    return split == "test" ? fd.ft_test_acc : fd.ft_val_acc;
}

json report_to_json(const EvalReport& rep) {
    json per_task = json::object();
    for (const auto& [task, s] : rep.per_task)
        per_task[task] = {{"merged_accuracy", s.merged_accuracy},
                          {"finetuned_accuracy", s.finetuned_accuracy},
                          {"normalized_accuracy", s.normalized_accuracy}};
    return {{"per_task", per_task},
            {"average_normalized_accuracy", rep.average_normalized_accuracy},
            {"observed_tasks", rep.observed_tasks}};
}

json config_to_json(const MergeConfig& cfg) {
    return {{"method", to_string(cfg.method)},
            {"alpha", cfg.alpha},
            {"beta", cfg.mask_spec.beta},
            {"gamma", cfg.mask_spec.gamma},
            {"variant", to_string(cfg.mask_spec.variant)},
            {"scope", to_string(cfg.mask_spec.scope)},
            {"ties_keep_fraction", cfg.ties_keep_fraction},
            {"seed", cfg.seed}};
}

// ---------------------------------------------------------------------------
// Subcommands

struct InspectCmd {
    std::string path;
    bool as_json = false;

    int run() const {
        Checkpoint c = read_checkpoint(path);
        if (as_json) {
            json tensors = json::array();
            for (const auto& t : c.tensors())
                tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"numel", t.numel()}});
            json meta = json::object();
            for (const auto& [k, v] : c.metadata()) meta[k] = v;
            std::cout << json{{"tensors", tensors},
                              {"metadata", meta},
                              {"total_params", c.total_params()},
                              {"fingerprint", std::to_string(checkpoint_fingerprint(c))}}
                             .dump(2)
                      << "\n";
            return 0;
        }
        if (!c.metadata().empty()) {
            std::cout << "metadata:\n";
            for (const auto& [k, v] : c.metadata()) std::cout << "  " << k << " = " << v << "\n";
        }
        bool is_mask = c.metadata().count("kind") && c.metadata().at("kind") == "mask";
        std::cout << std::left << std::setw(28) << "name" << std::setw(14) << "shape"
                  << std::setw(10) << "numel";
        if (is_mask) std::cout << "kept";
        std::cout << "\n";
        for (const auto& t : c.tensors()) {
            std::cout << std::left << std::setw(28) << t.name << std::setw(14)
                      << shape_str(t.shape) << std::setw(10) << t.numel();
            if (is_mask && t.numel() > 0) {
                int64_t kept = 0;
                for (float v : t.data) kept += v != 0.0f;
                std::cout << fmt(static_cast<double>(kept) / static_cast<double>(t.numel()));
            }
            std::cout << "\n";
        }
        std::cout << "total params: " << c.total_params() << "\n";
        return 0;
    }
};

struct DiffCmd {
    std::string base_path, finetuned_path, task_id, out;

    int run() const {
        Checkpoint base = read_checkpoint(base_path);
        Checkpoint ft = read_checkpoint(finetuned_path);
        TaskVector tv = diff(base, ft, task_id);
        fs::path tmp = fs::path(out).concat(".tmp");
        save_task_vector(tv, tmp);
        fs::rename(tmp, out);
        json recipe = {{"command", "diff"}, {"base", base_path}, {"finetuned", finetuned_path},
                       {"task_id", task_id}, {"out", out}, {"tool_version", kToolVersion}};
        write_recipe(recipe, out + ".recipe.json");
        std::cout << "wrote " << out << " (task '" << task_id << "', "
                  << tv.deltas.total_params() << " params)\n";
        return 0;
    }
};

struct MaskCmd {
    std::string vector_path, out;
    MaskOpts mask;
    uint64_t seed = 0;
    bool as_json = false;

    int run() const {
        TaskVector tv = load_task_vector(vector_path);
        MaskSpec spec = mask.spec();
        MaskSet ms = build_mask(tv, spec, seed);
        fs::path tmp = fs::path(out).concat(".tmp");
        save_mask(ms, spec, seed, tmp);
        fs::rename(tmp, out);
        SparsityReport rep = sparsity_report(ms);
        if (as_json) {
            json per = json::array();
            for (const auto& e : rep.per_tensor)
                per.push_back({{"name", e.name},
                               {"kept", e.kept},
                               {"size", e.size},
                               {"kept_fraction",
                                e.kept_fraction ? json(*e.kept_fraction) : json(nullptr)}});
            std::cout << json{{"per_tensor", per},
                              {"total_kept_fraction", rep.total_kept_fraction},
                              {"total_masked_fraction", 1.0 - rep.total_kept_fraction}}
                             .dump(2)
                      << "\n";
        } else {
            for (const auto& e : rep.per_tensor)
                std::cout << std::left << std::setw(28) << e.name << e.kept << "/" << e.size << "  "
                          << (e.kept_fraction ? fmt(*e.kept_fraction) : "n/a") << "\n";
            std::cout << "total kept fraction: " << fmt(rep.total_kept_fraction)
                      << " (masked " << fmt(1.0 - rep.total_kept_fraction) << ")\n";
        }
        json recipe = {{"command", "mask"}, {"vector", vector_path},
                       {"beta", spec.beta}, {"gamma", spec.gamma},
                       {"variant", to_string(spec.variant)}, {"scope", to_string(spec.scope)},
                       {"seed", seed}, {"out", out}, {"tool_version", kToolVersion}};
        write_recipe(recipe, out + ".recipe.json");
        return 0;
    }
};

struct MergeCmd {
    std::string method = "breadcrumbs";
    std::string base_path, out;
    std::vector<std::string> vector_paths;
    double alpha = 0.3;
    MaskOpts mask;
    double ties_keep = 0.2;
    uint64_t seed = 0;
    bool allow_base_mismatch = false;

    int run() const {
        MergeConfig cfg;
        cfg.method = merge_method_from_string(method);
        cfg.alpha = alpha;
        cfg.mask_spec = mask.spec();
        if (cfg.method == MergeMethod::random_sparse) cfg.mask_spec.variant = MaskVariant::random;
        cfg.ties_keep_fraction = ties_keep;
        cfg.seed = seed;
        cfg.allow_base_mismatch = allow_base_mismatch;
        cfg.validate(); // fail before touching any file

        Checkpoint base = read_checkpoint(base_path);
        std::vector<TaskVector> tvs = load_vectors(vector_paths);
        Checkpoint merged = merge(base, tvs, cfg);

        merged.metadata()["method"] = to_string(cfg.method);
        merged.metadata()["alpha"] = fmt(cfg.alpha);
        merged.metadata()["beta"] = fmt(cfg.mask_spec.beta);
        merged.metadata()["gamma"] = fmt(cfg.mask_spec.gamma);
        merged.metadata()["seed"] = std::to_string(cfg.seed);
        merged.metadata()["tool_version"] = kToolVersion;
        std::string ids;
        for (const auto& tv : tvs) ids += (ids.empty() ? "" : ",") + tv.task_id;
        merged.metadata()["task_ids"] = ids;
        write_checkpoint_atomic(merged, out);

        json recipe = config_to_json(cfg);
        recipe["command"] = "merge";
        recipe["base"] = base_path;
        recipe["vectors"] = vector_paths;
        recipe["out"] = out;
        recipe["allow_base_mismatch"] = allow_base_mismatch;
        recipe["tool_version"] = kToolVersion;
        write_recipe(recipe, out + ".recipe.json");
        std::cout << "wrote " << out << " (" << to_string(cfg.method) << ", " << tvs.size()
                  << " tasks)\n";
        return 0;
    }
};

struct CosineCmd {
    std::vector<std::string> vector_paths;
    bool masked = false;
    MaskOpts mask;
    uint64_t seed = 0;
    bool as_json = false;
    std::string csv_out;

    int run() const {
        std::vector<TaskVector> tvs = load_vectors(vector_paths);
        std::optional<MaskSpec> spec;
        if (masked) spec = mask.spec();
        SimilarityMatrix sm = cosine_matrix(tvs, spec, seed);
        size_t n = sm.task_ids.size();
        auto cell = [&](size_t i, size_t j) {
            auto v = sm.at(i, j);
            return v ? fmt(*v) : std::string("undefined");
        };
        if (as_json) {
            json rows = json::array();
            for (size_t i = 0; i < n; ++i) {
                json row = json::array();
                for (size_t j = 0; j < n; ++j) {
                    auto v = sm.at(i, j);
                    row.push_back(v ? json(*v) : json(nullptr));
                }
                rows.push_back(row);
            }
            std::cout << json{{"task_ids", sm.task_ids},
                              {"values", rows},
                              {"mean_abs_off_diagonal", sm.mean_abs_off_diagonal()}}
                             .dump(2)
                      << "\n";
        } else {
            std::cout << std::left << std::setw(12) << "";
            for (const auto& id : sm.task_ids) std::cout << std::setw(12) << id;
            std::cout << "\n";
            for (size_t i = 0; i < n; ++i) {
                std::cout << std::left << std::setw(12) << sm.task_ids[i];
                for (size_t j = 0; j < n; ++j) std::cout << std::setw(12) << cell(i, j);
                std::cout << "\n";
            }
            std::cout << "mean |cos| off-diagonal: " << fmt(sm.mean_abs_off_diagonal()) << "\n";
        }
        if (!csv_out.empty()) {
            std::string csv = "task_id";
            for (const auto& id : sm.task_ids) csv += "," + id;
            csv += "\n";
            for (size_t i = 0; i < n; ++i) {
                csv += sm.task_ids[i];
                for (size_t j = 0; j < n; ++j) csv += "," + cell(i, j);
                csv += "\n";
            }
            write_text_atomic(csv, csv_out);
        }
        return 0;
    }
};

struct FixturesCmd {
    std::string out_dir;
    uint64_t seed = 0;
    int64_t num_tasks = 8;
    int64_t input_dim = 32;
    int64_t num_classes = 5;
    int64_t train_size = 512;
    int64_t val_size = 384;
    int64_t test_size = 512;
    double noise_sigma = 1.1;
    double class_sep = 2.2;
    double task_shift = 1.4;
    int64_t pretrain_epochs = 12;
    int64_t finetune_epochs = 8;
    double learning_rate = 0.05;

    FixtureFamilyConfig config() const {
        FixtureFamilyConfig cfg;
        cfg.num_tasks = num_tasks;
        cfg.input_dim = input_dim;
        cfg.num_classes = num_classes;
        cfg.train_size = train_size;
        cfg.val_size = val_size;
        cfg.test_size = test_size;
        cfg.noise_sigma = noise_sigma;
        cfg.class_sep = class_sep;
        cfg.task_shift = task_shift;
        cfg.pretrain_cfg.epochs = pretrain_epochs;
        cfg.pretrain_cfg.learning_rate = learning_rate;
        cfg.finetune_cfg.epochs = finetune_epochs;
        cfg.finetune_cfg.learning_rate = learning_rate;
        cfg.seed = seed;
        return cfg;
    }

    int run() const {
        FixtureFamilyConfig cfg = config();
        FixtureFamily fam = build_fixture_family(cfg);
        fs::create_directories(fs::path(out_dir) / "datasets");
        fs::create_directories(fs::path(out_dir) / "models");
        fs::create_directories(fs::path(out_dir) / "vectors");

        write_checkpoint_atomic(fam.base, fs::path(out_dir) / "base.mbc");
        json accs = json::object();
        for (size_t i = 0; i < fam.task_ids.size(); ++i) {
            const std::string& id = fam.task_ids[i];
            std::map<std::string, std::string> meta{{"task_id", id}};
            fs::path dpath = fs::path(out_dir) / "datasets" / (id + ".mbc");
            fs::path dtmp = dpath;
            dtmp += ".tmp";
            save_dataset(fam.datasets.at(id), meta, dtmp);
            fs::rename(dtmp, dpath);
            write_checkpoint_atomic(fam.finetuned.at(id), fs::path(out_dir) / "models" / (id + ".mbc"));
            fs::path vpath = fs::path(out_dir) / "vectors" / (id + ".mbc");
            fs::path vtmp = vpath;
            vtmp += ".tmp";
            save_task_vector(fam.task_vectors[i], vtmp);
            fs::rename(vtmp, vpath);
            accs[id] = {{"val", fam.finetuned_val_acc.at(id)},
                        {"test", fam.finetuned_test_acc.at(id)}};
        }
        write_text_atomic(accs.dump(2) + "\n", fs::path(out_dir) / "accuracies.json");

        json recipe = {{"command", "fixtures"}, {"seed", seed}, {"num_tasks", num_tasks},
                       {"input_dim", input_dim}, {"num_classes", num_classes},
                       {"train_size", train_size}, {"val_size", val_size}, {"test_size", test_size},
                       {"noise_sigma", noise_sigma}, {"class_sep", class_sep},
                       {"task_shift", task_shift}, {"pretrain_epochs", pretrain_epochs},
                       {"finetune_epochs", finetune_epochs}, {"learning_rate", learning_rate},
                       {"hidden_dims", cfg.pretrain_cfg.hidden_dims}, {"out", out_dir},
                       {"tool_version", kToolVersion}};
        write_recipe(recipe, fs::path(out_dir) / "recipe.resolved.json");

        std::cout << std::left << std::setw(10) << "task" << std::setw(12) << "ft val acc"
                  << "ft test acc\n";
        for (const auto& id : fam.task_ids)
            std::cout << std::left << std::setw(10) << id << std::setw(12)
                      << fmt(fam.finetuned_val_acc.at(id)) << fmt(fam.finetuned_test_acc.at(id))
                      << "\n";
        return 0;
    }
};

struct SweepCmd {
    std::string fixtures_dir, out_dir;
    std::string method = "breadcrumbs";
    std::string split = "val";
    std::string variant = "two_tailed";
    std::string scope = "per_layer";
    std::vector<double> alphas, betas, gammas, ties_keeps;
    uint64_t seed = 0;
    size_t validation_free_k = 0; // 0 = plain grid search
    bool as_json = false;

    GridSpec grid() const {
        GridSpec g = GridSpec::defaults(merge_method_from_string(method));
        if (!alphas.empty()) g.alphas = alphas;
        if (!betas.empty()) g.betas = betas;
        if (!gammas.empty()) g.gammas = gammas;
        if (!ties_keeps.empty()) g.ties_keeps = ties_keeps;
        g.scope = mask_scope_from_string(scope);
        g.variant = mask_variant_from_string(variant);
        return g;
    }

    int run() const {
        FixtureDir fd = load_fixture_dir(fixtures_dir);
        Evaluator ev = make_evaluator(fd, split);
        const auto& ft_acc = ft_acc_for_split(fd, split);
        GridSpec g = grid();
        fs::create_directories(out_dir);

        json recipe = {{"command", "sweep"}, {"fixtures", fixtures_dir}, {"method", method},
                       {"split", split}, {"alphas", g.alphas}, {"betas", g.betas},
                       {"gammas", g.gammas}, {"ties_keeps", g.ties_keeps},
                       {"variant", variant}, {"scope", scope}, {"seed", seed},
                       {"validation_free_k", validation_free_k}, {"out", out_dir},
                       {"tool_version", kToolVersion}};
        write_recipe(recipe, fs::path(out_dir) / "recipe.resolved.json");

        if (validation_free_k > 0) {
            ValidationFreeResult res = validation_free_run(fd.base, fd.vectors, validation_free_k,
                                                           g, ev, ft_acc, seed);
            json out = {{"frozen_config", config_to_json(res.frozen)},
                        {"reports", json::array()}};
            for (size_t i = 0; i < res.reports.size(); ++i) {
                json r = report_to_json(res.reports[i]);
                r["num_tasks"] = validation_free_k + i;
                out["reports"].push_back(r);
            }
            write_text_atomic(out.dump(2) + "\n", fs::path(out_dir) / "validation_free.json");
            if (as_json) {
                std::cout << out.dump(2) << "\n";
            } else {
                std::cout << "frozen: " << config_to_json(res.frozen).dump() << "\n";
                std::cout << std::left << std::setw(8) << "n" << "avg normalized acc\n";
                for (size_t i = 0; i < res.reports.size(); ++i)
                    std::cout << std::left << std::setw(8) << validation_free_k + i
                              << fmt(res.reports[i].average_normalized_accuracy) << "\n";
            }
            return 0;
        }

        SweepResult res = grid_search(fd.base, fd.vectors, g, ev, ft_acc, seed);
        std::string csv = "method,alpha,beta,gamma,ties_keep,avg_normalized_accuracy,wall_seconds\n";
        json entries = json::array();
        for (const auto& e : res.entries) {
            csv += std::string(to_string(e.config.method)) + "," + fmt(e.config.alpha) + "," +
                   fmt(e.config.mask_spec.beta) + "," + fmt(e.config.mask_spec.gamma) + "," +
                   fmt(e.config.ties_keep_fraction) + "," +
                   fmt_full(e.report.average_normalized_accuracy) + "," + fmt(e.wall_seconds) +
                   "\n";
            json je = {{"config", config_to_json(e.config)},
                       {"report", report_to_json(e.report)},
                       {"wall_seconds", e.wall_seconds}};
            entries.push_back(je);
        }
        json out = {{"entries", entries}, {"best", res.best}};
        write_text_atomic(csv, fs::path(out_dir) / "entries.csv");
        write_text_atomic(out.dump(2) + "\n", fs::path(out_dir) / "sweep.json");

        const SweepEntry& best = res.entries[res.best];
        if (as_json) {
            std::cout << json{{"best_config", config_to_json(best.config)},
                              {"best_report", report_to_json(best.report)}}
                             .dump(2)
                      << "\n";
        } else {
            std::cout << res.entries.size() << " configurations evaluated\n";
            std::cout << "best: " << config_to_json(best.config).dump() << "\n";
            std::cout << "avg normalized accuracy (" << split
                      << "): " << fmt(best.report.average_normalized_accuracy) << "\n";
        }
        return 0;
    }
};

struct SubsetsCmd {
    std::string fixtures_dir, out_dir;
    std::string method = "breadcrumbs";
    std::string split = "val";
    std::string eval_scope = "observed_only";
    double alpha = 0.3;
    MaskOpts mask;
    double ties_keep = 0.2;
    uint64_t seed = 0;

    int run() const {
        FixtureDir fd = load_fixture_dir(fixtures_dir);
        Evaluator ev = make_evaluator(fd, split);
        MergeConfig cfg;
        cfg.method = merge_method_from_string(method);
        cfg.alpha = alpha;
        cfg.mask_spec = mask.spec();
        if (cfg.method == MergeMethod::random_sparse) cfg.mask_spec.variant = MaskVariant::random;
        cfg.ties_keep_fraction = ties_keep;
        cfg.seed = seed;
        cfg.validate();
        EvalScope scope_e =
            eval_scope == "all_tasks" ? EvalScope::all_tasks : EvalScope::observed_only;

        SubsetScanResult res =
            subset_scan(fd.base, fd.vectors, cfg, ev, ft_acc_for_split(fd, split), scope_e);
        fs::create_directories(out_dir);

        std::string csv = "subset,size,avg_normalized_accuracy\n";
        for (const auto& e : res.entries) {
            std::string subset;
            for (const auto& id : e.task_ids) subset += (subset.empty() ? "" : "+") + id;
            csv += subset + "," + std::to_string(e.task_ids.size()) + "," +
                   fmt_full(e.report.average_normalized_accuracy) + "\n";
        }
        write_text_atomic(csv, fs::path(out_dir) / "subsets.csv");
        std::string mcsv = "size,mean_avg_normalized_accuracy\n";
        for (const auto& [size, mean] : res.mean_by_size)
            mcsv += std::to_string(size) + "," + fmt_full(mean) + "\n";
        write_text_atomic(mcsv, fs::path(out_dir) / "mean_by_size.csv");

        json recipe = {{"command", "subsets"}, {"fixtures", fixtures_dir},
                       {"config", config_to_json(cfg)}, {"split", split},
                       {"eval_scope", eval_scope}, {"out", out_dir},
                       {"tool_version", kToolVersion}};
        write_recipe(recipe, fs::path(out_dir) / "recipe.resolved.json");

        std::cout << res.entries.size() << " subsets evaluated\n";
        std::cout << std::left << std::setw(8) << "size" << "mean avg normalized acc\n";
        for (const auto& [size, mean] : res.mean_by_size)
            std::cout << std::left << std::setw(8) << size << fmt(mean) << "\n";
        return 0;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"crumbs: sparse-masked model merging toolkit"};
    app.require_subcommand(1);

    InspectCmd inspect;
    auto* c_inspect = app.add_subcommand("inspect", "show a checkpoint's tensor table");
    c_inspect->add_option("file", inspect.path, "checkpoint file")->required();
    c_inspect->add_flag("--json", inspect.as_json, "structured output");

    DiffCmd diff_cmd;
    auto* c_diff = app.add_subcommand("diff", "task vector = finetuned - base");
    c_diff->add_option("--base", diff_cmd.base_path)->required();
    c_diff->add_option("--finetuned", diff_cmd.finetuned_path)->required();
    c_diff->add_option("--task-id", diff_cmd.task_id)->required();
    c_diff->add_option("--out", diff_cmd.out)->required();

    MaskCmd mask_cmd;
    auto* c_mask = app.add_subcommand("mask", "build a magnitude mask for a task vector");
    c_mask->add_option("--vector", mask_cmd.vector_path)->required();
    mask_cmd.mask.attach(c_mask);
    c_mask->add_option("--seed", mask_cmd.seed);
    c_mask->add_option("--out", mask_cmd.out)->required();
    c_mask->add_flag("--json", mask_cmd.as_json);

    MergeCmd merge_cmd;
    auto* c_merge = app.add_subcommand("merge", "merge task vectors into a base checkpoint");
    c_merge->add_option("--method", merge_cmd.method)
        ->check(CLI::IsMember({"breadcrumbs", "task_arithmetic", "ties", "random_sparse"}));
    c_merge->add_option("--base", merge_cmd.base_path)->required();
    c_merge->add_option("--vectors", merge_cmd.vector_paths)->required()->expected(-1);
    c_merge->add_option("--alpha", merge_cmd.alpha);
    merge_cmd.mask.attach(c_merge);
    c_merge->add_option("--ties-keep", merge_cmd.ties_keep);
    c_merge->add_option("--seed", merge_cmd.seed);
    c_merge->add_flag("--allow-base-mismatch", merge_cmd.allow_base_mismatch,
                      "merge into a base that is not the vectors' pre-trained model");
    c_merge->add_option("--out", merge_cmd.out)->required();

    CosineCmd cosine_cmd;
    auto* c_cosine = app.add_subcommand("cosine", "pairwise cosine similarity of task vectors");
    c_cosine->add_option("--vectors", cosine_cmd.vector_paths)->required()->expected(-1);
    c_cosine->add_flag("--masked", cosine_cmd.masked, "mask each vector before comparing");
    cosine_cmd.mask.attach(c_cosine);
    c_cosine->add_option("--seed", cosine_cmd.seed);
    c_cosine->add_flag("--json", cosine_cmd.as_json);
    c_cosine->add_option("--csv", cosine_cmd.csv_out, "also write a CSV matrix");

    FixturesCmd fixtures_cmd;
    auto* c_fixtures = app.add_subcommand("fixtures", "generate a synthetic model family");
    c_fixtures->add_option("--out", fixtures_cmd.out_dir)->required();
    c_fixtures->add_option("--seed", fixtures_cmd.seed);
    c_fixtures->add_option("--num-tasks", fixtures_cmd.num_tasks)->check(CLI::Range(1, 64));
    c_fixtures->add_option("--input-dim", fixtures_cmd.input_dim);
    c_fixtures->add_option("--num-classes", fixtures_cmd.num_classes);
    c_fixtures->add_option("--train-size", fixtures_cmd.train_size);
    c_fixtures->add_option("--val-size", fixtures_cmd.val_size);
    c_fixtures->add_option("--test-size", fixtures_cmd.test_size);
    c_fixtures->add_option("--noise-sigma", fixtures_cmd.noise_sigma);
    c_fixtures->add_option("--class-sep", fixtures_cmd.class_sep);
    c_fixtures->add_option("--task-shift", fixtures_cmd.task_shift);
    c_fixtures->add_option("--pretrain-epochs", fixtures_cmd.pretrain_epochs);
    c_fixtures->add_option("--finetune-epochs", fixtures_cmd.finetune_epochs);
    c_fixtures->add_option("--learning-rate", fixtures_cmd.learning_rate);

    SweepCmd sweep_cmd;
    auto* c_sweep = app.add_subcommand("sweep", "hyperparameter grid search over a fixture family");
    c_sweep->add_option("--fixtures", sweep_cmd.fixtures_dir)->required();
    c_sweep->add_option("--method", sweep_cmd.method)
        ->check(CLI::IsMember({"breadcrumbs", "task_arithmetic", "ties", "random_sparse"}));
    c_sweep->add_option("--split", sweep_cmd.split)->check(CLI::IsMember({"train", "val", "test"}));
    c_sweep->add_option("--alphas", sweep_cmd.alphas)->delimiter(',');
    c_sweep->add_option("--betas", sweep_cmd.betas)->delimiter(',');
    c_sweep->add_option("--gammas", sweep_cmd.gammas)->delimiter(',');
    c_sweep->add_option("--ties-keeps", sweep_cmd.ties_keeps)->delimiter(',');
    c_sweep->add_option("--variant", sweep_cmd.variant)
        ->check(CLI::IsMember({"two_tailed", "bottom_only", "top_only", "none", "random"}));
    c_sweep->add_option("--scope", sweep_cmd.scope)->check(CLI::IsMember({"per_layer", "global"}));
    c_sweep->add_option("--seed", sweep_cmd.seed);
    c_sweep->add_option("--validation-free-k", sweep_cmd.validation_free_k,
                        "tune on the first k tasks, freeze, extend");
    c_sweep->add_flag("--json", sweep_cmd.as_json);
    c_sweep->add_option("--out", sweep_cmd.out_dir)->required();

    SubsetsCmd subsets_cmd;
    auto* c_subsets = app.add_subcommand("subsets", "merge and evaluate every task subset");
    c_subsets->add_option("--fixtures", subsets_cmd.fixtures_dir)->required();
    c_subsets->add_option("--method", subsets_cmd.method)
        ->check(CLI::IsMember({"breadcrumbs", "task_arithmetic", "ties", "random_sparse"}));
    c_subsets->add_option("--split", subsets_cmd.split)
        ->check(CLI::IsMember({"train", "val", "test"}));
    c_subsets->add_option("--eval-scope", subsets_cmd.eval_scope)
        ->check(CLI::IsMember({"all_tasks", "observed_only"}));
    c_subsets->add_option("--alpha", subsets_cmd.alpha);
    subsets_cmd.mask.attach(c_subsets);
    c_subsets->add_option("--ties-keep", subsets_cmd.ties_keep);
    c_subsets->add_option("--seed", subsets_cmd.seed);
    c_subsets->add_option("--out", subsets_cmd.out_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (*c_inspect) return inspect.run();
        if (*c_diff) return diff_cmd.run();
        if (*c_mask) return mask_cmd.run();
        if (*c_merge) return merge_cmd.run();
        if (*c_cosine) return cosine_cmd.run();
        if (*c_fixtures) return fixtures_cmd.run();
        if (*c_sweep) return sweep_cmd.run();
        if (*c_subsets) return subsets_cmd.run();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const CompatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
