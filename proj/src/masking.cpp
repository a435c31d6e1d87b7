#include "crumbs/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include "crumbs/fingerprint.hpp"
#include "crumbs/rng.hpp"
#include "crumbs/io.hpp"

namespace crumbs {

const char* to_string(MaskVariant v) {
    switch (v) {
        case MaskVariant::two_tailed: return "two_tailed";
        case MaskVariant::bottom_only: return "bottom_only";
        case MaskVariant::top_only: return "top_only";
        case MaskVariant::none: return "none";
        case MaskVariant::random: return "random";
    }
    return "?";
}

const char* to_string(MaskScope s) {
    return s == MaskScope::per_layer ? "per_layer" : "global";
}

MaskVariant mask_variant_from_string(const std::string& s) {
    if (s == "two_tailed") return MaskVariant::two_tailed;
    if (s == "bottom_only") return MaskVariant::bottom_only;
    if (s == "top_only") return MaskVariant::top_only;
    if (s == "none") return MaskVariant::none;
    if (s == "random") return MaskVariant::random;
    throw ConfigError("unknown mask variant '" + s + "'");
}

MaskScope mask_scope_from_string(const std::string& s) {
    if (s == "per_layer") return MaskScope::per_layer;
    if (s == "global") return MaskScope::global;
    throw ConfigError("unknown mask scope '" + s + "'");
}

void MaskSpec::validate() const {
    if (!(beta >= 0.0 && beta <= 1.0))
        throw ConfigError("mask spec: beta must be in [0,1], got " + std::to_string(beta));
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw ConfigError("mask spec: gamma must be in [0,1], got " + std::to_string(gamma));
    if (beta > gamma)
        throw ConfigError("mask spec: requires beta <= gamma, got beta=" + std::to_string(beta) +
                          " gamma=" + std::to_string(gamma));
}

const TensorMask* MaskSet::find(const std::string& name) const {
    auto it = std::lower_bound(masks.begin(), masks.end(), name,
                               [](const TensorMask& m, const std::string& n) { return m.name < n; });
    if (it == masks.end() || it->name != name) return nullptr;
    return &*it;
}

int64_t tail_count(double fraction, int64_t n) {
    // floor with a small epsilon: 0.9*1000 or (1/3)*6 must land on the exact
    // integer despite binary rounding of the fraction.
    int64_t c = static_cast<int64_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
    return std::clamp<int64_t>(c, 0, n);
}

namespace {

void finalize_counts(MaskSet& ms) {
    int64_t kept = 0, total = 0;
    for (auto& m : ms.masks) {
        m.kept_count = std::count(m.keep.begin(), m.keep.end(), uint8_t{1});
        kept += m.kept_count;
        total += static_cast<int64_t>(m.keep.size());
    }
    ms.total_kept_fraction = total > 0 ? static_cast<double>(kept) / static_cast<double>(total) : 1.0;
}

// Ascending stable sort of indices by |value|, ties by index.
std::vector<int64_t> magnitude_order(const float* data, int64_t n) {
    std::vector<int64_t> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), int64_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](int64_t a, int64_t b) {
        return std::fabs(data[a]) < std::fabs(data[b]);
    });
    return idx;
}

} // namespace

MaskSet build_mask(const TaskVector& tv, const MaskSpec& spec, uint64_t seed) {
    spec.validate();
    MaskSet ms;
    ms.masks.reserve(tv.deltas.tensors().size());
    for (const auto& t : tv.deltas.tensors()) {
        TensorMask m;
        m.name = t.name;
        m.shape = t.shape;
        m.keep.assign(t.data.size(), uint8_t{1});
        ms.masks.push_back(std::move(m));
    }

    if (spec.variant == MaskVariant::none) {
        finalize_counts(ms);
        return ms;
    }

    auto tails = [&](int64_t n) {
        int64_t b = tail_count(spec.beta, n);
        int64_t t = tail_count(1.0 - spec.gamma, n);
        if (spec.variant == MaskVariant::bottom_only) t = 0;
        if (spec.variant == MaskVariant::top_only) b = 0;
        return std::pair<int64_t, int64_t>{b, t};
    };

    if (spec.variant == MaskVariant::random) {
        // Uniform random kept subset of the same per-tensor cardinality the
        // two-tailed rule would keep. Per-tensor stream keyed by name.
        for (size_t i = 0; i < ms.masks.size(); ++i) {
            TensorMask& m = ms.masks[i];
            int64_t n = static_cast<int64_t>(m.keep.size());
            auto [b, t] = tails(n);
            int64_t kept = n - b - t;
            Rng rng(derive_seed(seed, "mask.random:" + m.name));
            std::vector<int64_t> idx(static_cast<size_t>(n));
            std::iota(idx.begin(), idx.end(), int64_t{0});
            // Partial Fisher-Yates: first `kept` entries are the kept subset.
            for (int64_t j = 0; j < kept; ++j) {
                uint64_t pick = static_cast<uint64_t>(j) + rng.uniform_u64(static_cast<uint64_t>(n - j));
                std::swap(idx[static_cast<size_t>(j)], idx[static_cast<size_t>(pick)]);
            }
            std::fill(m.keep.begin(), m.keep.end(), uint8_t{0});
            for (int64_t j = 0; j < kept; ++j) m.keep[static_cast<size_t>(idx[static_cast<size_t>(j)])] = 1;
        }
        finalize_counts(ms);
        return ms;
    }

    if (spec.scope == MaskScope::per_layer) {
        for (size_t i = 0; i < ms.masks.size(); ++i) {
            const TensorRecord& t = tv.deltas.tensors()[i];
            TensorMask& m = ms.masks[i];
            int64_t n = t.numel();
            auto [b, tt] = tails(n);
            auto order = magnitude_order(t.data.data(), n);
            for (int64_t r = 0; r < b; ++r) m.keep[static_cast<size_t>(order[static_cast<size_t>(r)])] = 0;
            for (int64_t r = n - tt; r < n; ++r) m.keep[static_cast<size_t>(order[static_cast<size_t>(r)])] = 0;
        }
    } else {
        // Global scope: rank all elements of all tensors jointly, tensors in
        // name order, ties by ascending global flat index.
        struct Ref { float mag; uint32_t tensor; int64_t idx; };
        std::vector<Ref> refs;
        int64_t total = tv.deltas.total_params();
        refs.reserve(static_cast<size_t>(total));
        for (uint32_t i = 0; i < tv.deltas.tensors().size(); ++i) {
            const auto& t = tv.deltas.tensors()[i];
            for (int64_t j = 0; j < t.numel(); ++j)
                refs.push_back({std::fabs(t.data[static_cast<size_t>(j)]), i, j});
        }
        std::stable_sort(refs.begin(), refs.end(),
                         [](const Ref& a, const Ref& b) { return a.mag < b.mag; });
        auto [b, tt] = tails(total);
        for (int64_t r = 0; r < b; ++r)
            ms.masks[refs[static_cast<size_t>(r)].tensor].keep[static_cast<size_t>(refs[static_cast<size_t>(r)].idx)] = 0;
        for (int64_t r = total - tt; r < total; ++r)
            ms.masks[refs[static_cast<size_t>(r)].tensor].keep[static_cast<size_t>(refs[static_cast<size_t>(r)].idx)] = 0;
    }
    finalize_counts(ms);
    return ms;
}

TaskVector apply_mask(const TaskVector& tv, const MaskSet& ms) {
    if (ms.masks.size() != tv.deltas.tensors().size())
        throw CompatError("apply_mask: mask set has " + std::to_string(ms.masks.size()) +
                          " tensors, vector has " + std::to_string(tv.deltas.tensors().size()));
    TaskVector out;
    out.base_fingerprint = tv.base_fingerprint;
    out.task_id = tv.task_id;
    for (size_t i = 0; i < ms.masks.size(); ++i) {
        const TensorRecord& t = tv.deltas.tensors()[i];
        const TensorMask& m = ms.masks[i];
        if (m.name != t.name || m.shape != t.shape)
            throw CompatError("apply_mask: mask/vector mismatch at tensor '" + t.name + "'");
        TensorRecord r;
        r.name = t.name;
        r.shape = t.shape;
        r.data.resize(t.data.size());
        for (size_t j = 0; j < t.data.size(); ++j)
            r.data[j] = m.keep[j] ? t.data[j] : 0.0f;
        out.deltas.add(std::move(r));
    }
    return out;
}

SparsityReport sparsity_report(const MaskSet& ms) {
    SparsityReport rep;
    int64_t kept = 0, total = 0;
    for (const auto& m : ms.masks) {
        SparsityReport::Entry e;
        e.name = m.name;
        e.kept = m.kept_count;
        e.size = static_cast<int64_t>(m.keep.size());
        if (e.size > 0) {
            e.kept_fraction = static_cast<double>(e.kept) / static_cast<double>(e.size);
            kept += e.kept;
            total += e.size;
        }
        rep.per_tensor.push_back(std::move(e));
    }
    rep.total_kept_fraction = total > 0 ? static_cast<double>(kept) / static_cast<double>(total) : 1.0;
    return rep;
}

void save_mask(const MaskSet& ms, const MaskSpec& spec, uint64_t seed,
               const std::filesystem::path& path) {
    Checkpoint c;
    for (const auto& m : ms.masks) {
        TensorRecord t;
        t.name = m.name;
        t.shape = m.shape;
        t.data.resize(m.keep.size());
        for (size_t j = 0; j < m.keep.size(); ++j) t.data[j] = m.keep[j] ? 1.0f : 0.0f;
        c.add(std::move(t));
    }
    c.metadata()["kind"] = "mask";
    c.metadata()["beta"] = std::to_string(spec.beta);
    c.metadata()["gamma"] = std::to_string(spec.gamma);
    c.metadata()["variant"] = to_string(spec.variant);
    c.metadata()["scope"] = to_string(spec.scope);
    c.metadata()["seed"] = std::to_string(seed);
    write_checkpoint(c, path);
}

MaskSet load_mask(const std::filesystem::path& path) {
    Checkpoint c = read_checkpoint(path);
    auto it = c.metadata().find("kind");
    if (it == c.metadata().end() || it->second != "mask")
        throw FormatError("'" + path.string() + "' is not a mask file (missing kind=mask)");
    MaskSet ms;
    for (const auto& t : c.tensors()) {
        TensorMask m;
        m.name = t.name;
        m.shape = t.shape;
        m.keep.resize(t.data.size());
        for (size_t j = 0; j < t.data.size(); ++j) m.keep[j] = t.data[j] != 0.0f ? 1 : 0;
        ms.masks.push_back(std::move(m));
    }
    finalize_counts(ms);
    return ms;
}

} // namespace crumbs
