#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crumbs/task_vector.hpp"

namespace crumbs {

enum class MaskVariant { two_tailed, bottom_only, top_only, none, random };
enum class MaskScope { per_layer, global };

const char* to_string(MaskVariant v);
const char* to_string(MaskScope s);
MaskVariant mask_variant_from_string(const std::string& s);
MaskScope mask_scope_from_string(const std::string& s);

// Two-tailed magnitude mask parameters. beta masks the smallest-|.| fraction
// (left tail), the top (1-gamma) fraction is masked as outliers (right tail).
struct MaskSpec {
    double beta = 0.0;
    double gamma = 1.0;
    MaskScope scope = MaskScope::per_layer;
    MaskVariant variant = MaskVariant::two_tailed;

    void validate() const;
};

struct TensorMask {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<uint8_t> keep; // 1 = keep, 0 = masked
    int64_t kept_count = 0;
};

struct MaskSet {
    std::vector<TensorMask> masks; // sorted by name, aligned with the source vector
    double total_kept_fraction = 1.0;

    const TensorMask* find(const std::string& name) const;
};

// Rank counts for one tail: floor(fraction * n), with a small epsilon so
// fractions like 1/3 or 0.9 land on the intended integer.
int64_t tail_count(double fraction, int64_t n);

// Build the mask for a task vector per spec. Elements are ranked ascending by
// |value| with ties broken by ascending flat index (stable). per_layer ranks
// each tensor independently; global ranks all elements jointly (tensors in
// name order). seed is used only for variant=random.
MaskSet build_mask(const TaskVector& tv, const MaskSpec& spec, uint64_t seed = 0);

// Masked elements become exactly 0.0f; kept elements are unchanged bitwise.
TaskVector apply_mask(const TaskVector& tv, const MaskSet& ms);

struct SparsityReport {
    struct Entry {
        std::string name;
        int64_t kept = 0;
        int64_t size = 0;
        std::optional<double> kept_fraction; // nullopt for empty tensors
    };
    std::vector<Entry> per_tensor;
    double total_kept_fraction = 1.0;
};

SparsityReport sparsity_report(const MaskSet& ms);

// Mask serialization: float32 0/1 tensors with kind=mask metadata.
void save_mask(const MaskSet& ms, const MaskSpec& spec, uint64_t seed,
               const std::filesystem::path& path);
MaskSet load_mask(const std::filesystem::path& path);

} // namespace crumbs
