#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "crumbs/errors.hpp"

namespace crumbs {

// One named dense float32 tensor. Row-major, contiguous.
struct TensorRecord {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<float> data;

    int64_t numel() const {
        int64_t n = 1;
        for (int64_t d : shape) n *= d;
        return n; // empty shape -> 1 (scalar)
    }
};

// Ordered collection of tensors (sorted by name, bytewise) plus free-form
// string metadata. Immutable once built; cheap to copy-on-need.
class Checkpoint {
public:
    Checkpoint() = default;

    // Inserts keeping name order. Throws on duplicate / invalid records.
    void add(TensorRecord rec);

    const std::vector<TensorRecord>& tensors() const { return tensors_; }
    std::vector<TensorRecord>& tensors_mut() { return tensors_; }

    const TensorRecord* find(const std::string& name) const;
    const TensorRecord& at(const std::string& name) const;

    std::map<std::string, std::string>& metadata() { return metadata_; }
    const std::map<std::string, std::string>& metadata() const { return metadata_; }

    size_t size() const { return tensors_.size(); }
    bool empty() const { return tensors_.empty(); }

    int64_t total_params() const {
        int64_t n = 0;
        for (const auto& t : tensors_) n += t.numel();
        return n;
    }

private:
    std::vector<TensorRecord> tensors_; // sorted by name
    std::map<std::string, std::string> metadata_;
};

// Throws CompatError naming the first differing tensor name or shape.
void assert_compatible(const Checkpoint& a, const Checkpoint& b);

bool is_compatible(const Checkpoint& a, const Checkpoint& b);

} // namespace crumbs
