#pragma once

#include <cstring>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "crumbs/rng.hpp"
#include "crumbs/task_vector.hpp"
#include "crumbs/tensor.hpp"

namespace crumbs::testing {

// Random checkpoint with `count` tensors of small random shapes.
inline Checkpoint random_checkpoint(uint64_t seed, size_t count = 5, int64_t max_dim = 8) {
    Rng rng(seed);
    Checkpoint c;
    for (size_t i = 0; i < count; ++i) {
        TensorRecord t;
        t.name = "t" + std::to_string(i) + "." + (i % 2 ? "weight" : "bias");
        size_t rank = 1 + rng.uniform_u64(2);
        int64_t n = 1;
        for (size_t d = 0; d < rank; ++d) {
            int64_t dim = 1 + static_cast<int64_t>(rng.uniform_u64(static_cast<uint64_t>(max_dim)));
            t.shape.push_back(dim);
            n *= dim;
        }
        t.data.reserve(static_cast<size_t>(n));
        for (int64_t j = 0; j < n; ++j)
            t.data.push_back(static_cast<float>(rng.gaussian()));
        c.add(std::move(t));
    }
    return c;
}

// Same-structure checkpoint with perturbed values.
inline Checkpoint perturb(const Checkpoint& base, uint64_t seed, double scale = 0.1) {
    Rng rng(seed);
    Checkpoint c;
    for (const auto& t : base.tensors()) {
        TensorRecord r = t;
        for (float& v : r.data) v += static_cast<float>(scale * rng.gaussian());
        c.add(std::move(r));
    }
    return c;
}

inline bool bitwise_equal(const Checkpoint& a, const Checkpoint& b) {
    if (a.tensors().size() != b.tensors().size()) return false;
    for (size_t i = 0; i < a.tensors().size(); ++i) {
        const auto& ta = a.tensors()[i];
        const auto& tb = b.tensors()[i];
        if (ta.name != tb.name || ta.shape != tb.shape) return false;
        for (size_t j = 0; j < ta.data.size(); ++j) {
            uint32_t ba, bb;
            static_assert(sizeof(float) == 4);
            std::memcpy(&ba, &ta.data[j], 4);
            std::memcpy(&bb, &tb.data[j], 4);
            if (ba != bb) return false;
        }
    }
    return true;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("crumbs_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

} // namespace crumbs::testing
