#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "crumbs/tensor.hpp"

namespace crumbs {

// Checkpoint-shaped weight delta (fine-tuned minus base) for one task.
struct TaskVector {
    Checkpoint deltas;
    uint64_t base_fingerprint = 0;
    std::string task_id;
};

// deltas = finetuned - base, element-wise float32.
TaskVector diff(const Checkpoint& base, const Checkpoint& finetuned, const std::string& task_id);

// base + alpha * tv, element-wise. float64 accumulation per element.
Checkpoint apply(const Checkpoint& base, const TaskVector& tv, double alpha);

// Element-wise weighted sum. Vectors must share base_fingerprint; the sum is
// taken in ascending task_id order regardless of input order, accumulated in
// float64 and rounded to float32 once per element.
TaskVector linear_combine(std::span<const TaskVector> tvs, std::span<const double> weights);

// .mbc serialization with metadata kind=task_vector, task_id, base_fingerprint.
void save_task_vector(const TaskVector& tv, const std::filesystem::path& path);
TaskVector load_task_vector(const std::filesystem::path& path);

} // namespace crumbs
