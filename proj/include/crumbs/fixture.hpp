#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "crumbs/task_vector.hpp"

namespace crumbs {

// ---------------------------------------------------------------------------
// Synthetic Gaussian-blob classification tasks.

struct SyntheticTaskSpec {
    std::string task_id;
    int64_t num_classes = 5;
    int64_t input_dim = 32;
    std::vector<double> class_means; // num_classes * input_dim, row-major
    double noise_sigma = 1.0;
    int64_t train_size = 512;
    int64_t val_size = 256;
    int64_t test_size = 512;
    uint64_t seed = 0;

    void validate() const;
};

struct Dataset {
    int64_t input_dim = 0;
    int64_t num_classes = 0;
    std::vector<float> x; // size * input_dim, row-major
    std::vector<int32_t> y;

    int64_t size() const { return static_cast<int64_t>(y.size()); }
};

struct SplitDataset {
    Dataset train, val, test;
};

// Deterministic per spec+split; class counts per split are uniform up to
// rounding; train/val/test use disjoint sub-seeds.
Dataset sample_task_split(const SyntheticTaskSpec& spec, const std::string& split, int64_t size);
SplitDataset generate_task(const SyntheticTaskSpec& spec);

// The "base" pre-training task: mixture of all tasks' class-conditional
// distributions (samples spread over tasks and classes up to rounding).
SplitDataset generate_base_mixture(const std::vector<SyntheticTaskSpec>& specs,
                                   int64_t train_size, int64_t val_size, int64_t test_size,
                                   uint64_t seed);

// Datasets persist in the .mbc container: tensors <split>.x / <split>.y
// (labels as float32), metadata kind=dataset plus the spec scalars.
void save_dataset(const SplitDataset& ds, const std::map<std::string, std::string>& metadata,
                  const std::filesystem::path& path);
SplitDataset load_dataset(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Minimal dense-network trainer (affine layers + tanh + softmax CE, SGD).

struct TrainConfig {
    std::vector<int64_t> hidden_dims = {64, 64};
    double learning_rate = 0.05;
    int64_t epochs = 10;
    int64_t batch_size = 32;
    double weight_decay = 0.0;
    uint64_t seed = 0;

    void validate() const;
};

// Dense tanh network over Checkpoint weights. Tensors are named
// layer<k>.weight [out,in] and layer<k>.bias [out]; math runs in float64,
// checkpoints hold float32.
class Mlp {
public:
    static Mlp from_dims(int64_t input_dim, const std::vector<int64_t>& hidden_dims,
                         int64_t num_classes, uint64_t init_seed);
    static Mlp from_checkpoint(const Checkpoint& ckpt);
    Checkpoint to_checkpoint() const;

    int64_t input_dim() const;
    int64_t num_classes() const;
    size_t num_layers() const { return weights_.size(); }

    // Logits for one sample (pure function of weights and input).
    std::vector<double> forward(const float* x) const;

    // Mean softmax cross-entropy over a dataset.
    double mean_loss(const Dataset& ds) const;

    // Mean loss over a batch plus parameter gradients (same layout as the
    // parameters); used by the trainer and the finite-difference check.
    double loss_and_grad(const Dataset& ds, const std::vector<int64_t>& batch_idx,
                         std::vector<std::vector<double>>& grad_w,
                         std::vector<std::vector<double>>& grad_b) const;

    void sgd_step(const std::vector<std::vector<double>>& grad_w,
                  const std::vector<std::vector<double>>& grad_b, double lr, double weight_decay);

    // Flat parameter access for the gradient check.
    std::vector<double> flat_params() const;
    void set_flat_params(const std::vector<double>& p);

private:
    std::vector<std::vector<double>> weights_; // [out*in] row-major
    std::vector<std::vector<double>> biases_;  // [out]
    std::vector<int64_t> dims_;                // input_dim, hidden..., num_classes
};

// Seeded-init + SGD training. Throws on non-finite loss (with epoch index).
Checkpoint pretrain(const Dataset& train, const TrainConfig& cfg);

// Same trainer, initialized from base.
Checkpoint finetune(const Checkpoint& base, const Dataset& train, const TrainConfig& cfg);

// Fraction of correct argmax predictions; ties go to the lowest class index.
double evaluate(const Checkpoint& model, const Dataset& ds);

// ---------------------------------------------------------------------------
// Default fixture family: one pre-trained base plus num_tasks fine-tunings.

struct FixtureFamilyConfig {
    int64_t num_tasks = 8;
    int64_t input_dim = 32;
    int64_t num_classes = 5;
    std::vector<int64_t> hidden_dims = {64, 64};
    int64_t train_size = 512;
    int64_t val_size = 384;
    int64_t test_size = 512;
    double class_sep = 2.2;    // scale of shared class means
    double task_shift = 1.4;   // per-task displacement of class means
    double noise_sigma = 1.1;
    TrainConfig pretrain_cfg{.hidden_dims = {64, 64}, .learning_rate = 0.05, .epochs = 12,
                             .batch_size = 32, .weight_decay = 1e-4};
    TrainConfig finetune_cfg{.hidden_dims = {64, 64}, .learning_rate = 0.05, .epochs = 8,
                             .batch_size = 32, .weight_decay = 1e-4};
    uint64_t seed = 0;
};

struct FixtureFamily {
    std::vector<SyntheticTaskSpec> specs;
    std::vector<std::string> task_ids;
    std::map<std::string, SplitDataset> datasets;
    SplitDataset base_dataset;
    Checkpoint base;
    std::map<std::string, Checkpoint> finetuned;
    std::vector<TaskVector> task_vectors; // ascending task_id
    std::map<std::string, double> finetuned_val_acc;
    std::map<std::string, double> finetuned_test_acc;
};

std::vector<SyntheticTaskSpec> make_family_specs(const FixtureFamilyConfig& cfg);
FixtureFamily build_fixture_family(const FixtureFamilyConfig& cfg);

} // namespace crumbs
