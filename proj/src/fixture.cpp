#include "crumbs/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crumbs/fingerprint.hpp"
#include "crumbs/io.hpp"
#include "crumbs/rng.hpp"

namespace crumbs {

// ---------------------------------------------------------------------------
// Datasets

void SyntheticTaskSpec::validate() const {
    if (task_id.empty()) throw ConfigError("task spec: empty task_id");
    if (num_classes < 2) throw ConfigError("task spec '" + task_id + "': num_classes must be >= 2");
    if (input_dim < 1) throw ConfigError("task spec '" + task_id + "': input_dim must be >= 1");
    if (static_cast<int64_t>(class_means.size()) != num_classes * input_dim)
        throw ConfigError("task spec '" + task_id + "': class_means size mismatch");
    if (!(noise_sigma > 0.0)) throw ConfigError("task spec '" + task_id + "': noise_sigma must be > 0");
    if (train_size <= 0 || val_size <= 0 || test_size <= 0)
        throw ConfigError("task spec '" + task_id + "': split sizes must be positive");
}

namespace {

// Balanced class labels: counts differ from uniform by at most rounding.
std::vector<int32_t> balanced_labels(int64_t size, int64_t num_classes, Rng& rng) {
    std::vector<int32_t> labels;
    labels.reserve(static_cast<size_t>(size));
    for (int64_t i = 0; i < size; ++i)
        labels.push_back(static_cast<int32_t>(i % num_classes));
    rng.shuffle(labels);
    return labels;
}

} // namespace

Dataset sample_task_split(const SyntheticTaskSpec& spec, const std::string& split, int64_t size) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, "data:" + spec.task_id + ":" + split));
    Dataset ds;
    ds.input_dim = spec.input_dim;
    ds.num_classes = spec.num_classes;
    ds.y = balanced_labels(size, spec.num_classes, rng);
    ds.x.resize(static_cast<size_t>(size * spec.input_dim));
    for (int64_t i = 0; i < size; ++i) {
        const double* mean = spec.class_means.data() + ds.y[static_cast<size_t>(i)] * spec.input_dim;
        for (int64_t d = 0; d < spec.input_dim; ++d)
            ds.x[static_cast<size_t>(i * spec.input_dim + d)] =
                static_cast<float>(mean[d] + spec.noise_sigma * rng.gaussian());
    }
    return ds;
}

SplitDataset generate_task(const SyntheticTaskSpec& spec) {
    SplitDataset out;
    out.train = sample_task_split(spec, "train", spec.train_size);
    out.val = sample_task_split(spec, "val", spec.val_size);
    out.test = sample_task_split(spec, "test", spec.test_size);
    return out;
}

SplitDataset generate_base_mixture(const std::vector<SyntheticTaskSpec>& specs,
                                   int64_t train_size, int64_t val_size, int64_t test_size,
                                   uint64_t seed) {
    if (specs.empty()) throw ConfigError("generate_base_mixture: no task specs");
    for (const auto& s : specs) s.validate();
    int64_t dim = specs[0].input_dim;
    int64_t classes = specs[0].num_classes;
    for (const auto& s : specs)
        if (s.input_dim != dim || s.num_classes != classes)
            throw ConfigError("generate_base_mixture: tasks must share input_dim and num_classes");

    auto sample_split = [&](const std::string& split, int64_t size) {
        Rng rng(derive_seed(seed, "data:__base__:" + split));
        Dataset ds;
        ds.input_dim = dim;
        ds.num_classes = classes;
        // Spread samples over (task, class) pairs up to rounding, then shuffle.
        std::vector<std::pair<int32_t, int32_t>> cells;
        cells.reserve(static_cast<size_t>(size));
        int64_t t_count = static_cast<int64_t>(specs.size());
        for (int64_t i = 0; i < size; ++i)
            cells.emplace_back(static_cast<int32_t>(i % t_count),
                               static_cast<int32_t>((i / t_count) % classes));
        rng.shuffle(cells);
        ds.y.reserve(static_cast<size_t>(size));
        ds.x.resize(static_cast<size_t>(size * dim));
        for (int64_t i = 0; i < size; ++i) {
            auto [task, cls] = cells[static_cast<size_t>(i)];
            ds.y.push_back(cls);
            const auto& spec = specs[static_cast<size_t>(task)];
            const double* mean = spec.class_means.data() + cls * dim;
            for (int64_t d = 0; d < dim; ++d)
                ds.x[static_cast<size_t>(i * dim + d)] =
                    static_cast<float>(mean[d] + spec.noise_sigma * rng.gaussian());
        }
        return ds;
    };
    SplitDataset out;
    out.train = sample_split("train", train_size);
    out.val = sample_split("val", val_size);
    out.test = sample_split("test", test_size);
    return out;
}

namespace {

void add_split(Checkpoint& c, const std::string& name, const Dataset& ds) {
    TensorRecord x;
    x.name = name + ".x";
    x.shape = {ds.size(), ds.input_dim};
    x.data = ds.x;
    c.add(std::move(x));
    TensorRecord y;
    y.name = name + ".y";
    y.shape = {ds.size()};
    y.data.reserve(ds.y.size());
    for (int32_t v : ds.y) y.data.push_back(static_cast<float>(v));
    c.add(std::move(y));
}

Dataset get_split(const Checkpoint& c, const std::string& name, int64_t num_classes) {
    const TensorRecord& x = c.at(name + ".x");
    const TensorRecord& y = c.at(name + ".y");
    if (x.shape.size() != 2 || y.shape.size() != 1 || x.shape[0] != y.shape[0])
        throw FormatError("dataset split '" + name + "': bad tensor shapes");
    Dataset ds;
    ds.input_dim = x.shape[1];
    ds.num_classes = num_classes;
    ds.x = x.data;
    ds.y.reserve(y.data.size());
    for (float v : y.data) ds.y.push_back(static_cast<int32_t>(v));
    return ds;
}

} // namespace

void save_dataset(const SplitDataset& ds, const std::map<std::string, std::string>& metadata,
                  const std::filesystem::path& path) {
    Checkpoint c;
    add_split(c, "train", ds.train);
    add_split(c, "val", ds.val);
    add_split(c, "test", ds.test);
    c.metadata() = metadata;
    c.metadata()["kind"] = "dataset";
    c.metadata()["num_classes"] = std::to_string(ds.train.num_classes);
    write_checkpoint(c, path);
}

SplitDataset load_dataset(const std::filesystem::path& path) {
    Checkpoint c = read_checkpoint(path);
    auto it = c.metadata().find("kind");
    if (it == c.metadata().end() || it->second != "dataset")
        throw FormatError("'" + path.string() + "' is not a dataset file (missing kind=dataset)");
    int64_t classes = std::stoll(c.metadata().at("num_classes"));
    SplitDataset out;
    out.train = get_split(c, "train", classes);
    out.val = get_split(c, "val", classes);
    out.test = get_split(c, "test", classes);
    return out;
}

// ---------------------------------------------------------------------------
// Model

void TrainConfig::validate() const {
    for (int64_t h : hidden_dims)
        if (h < 1) throw ConfigError("train config: hidden dims must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train config: learning_rate must be > 0");
    if (epochs < 0) throw ConfigError("train config: epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
    if (weight_decay < 0.0) throw ConfigError("train config: weight_decay must be >= 0");
}

Mlp Mlp::from_dims(int64_t input_dim, const std::vector<int64_t>& hidden_dims,
                   int64_t num_classes, uint64_t init_seed) {
    Mlp m;
    m.dims_.push_back(input_dim);
    for (int64_t h : hidden_dims) m.dims_.push_back(h);
    m.dims_.push_back(num_classes);
    Rng rng(derive_seed(init_seed, "init"));
    for (size_t l = 0; l + 1 < m.dims_.size(); ++l) {
        int64_t in = m.dims_[l], out = m.dims_[l + 1];
        double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::vector<double> w(static_cast<size_t>(in * out));
        for (double& v : w) v = rng.uniform_double(-limit, limit);
        m.weights_.push_back(std::move(w));
        m.biases_.emplace_back(static_cast<size_t>(out), 0.0);
    }
    return m;
}

Mlp Mlp::from_checkpoint(const Checkpoint& ckpt) {
    Mlp m;
    for (size_t l = 0;; ++l) {
        const TensorRecord* w = ckpt.find("layer" + std::to_string(l) + ".weight");
        const TensorRecord* b = ckpt.find("layer" + std::to_string(l) + ".bias");
        if (!w && !b) break;
        if (!w || !b || w->shape.size() != 2 || b->shape.size() != 1 || w->shape[0] != b->shape[0])
            throw CompatError("checkpoint is not a dense network: bad layer" + std::to_string(l));
        if (l == 0) m.dims_.push_back(w->shape[1]);
        else if (m.dims_.back() != w->shape[1])
            throw CompatError("checkpoint layer" + std::to_string(l) + " input dim mismatch");
        m.dims_.push_back(w->shape[0]);
        m.weights_.emplace_back(w->data.begin(), w->data.end());
        m.biases_.emplace_back(b->data.begin(), b->data.end());
    }
    if (m.weights_.empty()) throw CompatError("checkpoint contains no layer<k>.weight tensors");
    return m;
}

Checkpoint Mlp::to_checkpoint() const {
    Checkpoint c;
    for (size_t l = 0; l < weights_.size(); ++l) {
        TensorRecord w;
        w.name = "layer" + std::to_string(l) + ".weight";
        w.shape = {dims_[l + 1], dims_[l]};
        w.data.assign(weights_[l].begin(), weights_[l].end());
        c.add(std::move(w));
        TensorRecord b;
        b.name = "layer" + std::to_string(l) + ".bias";
        b.shape = {dims_[l + 1]};
        b.data.assign(biases_[l].begin(), biases_[l].end());
        c.add(std::move(b));
    }
    return c;
}

int64_t Mlp::input_dim() const { return dims_.front(); }
int64_t Mlp::num_classes() const { return dims_.back(); }

std::vector<double> Mlp::forward(const float* x) const {
    std::vector<double> act(x, x + dims_[0]);
    for (size_t l = 0; l < weights_.size(); ++l) {
        int64_t in = dims_[l], out = dims_[l + 1];
        std::vector<double> next(static_cast<size_t>(out));
        for (int64_t o = 0; o < out; ++o) {
            double s = biases_[l][static_cast<size_t>(o)];
            const double* row = weights_[l].data() + o * in;
            for (int64_t i = 0; i < in; ++i) s += row[i] * act[static_cast<size_t>(i)];
            next[static_cast<size_t>(o)] = s;
        }
        if (l + 1 < weights_.size())
            for (double& v : next) v = std::tanh(v);
        act = std::move(next);
    }
    return act;
}

namespace {

// log-sum-exp with max subtraction.
double softmax_ce(const std::vector<double>& logits, int32_t label, std::vector<double>* probs) {
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    double logz = mx + std::log(z);
    if (probs) {
        probs->resize(logits.size());
        for (size_t i = 0; i < logits.size(); ++i) (*probs)[i] = std::exp(logits[i] - logz);
    }
    return logz - logits[static_cast<size_t>(label)];
}

} // namespace

double Mlp::mean_loss(const Dataset& ds) const {
    double total = 0.0;
    for (int64_t i = 0; i < ds.size(); ++i) {
        auto logits = forward(ds.x.data() + i * ds.input_dim);
        total += softmax_ce(logits, ds.y[static_cast<size_t>(i)], nullptr);
    }
    return total / static_cast<double>(ds.size());
}

double Mlp::loss_and_grad(const Dataset& ds, const std::vector<int64_t>& batch_idx,
                          std::vector<std::vector<double>>& grad_w,
                          std::vector<std::vector<double>>& grad_b) const {
    grad_w.resize(weights_.size());
    grad_b.resize(biases_.size());
    for (size_t l = 0; l < weights_.size(); ++l) {
        grad_w[l].assign(weights_[l].size(), 0.0);
        grad_b[l].assign(biases_[l].size(), 0.0);
    }
    double total = 0.0;
    size_t layers = weights_.size();
    std::vector<std::vector<double>> acts(layers + 1); // acts[0] = input
    std::vector<double> probs;
    for (int64_t idx : batch_idx) {
        const float* x = ds.x.data() + idx * ds.input_dim;
        acts[0].assign(x, x + dims_[0]);
        for (size_t l = 0; l < layers; ++l) {
            int64_t in = dims_[l], out = dims_[l + 1];
            acts[l + 1].assign(static_cast<size_t>(out), 0.0);
            for (int64_t o = 0; o < out; ++o) {
                double s = biases_[l][static_cast<size_t>(o)];
                const double* row = weights_[l].data() + o * in;
                for (int64_t i = 0; i < in; ++i) s += row[i] * acts[l][static_cast<size_t>(i)];
                acts[l + 1][static_cast<size_t>(o)] = s;
            }
            if (l + 1 < layers)
                for (double& v : acts[l + 1]) v = std::tanh(v);
        }
        total += softmax_ce(acts[layers], ds.y[static_cast<size_t>(idx)], &probs);

        // delta at the logits
        std::vector<double> delta = probs;
        delta[static_cast<size_t>(ds.y[static_cast<size_t>(idx)])] -= 1.0;
        for (size_t l = layers; l-- > 0;) {
            int64_t in = dims_[l], out = dims_[l + 1];
            for (int64_t o = 0; o < out; ++o) {
                grad_b[l][static_cast<size_t>(o)] += delta[static_cast<size_t>(o)];
                double* grow = grad_w[l].data() + o * in;
                for (int64_t i = 0; i < in; ++i)
                    grow[i] += delta[static_cast<size_t>(o)] * acts[l][static_cast<size_t>(i)];
            }
            if (l > 0) {
                std::vector<double> prev(static_cast<size_t>(in), 0.0);
                for (int64_t i = 0; i < in; ++i) {
                    double s = 0.0;
                    for (int64_t o = 0; o < out; ++o)
                        s += weights_[l][static_cast<size_t>(o * in + i)] * delta[static_cast<size_t>(o)];
                    // act[l] is tanh(pre); tanh' = 1 - act^2
                    double a = acts[l][static_cast<size_t>(i)];
                    prev[static_cast<size_t>(i)] = s * (1.0 - a * a);
                }
                delta = std::move(prev);
            }
        }
    }
    double inv = 1.0 / static_cast<double>(batch_idx.size());
    for (size_t l = 0; l < layers; ++l) {
        for (double& g : grad_w[l]) g *= inv;
        for (double& g : grad_b[l]) g *= inv;
    }
    return total * inv;
}

void Mlp::sgd_step(const std::vector<std::vector<double>>& grad_w,
                   const std::vector<std::vector<double>>& grad_b, double lr, double weight_decay) {
    for (size_t l = 0; l < weights_.size(); ++l) {
        for (size_t i = 0; i < weights_[l].size(); ++i)
            weights_[l][i] -= lr * (grad_w[l][i] + weight_decay * weights_[l][i]);
        for (size_t i = 0; i < biases_[l].size(); ++i)
            biases_[l][i] -= lr * grad_b[l][i]; // no decay on biases
    }
}

std::vector<double> Mlp::flat_params() const {
    std::vector<double> p;
    for (size_t l = 0; l < weights_.size(); ++l) {
        p.insert(p.end(), weights_[l].begin(), weights_[l].end());
        p.insert(p.end(), biases_[l].begin(), biases_[l].end());
    }
    return p;
}

void Mlp::set_flat_params(const std::vector<double>& p) {
    size_t off = 0;
    for (size_t l = 0; l < weights_.size(); ++l) {
        std::copy(p.begin() + off, p.begin() + off + weights_[l].size(), weights_[l].begin());
        off += weights_[l].size();
        std::copy(p.begin() + off, p.begin() + off + biases_[l].size(), biases_[l].begin());
        off += biases_[l].size();
    }
}

namespace {

Checkpoint train(Mlp model, const Dataset& train_ds, const TrainConfig& cfg) {
    cfg.validate();
    if (train_ds.input_dim != model.input_dim())
        throw CompatError("train: dataset input_dim does not match model");
    std::vector<int64_t> indices(static_cast<size_t>(train_ds.size()));
    std::iota(indices.begin(), indices.end(), int64_t{0});
    std::vector<std::vector<double>> gw, gb;
    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, "shuffle:" + std::to_string(epoch)));
        rng.shuffle(indices);
        for (int64_t start = 0; start < train_ds.size(); start += cfg.batch_size) {
            int64_t end = std::min<int64_t>(start + cfg.batch_size, train_ds.size());
            std::vector<int64_t> batch(indices.begin() + start, indices.begin() + end);
            double loss = model.loss_and_grad(train_ds, batch, gw, gb);
            if (!std::isfinite(loss))
                throw Error("training diverged (non-finite loss) at epoch " + std::to_string(epoch));
            model.sgd_step(gw, gb, cfg.learning_rate, cfg.weight_decay);
        }
    }
    return model.to_checkpoint();
}

} // namespace

Checkpoint pretrain(const Dataset& train_ds, const TrainConfig& cfg) {
    cfg.validate();
    Mlp model = Mlp::from_dims(train_ds.input_dim, cfg.hidden_dims, train_ds.num_classes, cfg.seed);
    return train(std::move(model), train_ds, cfg);
}

Checkpoint finetune(const Checkpoint& base, const Dataset& train_ds, const TrainConfig& cfg) {
    return train(Mlp::from_checkpoint(base), train_ds, cfg);
}

double evaluate(const Checkpoint& model, const Dataset& ds) {
    Mlp m = Mlp::from_checkpoint(model);
    if (ds.input_dim != m.input_dim()) throw CompatError("evaluate: dataset/model input_dim mismatch");
    int64_t correct = 0;
    for (int64_t i = 0; i < ds.size(); ++i) {
        auto logits = m.forward(ds.x.data() + i * ds.input_dim);
        int32_t pred = 0;
        for (size_t c = 1; c < logits.size(); ++c)
            if (logits[c] > logits[static_cast<size_t>(pred)]) pred = static_cast<int32_t>(c);
        if (pred == ds.y[static_cast<size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// ---------------------------------------------------------------------------
// Fixture family

std::vector<SyntheticTaskSpec> make_family_specs(const FixtureFamilyConfig& cfg) {
    Rng mean_rng(derive_seed(cfg.seed, "family.means"));
    std::vector<double> shared(static_cast<size_t>(cfg.num_classes * cfg.input_dim));
    for (double& v : shared) v = cfg.class_sep * mean_rng.gaussian();

    std::vector<SyntheticTaskSpec> specs;
    for (int64_t t = 0; t < cfg.num_tasks; ++t) {
        SyntheticTaskSpec s;
        s.task_id = "task" + std::to_string(t);
        s.num_classes = cfg.num_classes;
        s.input_dim = cfg.input_dim;
        s.noise_sigma = cfg.noise_sigma;
        s.train_size = cfg.train_size;
        s.val_size = cfg.val_size;
        s.test_size = cfg.test_size;
        s.seed = derive_seed(cfg.seed, "family." + s.task_id);
        Rng shift_rng(derive_seed(cfg.seed, "family.shift." + s.task_id));
        s.class_means = shared;
        for (double& v : s.class_means) v += cfg.task_shift * shift_rng.gaussian();
        specs.push_back(std::move(s));
    }
    return specs;
}

FixtureFamily build_fixture_family(const FixtureFamilyConfig& cfg) {
    FixtureFamily fam;
    fam.specs = make_family_specs(cfg);
    for (const auto& s : fam.specs) {
        fam.task_ids.push_back(s.task_id);
        fam.datasets[s.task_id] = generate_task(s);
    }
    fam.base_dataset = generate_base_mixture(fam.specs, cfg.train_size * 4, cfg.val_size,
                                             cfg.test_size, derive_seed(cfg.seed, "family.base"));
    TrainConfig pre = cfg.pretrain_cfg;
    pre.seed = derive_seed(cfg.seed, "pretrain");
    fam.base = pretrain(fam.base_dataset.train, pre);

    for (const auto& id : fam.task_ids) {
        TrainConfig ft = cfg.finetune_cfg;
        ft.seed = derive_seed(cfg.seed, "finetune." + id);
        Checkpoint model = finetune(fam.base, fam.datasets[id].train, ft);
        fam.finetuned_val_acc[id] = evaluate(model, fam.datasets[id].val);
        fam.finetuned_test_acc[id] = evaluate(model, fam.datasets[id].test);
        fam.task_vectors.push_back(diff(fam.base, model, id));
        fam.finetuned[id] = std::move(model);
    }
    return fam;
}

} // namespace crumbs
