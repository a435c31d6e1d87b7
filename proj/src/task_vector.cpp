#include "crumbs/task_vector.hpp"

#include <algorithm>
#include <charconv>

#include "crumbs/fingerprint.hpp"
#include "crumbs/io.hpp"

namespace crumbs {

TaskVector diff(const Checkpoint& base, const Checkpoint& finetuned, const std::string& task_id) {
    assert_compatible(base, finetuned);
    TaskVector tv;
    tv.task_id = task_id;
    tv.base_fingerprint = checkpoint_fingerprint(base);
    for (size_t i = 0; i < base.tensors().size(); ++i) {
        const TensorRecord& b = base.tensors()[i];
        const TensorRecord& f = finetuned.tensors()[i];
        TensorRecord d;
        d.name = b.name;
        d.shape = b.shape;
        d.data.resize(b.data.size());
        for (size_t j = 0; j < b.data.size(); ++j) d.data[j] = f.data[j] - b.data[j];
        tv.deltas.add(std::move(d));
    }
    return tv;
}

Checkpoint apply(const Checkpoint& base, const TaskVector& tv, double alpha) {
    assert_compatible(base, tv.deltas);
    Checkpoint out;
    for (size_t i = 0; i < base.tensors().size(); ++i) {
        const TensorRecord& b = base.tensors()[i];
        const TensorRecord& d = tv.deltas.tensors()[i];
        TensorRecord r;
        r.name = b.name;
        r.shape = b.shape;
        r.data.resize(b.data.size());
        for (size_t j = 0; j < b.data.size(); ++j)
            r.data[j] = static_cast<float>(static_cast<double>(b.data[j]) +
                                           alpha * static_cast<double>(d.data[j]));
        out.add(std::move(r));
    }
    return out;
}

TaskVector linear_combine(std::span<const TaskVector> tvs, std::span<const double> weights) {
    if (tvs.empty()) throw ConfigError("linear_combine: empty task vector list");
    if (tvs.size() != weights.size())
        throw ConfigError("linear_combine: " + std::to_string(tvs.size()) + " vectors but " +
                          std::to_string(weights.size()) + " weights");
    for (size_t i = 1; i < tvs.size(); ++i) {
        assert_compatible(tvs[0].deltas, tvs[i].deltas);
        if (tvs[i].base_fingerprint != tvs[0].base_fingerprint)
            throw CompatError("linear_combine: task '" + tvs[i].task_id +
                              "' has a different base_fingerprint than task '" + tvs[0].task_id + "'");
    }
    // Fixed summation order: ascending task_id.
    std::vector<size_t> order(tvs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return tvs[a].task_id < tvs[b].task_id; });

    TaskVector out;
    out.base_fingerprint = tvs[0].base_fingerprint;
    out.task_id = "combined";
    for (size_t ti = 0; ti < tvs[0].deltas.tensors().size(); ++ti) {
        const TensorRecord& ref = tvs[0].deltas.tensors()[ti];
        TensorRecord r;
        r.name = ref.name;
        r.shape = ref.shape;
        r.data.resize(ref.data.size());
        std::vector<double> acc(ref.data.size(), 0.0);
        for (size_t k : order) {
            const TensorRecord& d = tvs[k].deltas.tensors()[ti];
            double w = weights[k];
            for (size_t j = 0; j < acc.size(); ++j)
                acc[j] += w * static_cast<double>(d.data[j]);
        }
        for (size_t j = 0; j < acc.size(); ++j) r.data[j] = static_cast<float>(acc[j]);
        out.deltas.add(std::move(r));
    }
    return out;
}

void save_task_vector(const TaskVector& tv, const std::filesystem::path& path) {
    Checkpoint c = tv.deltas;
    c.metadata()["kind"] = "task_vector";
    c.metadata()["task_id"] = tv.task_id;
    c.metadata()["base_fingerprint"] = std::to_string(tv.base_fingerprint);
    write_checkpoint(c, path);
}

TaskVector load_task_vector(const std::filesystem::path& path) {
    Checkpoint c = read_checkpoint(path);
    TaskVector tv;
    auto it = c.metadata().find("kind");
    if (it == c.metadata().end() || it->second != "task_vector")
        throw FormatError("'" + path.string() + "' is not a task vector (missing kind=task_vector)");
    tv.task_id = c.metadata().count("task_id") ? c.metadata()["task_id"] : "";
    if (auto fp = c.metadata().find("base_fingerprint"); fp != c.metadata().end()) {
        const std::string& s = fp->second;
        uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw FormatError("'" + path.string() + "': bad base_fingerprint '" + s + "'");
        tv.base_fingerprint = v;
    }
    c.metadata().clear();
    tv.deltas = std::move(c);
    return tv;
}

} // namespace crumbs
