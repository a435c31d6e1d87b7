#include "crumbs/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace crumbs {

static std::string shape_str(const std::vector<int64_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

void Checkpoint::add(TensorRecord rec) {
    if (rec.name.empty())
        throw FormatError("tensor name must be non-empty");
    if (rec.name.find('\0') != std::string::npos)
        throw FormatError("tensor name contains NUL byte");
    for (int64_t d : rec.shape)
        if (d < 0)
            throw FormatError("tensor '" + rec.name + "': negative dimension");
    if (static_cast<int64_t>(rec.data.size()) != rec.numel())
        throw FormatError("tensor '" + rec.name + "': data length " +
                          std::to_string(rec.data.size()) + " does not match shape " +
                          shape_str(rec.shape));
    auto it = std::lower_bound(tensors_.begin(), tensors_.end(), rec.name,
                               [](const TensorRecord& t, const std::string& n) { return t.name < n; });
    if (it != tensors_.end() && it->name == rec.name)
        throw FormatError("duplicate tensor name '" + rec.name + "'");
    tensors_.insert(it, std::move(rec));
}

const TensorRecord* Checkpoint::find(const std::string& name) const {
    auto it = std::lower_bound(tensors_.begin(), tensors_.end(), name,
                               [](const TensorRecord& t, const std::string& n) { return t.name < n; });
    if (it == tensors_.end() || it->name != name) return nullptr;
    return &*it;
}

const TensorRecord& Checkpoint::at(const std::string& name) const {
    const TensorRecord* t = find(name);
    if (!t) throw CompatError("tensor '" + name + "' not found");
    return *t;
}

void assert_compatible(const Checkpoint& a, const Checkpoint& b) {
    const auto& ta = a.tensors();
    const auto& tb = b.tensors();
    size_t i = 0, j = 0;
    while (i < ta.size() || j < tb.size()) {
        if (i == ta.size())
            throw CompatError("tensor '" + tb[j].name + "' missing from first checkpoint");
        if (j == tb.size())
            throw CompatError("tensor '" + ta[i].name + "' missing from second checkpoint");
        if (ta[i].name != tb[j].name) {
            const std::string& missing = ta[i].name < tb[j].name ? ta[i].name : tb[j].name;
            const char* side = ta[i].name < tb[j].name ? "second" : "first";
            throw CompatError("tensor '" + missing + "' missing from " + side + " checkpoint");
        }
        if (ta[i].shape != tb[j].shape)
            throw CompatError("tensor '" + ta[i].name + "' shape mismatch: " +
                              shape_str(ta[i].shape) + " vs " + shape_str(tb[j].shape));
        ++i;
        ++j;
    }
}

bool is_compatible(const Checkpoint& a, const Checkpoint& b) {
    try {
        assert_compatible(a, b);
        return true;
    } catch (const CompatError&) {
        return false;
    }
}

} // namespace crumbs
