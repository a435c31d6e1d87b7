#include "crumbs/fingerprint.hpp"

namespace crumbs {

uint64_t checkpoint_fingerprint(const Checkpoint& ckpt) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& t : ckpt.tensors()) {
        h = fnv1a64(t.name, h);
        h = fnv1a64("\0", 1, h);
        for (int64_t d : t.shape) h = fnv1a64(&d, sizeof(d), h);
        h = fnv1a64(t.data.data(), t.data.size() * sizeof(float), h);
    }
    return h;
}

} // namespace crumbs
