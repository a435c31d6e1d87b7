#include "crumbs/io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace crumbs {

using nlohmann::json;

namespace {

void put_u64_le(std::ostream& os, uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

uint64_t get_u64_le(const unsigned char* buf) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
    return v;
}

// float32 payloads are written verbatim; this code assumes a little-endian
// IEEE-754 host, which covers every platform this project targets.
static_assert(sizeof(float) == 4);

} // namespace

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    json header = json::object();
    if (!ckpt.metadata().empty()) {
        json meta = json::object();
        for (const auto& [k, v] : ckpt.metadata()) meta[k] = v;
        header["__metadata__"] = std::move(meta);
    }
    uint64_t offset = 0;
    for (const auto& t : ckpt.tensors()) {
        uint64_t bytes = static_cast<uint64_t>(t.numel()) * 4;
        header[t.name] = {{"dtype", "F32"},
                          {"shape", t.shape},
                          {"data_offsets", {offset, offset + bytes}}};
        offset += bytes;
    }
    std::string header_str = header.dump();

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    put_u64_le(os, header_str.size());
    os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto& t : ckpt.tensors())
        os.write(reinterpret_cast<const char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * 4));
    os.flush();
    if (!os) throw Error("I/O failure writing '" + path.string() + "'");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open '" + path.string() + "'");
    is.seekg(0, std::ios::end);
    uint64_t file_size = static_cast<uint64_t>(is.tellg());
    is.seekg(0);
    if (file_size < 8) throw FormatError("'" + path.string() + "': malformed header (file too short)");

    unsigned char len_buf[8];
    is.read(reinterpret_cast<char*>(len_buf), 8);
    uint64_t header_len = get_u64_le(len_buf);
    if (header_len > file_size - 8)
        throw FormatError("'" + path.string() + "': malformed header (declared length exceeds file)");

    std::string header_str(header_len, '\0');
    is.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (!is) throw FormatError("'" + path.string() + "': malformed header (read failure)");

    // nlohmann silently keeps the last of duplicate keys; detect them with a
    // parse callback so duplicate tensor names are a hard error.
    bool duplicate = false;
    std::vector<std::vector<std::string>> key_stack;
    auto cb = [&](int /*depth*/, json::parse_event_t event, json& parsed) {
        if (event == json::parse_event_t::object_start) {
            key_stack.emplace_back();
        } else if (event == json::parse_event_t::object_end) {
            key_stack.pop_back();
        } else if (event == json::parse_event_t::key) {
            auto& keys = key_stack.back();
            std::string k = parsed.get<std::string>();
            if (std::find(keys.begin(), keys.end(), k) != keys.end()) duplicate = true;
            keys.push_back(std::move(k));
        }
        return true;
    };
    json header;
    try {
        header = json::parse(header_str, cb);
    } catch (const json::exception& e) {
        throw FormatError("'" + path.string() + "': malformed header: " + e.what());
    }
    if (duplicate) throw FormatError("'" + path.string() + "': duplicate tensor name in header");
    if (!header.is_object()) throw FormatError("'" + path.string() + "': malformed header (not an object)");

    uint64_t payload_size = file_size - 8 - header_len;
    Checkpoint ckpt;
    uint64_t expected_bytes = 0;
    for (auto& [name, entry] : header.items()) {
        if (name == "__metadata__") {
            if (!entry.is_object())
                throw FormatError("'" + path.string() + "': __metadata__ is not an object");
            for (auto& [k, v] : entry.items()) {
                if (!v.is_string())
                    throw FormatError("'" + path.string() + "': metadata value for '" + k + "' is not a string");
                ckpt.metadata()[k] = v.get<std::string>();
            }
            continue;
        }
        if (!entry.is_object() || !entry.contains("dtype") || !entry.contains("shape") ||
            !entry.contains("data_offsets"))
            throw FormatError("'" + path.string() + "': malformed entry for tensor '" + name + "'");
        std::string dtype = entry["dtype"].get<std::string>();
        if (dtype != "F32")
            throw FormatError("'" + path.string() + "': tensor '" + name + "' has unsupported dtype '" +
                              dtype + "' (only F32 is accepted)");

        TensorRecord rec;
        rec.name = name;
        rec.shape = entry["shape"].get<std::vector<int64_t>>();
        auto offs = entry["data_offsets"].get<std::vector<uint64_t>>();
        if (offs.size() != 2 || offs[1] < offs[0])
            throw FormatError("'" + path.string() + "': tensor '" + name + "' has invalid data_offsets");
        uint64_t bytes = offs[1] - offs[0];
        uint64_t want = static_cast<uint64_t>(rec.numel()) * 4;
        if (bytes != want)
            throw FormatError("'" + path.string() + "': tensor '" + name + "' payload length mismatch: shape needs " +
                              std::to_string(want) + " bytes, offsets give " + std::to_string(bytes));
        if (offs[1] > payload_size)
            throw FormatError("'" + path.string() + "': tensor '" + name +
                              "' payload length mismatch: offsets exceed payload region");
        rec.data.resize(static_cast<size_t>(rec.numel()));
        is.seekg(static_cast<std::streamoff>(8 + header_len + offs[0]));
        is.read(reinterpret_cast<char*>(rec.data.data()), static_cast<std::streamsize>(bytes));
        if (!is) throw FormatError("'" + path.string() + "': payload length mismatch (truncated read)");
        expected_bytes += bytes;
        ckpt.add(std::move(rec));
    }
    if (expected_bytes != payload_size)
        throw FormatError("'" + path.string() + "': payload length mismatch: payload has " +
                          std::to_string(payload_size) + " bytes, header accounts for " +
                          std::to_string(expected_bytes));
    return ckpt;
}

} // namespace crumbs
