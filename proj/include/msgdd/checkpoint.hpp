#ifndef MSGDD_CHECKPOINT_HPP
#define MSGDD_CHECKPOINT_HPP

#include "msgdd/types.hpp"

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace msgdd {

// Single-file checkpoint container. Layout (little-endian):
//   8 bytes   magic "MSGDCKPT"
//   payload   version u32, scalar width u8, config text, epoch u32,
//             rng state text, entry count u64, entries
//   4 bytes   crc32 (zlib) of the payload
// Every entry is: name, kind u8 (0 = parameter, 1 = buffer, 2 = optimizer
// state, 3 = metadata), rank u32, dims u64[rank], raw scalar data.
inline constexpr char kCheckpointMagic[8] = {'M', 'S', 'G', 'D', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class EntryKind : std::uint8_t { Param = 0, Buffer = 1, OptState = 2, Meta = 3 };

template <typename Scalar>
struct CheckpointEntry {
    std::string name;
    EntryKind kind = EntryKind::Param;
    ArrayX<Scalar> data;
};

template <typename Scalar>
struct Checkpoint {
    std::string config_text;
    int epoch = 0;
    std::string rng_state;
    std::vector<CheckpointEntry<Scalar>> entries;

    const CheckpointEntry<Scalar>* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }
};

namespace detail {

inline void append_bytes(std::string& buf, const void* src, size_t n) {
    buf.append(static_cast<const char*>(src), n);
}
template <typename T>
void append_pod(std::string& buf, T v) {
    append_bytes(buf, &v, sizeof(T));
}
inline void append_text(std::string& buf, const std::string& s) {
    append_pod<std::uint64_t>(buf, s.size());
    append_bytes(buf, s.data(), s.size());
}

struct ByteReader {
    const char* p;
    const char* end;
    void need(size_t n) const {
        if (static_cast<size_t>(end - p) < n)
            throw Error("trainer", "checkpoint file truncated");
    }
    template <typename T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, p, sizeof(T));
        p += sizeof(T);
        return v;
    }
    std::string text() {
        const auto n = pod<std::uint64_t>();
        need(n);
        std::string s(p, n);
        p += n;
        return s;
    }
};

} // namespace detail

// Atomic write: the container is assembled in memory, written to a temp file
// next to the target and renamed into place.
template <typename Scalar>
void save_checkpoint(const std::string& path, const Checkpoint<Scalar>& ckpt) {
    std::string payload;
    detail::append_pod<std::uint32_t>(payload, kCheckpointVersion);
    detail::append_pod<std::uint8_t>(payload, static_cast<std::uint8_t>(sizeof(Scalar)));
    detail::append_text(payload, ckpt.config_text);
    detail::append_pod<std::uint32_t>(payload, static_cast<std::uint32_t>(ckpt.epoch));
    detail::append_text(payload, ckpt.rng_state);
    detail::append_pod<std::uint64_t>(payload, ckpt.entries.size());
    for (const auto& e : ckpt.entries) {
        detail::append_text(payload, e.name);
        detail::append_pod<std::uint8_t>(payload, static_cast<std::uint8_t>(e.kind));
        detail::append_pod<std::uint32_t>(payload, 1);
        detail::append_pod<std::uint64_t>(payload, static_cast<std::uint64_t>(e.data.size()));
        detail::append_bytes(payload, e.data.data(), sizeof(Scalar) * e.data.size());
    }
    const std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));

    namespace fs = std::filesystem;
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("trainer", "cannot write checkpoint '" + path + "'");
        out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        out.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
        if (!out) throw Error("trainer", "short write on checkpoint '" + path + "'");
    }
    fs::rename(tmp, path);
}

template <typename Scalar>
Checkpoint<Scalar> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("trainer", "cannot open checkpoint '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof(kCheckpointMagic) + sizeof(std::uint32_t))
        throw Error("trainer", "checkpoint file truncated");
    if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
        throw Error("trainer", "'" + path + "' is not a checkpoint file");

    const size_t payload_len = bytes.size() - sizeof(kCheckpointMagic) - sizeof(std::uint32_t);
    const char* payload = bytes.data() + sizeof(kCheckpointMagic);
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, payload + payload_len, sizeof(stored_crc));
    const std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(payload), static_cast<uInt>(payload_len)));
    if (crc != stored_crc)
        throw Error("trainer", "checkpoint checksum mismatch for '" + path + "'");

    detail::ByteReader r{payload, payload + payload_len};
    const auto version = r.pod<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw Error("trainer", "checkpoint format version " + std::to_string(version) +
                                   " not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    const auto width = r.pod<std::uint8_t>();
    if (width != sizeof(Scalar))
        throw Error("trainer", "checkpoint scalar width " + std::to_string(width) +
                                   " does not match this build (" + std::to_string(sizeof(Scalar)) + ")");
    Checkpoint<Scalar> ckpt;
    ckpt.config_text = r.text();
    ckpt.epoch = static_cast<int>(r.pod<std::uint32_t>());
    ckpt.rng_state = r.text();
    const auto count = r.pod<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
        CheckpointEntry<Scalar> e;
        e.name = r.text();
        e.kind = static_cast<EntryKind>(r.pod<std::uint8_t>());
        const auto rank = r.pod<std::uint32_t>();
        std::uint64_t total = 1;
        for (std::uint32_t d = 0; d < rank; ++d) total *= r.pod<std::uint64_t>();
        r.need(total * sizeof(Scalar));
        e.data.resize(static_cast<Eigen::Index>(total));
        std::memcpy(e.data.data(), r.p, total * sizeof(Scalar));
        r.p += total * sizeof(Scalar);
        ckpt.entries.push_back(std::move(e));
    }
    return ckpt;
}

} // namespace msgdd

#endif
