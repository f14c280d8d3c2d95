#pragma once

// Snapshot file layout (all integers little-endian):
//
//   magic      8 bytes  "THSTLSNP"
//   version    u8       kSnapshotVersion
//   length     u64      payload byte count
//   payload    length bytes
//   checksum   u64      FNV-1a 64 of the payload
//
// Payload:
//   backend u8, metric u8, normalize u8, dim u64
//   hnsw: M u32, ef_construction u32, ef_search u32, level_norm f64, max_layers u32, seed u64
//   lsh:  n_projections u32, n_tables u32, seed u64
//   record count u64, then per record: id str, text str, dim x f32
//   backend block (empty for iterative backends; see HnswIndex::save / LshIndex::save)
//
// str = u64 byte length followed by raw UTF-8 bytes.

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "database.hpp"

namespace thistle {

inline constexpr std::array<char, 8> kSnapshotMagic = {'T', 'H', 'S', 'T', 'L', 'S', 'N', 'P'};
inline constexpr std::uint8_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotPrefix = 8 + 1 + 8;

/// Header fields, readable without restoring the index.
struct SnapshotInfo {
    IndexConfig config;
    std::uint64_t record_count = 0;
};

namespace detail {

inline void write_config(BinaryWriter& w, const IndexConfig& c) {
    w.u8(static_cast<std::uint8_t>(c.backend));
    w.u8(static_cast<std::uint8_t>(c.metric()));
    w.u8(c.normalize_on_insert ? 1 : 0);
    w.u64(c.dim);
    w.u32(c.hnsw.M);
    w.u32(c.hnsw.ef_construction);
    w.u32(c.hnsw.ef_search);
    w.f64(c.hnsw.level_norm);
    w.u32(c.hnsw.max_layers);
    w.u64(c.hnsw.seed);
    w.u32(c.lsh.n_projections);
    w.u32(c.lsh.n_tables);
    w.u64(c.lsh.seed);
}

inline IndexConfig read_config(BinaryReader& r) {
    IndexConfig c;
    const std::uint8_t backend = r.u8();
    if (backend > static_cast<std::uint8_t>(Backend::lsh)) {
        fail(ErrorCode::snapshot_corrupt, "snapshot: unknown backend tag");
    }
    c.backend = static_cast<Backend>(backend);
    if (r.u8() != static_cast<std::uint8_t>(c.metric())) {
        fail(ErrorCode::snapshot_corrupt, "snapshot: metric does not match backend");
    }
    c.normalize_on_insert = r.u8() != 0;
    c.dim = static_cast<std::size_t>(r.u64());
    c.hnsw.M = r.u32();
    c.hnsw.ef_construction = r.u32();
    c.hnsw.ef_search = r.u32();
    c.hnsw.level_norm = r.f64();
    c.hnsw.max_layers = r.u32();
    c.hnsw.seed = r.u64();
    c.lsh.n_projections = r.u32();
    c.lsh.n_tables = r.u32();
    c.lsh.seed = r.u64();
    try {
        c.validate();
    } catch (const Error& e) {
        fail(ErrorCode::snapshot_corrupt, std::string("snapshot: invalid config: ") + e.what());
    }
    return c;
}

/// Validates framing and checksum; returns the payload.
inline std::span<const std::uint8_t> unframe(std::span<const std::uint8_t> bytes) {
    const std::size_t magic_len = std::min(bytes.size(), kSnapshotMagic.size());
    if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_len),
                    kSnapshotMagic.begin())) {
        fail(ErrorCode::snapshot_corrupt, "not a snapshot file (bad magic)");
    }
    if (bytes.size() < kSnapshotMagic.size() + 1) {
        fail(ErrorCode::snapshot_truncated, "snapshot truncated inside the header");
    }
    if (bytes[8] != kSnapshotVersion) {
        fail(ErrorCode::snapshot_version, "snapshot format version " + std::to_string(bytes[8]) +
                                              " is not supported (expected " +
                                              std::to_string(kSnapshotVersion) + ")");
    }
    if (bytes.size() < kSnapshotPrefix) {
        fail(ErrorCode::snapshot_truncated, "snapshot truncated inside the header");
    }
    BinaryReader prefix(bytes.subspan(9, 8));
    const std::uint64_t length = prefix.u64();
    const std::uint64_t available = bytes.size() - kSnapshotPrefix;
    if (available < 8 || length > available - 8) {
        fail(ErrorCode::snapshot_truncated,
             "snapshot truncated: header declares " + std::to_string(length) +
                 " payload bytes, file holds " + std::to_string(available));
    }
    if (length != available - 8) {
        fail(ErrorCode::snapshot_corrupt, "snapshot has trailing bytes after the checksum");
    }
    const auto payload = bytes.subspan(kSnapshotPrefix, static_cast<std::size_t>(length));
    BinaryReader tail(bytes.subspan(kSnapshotPrefix + payload.size(), 8));
    if (tail.u64() != fnv1a64(payload)) {
        fail(ErrorCode::snapshot_checksum, "snapshot checksum mismatch");
    }
    return payload;
}

} // namespace detail

inline std::vector<std::uint8_t> encode_snapshot(const Database& db) {
    BinaryWriter payload;
    detail::write_config(payload, db.config());
    const auto& store = db.index().store();
    payload.u64(store.size());
    for (std::size_t row = 0; row < store.size(); ++row) {
        payload.str(store.id(row));
        payload.str(db.text(row));
        payload.floats(store.vector(row));
    }
    if (const auto* h = dynamic_cast<const HnswIndex*>(&db.index())) {
        h->save(payload);
    } else if (const auto* l = dynamic_cast<const LshIndex*>(&db.index())) {
        l->save(payload);
    }

    BinaryWriter out;
    for (char c : kSnapshotMagic) out.u8(static_cast<std::uint8_t>(c));
    out.u8(kSnapshotVersion);
    out.u64(payload.buffer().size());
    out.bytes(payload.buffer());
    out.u64(fnv1a64(payload.buffer()));
    return std::move(out).take();
}

inline SnapshotInfo decode_snapshot_info(std::span<const std::uint8_t> bytes) {
    BinaryReader r(detail::unframe(bytes));
    SnapshotInfo info;
    info.config = detail::read_config(r);
    info.record_count = r.u64();
    return info;
}

inline Database decode_snapshot(std::span<const std::uint8_t> bytes) {
    BinaryReader r(detail::unframe(bytes));
    IndexConfig config = detail::read_config(r);
    const std::size_t n = r.count(16 + 4 * config.dim);
    std::vector<DocRecord> records;
    std::vector<std::string> texts;
    records.reserve(n);
    texts.reserve(n);
    std::vector<float> values(config.dim);
    for (std::size_t i = 0; i < n; ++i) {
        std::string id = r.str();
        std::string text = r.str();
        r.floats(values);
        try {
            records.push_back({std::move(id), {}, Embedding(values)});
        } catch (const Error& e) {
            fail(ErrorCode::snapshot_corrupt, std::string("snapshot: bad record: ") + e.what());
        }
        texts.push_back(std::move(text));
    }

    std::unique_ptr<VectorIndex> index;
    try {
        switch (config.backend) {
        case Backend::iter_cosine:
        case Backend::iter_euclidean:
            index = make_index(config);
            index->add(records);
            break;
        case Backend::hnsw_cosine:
        case Backend::hnsw_euclidean:
            index = std::make_unique<HnswIndex>(
                HnswIndex::load(r, records, config.dim, config.metric(), config.hnsw));
            break;
        case Backend::lsh:
            index = std::make_unique<LshIndex>(LshIndex::load(r, records, config.dim, config.lsh));
            break;
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::snapshot_corrupt) throw;
        fail(ErrorCode::snapshot_corrupt, std::string("snapshot: ") + e.what());
    }
    if (!r.at_end()) fail(ErrorCode::snapshot_corrupt, "snapshot: unread payload bytes");
    return Database(std::move(config), std::move(index), std::move(texts));
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io_error, "cannot open '" + path.string() + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to a sibling temporary file and renames it into place, so a
/// failed save never leaves a partial snapshot at `path`.
inline void write_file_atomic(const std::filesystem::path& path,
                              std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::io_error, "cannot open '" + tmp.string() + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            fail(ErrorCode::io_error, "write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        fail(ErrorCode::io_error, "cannot move snapshot into '" + path.string() + "': " + ec.message());
    }
}

inline void save_snapshot(const Database& db, const std::filesystem::path& path) {
    write_file_atomic(path, encode_snapshot(db));
}

inline Database load_snapshot(const std::filesystem::path& path) {
    return decode_snapshot(read_file_bytes(path));
}

inline SnapshotInfo read_snapshot_info(const std::filesystem::path& path) {
    return decode_snapshot_info(read_file_bytes(path));
}

} // namespace thistle
