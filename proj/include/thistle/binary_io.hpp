#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace thistle {

/// Appends little-endian encoded values to a byte buffer.
class BinaryWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) { put_le(v, 4); }
    void u64(std::uint64_t v) { put_le(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void str(std::string_view s) {
        u64(s.size());
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    void floats(std::span<const float> v) {
        for (float x : v) f32(x);
    }

    void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

    const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }
    std::vector<std::uint8_t> take() && { return std::move(buf_); }

private:
    void put_le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian reader; running off the end is a
/// snapshot_corrupt error (the outer framing has already validated length).
class BinaryReader {
public:
    explicit BinaryReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
    std::uint64_t u64() { return get_le(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::string str() {
        const std::uint64_t n = u64();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    void floats(std::span<float> out) {
        need(out.size() * 4);
        for (float& x : out) x = f32();
    }

    /// Element count for a container about to be read; rejects counts that
    /// could not fit in the remaining bytes.
    std::size_t count(std::size_t min_bytes_per_item) {
        const std::uint64_t n = u64();
        if (min_bytes_per_item > 0 && n > remaining() / min_bytes_per_item) {
            fail(ErrorCode::snapshot_corrupt, "snapshot: element count exceeds payload");
        }
        return static_cast<std::size_t>(n);
    }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    void need(std::uint64_t n) const {
        if (n > remaining()) fail(ErrorCode::snapshot_corrupt, "snapshot: payload ends early");
    }
    std::uint64_t get_le(int n) {
        need(static_cast<std::uint64_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::span<const std::uint8_t> data) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : data) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace thistle
