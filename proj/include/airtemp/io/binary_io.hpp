#ifndef AIRTEMP_IO_BINARY_IO_HPP
#define AIRTEMP_IO_BINARY_IO_HPP

#include <cstdint>
#include <cstring>
#include <string>

#include "airtemp/core/errors.hpp"

namespace airtemp::io {

// Little-endian primitives for the binary model/ensemble formats.

inline void append_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void append_i32(std::string& out, std::int32_t v) {
    append_u32(out, static_cast<std::uint32_t>(v));
}

inline void append_u64(std::string& out, std::uint64_t v) {
    append_u32(out, static_cast<std::uint32_t>(v & 0xffffffffull));
    append_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline void append_f32(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    append_u32(out, bits);
}

inline void append_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    append_u64(out, bits);
}

inline void append_str(std::string& out, const std::string& s) {
    append_u32(out, static_cast<std::uint32_t>(s.size()));
    out += s;
}

class ByteReader {
public:
    ByteReader(const std::string& bytes, std::string origin)
        : bytes_(bytes), origin_(std::move(origin)) {}

    std::uint32_t u32() {
        need(4);
        const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
        pos_ += 4;
        return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::uint64_t u64() {
        const std::uint64_t lo = u32();
        const std::uint64_t hi = u32();
        return lo | (hi << 32);
    }
    float f32() {
        const std::uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    void raw_f32(float* dst, std::size_t count) {
        need(count * 4);
        for (std::size_t i = 0; i < count; ++i) dst[i] = f32();
    }
    bool at_end() const { return pos_ == bytes_.size(); }
    void expect_end() const {
        if (!at_end()) throw IoError(origin_ + ": trailing bytes after payload");
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw TruncatedFileError(origin_ + ": unexpected end of file");
    }
    const std::string& bytes_;
    std::string origin_;
    std::size_t pos_ = 0;
};

} // namespace airtemp::io

#endif
