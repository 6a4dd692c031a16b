#include "airtemp/io/grid_io.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace airtemp::io {

namespace {

void append_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void append_f32(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    append_u32(out, bits);
}

std::uint32_t take_u32(const std::string& bytes, std::size_t& pos) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    pos += 4;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float take_f32(const std::string& bytes, std::size_t& pos) {
    const std::uint32_t bits = take_u32(bytes, pos);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

} // namespace

void atomic_write_file(const std::string& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot rename '" + tmp.string() + "' to '" + target.string() + "': " + ec.message());
    }
}

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_grid(const GridStack& grid, const std::string& path, float nodata) {
    std::string bytes;
    bytes.reserve(24 + grid.data.size() * 4);
    bytes += "TGRD";
    append_u32(bytes, kGridFormatVersion);
    append_u32(bytes, static_cast<std::uint32_t>(grid.c));
    append_u32(bytes, static_cast<std::uint32_t>(grid.h));
    append_u32(bytes, static_cast<std::uint32_t>(grid.w));
    append_f32(bytes, nodata);
    for (std::size_t i = 0; i < grid.data.size(); ++i) {
        if (grid.mask[i]) {
            if (grid.data[i] == nodata) {
                throw IoError("valid cell value collides with nodata sentinel " + std::to_string(nodata));
            }
            append_f32(bytes, grid.data[i]);
        } else {
            append_f32(bytes, nodata);
        }
    }
    atomic_write_file(path, bytes);
}

GridStack read_grid(const std::string& path) {
    const std::string bytes = read_file_bytes(path);
    if (bytes.size() < 4) throw TruncatedFileError("'" + path + "': too short for a grid header");
    if (bytes.compare(0, 4, "TGRD") != 0) {
        throw BadMagicError("'" + path + "': bad magic '" + bytes.substr(0, 4) + "'");
    }
    if (bytes.size() < 24) throw TruncatedFileError("'" + path + "': truncated grid header");
    std::size_t pos = 4;
    const std::uint32_t version = take_u32(bytes, pos);
    if (version != kGridFormatVersion) {
        throw VersionMismatchError("'" + path + "': grid format version " + std::to_string(version) +
                                   ", expected " + std::to_string(kGridFormatVersion));
    }
    const std::uint32_t c = take_u32(bytes, pos);
    const std::uint32_t h = take_u32(bytes, pos);
    const std::uint32_t w = take_u32(bytes, pos);
    const float nodata = take_f32(bytes, pos);
    if (c == 0 || h == 0 || w == 0) throw IoError("'" + path + "': zero grid dimension");
    const std::uint64_t count = static_cast<std::uint64_t>(c) * h * w;
    const std::uint64_t expected = 24 + count * 4;
    if (bytes.size() < expected) {
        throw TruncatedFileError("'" + path + "': payload has " + std::to_string((bytes.size() - 24) / 4) +
                                 " of " + std::to_string(count) + " values");
    }
    if (bytes.size() > expected) {
        throw IoError("'" + path + "': trailing bytes after payload");
    }
    GridStack grid(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
    for (std::uint64_t i = 0; i < count; ++i) {
        const float v = take_f32(bytes, pos);
        if (v == nodata) {
            grid.data[i] = 0.f;
            grid.mask[i] = 0;
        } else {
            grid.data[i] = v;
            grid.mask[i] = 1;
        }
    }
    return grid;
}

} // namespace airtemp::io
