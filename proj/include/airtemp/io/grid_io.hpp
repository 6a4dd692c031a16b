#ifndef AIRTEMP_IO_GRID_IO_HPP
#define AIRTEMP_IO_GRID_IO_HPP

#include <string>

#include "airtemp/core/grid_stack.hpp"

namespace airtemp::io {

/// Binary grid format: magic "TGRD", version u32, C/H/W u32, nodata f32,
/// then C*H*W float32 values channel-major row-major, all little-endian.
/// Invalid cells are stored as the nodata sentinel.
inline constexpr std::uint32_t kGridFormatVersion = 1;
inline constexpr float kDefaultNodata = -9999.0f;

void write_grid(const GridStack& grid, const std::string& path, float nodata = kDefaultNodata);
GridStack read_grid(const std::string& path);

/// Writes bytes to a temp file in the target directory, then renames into
/// place; failed writes never leave a partial output file.
void atomic_write_file(const std::string& path, const std::string& bytes);
std::string read_file_bytes(const std::string& path);

} // namespace airtemp::io

#endif
