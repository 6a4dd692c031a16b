#ifndef AIRTEMP_IO_RENDER_HPP
#define AIRTEMP_IO_RENDER_HPP

#include <optional>
#include <string>

#include "airtemp/core/grid_stack.hpp"

namespace airtemp::io {

/// Renders one grid channel to a binary PPM (P6). Nodata cells are gray.
/// Without an explicit range the finite valid values define it; a grid with
/// no valid cells raises DegenerateInputError.
void render_map(const GridStack& grid, int channel, const std::string& ramp,
                const std::string& out_path, std::optional<float> vmin = std::nullopt,
                std::optional<float> vmax = std::nullopt);

} // namespace airtemp::io

#endif
