#ifndef AIRTEMP_CORE_GRID_STACK_HPP
#define AIRTEMP_CORE_GRID_STACK_HPP

#include <cstdint>
#include <vector>

#include "airtemp/core/errors.hpp"

namespace airtemp {

/// C x H x W stack of float32 values with a per-cell validity mask.
/// Channels index days, hours, or bands depending on the producer.
struct GridStack {
    int c = 0, h = 0, w = 0;
    std::vector<float> data;
    std::vector<std::uint8_t> mask; // 1 = valid

    GridStack() = default;
    GridStack(int channels, int height, int width, float fill = 0.f, std::uint8_t valid = 1);

    std::size_t idx(int ch, int y, int x) const {
        return (static_cast<std::size_t>(ch) * h + y) * w + x;
    }
    float& at(int ch, int y, int x) { return data[idx(ch, y, x)]; }
    float at(int ch, int y, int x) const { return data[idx(ch, y, x)]; }
    bool valid(int ch, int y, int x) const { return mask[idx(ch, y, x)] != 0; }
    void set_valid(int ch, int y, int x, bool v) { mask[idx(ch, y, x)] = v ? 1 : 0; }

    std::int64_t numel() const { return static_cast<std::int64_t>(c) * h * w; }
    std::int64_t count_valid() const;
    bool same_shape(const GridStack& o) const { return c == o.c && h == o.h && w == o.w; }
    void check_in_bounds(int ch, int y, int x) const;

    /// Extracts channels [c0, c0+nc) over the pixel window (y0, x0, hh, ww).
    GridStack window(int c0, int nc, int y0, int x0, int hh, int ww) const;
};

} // namespace airtemp

#endif
