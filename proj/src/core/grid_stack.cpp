#include "airtemp/core/grid_stack.hpp"

#include <string>

namespace airtemp {

GridStack::GridStack(int channels, int height, int width, float fill, std::uint8_t valid)
    : c(channels), h(height), w(width) {
    if (c <= 0 || h <= 0 || w <= 0) {
        throw DimensionError("grid stack dims must be positive, got " + std::to_string(c) + "x" +
                             std::to_string(h) + "x" + std::to_string(w));
    }
    data.assign(static_cast<std::size_t>(numel()), fill);
    mask.assign(static_cast<std::size_t>(numel()), valid);
}

std::int64_t GridStack::count_valid() const {
    std::int64_t n = 0;
    for (std::uint8_t m : mask) n += m != 0;
    return n;
}

void GridStack::check_in_bounds(int ch, int y, int x) const {
    if (ch < 0 || ch >= c || y < 0 || y >= h || x < 0 || x >= w) {
        throw IndexError("grid index (" + std::to_string(ch) + "," + std::to_string(y) + "," +
                         std::to_string(x) + ") out of bounds for " + std::to_string(c) + "x" +
                         std::to_string(h) + "x" + std::to_string(w));
    }
}

GridStack GridStack::window(int c0, int nc, int y0, int x0, int hh, int ww) const {
    check_in_bounds(c0, y0, x0);
    check_in_bounds(c0 + nc - 1, y0 + hh - 1, x0 + ww - 1);
    GridStack out(nc, hh, ww);
    for (int ch = 0; ch < nc; ++ch) {
        for (int y = 0; y < hh; ++y) {
            for (int x = 0; x < ww; ++x) {
                const std::size_t src = idx(c0 + ch, y0 + y, x0 + x);
                const std::size_t dst = out.idx(ch, y, x);
                out.data[dst] = data[src];
                out.mask[dst] = mask[src];
            }
        }
    }
    return out;
}

} // namespace airtemp
