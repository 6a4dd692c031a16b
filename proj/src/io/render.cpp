#include "airtemp/io/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "airtemp/io/grid_io.hpp"

namespace airtemp::io {

namespace {

struct Rgb {
    unsigned char r, g, b;
};

constexpr Rgb kNodataGray{128, 128, 128};

// Anchor colors, interpolated linearly over [0, 1].
const std::array<Rgb, 7> kThermal = {{{20, 11, 52},
                                      {16, 63, 251},
                                      {12, 206, 250},
                                      {62, 215, 81},
                                      {253, 222, 3},
                                      {252, 112, 1},
                                      {163, 0, 10}}};

Rgb ramp_color(const std::string& ramp, float t) {
    t = std::clamp(t, 0.0f, 1.0f);
    if (ramp == "gray") {
        const auto v = static_cast<unsigned char>(std::lround(t * 255.0f));
        return {v, v, v};
    }
    if (ramp == "thermal") {
        const float pos = t * static_cast<float>(kThermal.size() - 1);
        const int lo = std::min(static_cast<int>(pos), static_cast<int>(kThermal.size()) - 2);
        const float frac = pos - static_cast<float>(lo);
        const Rgb& a = kThermal[static_cast<std::size_t>(lo)];
        const Rgb& b = kThermal[static_cast<std::size_t>(lo) + 1];
        auto mix = [frac](unsigned char u, unsigned char v) {
            return static_cast<unsigned char>(std::lround(u + frac * (static_cast<float>(v) - u)));
        };
        return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
    }
    throw ConfigError("unknown color ramp '" + ramp + "'");
}

} // namespace

void render_map(const GridStack& grid, int channel, const std::string& ramp,
                const std::string& out_path, std::optional<float> vmin, std::optional<float> vmax) {
    grid.check_in_bounds(channel, 0, 0);
    float lo = vmin.value_or(0.f), hi = vmax.value_or(0.f);
    if (!vmin || !vmax) {
        bool any = false;
        float mn = 0.f, mx = 0.f;
        for (int y = 0; y < grid.h; ++y) {
            for (int x = 0; x < grid.w; ++x) {
                if (!grid.valid(channel, y, x)) continue;
                const float v = grid.at(channel, y, x);
                if (!std::isfinite(v)) continue;
                if (!any) {
                    mn = mx = v;
                    any = true;
                } else {
                    mn = std::min(mn, v);
                    mx = std::max(mx, v);
                }
            }
        }
        if (!any) throw DegenerateInputError("render: channel has no finite valid values");
        if (!vmin) lo = mn;
        if (!vmax) hi = mx;
    }
    if (hi < lo) throw ConfigError("render: vmax below vmin");
    if (hi == lo) {
        lo -= 0.5f;
        hi += 0.5f;
    }

    std::string bytes = "P6\n" + std::to_string(grid.w) + " " + std::to_string(grid.h) + "\n255\n";
    bytes.reserve(bytes.size() + static_cast<std::size_t>(grid.h) * grid.w * 3);
    for (int y = 0; y < grid.h; ++y) {
        for (int x = 0; x < grid.w; ++x) {
            Rgb px = kNodataGray;
            if (grid.valid(channel, y, x)) {
                const float v = grid.at(channel, y, x);
                if (std::isfinite(v)) px = ramp_color(ramp, (v - lo) / (hi - lo));
            }
            bytes.push_back(static_cast<char>(px.r));
            bytes.push_back(static_cast<char>(px.g));
            bytes.push_back(static_cast<char>(px.b));
        }
    }
    atomic_write_file(out_path, bytes);
}

} // namespace airtemp::io
