#include "airtemp/atc/atc.hpp"

#include <cmath>
#include <string>

namespace airtemp::atc {

AtcParamField::AtcParamField(int height, int width, int days) : h(height), w(width), n_doy(days) {
    if (h <= 0 || w <= 0) throw DimensionError("ATC field dims must be positive");
    if (n_doy < 2) throw DimensionError("ATC period must be at least 2 days, got " + std::to_string(n_doy));
    const std::size_t n = static_cast<std::size_t>(h) * w;
    t0.assign(n, 0.f);
    a.assign(n, 0.f);
    phi.assign(n, 0.f);
    rho.assign(n, 0.f);
}

void AtcParamField::check_pixel(int y, int x) const {
    if (y < 0 || y >= h || x < 0 || x >= w) {
        throw IndexError("ATC pixel (" + std::to_string(y) + "," + std::to_string(x) +
                         ") out of bounds for " + std::to_string(h) + "x" + std::to_string(w));
    }
}

void AtcParamField::validate() const {
    const std::size_t n = static_cast<std::size_t>(h) * w;
    if (t0.size() != n || a.size() != n || phi.size() != n || rho.size() != n) {
        throw DimensionError("ATC field grids do not share one HxW");
    }
    auto all_finite = [](const std::vector<float>& v) {
        for (float x : v) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    };
    if (!all_finite(t0) || !all_finite(a) || !all_finite(phi) || !all_finite(rho)) {
        throw Error("ATC field contains non-finite values");
    }
}

double atc_eval(const AtcParamField& field, int row, int col, double t) {
    field.check_pixel(row, col);
    const std::size_t i = field.idx(row, col);
    const double angle = 2.0 * M_PI * t / static_cast<double>(field.n_doy) +
                         static_cast<double>(field.phi[i]);
    return static_cast<double>(field.t0[i]) + static_cast<double>(field.a[i]) * std::sin(angle);
}

GridStack atc_eval_stack(const AtcParamField& field, int day_begin, int day_end) {
    if (day_begin < 0 || day_end > field.n_doy || day_begin >= day_end) {
        throw IndexError("day range [" + std::to_string(day_begin) + "," + std::to_string(day_end) +
                         ") outside [0," + std::to_string(field.n_doy) + ")");
    }
    GridStack out(day_end - day_begin, field.h, field.w);
    for (int d = day_begin; d < day_end; ++d) {
        for (int y = 0; y < field.h; ++y) {
            for (int x = 0; x < field.w; ++x) {
                out.at(d - day_begin, y, x) = static_cast<float>(atc_eval(field, y, x, d));
            }
        }
    }
    return out;
}

} // namespace airtemp::atc
