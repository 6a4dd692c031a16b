#ifndef AIRTEMP_ATC_ATC_HPP
#define AIRTEMP_ATC_ATC_HPP

#include <vector>

#include "airtemp/core/grid_stack.hpp"

namespace airtemp::atc {

/// Per-pixel annual-cycle parameters plus the coarse-field scaling
/// coefficient. Grids are H x W row-major. n_doy is the cycle period in
/// days: 365/366 for calendar years, shorter for compact synthetic years.
struct AtcParamField {
    int h = 0, w = 0;
    int n_doy = 365;
    std::vector<float> t0;   // annual mean, degC
    std::vector<float> a;    // amplitude, degC
    std::vector<float> phi;  // phase shift, radians
    std::vector<float> rho;  // coarse-field coefficient, dimensionless

    AtcParamField() = default;
    AtcParamField(int height, int width, int days);

    std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * w + x; }
    void check_pixel(int y, int x) const;
    void validate() const;
};

/// T0 + A * sin(2*pi*t/N + phi) at one pixel; evaluated in 64-bit.
double atc_eval(const AtcParamField& field, int row, int col, double t);

/// One channel per requested day over the whole grid.
GridStack atc_eval_stack(const AtcParamField& field, int day_begin, int day_end);

} // namespace airtemp::atc

#endif
