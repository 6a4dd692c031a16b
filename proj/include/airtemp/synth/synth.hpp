#ifndef AIRTEMP_SYNTH_SYNTH_HPP
#define AIRTEMP_SYNTH_SYNTH_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "airtemp/atc/atc.hpp"
#include "airtemp/core/grid_stack.hpp"
#include "airtemp/io/station_csv.hpp"

namespace airtemp::synth {

struct Range {
    double lo = 0, hi = 0;
};

/// Parameters of a generated scene. A scene is its own compact "year":
/// the annual cycle period equals n_doy, day 0 maps to January 1 of
/// `year` for timestamps.
struct SceneSpec {
    int h = 32, w = 32;
    int n_doy = 64;
    int year = 2024;
    std::vector<int> hours = {10};

    Range t0_truth{5, 15};
    Range a_truth{8, 15};
    Range phi_truth{-0.6, 0.6};
    Range rho_truth{0.2, 0.8};

    double texture_amplitude = 0.0; // degC of reflectance-tied residual
    double noise_sigma = 0.0;       // degC of observation noise
    double cloud_fraction = 0.3;
    int cloud_blob_scale = 6; // pixels
    int n_stations = 24;
    std::string air_transform_truth = "default"; // or "affine"
    double station_noise_sigma = 0.5;

    std::uint64_t seed = 1;

    double lat0 = 35.0, lon0 = -110.0;
    double dlat = 0.018, dlon = 0.018; // degrees per pixel (~2 km)
    int coarse_factor = 8;

    void validate() const; // throws SpecError
};

/// Per-hour stacks; the reconstruction pipeline trains one model per hour.
struct HourScene {
    int hour = 0;
    atc::AtcParamField atc_truth;
    GridStack truth_surf;    // n_doy x H x W, gap free
    GridStack observed_surf; // n_doy x H x W, cloud-masked
    GridStack coarse;        // n_doy x H x W, gap free
    std::map<std::string, GridStack> reanalysis; // var -> n_doy x Hc x Wc
};

struct SyntheticScene {
    SceneSpec spec;
    GridStack reflectance; // 5 x H x W
    GridStack elevation;   // 1 x H x W, meters
    GridStack slope;       // 1 x H x W, degrees
    std::vector<HourScene> hours;
    std::vector<StationRecord> stations;
    std::vector<std::pair<int, int>> station_pixels; // (y, x) per station id order

    const HourScene& hour_scene(int hour) const;
};

inline const std::vector<std::string>& reanalysis_vars() {
    static const std::vector<std::string> vars = {"blh", "tcw", "shf", "u10", "v10"};
    return vars;
}

SyntheticScene generate_scene(const SceneSpec& spec);

/// Closed-form truth transforms; "affine" depends on surface temperature
/// only, "default" is smooth, monotone in surface temperature, and
/// nonlinear in hour.
double air_transform_truth_eval(const std::string& name, double t_surf, double elevation_m, int hour);

// ---------------------------------------------------------------------------
// Oracles: comparisons against stored truth only.
// ---------------------------------------------------------------------------

struct OracleStats {
    double rmse_observed = 0, mae_observed = 0;
    double rmse_masked = 0, mae_masked = 0;
    std::int64_t n_observed = 0, n_masked = 0;
};

/// Error statistics of a reconstruction against the stored truth surface,
/// split into cloud-free (observed) and cloud-masked pixel classes.
OracleStats oracle_eval(const HourScene& hs, const GridStack& output);

struct AtcRecoveryStats {
    double frac_t0_ok = 0, frac_a_ok = 0, frac_phi_ok = 0;
    double max_t0_err = 0, max_a_err = 0, max_phi_err = 0;
};

/// Per-pixel recovery check with canonicalized parameters: negative
/// amplitudes map to (|A|, phi+pi) and phase errors are compared modulo
/// 2*pi.
AtcRecoveryStats compare_atc(const atc::AtcParamField& truth, const atc::AtcParamField& fitted,
                             double tol_t0, double tol_a, double tol_phi);

// ---------------------------------------------------------------------------
// On-disk scene layout. The pipeline consumes scenes through load_scene
// with load_truth=false; truth files exist only for oracle checks.
// ---------------------------------------------------------------------------

void write_scene(const SyntheticScene& scene, const std::string& dir);

struct SceneBundle {
    int h = 0, w = 0, n_doy = 0, year = 0, coarse_factor = 8;
    std::vector<int> hours;
    double lat0 = 0, lon0 = 0, dlat = 0, dlon = 0;
    std::string air_transform = "default";
    GridStack reflectance, elevation, slope;
    std::map<int, GridStack> observed, coarse;
    std::map<int, std::map<std::string, GridStack>> reanalysis;
    std::vector<StationRecord> stations;

    bool has_truth = false;
    std::map<int, GridStack> truth_surf;
    std::map<int, atc::AtcParamField> truth_atc;
};

SceneBundle load_scene(const std::string& dir, bool load_truth = false);

} // namespace airtemp::synth

#endif
