#ifndef AIRTEMP_ENSEMBLE_ENSEMBLE_HPP
#define AIRTEMP_ENSEMBLE_ENSEMBLE_HPP

#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "airtemp/core/tensor.hpp"

namespace airtemp::ensemble {

/// Model parameter states captured along one optimization trajectory,
/// aggregated with (by default uniform) weights.
struct SnapshotEnsemble {
    std::vector<std::map<std::string, Tensor>> snapshots;
    std::vector<double> weights;

    std::size_t size() const { return snapshots.size(); }

    static SnapshotEnsemble uniform(std::vector<std::map<std::string, Tensor>> snaps);

    /// Checks weight count, non-negativity, and unit sum (1e-9). Interval
    /// construction additionally needs K >= 2.
    void validate(bool for_intervals) const;
};

struct IntervalCalibration {
    double lambda = 1.0;
    int lower_rank = 5;    // 1-based rank into the ascending sort
    int upper_rank = 195;
    double target_coverage = 0.95;

    /// Ranks scaled from the K=200 defaults (5 and 195).
    static IntervalCalibration for_ensemble_size(int k, double target = 0.95);
    void validate(int k) const;
};

/// Weighted mean of one point's ensemble predictions, 64-bit accumulation.
double ensemble_mean(std::span<const double> predictions, std::span<const double> weights);

/// Order-statistic half-widths (d_L, d_U) for one point: sort ascending,
/// d_L = mean - sorted[lower_rank], d_U = sorted[upper_rank] - mean
/// (1-based ranks). Negative half-widths (mean outside the rank window)
/// clamp to zero.
std::pair<double, double> raw_interval(std::span<const double> predictions, double mean,
                                       const IntervalCalibration& calib);

struct CalibrationResult {
    double lambda = 1.0;
    double coverage = 0.0;     // achieved at lambda
    double raw_coverage = 0.0; // at lambda = 1
    std::size_t n = 0;
};

/// Smallest lambda whose scaled intervals cover at least `target` of the
/// calibration points, computed exactly from per-point critical ratios.
/// Throws CalibrationError when the target is unreachable or fewer than
/// 100 points are given.
CalibrationResult calibrate_lambda(std::span<const double> means, std::span<const double> d_lower,
                                   std::span<const double> d_upper, std::span<const double> obs,
                                   double target = 0.95);

/// Fraction of points with obs inside [mean - lambda*d_L, mean + lambda*d_U].
double interval_coverage(std::span<const double> means, std::span<const double> d_lower,
                         std::span<const double> d_upper, std::span<const double> obs, double lambda);

/// Pushes a calibrated surface-temperature interval through a trained
/// transform; `transform_at_point` maps a surface temperature to an air
/// temperature with all other features fixed. Bounds are swapped when the
/// transform is locally decreasing so low <= upp always holds.
std::pair<double, double> propagate_interval(const std::function<double(double)>& transform_at_point,
                                             double surf_mean, double d_lower, double d_upper,
                                             double lambda);

} // namespace airtemp::ensemble

#endif
