#include "airtemp/ensemble/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "airtemp/core/errors.hpp"

namespace airtemp::ensemble {

SnapshotEnsemble SnapshotEnsemble::uniform(std::vector<std::map<std::string, Tensor>> snaps) {
    SnapshotEnsemble e;
    e.snapshots = std::move(snaps);
    const std::size_t k = e.snapshots.size();
    if (k == 0) throw ConfigError("snapshot ensemble must not be empty");
    e.weights.assign(k, 1.0 / static_cast<double>(k));
    return e;
}

void SnapshotEnsemble::validate(bool for_intervals) const {
    if (snapshots.empty()) throw ConfigError("snapshot ensemble must not be empty");
    if (for_intervals && snapshots.size() < 2) {
        throw ConfigError("interval construction needs at least 2 snapshots");
    }
    if (weights.size() != snapshots.size()) {
        throw DimensionError("ensemble has " + std::to_string(snapshots.size()) + " snapshots but " +
                             std::to_string(weights.size()) + " weights");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ConfigError("ensemble weights must be non-negative");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw ConfigError("ensemble weights sum to " + std::to_string(sum) + ", expected 1");
    }
}

IntervalCalibration IntervalCalibration::for_ensemble_size(int k, double target) {
    IntervalCalibration c;
    c.target_coverage = target;
    c.lower_rank = std::max(1, static_cast<int>(std::lround(0.025 * k)));
    c.upper_rank = std::min(k, static_cast<int>(std::lround(0.975 * k)));
    if (c.upper_rank <= c.lower_rank) {
        c.lower_rank = 1;
        c.upper_rank = k;
    }
    c.validate(k);
    return c;
}

void IntervalCalibration::validate(int k) const {
    if (lower_rank < 1 || upper_rank <= lower_rank || upper_rank > k) {
        throw ConfigError("interval ranks (" + std::to_string(lower_rank) + "," +
                          std::to_string(upper_rank) + ") invalid for ensemble size " + std::to_string(k));
    }
    if (lambda <= 0.0) throw ConfigError("lambda must be positive");
}

double ensemble_mean(std::span<const double> predictions, std::span<const double> weights) {
    if (predictions.empty()) throw DegenerateInputError("ensemble mean over empty predictions");
    if (predictions.size() != weights.size()) {
        throw DimensionError("prediction count " + std::to_string(predictions.size()) +
                             " does not match weight count " + std::to_string(weights.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) acc += weights[i] * predictions[i];
    return acc;
}

std::pair<double, double> raw_interval(std::span<const double> predictions, double mean,
                                       const IntervalCalibration& calib) {
    const int k = static_cast<int>(predictions.size());
    if (k < calib.upper_rank) {
        throw ConfigError("ensemble size " + std::to_string(k) + " below upper rank " +
                          std::to_string(calib.upper_rank));
    }
    std::vector<double> sorted(predictions.begin(), predictions.end());
    std::sort(sorted.begin(), sorted.end());
    double d_l = mean - sorted[static_cast<std::size_t>(calib.lower_rank - 1)];
    double d_u = sorted[static_cast<std::size_t>(calib.upper_rank - 1)] - mean;
    if (d_l < 0.0) d_l = 0.0;
    if (d_u < 0.0) d_u = 0.0;
    return {d_l, d_u};
}

double interval_coverage(std::span<const double> means, std::span<const double> d_lower,
                         std::span<const double> d_upper, std::span<const double> obs, double lambda) {
    const std::size_t n = means.size();
    if (d_lower.size() != n || d_upper.size() != n || obs.size() != n) {
        throw DimensionError("interval coverage inputs differ in length");
    }
    if (n == 0) throw DegenerateInputError("interval coverage over empty inputs");
    std::size_t covered = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = means[i] - lambda * d_lower[i];
        const double hi = means[i] + lambda * d_upper[i];
        if (obs[i] >= lo && obs[i] <= hi) ++covered;
    }
    return static_cast<double>(covered) / static_cast<double>(n);
}

CalibrationResult calibrate_lambda(std::span<const double> means, std::span<const double> d_lower,
                                   std::span<const double> d_upper, std::span<const double> obs,
                                   double target) {
    const std::size_t n = means.size();
    if (d_lower.size() != n || d_upper.size() != n || obs.size() != n) {
        throw DimensionError("calibration inputs differ in length");
    }
    if (n < 100) {
        throw CalibrationError("calibration needs at least 100 points, got " + std::to_string(n));
    }
    if (target <= 0.0 || target >= 1.0) {
        throw CalibrationError("coverage target must be in (0,1), got " + std::to_string(target));
    }

    // Critical ratio per point: the smallest lambda that covers it.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> ratios(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double resid = obs[i] - means[i];
        if (resid == 0.0) {
            ratios[i] = 0.0;
        } else if (resid > 0.0) {
            ratios[i] = d_upper[i] > 0.0 ? resid / d_upper[i] : kInf;
        } else {
            ratios[i] = d_lower[i] > 0.0 ? -resid / d_lower[i] : kInf;
        }
    }
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const auto m = static_cast<std::size_t>(
        std::ceil(target * static_cast<double>(n) - 1e-12)); // points needed for coverage >= target
    double lam = sorted[m - 1];
    if (std::isinf(lam)) {
        std::size_t finite = 0;
        for (double r : sorted) finite += std::isfinite(r) ? 1 : 0;
        const double achievable = static_cast<double>(finite) / static_cast<double>(n);
        throw CalibrationError("coverage target " + std::to_string(target) +
                               " unreachable: zero-width intervals cap achievable coverage at " +
                               std::to_string(achievable));
    }
    if (lam <= 0.0) lam = 1e-12; // all-m smallest residuals are exactly zero

    CalibrationResult result;
    result.lambda = lam;
    result.n = n;
    result.coverage = interval_coverage(means, d_lower, d_upper, obs, lam);
    result.raw_coverage = interval_coverage(means, d_lower, d_upper, obs, 1.0);
    return result;
}

std::pair<double, double> propagate_interval(const std::function<double(double)>& transform_at_point,
                                             double surf_mean, double d_lower, double d_upper,
                                             double lambda) {
    const double lo_in = surf_mean - lambda * d_lower;
    const double hi_in = surf_mean + lambda * d_upper;
    double lo = transform_at_point(lo_in);
    double hi = transform_at_point(hi_in);
    if (lo > hi) std::swap(lo, hi);
    return {lo, hi};
}

} // namespace airtemp::ensemble
