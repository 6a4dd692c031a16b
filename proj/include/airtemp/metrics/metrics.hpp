#ifndef AIRTEMP_METRICS_METRICS_HPP
#define AIRTEMP_METRICS_METRICS_HPP

#include <span>
#include <string>
#include <vector>

#include "airtemp/core/errors.hpp"

namespace airtemp::metrics {

double rmse(std::span<const double> pred, std::span<const double> obs);
double mae(std::span<const double> pred, std::span<const double> obs);
/// 1 - SSE/SST; throws DegenerateInputError when obs has zero variance.
double r2(std::span<const double> pred, std::span<const double> obs);

enum class BreakdownKey { none, hour, month, temp_bin, elev_bin };

BreakdownKey breakdown_key_from_string(const std::string& s);
std::string breakdown_key_name(BreakdownKey key);

/// One prediction/observation pair plus the covariates the breakdowns
/// bin on.
struct EvalPair {
    double pred = 0;
    double obs = 0;
    int hour = 0;    // 0..23
    int month = 1;   // 1..12
    double elevation_m = 0;
};

struct EvalReport {
    BreakdownKey key = BreakdownKey::none;
    double bin_value = 0; // hour, month, or bin lower edge
    std::int64_t n = 0;
    double rmse = 0;
    double mae = 0;
    double r2 = 0;
    bool r2_defined = true;
    double sse = 0;
};

struct BreakdownOptions {
    double temp_bin_width = 5.0;   // degC
    double elev_bin_width = 250.0; // m
};

/// Per-bin metrics; empty bins are omitted, bins are sorted by bin_value.
/// key == none yields a single global report.
std::vector<EvalReport> breakdown_report(std::span<const EvalPair> pairs, BreakdownKey key,
                                         const BreakdownOptions& opts = {});

/// CSV with header "bin_key,bin_value,n,rmse,mae,r2".
std::string report_csv(const std::vector<EvalReport>& reports);

} // namespace airtemp::metrics

#endif
