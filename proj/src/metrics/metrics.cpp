#include "airtemp/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "airtemp/core/errors.hpp"

namespace airtemp::metrics {

namespace {

void check_lengths(std::span<const double> pred, std::span<const double> obs) {
    if (pred.size() != obs.size()) {
        throw DimensionError("metric inputs differ in length: " + std::to_string(pred.size()) +
                             " vs " + std::to_string(obs.size()));
    }
    if (pred.empty()) throw DegenerateInputError("metric inputs are empty");
}

} // namespace

double rmse(std::span<const double> pred, std::span<const double> obs) {
    check_lengths(pred, obs);
    double sse = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = obs[i] - pred[i];
        sse += d * d;
    }
    return std::sqrt(sse / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> obs) {
    check_lengths(pred, obs);
    double sae = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sae += std::fabs(obs[i] - pred[i]);
    return sae / static_cast<double>(pred.size());
}

double r2(std::span<const double> pred, std::span<const double> obs) {
    check_lengths(pred, obs);
    double mean = 0.0;
    for (double v : obs) mean += v;
    mean /= static_cast<double>(obs.size());
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = obs[i] - pred[i];
        const double d = obs[i] - mean;
        sse += e * e;
        sst += d * d;
    }
    if (sst == 0.0) throw DegenerateInputError("r2 undefined: observations have zero variance");
    return 1.0 - sse / sst;
}

BreakdownKey breakdown_key_from_string(const std::string& s) {
    if (s == "none") return BreakdownKey::none;
    if (s == "hour") return BreakdownKey::hour;
    if (s == "month") return BreakdownKey::month;
    if (s == "temp_bin") return BreakdownKey::temp_bin;
    if (s == "elev_bin") return BreakdownKey::elev_bin;
    throw ConfigError("unknown breakdown key '" + s + "'");
}

std::string breakdown_key_name(BreakdownKey key) {
    switch (key) {
        case BreakdownKey::none: return "none";
        case BreakdownKey::hour: return "hour";
        case BreakdownKey::month: return "month";
        case BreakdownKey::temp_bin: return "temp_bin";
        case BreakdownKey::elev_bin: return "elev_bin";
    }
    return "none";
}

std::vector<EvalReport> breakdown_report(std::span<const EvalPair> pairs, BreakdownKey key,
                                         const BreakdownOptions& opts) {
    if (pairs.empty()) throw DegenerateInputError("breakdown over empty pair list");
    std::map<double, std::vector<const EvalPair*>> bins;
    for (const EvalPair& p : pairs) {
        double value = 0;
        switch (key) {
            case BreakdownKey::none: value = 0; break;
            case BreakdownKey::hour: value = p.hour; break;
            case BreakdownKey::month: value = p.month; break;
            case BreakdownKey::temp_bin:
                value = std::floor(p.obs / opts.temp_bin_width) * opts.temp_bin_width;
                break;
            case BreakdownKey::elev_bin:
                value = std::floor(p.elevation_m / opts.elev_bin_width) * opts.elev_bin_width;
                break;
        }
        bins[value].push_back(&p);
    }
    std::vector<EvalReport> out;
    out.reserve(bins.size());
    for (const auto& [value, members] : bins) {
        std::vector<double> pred, obs;
        pred.reserve(members.size());
        obs.reserve(members.size());
        for (const EvalPair* p : members) {
            pred.push_back(p->pred);
            obs.push_back(p->obs);
        }
        EvalReport r;
        r.key = key;
        r.bin_value = value;
        r.n = static_cast<std::int64_t>(members.size());
        r.rmse = rmse(pred, obs);
        r.mae = mae(pred, obs);
        double sse = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double e = obs[i] - pred[i];
            sse += e * e;
        }
        r.sse = sse;
        try {
            r.r2 = r2(pred, obs);
            r.r2_defined = true;
        } catch (const DegenerateInputError&) {
            r.r2 = 0;
            r.r2_defined = false;
        }
        out.push_back(r);
    }
    return out;
}

std::string report_csv(const std::vector<EvalReport>& reports) {
    std::string out = "bin_key,bin_value,n,rmse,mae,r2\n";
    char buf[256];
    for (const EvalReport& r : reports) {
        if (r.r2_defined) {
            std::snprintf(buf, sizeof(buf), "%s,%.6g,%lld,%.6f,%.6f,%.6f\n",
                          breakdown_key_name(r.key).c_str(), r.bin_value,
                          static_cast<long long>(r.n), r.rmse, r.mae, r.r2);
        } else {
            std::snprintf(buf, sizeof(buf), "%s,%.6g,%lld,%.6f,%.6f,nan\n",
                          breakdown_key_name(r.key).c_str(), r.bin_value,
                          static_cast<long long>(r.n), r.rmse, r.mae);
        }
        out += buf;
    }
    return out;
}

} // namespace airtemp::metrics
