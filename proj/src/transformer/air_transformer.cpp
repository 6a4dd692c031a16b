#include "airtemp/transformer/air_transformer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "airtemp/core/rng.hpp"
#include "airtemp/io/binary_io.hpp"
#include "airtemp/io/config_file.hpp"
#include "airtemp/io/grid_io.hpp"

namespace airtemp::transformer {

const std::array<const char*, kFeatureCount>& feature_names() {
    static const std::array<const char*, kFeatureCount> names = {
        "t_surf", "refl_1", "refl_2", "refl_3", "refl_4", "refl_5", "lat", "lon",
        "hour",   "elevation", "slope", "blh",  "tcw",    "shf",    "u10", "v10"};
    return names;
}

void FeatureVector::validate() const {
    for (int i = 0; i < kFeatureCount; ++i) {
        if (!std::isfinite(v[static_cast<std::size_t>(i)])) {
            throw DataError(std::string("feature '") + feature_names()[static_cast<std::size_t>(i)] +
                            "' is not finite");
        }
    }
    if (v[kHour] < 0.f || v[kHour] >= 24.f) throw DataError("feature 'hour' outside [0,24)");
    for (int b = kRefl1; b <= kRefl5; ++b) {
        if (v[static_cast<std::size_t>(b)] < 0.f || v[static_cast<std::size_t>(b)] > 1.f) {
            throw DataError("reflectance feature outside [0,1]");
        }
    }
}

std::array<float, kFeatureCount> FeatureNorms::normalize(const FeatureVector& f) const {
    std::array<float, kFeatureCount> z;
    for (int i = 0; i < kFeatureCount; ++i) {
        z[static_cast<std::size_t>(i)] = static_cast<float>(
            (static_cast<double>(f[i]) - mean[static_cast<std::size_t>(i)]) /
            stddev[static_cast<std::size_t>(i)]);
    }
    return z;
}

FeatureVector FeatureNorms::denormalize(const std::array<float, kFeatureCount>& z) const {
    FeatureVector f;
    for (int i = 0; i < kFeatureCount; ++i) {
        f[i] = static_cast<float>(mean[static_cast<std::size_t>(i)] +
                                  stddev[static_cast<std::size_t>(i)] *
                                      static_cast<double>(z[static_cast<std::size_t>(i)]));
    }
    return f;
}

TrainTestSplit TrainTestSplit::by_station(const std::vector<std::string>& station_ids,
                                          double test_fraction, std::uint64_t seed) {
    std::vector<std::string> ids = station_ids;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.empty()) throw DataError("station split over empty id list");
    Rng rng = Rng(seed).fork("station.split");
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        const auto j = i + static_cast<std::size_t>(rng.next_u64() % (ids.size() - i));
        std::swap(ids[i], ids[j]);
    }
    std::size_t n_test = 0;
    if (ids.size() >= 2) {
        n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(ids.size())));
        n_test = std::clamp<std::size_t>(n_test, 1, ids.size() - 1);
    }
    TrainTestSplit split;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i < n_test) {
            split.test_stations.insert(ids[i]);
        } else {
            split.train_stations.insert(ids[i]);
        }
    }
    split.validate();
    return split;
}

void TrainTestSplit::validate() const {
    for (const std::string& id : test_stations) {
        if (train_stations.count(id)) {
            throw DataError("station '" + id + "' appears in both train and test sets");
        }
    }
    if (train_stations.empty()) throw DataError("train station set is empty");
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

AirTransformerModel::AirTransformerModel(int month, int year, std::uint64_t init_seed)
    : month_(month), year_(year),
      fc_in_("fc_in", kFeatureCount, 64),
      attn_("attn"),
      res64_("res64", 64),
      fc_mid_("fc_mid", 64, 128),
      res128_("res128", 128),
      fc_out_("fc_out", 128, 1) {
    if (month < 1 || month > 12) throw ConfigError("month must be in 1..12");
    norms_.mean.fill(0.0);
    norms_.stddev.fill(1.0);
    fc_in_.register_params(params_);
    attn_.register_params(params_);
    res64_.register_params(params_);
    fc_mid_.register_params(params_);
    res128_.register_params(params_);
    fc_out_.register_params(params_);
    Rng rng(init_seed);
    fc_in_.init_params(params_, rng);
    attn_.init_params(params_, rng);
    res64_.init_params(params_, rng);
    fc_mid_.init_params(params_, rng);
    res128_.init_params(params_, rng);
    fc_out_.init_params(params_, rng);
}

Tensor AirTransformerModel::net_forward(const Tensor& zx) const {
    Tensor h = fc_in_.forward(params_, zx);
    h = relu_forward(h);
    h = attn_.forward(params_, h);
    h = res64_.forward(params_, h);
    h = fc_mid_.forward(params_, h);
    h = relu_forward(h);
    h = res128_.forward(params_, h);
    return fc_out_.forward(params_, h);
}

Tensor AirTransformerModel::net_train_forward(const Tensor& zx) {
    Tensor h = fc_in_.train_forward(params_, zx);
    h = relu_in_.train_forward(params_, h);
    h = attn_.train_forward(params_, h);
    h = res64_.train_forward(params_, h);
    h = fc_mid_.train_forward(params_, h);
    h = relu_mid_.train_forward(params_, h);
    h = res128_.train_forward(params_, h);
    return fc_out_.train_forward(params_, h);
}

Tensor AirTransformerModel::net_backward(const Tensor& gout) {
    Tensor g = fc_out_.backward(params_, gout);
    g = res128_.backward(params_, g);
    g = relu_mid_.backward(params_, g);
    g = fc_mid_.backward(params_, g);
    g = res64_.backward(params_, g);
    g = attn_.backward(params_, g);
    g = relu_in_.backward(params_, g);
    return fc_in_.backward(params_, g);
}

std::vector<double> AirTransformerModel::transform_forward(
    const std::vector<FeatureVector>& features) const {
    if (features.empty()) return {};
    Tensor zx = Tensor::zeros({static_cast<int>(features.size()), kFeatureCount});
    for (std::size_t r = 0; r < features.size(); ++r) {
        const auto z = norms_.normalize(features[r]);
        std::copy(z.begin(), z.end(), zx.data.begin() + r * kFeatureCount);
    }
    const Tensor out = net_forward(zx);
    std::vector<double> pred(features.size());
    for (std::size_t r = 0; r < features.size(); ++r) {
        pred[r] = norms_.target_mean + norms_.target_std * static_cast<double>(out.data[r]);
    }
    return pred;
}

double AirTransformerModel::transform_one(const FeatureVector& f) const {
    return transform_forward({f})[0];
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

void AirTrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (lr <= 0) throw ConfigError("learning rate must be positive");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (lr_decay != "none" && lr_decay != "cosine") {
        throw ConfigError("unknown lr_decay '" + lr_decay + "'");
    }
    if (warmup_epochs < 0 || warmup_epochs > epochs) {
        throw ConfigError("warmup_epochs must be in [0, epochs]");
    }
}

AirTrainResult train_air_transformer(const std::vector<Sample>& samples, const TrainTestSplit& split,
                                     const AirTrainConfig& cfg, int month, int year) {
    cfg.validate();
    split.validate();
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        if (s.month != month || s.year != year) {
            throw DataError("sample from " + std::to_string(s.year) + "-" + std::to_string(s.month) +
                            " fed to the " + std::to_string(year) + "-" + std::to_string(month) +
                            " model");
        }
        if (split.train_stations.count(s.station_id)) {
            train_idx.push_back(i);
        } else if (split.test_stations.count(s.station_id)) {
            test_idx.push_back(i);
        }
    }
    if (train_idx.empty()) {
        throw DataError("no training samples for month " + std::to_string(month));
    }

    auto model = std::make_unique<AirTransformerModel>(month, year,
                                                       Rng(cfg.seed).fork("air.init").seed());

    // Normalization statistics from the training split only.
    FeatureNorms& norms = model->norms();
    {
        std::array<double, kFeatureCount> sum{}, sumsq{};
        double tsum = 0, tsumsq = 0;
        for (std::size_t i : train_idx) {
            const Sample& s = samples[i];
            for (int f = 0; f < kFeatureCount; ++f) {
                sum[static_cast<std::size_t>(f)] += s.features[f];
                sumsq[static_cast<std::size_t>(f)] +=
                    static_cast<double>(s.features[f]) * s.features[f];
            }
            tsum += s.t_air;
            tsumsq += static_cast<double>(s.t_air) * s.t_air;
        }
        const double n = static_cast<double>(train_idx.size());
        for (int f = 0; f < kFeatureCount; ++f) {
            const double m = sum[static_cast<std::size_t>(f)] / n;
            const double var = std::max(0.0, sumsq[static_cast<std::size_t>(f)] / n - m * m);
            norms.mean[static_cast<std::size_t>(f)] = m;
            norms.stddev[static_cast<std::size_t>(f)] = var > 1e-12 ? std::sqrt(var) : 1.0;
        }
        norms.target_mean = tsum / n;
        const double tvar = std::max(0.0, tsumsq / n - norms.target_mean * norms.target_mean);
        norms.target_std = tvar > 1e-12 ? std::sqrt(tvar) : 1.0;
    }

    auto z_batch = [&](const std::vector<std::size_t>& idx, std::size_t begin, std::size_t count,
                       Tensor& zx, std::vector<float>& zy) {
        zx = Tensor::zeros({static_cast<int>(count), kFeatureCount});
        zy.resize(count);
        for (std::size_t r = 0; r < count; ++r) {
            const Sample& s = samples[idx[begin + r]];
            const auto z = norms.normalize(s.features);
            std::copy(z.begin(), z.end(), zx.data.begin() + r * kFeatureCount);
            zy[r] = static_cast<float>((s.t_air - norms.target_mean) / norms.target_std);
        }
    };

    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                                    train_idx.size());
    Rng shuffle_rng = Rng(cfg.seed).fork("air.shuffle");
    AirTrainResult result;
    Tensor zx;
    std::vector<float> zy;

    Tensor test_zx;
    std::vector<float> test_zy;
    if (!test_idx.empty()) z_batch(test_idx, 0, test_idx.size(), test_zx, test_zy);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (batch < train_idx.size()) {
            for (std::size_t i = 0; i + 1 < train_idx.size(); ++i) {
                const auto j = i + static_cast<std::size_t>(shuffle_rng.next_u64() %
                                                            (train_idx.size() - i));
                std::swap(train_idx[i], train_idx[j]);
            }
        }
        double lr = cfg.lr;
        if (cfg.lr_decay == "cosine") {
            const double t = static_cast<double>(epoch - 1) / std::max(1, cfg.epochs - 1);
            lr = cfg.lr * 0.5 * (1.0 + std::cos(M_PI * t));
        }
        if (cfg.warmup_epochs > 0 && epoch <= cfg.warmup_epochs) {
            lr *= static_cast<double>(epoch) / static_cast<double>(cfg.warmup_epochs);
        }
        double epoch_abs = 0.0;
        std::size_t epoch_n = 0;
        for (std::size_t begin = 0; begin < train_idx.size(); begin += batch) {
            const std::size_t count = std::min(batch, train_idx.size() - begin);
            z_batch(train_idx, begin, count, zx, zy);
            model->params().zero_grads();
            const Tensor out = model->net_train_forward(zx);
            Tensor g = Tensor::zeros(out.shape);
            double abs_sum = 0.0;
            const float inv = 1.0f / static_cast<float>(count);
            for (std::size_t r = 0; r < count; ++r) {
                const float resid = out.data[r] - zy[r];
                abs_sum += std::fabs(static_cast<double>(resid));
                g.data[r] = resid > 0.f ? inv : (resid < 0.f ? -inv : 0.f);
            }
            if (!std::isfinite(abs_sum)) {
                throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch));
            }
            model->net_backward(g);
            model->params().mark_grads_ready();
            model->params().adam_step(lr);
            epoch_abs += abs_sum;
            epoch_n += count;
        }
        AirLogRow row;
        row.epoch = epoch;
        row.train_l1 = epoch_abs / static_cast<double>(epoch_n) * norms.target_std;
        row.test_l1 = row.train_l1;
        if (!test_idx.empty()) {
            const Tensor out = model->net_forward(test_zx);
            double abs_sum = 0.0;
            for (std::size_t r = 0; r < test_zy.size(); ++r) {
                abs_sum += std::fabs(static_cast<double>(out.data[r]) - test_zy[r]);
            }
            row.test_l1 = abs_sum / static_cast<double>(test_zy.size()) * norms.target_std;
        }
        result.log.push_back(row);
    }
    result.model = std::move(model);
    return result;
}

// ---------------------------------------------------------------------------
// Feature assembly
// ---------------------------------------------------------------------------

FeatureVector build_features(const FeatureContext& ctx, const GridStack& surf, int day, int y,
                             int x, int hour) {
    if (ctx.reflectance == nullptr) throw DataError("missing aux layer 'reflectance'");
    if (ctx.elevation == nullptr) throw DataError("missing aux layer 'elevation'");
    if (ctx.slope == nullptr) throw DataError("missing aux layer 'slope'");
    if (ctx.reanalysis == nullptr) throw DataError("missing aux layer 'reanalysis'");
    if (surf.h != ctx.h || surf.w != ctx.w) throw DimensionError("surface stack misaligned with scene");
    surf.check_in_bounds(day, y, x);
    if (hour < 0 || hour > 23) throw DataError("hour out of range");

    FeatureVector f;
    f[kTSurf] = surf.at(day, y, x);
    for (int b = 0; b < 5; ++b) f[kRefl1 + b] = ctx.reflectance->at(b, y, x);
    f[kLat] = static_cast<float>(ctx.lat0 + y * ctx.dlat);
    f[kLon] = static_cast<float>(ctx.lon0 + x * ctx.dlon);
    f[kHour] = static_cast<float>(hour);
    f[kElevation] = ctx.elevation->at(0, y, x);
    f[kSlope] = ctx.slope->at(0, y, x);
    static const std::pair<const char*, int> vars[5] = {
        {"blh", kBlh}, {"tcw", kTcw}, {"shf", kShf}, {"u10", kU10}, {"v10", kV10}};
    for (const auto& [name, slot] : vars) {
        auto it = ctx.reanalysis->find(name);
        if (it == ctx.reanalysis->end()) {
            throw DataError(std::string("missing aux layer '") + name + "'");
        }
        const GridStack& g = it->second;
        const int cy = std::min(y / ctx.coarse_factor, g.h - 1);
        const int cx = std::min(x / ctx.coarse_factor, g.w - 1);
        g.check_in_bounds(day, cy, cx);
        f[slot] = g.at(day, cy, cx);
    }
    f.validate();
    return f;
}

std::pair<int, int> nearest_pixel(double lat, double lon, int h, int w, double lat0, double lon0,
                                  double dlat, double dlon) {
    auto haversine = [](double lat1, double lon1, double lat2, double lon2) {
        const double rad = M_PI / 180.0;
        const double dphi = (lat2 - lat1) * rad;
        const double dlam = (lon2 - lon1) * rad;
        const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                         std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlam / 2) *
                             std::sin(dlam / 2);
        return 2.0 * std::asin(std::min(1.0, std::sqrt(a)));
    };
    int best_y = 0, best_x = 0;
    double best = 1e300;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double d = haversine(lat, lon, lat0 + y * dlat, lon0 + x * dlon);
            if (d < best) {
                best = d;
                best_y = y;
                best_x = x;
            }
        }
    }
    return {best_y, best_x};
}

GridStack predict_map(const AirTransformerModel& model, const GridStack& recon_surf,
                      const FeatureContext& ctx, int day, int hour) {
    if (recon_surf.h != ctx.h || recon_surf.w != ctx.w) {
        throw DimensionError("reconstructed stack misaligned with scene grids");
    }
    recon_surf.check_in_bounds(day, 0, 0);
    std::vector<FeatureVector> rows;
    rows.reserve(static_cast<std::size_t>(ctx.h) * ctx.w);
    for (int y = 0; y < ctx.h; ++y) {
        for (int x = 0; x < ctx.w; ++x) {
            rows.push_back(build_features(ctx, recon_surf, day, y, x, hour));
        }
    }
    const std::vector<double> pred = model.transform_forward(rows);
    GridStack out(1, ctx.h, ctx.w);
    for (std::size_t i = 0; i < pred.size(); ++i) out.data[i] = static_cast<float>(pred[i]);
    return out;
}

// ---------------------------------------------------------------------------
// MLR comparator
// ---------------------------------------------------------------------------

MlrModel fit_mlr(const std::vector<Sample>& samples, const std::set<std::string>& train_stations) {
    constexpr int n = kFeatureCount + 1;
    std::array<std::array<double, n>, n> xtx{};
    std::array<double, n> xty{};
    std::size_t rows = 0;
    for (const Sample& s : samples) {
        if (!train_stations.count(s.station_id)) continue;
        std::array<double, n> row;
        row[0] = 1.0;
        for (int f = 0; f < kFeatureCount; ++f) row[static_cast<std::size_t>(f) + 1] = s.features[f];
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                xtx[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +=
                    row[static_cast<std::size_t>(i)] * row[static_cast<std::size_t>(j)];
            }
            xty[static_cast<std::size_t>(i)] += row[static_cast<std::size_t>(i)] * s.t_air;
        }
        ++rows;
    }
    if (rows < static_cast<std::size_t>(n)) {
        throw DataError("MLR needs at least " + std::to_string(n) + " training rows, got " +
                        std::to_string(rows));
    }
    // Ridge epsilon guards against exactly collinear features (a constant
    // hour column, say).
    for (int i = 0; i < n; ++i) xtx[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] += 1e-8;

    // Gaussian elimination with partial pivoting.
    std::array<double, n> sol = xty;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r2 = col + 1; r2 < n; ++r2) {
            if (std::fabs(xtx[static_cast<std::size_t>(r2)][static_cast<std::size_t>(col)]) >
                std::fabs(xtx[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)])) {
                pivot = r2;
            }
        }
        std::swap(xtx[static_cast<std::size_t>(col)], xtx[static_cast<std::size_t>(pivot)]);
        std::swap(sol[static_cast<std::size_t>(col)], sol[static_cast<std::size_t>(pivot)]);
        const double diag = xtx[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
        if (std::fabs(diag) < 1e-30) throw DataError("MLR normal equations are singular");
        for (int r2 = col + 1; r2 < n; ++r2) {
            const double factor =
                xtx[static_cast<std::size_t>(r2)][static_cast<std::size_t>(col)] / diag;
            if (factor == 0.0) continue;
            for (int c2 = col; c2 < n; ++c2) {
                xtx[static_cast<std::size_t>(r2)][static_cast<std::size_t>(c2)] -=
                    factor * xtx[static_cast<std::size_t>(col)][static_cast<std::size_t>(c2)];
            }
            sol[static_cast<std::size_t>(r2)] -= factor * sol[static_cast<std::size_t>(col)];
        }
    }
    MlrModel model;
    for (int col = n - 1; col >= 0; --col) {
        double v = sol[static_cast<std::size_t>(col)];
        for (int c2 = col + 1; c2 < n; ++c2) {
            v -= xtx[static_cast<std::size_t>(col)][static_cast<std::size_t>(c2)] *
                 model.coef[static_cast<std::size_t>(c2)];
        }
        model.coef[static_cast<std::size_t>(col)] =
            v / xtx[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
    }
    return model;
}

double mlr_predict(const MlrModel& model, const FeatureVector& f) {
    double v = model.coef[0];
    for (int i = 0; i < kFeatureCount; ++i) {
        v += model.coef[static_cast<std::size_t>(i) + 1] * f[i];
    }
    return v;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {
constexpr char kAirMagic[] = "TAIR";
constexpr std::uint32_t kAirVersion = 1;
} // namespace

void write_air_model(const AirTransformerModel& model, const std::string& bin_path,
                     const std::string& meta_path) {
    std::string out;
    out += kAirMagic;
    io::append_u32(out, kAirVersion);
    io::append_i32(out, model.month());
    io::append_i32(out, model.year());
    const FeatureNorms& n = model.norms();
    for (int f = 0; f < kFeatureCount; ++f) {
        io::append_f64(out, n.mean[static_cast<std::size_t>(f)]);
        io::append_f64(out, n.stddev[static_cast<std::size_t>(f)]);
    }
    io::append_f64(out, n.target_mean);
    io::append_f64(out, n.target_std);
    const auto params = model.params().snapshot();
    io::append_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, tensor] : params) {
        io::append_str(out, name);
        io::append_u32(out, static_cast<std::uint32_t>(tensor.shape.size()));
        for (int d : tensor.shape) io::append_i32(out, d);
        for (float v : tensor.data) io::append_f32(out, v);
    }
    io::atomic_write_file(bin_path, out);

    io::KeyValueFile meta;
    meta.set_int("month", model.month());
    meta.set_int("year", model.year());
    for (int f = 0; f < kFeatureCount; ++f) {
        meta.set_double(std::string("mean.") + feature_names()[static_cast<std::size_t>(f)],
                        n.mean[static_cast<std::size_t>(f)]);
        meta.set_double(std::string("std.") + feature_names()[static_cast<std::size_t>(f)],
                        n.stddev[static_cast<std::size_t>(f)]);
    }
    meta.set_double("mean.target", n.target_mean);
    meta.set_double("std.target", n.target_std);
    meta.save(meta_path);
}

std::unique_ptr<AirTransformerModel> read_air_model(const std::string& bin_path) {
    const std::string bytes = io::read_file_bytes(bin_path);
    if (bytes.size() < 4 || bytes.compare(0, 4, kAirMagic) != 0) {
        throw BadMagicError("'" + bin_path + "': not an air-transformer model");
    }
    io::ByteReader r(bytes, bin_path);
    r.u32();
    const std::uint32_t version = r.u32();
    if (version != kAirVersion) {
        throw VersionMismatchError("'" + bin_path + "': model version " + std::to_string(version));
    }
    const int month = r.i32();
    const int year = r.i32();
    auto model = std::make_unique<AirTransformerModel>(month, year, 0);
    FeatureNorms& n = model->norms();
    for (int f = 0; f < kFeatureCount; ++f) {
        n.mean[static_cast<std::size_t>(f)] = r.f64();
        n.stddev[static_cast<std::size_t>(f)] = r.f64();
    }
    n.target_mean = r.f64();
    n.target_std = r.f64();
    const std::uint32_t n_params = r.u32();
    std::map<std::string, Tensor> params;
    for (std::uint32_t i = 0; i < n_params; ++i) {
        std::string name = r.str();
        const std::uint32_t rank = r.u32();
        std::vector<int> shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d) shape[d] = r.i32();
        Tensor t = Tensor::zeros(shape);
        r.raw_f32(t.data.data(), t.data.size());
        params[name] = std::move(t);
    }
    r.expect_end();
    model->params().restore(params);
    return model;
}

} // namespace airtemp::transformer
