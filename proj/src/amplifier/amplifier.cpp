#include "airtemp/amplifier/amplifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "airtemp/core/parallel.hpp"
#include "airtemp/core/rng.hpp"
#include "airtemp/io/binary_io.hpp"
#include "airtemp/io/grid_io.hpp"

namespace airtemp::amplifier {

void ReconstructionDataset::validate() const {
    if (observed.h != coarse.h || observed.w != coarse.w || observed.h != reflectance.h ||
        observed.w != reflectance.w) {
        throw DimensionError("dataset stacks do not share one HxW");
    }
    if (observed.c != coarse.c) {
        throw DimensionError("observed and coarse stacks differ in day count: " +
                             std::to_string(observed.c) + " vs " + std::to_string(coarse.c));
    }
    if (reflectance.c != AmplifierModel::kReflectanceBands) {
        throw DimensionError("reflectance must have " +
                             std::to_string(AmplifierModel::kReflectanceBands) + " bands, got " +
                             std::to_string(reflectance.c));
    }
    if (coarse.count_valid() != coarse.numel()) {
        throw DataError("coarse stack has gaps");
    }
    for (std::uint8_t m : observed.mask) {
        if (m > 1) throw DataError("observation mask is not binary");
    }
}

ReconstructionDataset ReconstructionDataset::window(int y0, int x0, int hh, int ww) const {
    ReconstructionDataset out;
    out.observed = observed.window(0, observed.c, y0, x0, hh, ww);
    out.coarse = coarse.window(0, coarse.c, y0, x0, hh, ww);
    out.reflectance = reflectance.window(0, reflectance.c, y0, x0, hh, ww);
    return out;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (lr <= 0) throw ConfigError("learning rate must be positive");
    if (snapshot_start < 1 || snapshot_every < 1 || snapshot_end < snapshot_start) {
        throw ConfigError("invalid snapshot schedule");
    }
    if (epochs < snapshot_start || epochs < snapshot_end) {
        throw ConfigError("snapshot window unreachable: schedule [" + std::to_string(snapshot_start) +
                          ", " + std::to_string(snapshot_end) + "] needs at least " +
                          std::to_string(snapshot_end) + " epochs, configured " + std::to_string(epochs));
    }
    if (test_fraction < 0.0 || test_fraction >= 1.0) {
        throw ConfigError("test_fraction must be in [0, 1)");
    }
    if (lr_decay != "none" && lr_decay != "cosine") {
        throw ConfigError("unknown lr_decay '" + lr_decay + "'");
    }
    if (warmup_epochs < 0 || warmup_epochs > epochs) {
        throw ConfigError("warmup_epochs must be in [0, epochs]");
    }
}

int TrainConfig::snapshot_count() const {
    return (snapshot_end - snapshot_start) / snapshot_every + 1;
}

double TrainConfig::lr_at(int epoch) const {
    double value = lr;
    if (lr_decay == "cosine") {
        const double t = static_cast<double>(epoch - 1) / std::max(1, epochs - 1);
        value *= 0.5 * (1.0 + std::cos(M_PI * t));
    }
    if (warmup_epochs > 0 && epoch <= warmup_epochs) {
        value *= static_cast<double>(epoch) / static_cast<double>(warmup_epochs);
    }
    return value;
}

double masked_l1_loss(const GridStack& pred, const GridStack& obs, const GridStack& mask) {
    if (!pred.same_shape(obs) || !pred.same_shape(mask)) {
        throw DimensionError("masked L1 inputs do not share one shape");
    }
    double sum = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        if (mask.data[i] != 0.f) {
            sum += std::fabs(static_cast<double>(pred.data[i]) - obs.data[i]);
            ++n;
        }
    }
    if (n == 0) throw DegenerateInputError("masked L1 over empty mask");
    return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// AmplifierModel
// ---------------------------------------------------------------------------

AmplifierModel::AmplifierModel(int h, int w, int n_doy, int hour, int year, bool conv_enabled,
                               std::uint64_t init_seed)
    : h_(h), w_(w), n_doy_(n_doy), hour_(hour), year_(year), conv_enabled_(conv_enabled) {
    if (h <= 0 || w <= 0) throw DimensionError("model dims must be positive");
    if (n_doy < 2) throw DimensionError("model n_doy must be >= 2");
    if (hour < 0 || hour > 23) throw ConfigError("model hour out of range");
    params_.create("atc.t0", {h, w});
    params_.create("atc.a", {h, w});
    params_.create("atc.phi", {h, w});
    params_.create("atc.rho", {h, w});
    if (conv_enabled_) {
        int cin = kReflectanceBands;
        int index = 0;
        std::vector<int> channels(kHiddenChannels.begin(), kHiddenChannels.end());
        channels.push_back(n_doy);
        for (int cout : channels) {
            const bool last = index == static_cast<int>(channels.size()) - 1;
            // The output block stays linear so day residuals can be signed.
            head_.push_back(std::make_unique<ResidualConvBlock>("head.b" + std::to_string(index), cin,
                                                                cout, !last));
            cin = cout;
            ++index;
        }
        Rng rng(init_seed);
        for (const auto& block : head_) {
            block->register_params(params_);
            block->init_params(params_, rng);
        }
        head_.back()->zero_output_init(params_);
    }
}

atc::AtcParamField AmplifierModel::atc_field() const {
    atc::AtcParamField f(h_, w_, n_doy_);
    const Tensor& t0 = params_.param("atc.t0");
    const Tensor& a = params_.param("atc.a");
    const Tensor& phi = params_.param("atc.phi");
    const Tensor& rho = params_.param("atc.rho");
    std::copy(t0.data.begin(), t0.data.end(), f.t0.begin());
    std::copy(a.data.begin(), a.data.end(), f.a.begin());
    std::copy(phi.data.begin(), phi.data.end(), f.phi.begin());
    std::copy(rho.data.begin(), rho.data.end(), f.rho.begin());
    return f;
}

void AmplifierModel::set_atc_field(const atc::AtcParamField& field) {
    if (field.h != h_ || field.w != w_) throw DimensionError("ATC field shape mismatch");
    std::copy(field.t0.begin(), field.t0.end(), params_.param("atc.t0").data.begin());
    std::copy(field.a.begin(), field.a.end(), params_.param("atc.a").data.begin());
    std::copy(field.phi.begin(), field.phi.end(), params_.param("atc.phi").data.begin());
    std::copy(field.rho.begin(), field.rho.end(), params_.param("atc.rho").data.begin());
}

Tensor normalize_head_input(const Tensor& reflectance) {
    // Per-band z-score computed from the tile itself; a deterministic
    // function of the input, so training and frozen inference agree.
    Tensor x = reflectance;
    const int bands = x.dim(0);
    const std::size_t plane = x.data.size() / static_cast<std::size_t>(bands);
    for (int b = 0; b < bands; ++b) {
        float* p = x.data.data() + static_cast<std::size_t>(b) * plane;
        double mean = 0;
        for (std::size_t i = 0; i < plane; ++i) mean += p[i];
        mean /= static_cast<double>(plane);
        double var = 0;
        for (std::size_t i = 0; i < plane; ++i) var += (p[i] - mean) * (p[i] - mean);
        var /= static_cast<double>(plane);
        const double inv = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
        for (std::size_t i = 0; i < plane; ++i) {
            p[i] = static_cast<float>((p[i] - mean) * inv);
        }
    }
    return x;
}

Tensor AmplifierModel::conv_head_forward(const Tensor& reflectance) const {
    if (!conv_enabled_) return Tensor::zeros({n_doy_, h_, w_});
    Tensor x = normalize_head_input(reflectance);
    for (const auto& block : head_) x = block->forward(params_, x);
    return x;
}

GridStack AmplifierModel::forward(const ReconstructionDataset& data) const {
    data.validate();
    if (data.h() != h_ || data.w() != w_ || data.n_doy() != n_doy_) {
        throw DimensionError("dataset geometry does not match model");
    }
    Tensor refl = Tensor::from({kReflectanceBands, h_, w_},
                               std::vector<float>(data.reflectance.data));
    const Tensor conv_out = conv_head_forward(refl);

    GridStack pred(n_doy_, h_, w_);
    const Tensor& t0 = params_.param("atc.t0");
    const Tensor& a = params_.param("atc.a");
    const Tensor& phi = params_.param("atc.phi");
    const Tensor& rho = params_.param("atc.rho");
    const std::size_t plane = static_cast<std::size_t>(h_) * w_;
    parallel_for(n_doy_, [&](std::int64_t d0, std::int64_t d1) {
        for (int d = static_cast<int>(d0); d < d1; ++d) {
            const double theta = 2.0 * M_PI * d / static_cast<double>(n_doy_);
            for (std::size_t i = 0; i < plane; ++i) {
                const std::size_t gi = static_cast<std::size_t>(d) * plane + i;
                const double atc_v = static_cast<double>(t0.data[i]) +
                                     static_cast<double>(a.data[i]) *
                                         std::sin(theta + static_cast<double>(phi.data[i]));
                pred.data[gi] = static_cast<float>(atc_v +
                                                   static_cast<double>(rho.data[i]) * data.coarse.data[gi] +
                                                   static_cast<double>(conv_out.data[gi]));
            }
        }
    });
    return pred;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct Trainer {
    AmplifierModel& model;
    const ReconstructionDataset& data;
    const TrainConfig& cfg;
    std::vector<std::uint8_t> train_mask, test_mask;
    std::int64_t n_train = 0, n_test = 0;
    Tensor reflectance;

    Trainer(AmplifierModel& m, const ReconstructionDataset& d, const TrainConfig& c)
        : model(m), data(d), cfg(c) {
        const std::size_t cells = data.observed.data.size();
        train_mask.assign(cells, 0);
        test_mask.assign(cells, 0);
        Rng split = Rng(cfg.seed).fork("amplifier.split");
        for (std::size_t i = 0; i < cells; ++i) {
            if (!data.observed.mask[i]) continue;
            if (split.uniform() < cfg.test_fraction) {
                test_mask[i] = 1;
                ++n_test;
            } else {
                train_mask[i] = 1;
                ++n_train;
            }
        }
        if (n_train == 0) {
            throw DegenerateInputError("no valid observations available for training");
        }
        reflectance = normalize_head_input(Tensor::from(
            {AmplifierModel::kReflectanceBands, data.h(), data.w()},
            std::vector<float>(data.reflectance.data)));
    }

    // Per-pixel least squares of the valid observations on
    // [1, sin, cos, coarse]; the weather variance in the coarse series keeps
    // the system well conditioned against the shared annual harmonic.
    void warm_start() {
        const int n_doy = data.n_doy();
        const std::size_t plane = static_cast<std::size_t>(data.h()) * data.w();
        Tensor& t0 = model.params().param("atc.t0");
        Tensor& a = model.params().param("atc.a");
        Tensor& phi_init = model.params().param("atc.phi");
        Tensor& rho = model.params().param("atc.rho");
        std::vector<double> sin_d(static_cast<std::size_t>(n_doy)), cos_d(static_cast<std::size_t>(n_doy));
        for (int d = 0; d < n_doy; ++d) {
            const double theta = 2.0 * M_PI * d / static_cast<double>(n_doy);
            sin_d[static_cast<std::size_t>(d)] = std::sin(theta);
            cos_d[static_cast<std::size_t>(d)] = std::cos(theta);
        }
        for (std::size_t i = 0; i < plane; ++i) {
            double xtx[4][4] = {};
            double xty[4] = {};
            int n = 0;
            for (int d = 0; d < n_doy; ++d) {
                const std::size_t gi = static_cast<std::size_t>(d) * plane + i;
                if (!data.observed.mask[gi]) continue;
                const double row[4] = {1.0, sin_d[static_cast<std::size_t>(d)],
                                       cos_d[static_cast<std::size_t>(d)],
                                       static_cast<double>(data.coarse.data[gi])};
                const double y = data.observed.data[gi];
                for (int r = 0; r < 4; ++r) {
                    for (int c = 0; c < 4; ++c) xtx[r][c] += row[r] * row[c];
                    xty[r] += row[r] * y;
                }
                ++n;
            }
            bool solved = false;
            double sol[4] = {};
            if (n >= 8) {
                for (int r = 0; r < 4; ++r) xtx[r][r] += 1e-8;
                solved = true;
                for (int col = 0; col < 4 && solved; ++col) {
                    int pivot = col;
                    for (int r = col + 1; r < 4; ++r) {
                        if (std::fabs(xtx[r][col]) > std::fabs(xtx[pivot][col])) pivot = r;
                    }
                    for (int c = 0; c < 4; ++c) std::swap(xtx[col][c], xtx[pivot][c]);
                    std::swap(xty[col], xty[pivot]);
                    if (std::fabs(xtx[col][col]) < 1e-12) {
                        solved = false;
                        break;
                    }
                    for (int r = col + 1; r < 4; ++r) {
                        const double f = xtx[r][col] / xtx[col][col];
                        for (int c = col; c < 4; ++c) xtx[r][c] -= f * xtx[col][c];
                        xty[r] -= f * xty[col];
                    }
                }
                if (solved) {
                    for (int col = 3; col >= 0; --col) {
                        double v = xty[col];
                        for (int c = col + 1; c < 4; ++c) v -= xtx[col][c] * sol[c];
                        sol[col] = v / xtx[col][col];
                    }
                }
            }
            if (solved) {
                t0.data[i] = static_cast<float>(sol[0]);
                a.data[i] = static_cast<float>(std::sqrt(sol[1] * sol[1] + sol[2] * sol[2]));
                phi_init.data[i] = static_cast<float>(std::atan2(sol[2], sol[1]));
                rho.data[i] = static_cast<float>(std::clamp(sol[3], 0.0, 2.0));
            } else if (n > 0) {
                double sum = 0.0, mn = 0.0, mx = 0.0;
                int k = 0;
                for (int d = 0; d < n_doy; ++d) {
                    const std::size_t gi = static_cast<std::size_t>(d) * plane + i;
                    if (!data.observed.mask[gi]) continue;
                    const double v = data.observed.data[gi];
                    if (k == 0) {
                        mn = mx = v;
                    } else {
                        mn = std::min(mn, v);
                        mx = std::max(mx, v);
                    }
                    sum += v;
                    ++k;
                }
                t0.data[i] = static_cast<float>(sum / k);
                a.data[i] = static_cast<float>((mx - mn) / 2.0);
            } else {
                double csum = 0.0;
                for (int d = 0; d < n_doy; ++d) {
                    csum += data.coarse.data[static_cast<std::size_t>(d) * plane + i];
                }
                t0.data[i] = static_cast<float>(csum / n_doy);
                a.data[i] = 10.f;
            }
        }
    }

    // One full-batch epoch; returns (train_l1, test_l1).
    std::pair<double, double> epoch_step(int epoch) {
        ParamStore& ps = model.params();
        ps.zero_grads();

        Tensor conv_out;
        if (model.conv_enabled()) {
            Tensor x = reflectance;
            for (auto& block : model.head_) x = block->train_forward(ps, x);
            conv_out = std::move(x);
        } else {
            conv_out = Tensor::zeros({data.n_doy(), data.h(), data.w()});
        }

        const int n_doy = data.n_doy();
        const std::size_t plane = static_cast<std::size_t>(data.h()) * data.w();
        const Tensor& t0 = ps.param("atc.t0");
        const Tensor& a = ps.param("atc.a");
        const Tensor& phi = ps.param("atc.phi");
        const Tensor& rho = ps.param("atc.rho");
        Tensor& g_t0 = ps.grad("atc.t0");
        Tensor& g_a = ps.grad("atc.a");
        Tensor& g_phi = ps.grad("atc.phi");
        Tensor& g_rho = ps.grad("atc.rho");

        Tensor g_stack = Tensor::zeros({n_doy, data.h(), data.w()});
        std::vector<double> train_partial(static_cast<std::size_t>(n_doy), 0.0);
        std::vector<double> test_partial(static_cast<std::size_t>(n_doy), 0.0);
        const double inv_n = 1.0 / static_cast<double>(n_train);

        // Forward and the loss gradient; day-parallel, each day owns its
        // grad plane and loss slot.
        std::vector<float> sin_cache(static_cast<std::size_t>(n_doy) * plane);
        std::vector<float> cos_cache(static_cast<std::size_t>(n_doy) * plane);
        parallel_for(n_doy, [&](std::int64_t d0, std::int64_t d1) {
            for (int d = static_cast<int>(d0); d < d1; ++d) {
                const double theta = 2.0 * M_PI * d / static_cast<double>(n_doy);
                double tr = 0.0, te = 0.0;
                for (std::size_t i = 0; i < plane; ++i) {
                    const std::size_t gi = static_cast<std::size_t>(d) * plane + i;
                    const double angle = theta + static_cast<double>(phi.data[i]);
                    const double s = std::sin(angle), c = std::cos(angle);
                    sin_cache[gi] = static_cast<float>(s);
                    cos_cache[gi] = static_cast<float>(c);
                    const double predv = static_cast<double>(t0.data[i]) +
                                         static_cast<double>(a.data[i]) * s +
                                         static_cast<double>(rho.data[i]) * data.coarse.data[gi] +
                                         static_cast<double>(conv_out.data[gi]);
                    if (train_mask[gi]) {
                        const double r = predv - data.observed.data[gi];
                        tr += std::fabs(r);
                        g_stack.data[gi] = r > 0 ? static_cast<float>(inv_n)
                                                 : (r < 0 ? -static_cast<float>(inv_n) : 0.f);
                    } else if (test_mask[gi]) {
                        te += std::fabs(predv - data.observed.data[gi]);
                    }
                }
                train_partial[static_cast<std::size_t>(d)] = tr;
                test_partial[static_cast<std::size_t>(d)] = te;
            }
        });

        double train_sum = 0.0, test_sum = 0.0;
        for (int d = 0; d < n_doy; ++d) {
            train_sum += train_partial[static_cast<std::size_t>(d)];
            test_sum += test_partial[static_cast<std::size_t>(d)];
        }
        const double train_l1 = train_sum / static_cast<double>(n_train);
        const double test_l1 = n_test > 0 ? test_sum / static_cast<double>(n_test) : train_l1;
        if (!std::isfinite(train_l1)) {
            throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch));
        }

        // ATC parameter gradients, accumulated over days per pixel.
        parallel_for(static_cast<std::int64_t>(plane), [&](std::int64_t i0, std::int64_t i1) {
            for (std::int64_t i = i0; i < i1; ++i) {
                double acc_t0 = 0, acc_a = 0, acc_phi = 0, acc_rho = 0;
                for (int d = 0; d < n_doy; ++d) {
                    const std::size_t gi = static_cast<std::size_t>(d) * plane + i;
                    const double g = g_stack.data[gi];
                    if (g == 0.0) continue;
                    acc_t0 += g;
                    acc_a += g * sin_cache[gi];
                    acc_phi += g * static_cast<double>(a.data[i]) * cos_cache[gi];
                    acc_rho += g * data.coarse.data[gi];
                }
                g_t0.data[i] = static_cast<float>(acc_t0);
                g_a.data[i] = static_cast<float>(acc_a);
                g_phi.data[i] = static_cast<float>(acc_phi);
                g_rho.data[i] = static_cast<float>(acc_rho);
            }
        });

        if (model.conv_enabled()) {
            Tensor g = g_stack;
            for (auto it = model.head_.rbegin(); it != model.head_.rend(); ++it) {
                g = (*it)->backward(ps, g);
            }
        }
        ps.mark_grads_ready();
        ps.adam_step(cfg.lr_at(epoch));
        return {train_l1, test_l1};
    }
};

namespace {

TrainResult run_training(const ReconstructionDataset& data, const TrainConfig& cfg, int hour,
                         int year, bool conv_enabled) {
    data.validate();
    cfg.validate();
    auto model = std::make_unique<AmplifierModel>(data.h(), data.w(), data.n_doy(), hour, year,
                                                  conv_enabled, Rng(cfg.seed).fork("amplifier.init").seed());
    Trainer trainer(*model, data, cfg);
    trainer.warm_start();

    TrainResult result;
    std::vector<std::map<std::string, Tensor>> snaps;
    snaps.reserve(static_cast<std::size_t>(cfg.snapshot_count()));
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto [train_l1, test_l1] = trainer.epoch_step(epoch);
        result.log.push_back({epoch, train_l1, test_l1});
        if (epoch >= cfg.snapshot_start && epoch <= cfg.snapshot_end &&
            (epoch - cfg.snapshot_start) % cfg.snapshot_every == 0) {
            snaps.push_back(model->params().snapshot());
        }
    }
    result.snapshots = ensemble::SnapshotEnsemble::uniform(std::move(snaps));
    result.model = std::move(model);
    return result;
}

} // namespace

TrainResult train_amplifier(const ReconstructionDataset& data, const TrainConfig& cfg, int hour,
                            int year) {
    return run_training(data, cfg, hour, year, true);
}

TrainResult atc_only_baseline(const ReconstructionDataset& data, const TrainConfig& cfg, int hour,
                              int year) {
    return run_training(data, cfg, hour, year, false);
}

std::string training_log_csv(const std::vector<LogRow>& log) {
    std::string out = "epoch,train_l1,test_l1\n";
    char buf[96];
    for (const LogRow& row : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f\n", row.epoch, row.train_l1, row.test_l1);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bundle persistence
// ---------------------------------------------------------------------------

namespace {
constexpr char kBundleMagic[] = "TAMP";
constexpr std::uint32_t kBundleVersion = 1;
} // namespace

AmplifierBundle bundle_from(const AmplifierModel& model, const ensemble::SnapshotEnsemble& snaps) {
    AmplifierBundle b;
    b.h = model.h();
    b.w = model.w();
    b.n_doy = model.n_doy();
    b.hour = model.hour();
    b.year = model.year();
    b.conv_enabled = model.conv_enabled();
    b.final_params = model.params().snapshot();
    b.snapshots = snaps;
    return b;
}

std::unique_ptr<AmplifierModel> AmplifierBundle::instantiate() const {
    auto model = std::make_unique<AmplifierModel>(h, w, n_doy, hour, year, conv_enabled, 0);
    model->params().restore(final_params);
    return model;
}

void write_amplifier_bundle(const AmplifierBundle& bundle, const std::string& path) {
    std::string out;
    out += kBundleMagic;
    io::append_u32(out, kBundleVersion);
    io::append_i32(out, bundle.h);
    io::append_i32(out, bundle.w);
    io::append_i32(out, bundle.n_doy);
    io::append_i32(out, bundle.hour);
    io::append_i32(out, bundle.year);
    io::append_u32(out, bundle.conv_enabled ? 1 : 0);

    io::append_u32(out, static_cast<std::uint32_t>(bundle.final_params.size()));
    for (const auto& [name, tensor] : bundle.final_params) {
        io::append_str(out, name);
        io::append_u32(out, static_cast<std::uint32_t>(tensor.shape.size()));
        for (int d : tensor.shape) io::append_i32(out, d);
    }
    auto append_block = [&out](const std::map<std::string, Tensor>& params) {
        for (const auto& [name, tensor] : params) {
            (void)name;
            for (float v : tensor.data) io::append_f32(out, v);
        }
    };
    append_block(bundle.final_params);
    io::append_u32(out, static_cast<std::uint32_t>(bundle.snapshots.size()));
    for (double wgt : bundle.snapshots.weights) io::append_f64(out, wgt);
    for (const auto& snap : bundle.snapshots.snapshots) {
        if (snap.size() != bundle.final_params.size()) {
            throw IoError("snapshot parameter set differs from final model schema");
        }
        append_block(snap);
    }
    io::atomic_write_file(path, out);
}

AmplifierBundle read_amplifier_bundle(const std::string& path) {
    const std::string bytes = io::read_file_bytes(path);
    if (bytes.size() < 4 || bytes.compare(0, 4, kBundleMagic) != 0) {
        throw BadMagicError("'" + path + "': not an amplifier bundle");
    }
    io::ByteReader r(bytes, path);
    r.u32(); // magic, already checked
    const std::uint32_t version = r.u32();
    if (version != kBundleVersion) {
        throw VersionMismatchError("'" + path + "': bundle version " + std::to_string(version));
    }
    AmplifierBundle b;
    b.h = r.i32();
    b.w = r.i32();
    b.n_doy = r.i32();
    b.hour = r.i32();
    b.year = r.i32();
    b.conv_enabled = r.u32() != 0;

    const std::uint32_t n_params = r.u32();
    std::vector<std::pair<std::string, std::vector<int>>> schema;
    schema.reserve(n_params);
    for (std::uint32_t i = 0; i < n_params; ++i) {
        std::string name = r.str();
        const std::uint32_t rank = r.u32();
        std::vector<int> shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d) shape[d] = r.i32();
        schema.emplace_back(std::move(name), std::move(shape));
    }
    auto read_block = [&r, &schema]() {
        std::map<std::string, Tensor> params;
        for (const auto& [name, shape] : schema) {
            Tensor t = Tensor::zeros(shape);
            r.raw_f32(t.data.data(), t.data.size());
            params[name] = std::move(t);
        }
        return params;
    };
    b.final_params = read_block();
    const std::uint32_t k = r.u32();
    b.snapshots.weights.resize(k);
    for (std::uint32_t i = 0; i < k; ++i) b.snapshots.weights[i] = r.f64();
    b.snapshots.snapshots.reserve(k);
    for (std::uint32_t i = 0; i < k; ++i) b.snapshots.snapshots.push_back(read_block());
    r.expect_end();
    return b;
}

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

Reconstruction reconstruct(const AmplifierBundle& bundle, const ReconstructionDataset& data,
                           double target_coverage) {
    data.validate();
    bundle.snapshots.validate(true);
    const int k = static_cast<int>(bundle.snapshots.size());
    auto calib = ensemble::IntervalCalibration::for_ensemble_size(k, target_coverage);

    auto model = bundle.instantiate();
    const std::size_t cells = data.observed.data.size();
    std::vector<std::vector<float>> preds(static_cast<std::size_t>(k));
    for (int s = 0; s < k; ++s) {
        model->params().restore(bundle.snapshots.snapshots[static_cast<std::size_t>(s)]);
        preds[static_cast<std::size_t>(s)] = model->forward(data).data;
    }

    Reconstruction rec;
    rec.mean = GridStack(data.n_doy(), data.h(), data.w());
    rec.lower = GridStack(data.n_doy(), data.h(), data.w());
    rec.upper = GridStack(data.n_doy(), data.h(), data.w());
    std::vector<double> d_lower(cells), d_upper(cells);

    const std::vector<double>& weights = bundle.snapshots.weights;
    parallel_for(static_cast<std::int64_t>(cells), [&](std::int64_t i0, std::int64_t i1) {
        std::vector<double> point(static_cast<std::size_t>(k));
        for (std::int64_t i = i0; i < i1; ++i) {
            for (int s = 0; s < k; ++s) {
                point[static_cast<std::size_t>(s)] =
                    preds[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)];
            }
            const double mean = ensemble::ensemble_mean(point, weights);
            const auto [dl, du] = ensemble::raw_interval(point, mean, calib);
            rec.mean.data[static_cast<std::size_t>(i)] = static_cast<float>(mean);
            d_lower[static_cast<std::size_t>(i)] = dl;
            d_upper[static_cast<std::size_t>(i)] = du;
        }
    });

    // Calibrate lambda on the valid (training) cells.
    std::vector<double> c_mean, c_dl, c_du, c_obs;
    for (std::size_t i = 0; i < cells; ++i) {
        if (!data.observed.mask[i]) continue;
        c_mean.push_back(rec.mean.data[i]);
        c_dl.push_back(d_lower[i]);
        c_du.push_back(d_upper[i]);
        c_obs.push_back(data.observed.data[i]);
    }
    rec.calibration = ensemble::calibrate_lambda(c_mean, c_dl, c_du, c_obs, target_coverage);
    calib.lambda = rec.calibration.lambda;
    rec.interval = calib;

    for (std::size_t i = 0; i < cells; ++i) {
        rec.lower.data[i] = static_cast<float>(rec.mean.data[i] - calib.lambda * d_lower[i]);
        rec.upper.data[i] = static_cast<float>(rec.mean.data[i] + calib.lambda * d_upper[i]);
    }
    return rec;
}

std::vector<TileRect> make_tiles(int h, int w, int tile_size) {
    if (tile_size < 8) throw ConfigError("tile size must be at least 8");
    std::vector<TileRect> tiles;
    for (int y0 = 0; y0 < h; y0 += tile_size) {
        for (int x0 = 0; x0 < w; x0 += tile_size) {
            tiles.push_back({y0, x0, std::min(tile_size, h - y0), std::min(tile_size, w - x0)});
        }
    }
    return tiles;
}

} // namespace airtemp::amplifier
