#ifndef AIRTEMP_AMPLIFIER_AMPLIFIER_HPP
#define AIRTEMP_AMPLIFIER_AMPLIFIER_HPP

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "airtemp/atc/atc.hpp"
#include "airtemp/core/grid_stack.hpp"
#include "airtemp/core/layers.hpp"
#include "airtemp/core/param_store.hpp"
#include "airtemp/ensemble/ensemble.hpp"

namespace airtemp::amplifier {

/// Reconstruction inputs for one (hour, year): cloud-masked observations,
/// gap-free coarse skin temperature resampled to the fine grid, and the
/// 5-band annual-mean reflectance.
struct ReconstructionDataset {
    GridStack observed;    // n_doy x H x W, mask 1 = cloud free
    GridStack coarse;      // n_doy x H x W, gap free
    GridStack reflectance; // 5 x H x W

    int n_doy() const { return observed.c; }
    int h() const { return observed.h; }
    int w() const { return observed.w; }
    void validate() const;

    ReconstructionDataset window(int y0, int x0, int hh, int ww) const;
};

struct TrainConfig {
    int epochs = 600;
    double lr = 0.1;
    int snapshot_start = 201;
    int snapshot_end = 600;
    int snapshot_every = 2;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    std::string lr_decay = "none"; // "none" or "cosine"
    int warmup_epochs = 0;         // linear ramp before the schedule

    void validate() const;
    int snapshot_count() const;
    double lr_at(int epoch) const; // 1-based epoch
};

/// Mean of |pred - obs| over mask==1 cells; the mask grid carries 0/1 in
/// its data. Throws DegenerateInputError when no cell is selected.
double masked_l1_loss(const GridStack& pred, const GridStack& obs, const GridStack& mask);

/// The reconstruction model: per-pixel annual cycle + rho * coarse +
/// convolutional residual head over the static reflectance.
class AmplifierModel {
public:
    static constexpr int kReflectanceBands = 5;
    static constexpr std::array<int, 3> kHiddenChannels = {16, 64, 128};

    AmplifierModel(int h, int w, int n_doy, int hour, int year, bool conv_enabled,
                   std::uint64_t init_seed);

    int h() const { return h_; }
    int w() const { return w_; }
    int n_doy() const { return n_doy_; }
    int hour() const { return hour_; }
    int year() const { return year_; }
    bool conv_enabled() const { return conv_enabled_; }

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    atc::AtcParamField atc_field() const;
    void set_atc_field(const atc::AtcParamField& field);

    /// Full prediction stack; read-only, usable on a frozen model.
    GridStack forward(const ReconstructionDataset& data) const;

    /// Residual head alone (zeros when the head is disabled).
    Tensor conv_head_forward(const Tensor& reflectance) const;

private:
    friend struct Trainer;
    int h_, w_, n_doy_, hour_, year_;
    bool conv_enabled_;
    std::vector<std::unique_ptr<ResidualConvBlock>> head_;
    ParamStore params_;
};

struct LogRow {
    int epoch;
    double train_l1;
    double test_l1;
};

struct TrainResult {
    std::unique_ptr<AmplifierModel> model;
    ensemble::SnapshotEnsemble snapshots;
    std::vector<LogRow> log;
};

/// Joint training of {T0, A, phi, rho, conv weights} with Adam on the
/// masked L1 loss; snapshots are captured on the configured schedule
/// (defaults: every 2 epochs from 201 through 600, 200 total).
TrainResult train_amplifier(const ReconstructionDataset& data, const TrainConfig& cfg, int hour,
                            int year);

/// Identical training with the conv head frozen at zero output
/// ("enhanced ATC" baseline: ATC + rho * coarse).
TrainResult atc_only_baseline(const ReconstructionDataset& data, const TrainConfig& cfg, int hour,
                              int year);

std::string training_log_csv(const std::vector<LogRow>& log);

/// Trained state persisted by the pipeline: geometry, final parameters,
/// and the snapshot ensemble.
struct AmplifierBundle {
    int h = 0, w = 0, n_doy = 0, hour = 0, year = 0;
    bool conv_enabled = true;
    std::map<std::string, Tensor> final_params;
    ensemble::SnapshotEnsemble snapshots;

    std::unique_ptr<AmplifierModel> instantiate() const;
};

AmplifierBundle bundle_from(const AmplifierModel& model, const ensemble::SnapshotEnsemble& snaps);
void write_amplifier_bundle(const AmplifierBundle& bundle, const std::string& path);
AmplifierBundle read_amplifier_bundle(const std::string& path);

struct Reconstruction {
    GridStack mean, lower, upper;
    ensemble::IntervalCalibration interval;    // ranks and calibrated lambda
    ensemble::CalibrationResult calibration;
};

/// Ensemble-mean reconstruction with lambda-calibrated order-statistic
/// intervals; gap pixels are filled and observed pixels re-estimated.
/// Lambda is calibrated on the dataset's valid (training) cells.
Reconstruction reconstruct(const AmplifierBundle& bundle, const ReconstructionDataset& data,
                           double target_coverage = 0.95);

struct TileRect {
    int y0 = 0, x0 = 0, h = 0, w = 0;
};

std::vector<TileRect> make_tiles(int h, int w, int tile_size);

} // namespace airtemp::amplifier

#endif
