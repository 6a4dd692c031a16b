#ifndef AIRTEMP_TRANSFORMER_AIR_TRANSFORMER_HPP
#define AIRTEMP_TRANSFORMER_AIR_TRANSFORMER_HPP

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "airtemp/core/grid_stack.hpp"
#include "airtemp/core/layers.hpp"
#include "airtemp/core/param_store.hpp"
#include "airtemp/io/station_csv.hpp"

namespace airtemp::transformer {

inline constexpr int kFeatureCount = 16;

enum Feature : int {
    kTSurf = 0,
    kRefl1,
    kRefl2,
    kRefl3,
    kRefl4,
    kRefl5,
    kLat,
    kLon,
    kHour,
    kElevation,
    kSlope,
    kBlh,
    kTcw,
    kShf,
    kU10,
    kV10,
};

const std::array<const char*, kFeatureCount>& feature_names();

/// Fixed-order input row: surface temperature, 5 reflectance bands,
/// spatiotemporal indices, terrain, and hourly reanalysis covariates.
struct FeatureVector {
    std::array<float, kFeatureCount> v{};

    float& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
    float operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
    void validate() const;
};

/// Per-feature z-score statistics from the training split; the target is
/// z-scored too. Zero spreads are floored so constant features stay inert.
struct FeatureNorms {
    std::array<double, kFeatureCount> mean{};
    std::array<double, kFeatureCount> stddev{};
    double target_mean = 0;
    double target_std = 1;

    std::array<float, kFeatureCount> normalize(const FeatureVector& f) const;
    FeatureVector denormalize(const std::array<float, kFeatureCount>& z) const;
};

struct TrainTestSplit {
    std::set<std::string> train_stations, test_stations;

    static TrainTestSplit by_station(const std::vector<std::string>& station_ids,
                                     double test_fraction, std::uint64_t seed);
    void validate() const; // throws when the sets intersect
};

struct Sample {
    FeatureVector features;
    float t_air = 0;
    std::string station_id;
    int month = 1, year = 0, hour = 0;
};

/// dense(16->64)+ReLU -> self-attention(64) -> residual(64) ->
/// dense(64->128)+ReLU -> residual(128) -> dense(128->1), applied to
/// z-scored features with a z-scored target.
class AirTransformerModel {
public:
    AirTransformerModel(int month, int year, std::uint64_t init_seed);

    int month() const { return month_; }
    int year() const { return year_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    FeatureNorms& norms() { return norms_; }
    const FeatureNorms& norms() const { return norms_; }

    /// One degC prediction per row; thread-safe on a frozen model.
    std::vector<double> transform_forward(const std::vector<FeatureVector>& features) const;
    double transform_one(const FeatureVector& f) const;

    // Training path over an already z-scored batch.
    Tensor net_forward(const Tensor& zx) const;
    Tensor net_train_forward(const Tensor& zx);
    Tensor net_backward(const Tensor& gout);

private:
    int month_, year_;
    FeatureNorms norms_;
    DenseLayer fc_in_;
    ReluLayer relu_in_;
    SelfAttentionLayer attn_;
    ResidualDenseBlock res64_;
    DenseLayer fc_mid_;
    ReluLayer relu_mid_;
    ResidualDenseBlock res128_;
    DenseLayer fc_out_;
    ParamStore params_;
};

struct AirTrainConfig {
    int epochs = 500;
    double lr = 0.01;
    int batch_size = 65536; // shrinks to the dataset size
    std::uint64_t seed = 0;
    std::string lr_decay = "none"; // "none" or "cosine"
    int warmup_epochs = 0;

    void validate() const;
};

struct AirLogRow {
    int epoch;
    double train_l1; // degC
    double test_l1;  // degC
};

struct AirTrainResult {
    std::unique_ptr<AirTransformerModel> model;
    std::vector<AirLogRow> log;
};

/// L1 training with Adam on one month's samples; the split is station-level
/// and the model never sees samples from other months.
AirTrainResult train_air_transformer(const std::vector<Sample>& samples, const TrainTestSplit& split,
                                     const AirTrainConfig& cfg, int month, int year);

// ---------------------------------------------------------------------------
// Feature assembly
// ---------------------------------------------------------------------------

/// Static and hourly source grids needed to assemble features at a pixel.
struct FeatureContext {
    int h = 0, w = 0;
    int coarse_factor = 8;
    double lat0 = 0, lon0 = 0, dlat = 0, dlon = 0;
    const GridStack* reflectance = nullptr; // 5 x H x W
    const GridStack* elevation = nullptr;   // 1 x H x W
    const GridStack* slope = nullptr;       // 1 x H x W
    /// var -> n_doy x Hc x Wc stacks for the hour being sampled.
    const std::map<std::string, GridStack>* reanalysis = nullptr;
};

/// Assembles the 16 features at (day, y, x) for `hour`; reanalysis values
/// come from the nearest coarse cell. Throws DataError naming any missing
/// aux layer.
FeatureVector build_features(const FeatureContext& ctx, const GridStack& surf, int day, int y,
                             int x, int hour);

/// Nearest pixel center by great-circle distance.
std::pair<int, int> nearest_pixel(double lat, double lon, int h, int w, double lat0, double lon0,
                                  double dlat, double dlon);

/// Gap-free air-temperature map for one (day, hour) from a reconstructed
/// surface stack.
GridStack predict_map(const AirTransformerModel& model, const GridStack& recon_surf,
                      const FeatureContext& ctx, int day, int hour);

// ---------------------------------------------------------------------------
// MLR comparator: ordinary least squares on the same 16 features.
// ---------------------------------------------------------------------------

struct MlrModel {
    std::array<double, kFeatureCount + 1> coef{}; // [0] intercept
};

MlrModel fit_mlr(const std::vector<Sample>& samples, const std::set<std::string>& train_stations);
double mlr_predict(const MlrModel& model, const FeatureVector& f);

// ---------------------------------------------------------------------------
// Persistence: binary parameters plus a key=value metadata sidecar
// (month, year, feature norms).
// ---------------------------------------------------------------------------

void write_air_model(const AirTransformerModel& model, const std::string& bin_path,
                     const std::string& meta_path);
std::unique_ptr<AirTransformerModel> read_air_model(const std::string& bin_path);

} // namespace airtemp::transformer

#endif
