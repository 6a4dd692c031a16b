#include "airtemp/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <vector>

#include <CLI11.hpp>

#include "airtemp/amplifier/amplifier.hpp"
#include "airtemp/core/errors.hpp"
#include "airtemp/io/config_file.hpp"
#include "airtemp/io/grid_io.hpp"
#include "airtemp/io/render.hpp"
#include "airtemp/io/station_csv.hpp"
#include "airtemp/metrics/metrics.hpp"
#include "airtemp/synth/synth.hpp"
#include "airtemp/transformer/air_transformer.hpp"

namespace fs = std::filesystem;

namespace airtemp::cli {

namespace {

std::string hour_tag(int hour) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "h%02d", hour);
    return buf;
}

std::string tile_tag(int index) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "t%03d", index);
    return buf;
}

std::string month_tag(int month, int year) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "m%02d_%04d", month, year);
    return buf;
}

synth::SceneSpec scene_spec_from_file(const std::string& path) {
    synth::SceneSpec spec;
    if (path.empty()) return spec;
    const io::KeyValueFile kv = io::KeyValueFile::load(path);
    spec.h = static_cast<int>(kv.get_int_or("h", spec.h));
    spec.w = static_cast<int>(kv.get_int_or("w", spec.w));
    spec.n_doy = static_cast<int>(kv.get_int_or("n_doy", spec.n_doy));
    spec.year = static_cast<int>(kv.get_int_or("year", spec.year));
    if (kv.has("hours")) {
        spec.hours.clear();
        const std::string& hours = kv.get("hours");
        std::size_t pos = 0;
        while (pos < hours.size()) {
            std::size_t comma = hours.find(',', pos);
            if (comma == std::string::npos) comma = hours.size();
            spec.hours.push_back(std::stoi(hours.substr(pos, comma - pos)));
            pos = comma + 1;
        }
    }
    spec.t0_truth = {kv.get_double_or("t0_lo", spec.t0_truth.lo), kv.get_double_or("t0_hi", spec.t0_truth.hi)};
    spec.a_truth = {kv.get_double_or("a_lo", spec.a_truth.lo), kv.get_double_or("a_hi", spec.a_truth.hi)};
    spec.phi_truth = {kv.get_double_or("phi_lo", spec.phi_truth.lo), kv.get_double_or("phi_hi", spec.phi_truth.hi)};
    spec.rho_truth = {kv.get_double_or("rho_lo", spec.rho_truth.lo), kv.get_double_or("rho_hi", spec.rho_truth.hi)};
    spec.texture_amplitude = kv.get_double_or("texture_amplitude", spec.texture_amplitude);
    spec.noise_sigma = kv.get_double_or("noise_sigma", spec.noise_sigma);
    spec.cloud_fraction = kv.get_double_or("cloud_fraction", spec.cloud_fraction);
    spec.cloud_blob_scale = static_cast<int>(kv.get_int_or("cloud_blob_scale", spec.cloud_blob_scale));
    spec.n_stations = static_cast<int>(kv.get_int_or("n_stations", spec.n_stations));
    spec.air_transform_truth = kv.get_or("air_transform", spec.air_transform_truth);
    spec.station_noise_sigma = kv.get_double_or("station_noise_sigma", spec.station_noise_sigma);
    spec.seed = static_cast<std::uint64_t>(kv.get_int_or("seed", static_cast<std::int64_t>(spec.seed)));
    spec.lat0 = kv.get_double_or("lat0", spec.lat0);
    spec.lon0 = kv.get_double_or("lon0", spec.lon0);
    spec.dlat = kv.get_double_or("dlat", spec.dlat);
    spec.dlon = kv.get_double_or("dlon", spec.dlon);
    spec.coarse_factor = static_cast<int>(kv.get_int_or("coarse_factor", spec.coarse_factor));
    return spec;
}

amplifier::ReconstructionDataset dataset_for_hour(const synth::SceneBundle& scene, int hour) {
    amplifier::ReconstructionDataset data;
    data.observed = scene.observed.at(hour);
    data.coarse = scene.coarse.at(hour);
    data.reflectance = scene.reflectance;
    return data;
}

std::vector<int> resolve_hours(const synth::SceneBundle& scene, int requested) {
    if (requested < 0) return scene.hours;
    for (int h : scene.hours) {
        if (h == requested) return {requested};
    }
    throw DataError("scene has no hour " + std::to_string(requested));
}

transformer::FeatureContext make_feature_context(const synth::SceneBundle& scene, int hour) {
    transformer::FeatureContext ctx;
    ctx.h = scene.h;
    ctx.w = scene.w;
    ctx.coarse_factor = scene.coarse_factor;
    ctx.lat0 = scene.lat0;
    ctx.lon0 = scene.lon0;
    ctx.dlat = scene.dlat;
    ctx.dlon = scene.dlon;
    ctx.reflectance = &scene.reflectance;
    ctx.elevation = &scene.elevation;
    ctx.slope = &scene.slope;
    auto it = scene.reanalysis.find(hour);
    if (it == scene.reanalysis.end()) throw DataError("missing aux layer 'reanalysis'");
    ctx.reanalysis = &it->second;
    return ctx;
}

/// Joins station records against reconstructed surface means; records at
/// hours or days outside the scene are skipped.
std::vector<transformer::Sample> build_station_samples(
    const synth::SceneBundle& scene, const std::map<int, GridStack>& recon_mean_by_hour) {
    std::map<std::string, std::pair<int, int>> pixel_cache;
    std::vector<transformer::Sample> samples;
    std::int64_t skipped = 0;
    for (const StationRecord& rec : scene.stations) {
        if (rec.timestamp.year != scene.year) {
            ++skipped;
            continue;
        }
        const int day = day_of_year(rec.timestamp.year, rec.timestamp.month, rec.timestamp.day);
        if (day >= scene.n_doy) {
            ++skipped;
            continue;
        }
        auto recon_it = recon_mean_by_hour.find(rec.timestamp.hour);
        if (recon_it == recon_mean_by_hour.end()) {
            ++skipped;
            continue;
        }
        auto cached = pixel_cache.find(rec.station_id);
        if (cached == pixel_cache.end()) {
            cached = pixel_cache
                         .emplace(rec.station_id,
                                  transformer::nearest_pixel(rec.lat, rec.lon, scene.h, scene.w,
                                                             scene.lat0, scene.lon0, scene.dlat,
                                                             scene.dlon))
                         .first;
        }
        const auto [y, x] = cached->second;
        const transformer::FeatureContext ctx = make_feature_context(scene, rec.timestamp.hour);
        transformer::Sample s;
        s.features = transformer::build_features(ctx, recon_it->second, day, y, x, rec.timestamp.hour);
        s.t_air = static_cast<float>(rec.t_air_c);
        s.station_id = rec.station_id;
        s.month = rec.timestamp.month;
        s.year = rec.timestamp.year;
        s.hour = rec.timestamp.hour;
        samples.push_back(std::move(s));
    }
    if (skipped > 0) {
        std::cerr << "note: skipped " << skipped << " station records outside the scene window\n";
    }
    if (samples.empty()) throw DataError("no station records overlap the reconstructed scene");
    return samples;
}

std::map<int, GridStack> load_recon_means(const std::string& recon_dir, const std::vector<int>& hours) {
    std::map<int, GridStack> by_hour;
    for (int hour : hours) {
        const std::string path = recon_dir + "/mean_" + hour_tag(hour) + ".tgrd";
        if (fs::exists(path)) by_hour[hour] = io::read_grid(path);
    }
    if (by_hour.empty()) throw DataError("no reconstructed mean grids found in '" + recon_dir + "'");
    return by_hour;
}

std::string station_list_csv(const std::set<std::string>& ids) {
    std::string out;
    for (const std::string& id : ids) {
        if (!out.empty()) out += ",";
        out += id;
    }
    return out;
}

std::set<std::string> parse_station_list(const std::string& csv) {
    std::set<std::string> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        if (comma > pos) out.insert(csv.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return out;
}

struct AirModelSet {
    std::map<std::pair<int, int>, std::unique_ptr<transformer::AirTransformerModel>> by_month_year;

    const transformer::AirTransformerModel& for_record(int month, int year) const {
        auto it = by_month_year.find({month, year});
        if (it == by_month_year.end()) {
            throw DataError("no air model for " + std::to_string(year) + "-" + std::to_string(month));
        }
        return *it->second;
    }
};

AirModelSet load_air_models(const std::string& dir) {
    AirModelSet set;
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".tair") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    for (const std::string& path : paths) {
        auto model = transformer::read_air_model(path);
        const auto key = std::make_pair(model->month(), model->year());
        set.by_month_year[key] = std::move(model);
    }
    if (set.by_month_year.empty()) throw DataError("no air models (*.tair) in '" + dir + "'");
    return set;
}

struct EvalRow {
    double mae, rmse, r2;
};

EvalRow evaluate_samples(const std::vector<transformer::Sample>& samples,
                         const std::set<std::string>& stations,
                         const std::function<double(const transformer::Sample&)>& predict) {
    std::vector<double> pred, obs;
    for (const transformer::Sample& s : samples) {
        if (!stations.count(s.station_id)) continue;
        pred.push_back(predict(s));
        obs.push_back(s.t_air);
    }
    if (pred.empty()) throw DataError("no samples for the requested stations");
    EvalRow row;
    row.mae = metrics::mae(pred, obs);
    row.rmse = metrics::rmse(pred, obs);
    row.r2 = metrics::r2(pred, obs);
    return row;
}

} // namespace

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const SynthArgs& args) {
    synth::SceneSpec spec = scene_spec_from_file(args.spec_path);
    if (args.seed) spec.seed = *args.seed;
    const synth::SyntheticScene scene = synth::generate_scene(spec);
    synth::write_scene(scene, args.out_dir);
    std::cout << "scene " << spec.h << "x" << spec.w << " n_doy=" << spec.n_doy << " hours="
              << spec.hours.size() << " stations=" << spec.n_stations << " -> " << args.out_dir
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train-amplifier
// ---------------------------------------------------------------------------

int cmd_train_amplifier(const TrainAmplifierArgs& args) {
    const synth::SceneBundle scene = synth::load_scene(args.scene_dir);
    amplifier::TrainConfig cfg;
    cfg.epochs = args.epochs;
    cfg.lr = args.lr;
    cfg.snapshot_start = args.snapshot_start;
    cfg.snapshot_end = args.snapshot_end;
    cfg.snapshot_every = args.snapshot_every;
    cfg.test_fraction = args.test_fraction;
    cfg.seed = args.seed;
    cfg.lr_decay = args.lr_decay;
    cfg.warmup_epochs = args.warmup;
    cfg.validate();

    for (int hour : resolve_hours(scene, args.hour)) {
        const amplifier::ReconstructionDataset full = dataset_for_hour(scene, hour);
        const auto tiles = amplifier::make_tiles(scene.h, scene.w, args.tile_size);
        io::KeyValueFile manifest;
        manifest.set_int("hour", hour);
        manifest.set_int("year", scene.year);
        manifest.set_int("n_tiles", static_cast<std::int64_t>(tiles.size()));
        manifest.set_int("tile_size", args.tile_size);
        manifest.set_int("baseline", args.baseline ? 1 : 0);
        for (std::size_t t = 0; t < tiles.size(); ++t) {
            const auto& rect = tiles[t];
            manifest.set("tile_" + std::to_string(t),
                         std::to_string(rect.y0) + "," + std::to_string(rect.x0) + "," +
                             std::to_string(rect.h) + "," + std::to_string(rect.w));
            amplifier::ReconstructionDataset data =
                tiles.size() == 1 ? full : full.window(rect.y0, rect.x0, rect.h, rect.w);
            amplifier::TrainConfig tile_cfg = cfg;
            tile_cfg.seed = cfg.seed + 1315423911ull * t;
            const amplifier::TrainResult result =
                args.baseline ? amplifier::atc_only_baseline(data, tile_cfg, hour, scene.year)
                              : amplifier::train_amplifier(data, tile_cfg, hour, scene.year);
            const std::string base =
                args.out_dir + "/amplifier_" + hour_tag(hour) + "_" + tile_tag(static_cast<int>(t));
            amplifier::write_amplifier_bundle(amplifier::bundle_from(*result.model, result.snapshots),
                                              base + ".tamp");
            io::atomic_write_file(args.out_dir + "/training_log_" + hour_tag(hour) + "_" +
                                      tile_tag(static_cast<int>(t)) + ".csv",
                                  amplifier::training_log_csv(result.log));
            std::cout << "hour " << hour << " tile " << t << ": train L1 "
                      << result.log.back().train_l1 << " test L1 " << result.log.back().test_l1
                      << " (" << result.snapshots.size() << " snapshots)\n";
        }
        manifest.save(args.out_dir + "/amplifier_" + hour_tag(hour) + ".manifest");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

int cmd_reconstruct(const ReconstructArgs& args) {
    const synth::SceneBundle scene = synth::load_scene(args.scene_dir);
    for (int hour : resolve_hours(scene, args.hour)) {
        const std::string manifest_path =
            args.models_dir + "/amplifier_" + hour_tag(hour) + ".manifest";
        if (!fs::exists(manifest_path)) {
            if (args.hour < 0) continue;
            throw DataError("no trained amplifier manifest at '" + manifest_path + "'");
        }
        const io::KeyValueFile manifest = io::KeyValueFile::load(manifest_path);
        const int n_tiles = static_cast<int>(manifest.get_int("n_tiles"));
        const amplifier::ReconstructionDataset full = dataset_for_hour(scene, hour);

        GridStack mean(scene.n_doy, scene.h, scene.w);
        GridStack lower(scene.n_doy, scene.h, scene.w);
        GridStack upper(scene.n_doy, scene.h, scene.w);
        std::string calib_csv = "model_id,lambda,raw_coverage,calibrated_coverage,n_points\n";

        for (int t = 0; t < n_tiles; ++t) {
            const std::string rect_str = manifest.get("tile_" + std::to_string(t));
            int y0, x0, hh, ww;
            if (std::sscanf(rect_str.c_str(), "%d,%d,%d,%d", &y0, &x0, &hh, &ww) != 4) {
                throw DataError("bad tile rect '" + rect_str + "' in manifest");
            }
            const amplifier::AmplifierBundle bundle = amplifier::read_amplifier_bundle(
                args.models_dir + "/amplifier_" + hour_tag(hour) + "_" + tile_tag(t) + ".tamp");
            const amplifier::ReconstructionDataset data =
                n_tiles == 1 ? full : full.window(y0, x0, hh, ww);
            const amplifier::Reconstruction rec = amplifier::reconstruct(bundle, data, args.coverage);
            for (int d = 0; d < scene.n_doy; ++d) {
                for (int y = 0; y < hh; ++y) {
                    for (int x = 0; x < ww; ++x) {
                        mean.at(d, y0 + y, x0 + x) = rec.mean.at(d, y, x);
                        lower.at(d, y0 + y, x0 + x) = rec.lower.at(d, y, x);
                        upper.at(d, y0 + y, x0 + x) = rec.upper.at(d, y, x);
                    }
                }
            }
            char line[192];
            std::snprintf(line, sizeof(line), "%s_%s,%.6f,%.6f,%.6f,%zu\n", hour_tag(hour).c_str(),
                          tile_tag(t).c_str(), rec.calibration.lambda, rec.calibration.raw_coverage,
                          rec.calibration.coverage, rec.calibration.n);
            calib_csv += line;
        }
        io::write_grid(mean, args.out_dir + "/mean_" + hour_tag(hour) + ".tgrd");
        io::write_grid(lower, args.out_dir + "/lower_" + hour_tag(hour) + ".tgrd");
        io::write_grid(upper, args.out_dir + "/upper_" + hour_tag(hour) + ".tgrd");
        io::atomic_write_file(args.out_dir + "/calibration_" + hour_tag(hour) + ".csv", calib_csv);
        std::cout << "reconstructed hour " << hour << " -> " << args.out_dir << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// train-air
// ---------------------------------------------------------------------------

int cmd_train_air(const TrainAirArgs& args) {
    const synth::SceneBundle scene = synth::load_scene(args.scene_dir);
    const std::map<int, GridStack> recon = load_recon_means(args.recon_dir, scene.hours);
    const std::vector<transformer::Sample> samples = build_station_samples(scene, recon);

    std::vector<std::string> ids;
    for (const transformer::Sample& s : samples) ids.push_back(s.station_id);
    const transformer::TrainTestSplit split =
        transformer::TrainTestSplit::by_station(ids, args.test_fraction, args.seed);

    io::KeyValueFile split_file;
    split_file.set_int("seed", static_cast<std::int64_t>(args.seed));
    split_file.set("train_stations", station_list_csv(split.train_stations));
    split_file.set("test_stations", station_list_csv(split.test_stations));
    split_file.save(args.out_dir + "/split.txt");

    std::set<std::pair<int, int>> months;
    for (const transformer::Sample& s : samples) months.insert({s.month, s.year});

    transformer::AirTrainConfig cfg;
    cfg.epochs = args.epochs;
    cfg.lr = args.lr;
    cfg.batch_size = args.batch_size;
    cfg.seed = args.seed;
    cfg.lr_decay = args.lr_decay;
    cfg.warmup_epochs = args.warmup;

    for (const auto& [month, year] : months) {
        std::vector<transformer::Sample> month_samples;
        for (const transformer::Sample& s : samples) {
            if (s.month == month && s.year == year) month_samples.push_back(s);
        }
        const transformer::AirTrainResult result =
            transformer::train_air_transformer(month_samples, split, cfg, month, year);
        const std::string base = args.out_dir + "/air_" + month_tag(month, year);
        transformer::write_air_model(*result.model, base + ".tair", base + ".meta");
        std::string log_csv = "epoch,train_l1,test_l1\n";
        char buf[96];
        for (const transformer::AirLogRow& row : result.log) {
            std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f\n", row.epoch, row.train_l1, row.test_l1);
            log_csv += buf;
        }
        io::atomic_write_file(args.out_dir + "/training_log_air_" + month_tag(month, year) + ".csv",
                              log_csv);
        std::cout << "air model " << year << "-" << month << ": train L1 "
                  << result.log.back().train_l1 << " test L1 " << result.log.back().test_l1 << " ("
                  << month_samples.size() << " samples)\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

int cmd_predict(const PredictArgs& args) {
    const synth::SceneBundle scene = synth::load_scene(args.scene_dir);
    if (args.day < 0 || args.day >= scene.n_doy) {
        throw ConfigError("day " + std::to_string(args.day) + " outside [0," +
                          std::to_string(scene.n_doy) + ")");
    }
    const UtcHour when = from_day_of_year(scene.year, args.day, args.hour);
    const AirModelSet models = load_air_models(args.models_dir);
    const transformer::AirTransformerModel& model = models.for_record(when.month, when.year);
    const transformer::FeatureContext ctx = make_feature_context(scene, args.hour);

    const std::string tag = hour_tag(args.hour);
    const GridStack mean = io::read_grid(args.recon_dir + "/mean_" + tag + ".tgrd");
    char day_tag[16];
    std::snprintf(day_tag, sizeof(day_tag), "d%03d", args.day);
    const GridStack air = transformer::predict_map(model, mean, ctx, args.day, args.hour);
    io::write_grid(air, args.out_dir + "/air_" + std::string(day_tag) + "_" + tag + ".tgrd");

    if (args.intervals) {
        const GridStack lower = io::read_grid(args.recon_dir + "/lower_" + tag + ".tgrd");
        const GridStack upper = io::read_grid(args.recon_dir + "/upper_" + tag + ".tgrd");
        const GridStack air_a = transformer::predict_map(model, lower, ctx, args.day, args.hour);
        const GridStack air_b = transformer::predict_map(model, upper, ctx, args.day, args.hour);
        GridStack air_low(1, scene.h, scene.w), air_upp(1, scene.h, scene.w);
        for (std::size_t i = 0; i < air_low.data.size(); ++i) {
            air_low.data[i] = std::min(air_a.data[i], air_b.data[i]);
            air_upp.data[i] = std::max(air_a.data[i], air_b.data[i]);
        }
        io::write_grid(air_low, args.out_dir + "/air_low_" + std::string(day_tag) + "_" + tag + ".tgrd");
        io::write_grid(air_upp, args.out_dir + "/air_upp_" + std::string(day_tag) + "_" + tag + ".tgrd");
    }
    std::cout << "predicted air map day " << args.day << " hour " << args.hour << " -> "
              << args.out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

int cmd_evaluate(const EvaluateArgs& args) {
    const synth::SceneBundle scene = synth::load_scene(args.scene_dir);
    const std::map<int, GridStack> recon = load_recon_means(args.recon_dir, scene.hours);
    const std::vector<transformer::Sample> samples = build_station_samples(scene, recon);
    const AirModelSet models = load_air_models(args.models_dir);

    std::set<std::string> wanted;
    if (args.stations == "all") {
        for (const transformer::Sample& s : samples) wanted.insert(s.station_id);
    } else {
        const io::KeyValueFile split = io::KeyValueFile::load(args.models_dir + "/split.txt");
        if (args.stations == "test") {
            wanted = parse_station_list(split.get("test_stations"));
        } else if (args.stations == "train") {
            wanted = parse_station_list(split.get("train_stations"));
        } else {
            throw ConfigError("stations filter must be test|train|all");
        }
    }

    std::vector<metrics::EvalPair> pairs;
    for (const transformer::Sample& s : samples) {
        if (!wanted.count(s.station_id)) continue;
        metrics::EvalPair p;
        p.pred = models.for_record(s.month, s.year).transform_one(s.features);
        p.obs = s.t_air;
        p.hour = s.hour;
        p.month = s.month;
        p.elevation_m = s.features[transformer::kElevation];
        pairs.push_back(p);
    }
    if (pairs.empty()) throw DataError("no evaluation records for stations filter '" + args.stations + "'");
    const auto reports =
        metrics::breakdown_report(pairs, metrics::breakdown_key_from_string(args.key));
    io::atomic_write_file(args.out_path, metrics::report_csv(reports));
    std::cout << "evaluated " << pairs.size() << " records (" << args.stations << " stations) -> "
              << args.out_path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

int cmd_ablate(const AblateArgs& args) {
    const std::string work = args.out_dir + "/work";

    TrainAmplifierArgs amp;
    amp.scene_dir = args.scene_dir;
    amp.epochs = args.epochs;
    amp.lr = args.lr;
    amp.snapshot_start = args.snapshot_start;
    amp.snapshot_end = args.snapshot_end;
    amp.snapshot_every = args.snapshot_every;
    amp.tile_size = args.tile_size;
    amp.seed = args.seed;
    amp.lr_decay = args.lr_decay;
    amp.warmup = args.warmup;

    amp.out_dir = work + "/models_full";
    cmd_train_amplifier(amp);
    amp.out_dir = work + "/models_atc";
    amp.baseline = true;
    cmd_train_amplifier(amp);

    ReconstructArgs rec;
    rec.scene_dir = args.scene_dir;
    rec.coverage = args.coverage;
    rec.models_dir = work + "/models_full";
    rec.out_dir = work + "/recon_full";
    cmd_reconstruct(rec);
    rec.models_dir = work + "/models_atc";
    rec.out_dir = work + "/recon_atc";
    cmd_reconstruct(rec);

    const synth::SceneBundle scene = synth::load_scene(args.scene_dir);
    const auto samples_full =
        build_station_samples(scene, load_recon_means(work + "/recon_full", scene.hours));
    const auto samples_atc =
        build_station_samples(scene, load_recon_means(work + "/recon_atc", scene.hours));

    std::vector<std::string> ids;
    for (const transformer::Sample& s : samples_full) ids.push_back(s.station_id);
    const auto split = transformer::TrainTestSplit::by_station(ids, 0.2, args.seed);

    transformer::AirTrainConfig air_cfg;
    air_cfg.epochs = args.air_epochs;
    air_cfg.lr = args.air_lr;
    air_cfg.batch_size = args.air_batch;
    air_cfg.seed = args.seed;
    air_cfg.lr_decay = args.lr_decay;
    air_cfg.warmup_epochs = args.warmup;

    std::set<std::pair<int, int>> months;
    for (const transformer::Sample& s : samples_full) months.insert({s.month, s.year});

    auto train_months = [&](const std::vector<transformer::Sample>& samples) {
        std::map<std::pair<int, int>, std::unique_ptr<transformer::AirTransformerModel>> by_month;
        for (const auto& [month, year] : months) {
            std::vector<transformer::Sample> month_samples;
            for (const transformer::Sample& s : samples) {
                if (s.month == month && s.year == year) month_samples.push_back(s);
            }
            by_month[{month, year}] =
                std::move(transformer::train_air_transformer(month_samples, split, air_cfg, month, year)
                              .model);
        }
        return by_month;
    };

    const auto air_full = train_months(samples_full);
    const auto air_atc = train_months(samples_atc);
    const transformer::MlrModel mlr = transformer::fit_mlr(samples_full, split.train_stations);

    const EvalRow row_full = evaluate_samples(samples_full, split.test_stations,
                                              [&](const transformer::Sample& s) {
                                                  return air_full.at({s.month, s.year})
                                                      ->transform_one(s.features);
                                              });
    const EvalRow row_atc = evaluate_samples(samples_atc, split.test_stations,
                                             [&](const transformer::Sample& s) {
                                                 return air_atc.at({s.month, s.year})
                                                     ->transform_one(s.features);
                                             });
    const EvalRow row_mlr = evaluate_samples(samples_full, split.test_stations,
                                             [&](const transformer::Sample& s) {
                                                 return transformer::mlr_predict(mlr, s.features);
                                             });

    std::string csv = "method,mae,rmse,r2\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "atc_only,%.6f,%.6f,%.6f\n", row_atc.mae, row_atc.rmse, row_atc.r2);
    csv += buf;
    std::snprintf(buf, sizeof(buf), "amplifier_mlr,%.6f,%.6f,%.6f\n", row_mlr.mae, row_mlr.rmse,
                  row_mlr.r2);
    csv += buf;
    std::snprintf(buf, sizeof(buf), "amplifier_airtransformer,%.6f,%.6f,%.6f\n", row_full.mae,
                  row_full.rmse, row_full.r2);
    csv += buf;
    io::atomic_write_file(args.out_dir + "/table3.csv", csv);
    std::cout << csv;
    return 0;
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

int cmd_render(const RenderArgs& args) {
    const GridStack grid = io::read_grid(args.grid_path);
    std::optional<float> vmin, vmax;
    if (args.vmin) vmin = static_cast<float>(*args.vmin);
    if (args.vmax) vmax = static_cast<float>(*args.vmax);
    io::render_map(grid, args.channel, args.ramp, args.out_path, vmin, vmax);
    std::cout << "rendered channel " << args.channel << " -> " << args.out_path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// CLI dispatcher
// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"airtemp: surface-temperature reconstruction and air-temperature mapping"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    TrainAmplifierArgs amp_args;
    ReconstructArgs rec_args;
    TrainAirArgs air_args;
    PredictArgs pred_args;
    EvaluateArgs eval_args;
    AblateArgs abl_args;
    RenderArgs render_args;

    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic scene");
    c_synth->set_config("--config");
    c_synth->add_option("--spec", synth_args.spec_path, "Scene spec file (key = value)");
    c_synth->add_option("--out", synth_args.out_dir, "Output scene directory")->required();
    std::uint64_t synth_seed = 0;
    auto* synth_seed_opt = c_synth->add_option("--seed", synth_seed, "Scene seed (overrides spec)");

    auto* c_amp = app.add_subcommand("train-amplifier", "Train the reconstruction model per hour");
    c_amp->set_config("--config");
    c_amp->add_option("--scene", amp_args.scene_dir, "Scene directory")->required();
    c_amp->add_option("--out", amp_args.out_dir, "Output model directory")->required();
    c_amp->add_option("--hour", amp_args.hour, "Hour of day (default: every scene hour)")
        ->capture_default_str();
    c_amp->add_option("--epochs", amp_args.epochs, "Training epochs")->capture_default_str();
    c_amp->add_option("--lr", amp_args.lr, "Adam learning rate")->capture_default_str();
    c_amp->add_option("--snapshot-start", amp_args.snapshot_start, "First snapshot epoch")
        ->capture_default_str();
    c_amp->add_option("--snapshot-end", amp_args.snapshot_end, "Last snapshot epoch")
        ->capture_default_str();
    c_amp->add_option("--snapshot-every", amp_args.snapshot_every, "Snapshot interval in epochs")
        ->capture_default_str();
    c_amp->add_option("--test-fraction", amp_args.test_fraction, "Held-out fraction of valid cells")
        ->capture_default_str();
    c_amp->add_option("--tile", amp_args.tile_size, "Tile size in pixels")->capture_default_str();
    c_amp->add_option("--seed", amp_args.seed, "Training seed")->required();
    c_amp->add_option("--lr-decay", amp_args.lr_decay, "Learning-rate schedule (none|cosine)")
        ->capture_default_str();
    c_amp->add_option("--warmup", amp_args.warmup, "Linear warmup epochs")->capture_default_str();
    c_amp->add_flag("--baseline", amp_args.baseline, "Freeze the conv head at zero (enhanced ATC)");

    auto* c_rec = app.add_subcommand("reconstruct", "Ensemble-mean reconstruction with intervals");
    c_rec->set_config("--config");
    c_rec->add_option("--scene", rec_args.scene_dir, "Scene directory")->required();
    c_rec->add_option("--models", rec_args.models_dir, "Trained amplifier directory")->required();
    c_rec->add_option("--out", rec_args.out_dir, "Output directory")->required();
    c_rec->add_option("--hour", rec_args.hour, "Hour of day (default: every trained hour)")
        ->capture_default_str();
    c_rec->add_option("--coverage", rec_args.coverage, "Interval coverage target")
        ->capture_default_str();

    auto* c_air = app.add_subcommand("train-air", "Train the air-temperature network per month");
    c_air->set_config("--config");
    c_air->add_option("--scene", air_args.scene_dir, "Scene directory")->required();
    c_air->add_option("--recon", air_args.recon_dir, "Reconstruction directory")->required();
    c_air->add_option("--out", air_args.out_dir, "Output model directory")->required();
    c_air->add_option("--epochs", air_args.epochs, "Training epochs")->capture_default_str();
    c_air->add_option("--lr", air_args.lr, "Adam learning rate")->capture_default_str();
    c_air->add_option("--batch", air_args.batch_size, "Batch size (shrinks to dataset size)")
        ->capture_default_str();
    c_air->add_option("--test-fraction", air_args.test_fraction, "Held-out fraction of stations")
        ->capture_default_str();
    c_air->add_option("--seed", air_args.seed, "Training seed")->required();
    c_air->add_option("--lr-decay", air_args.lr_decay, "Learning-rate schedule (none|cosine)")
        ->capture_default_str();
    c_air->add_option("--warmup", air_args.warmup, "Linear warmup epochs")->capture_default_str();

    auto* c_pred = app.add_subcommand("predict", "Air-temperature map for one day and hour");
    c_pred->set_config("--config");
    c_pred->add_option("--scene", pred_args.scene_dir, "Scene directory")->required();
    c_pred->add_option("--recon", pred_args.recon_dir, "Reconstruction directory")->required();
    c_pred->add_option("--models", pred_args.models_dir, "Air model directory")->required();
    c_pred->add_option("--out", pred_args.out_dir, "Output directory")->required();
    c_pred->add_option("--day", pred_args.day, "Day index within the scene")->required();
    c_pred->add_option("--hour", pred_args.hour, "Hour of day")->required();
    c_pred->add_flag("--intervals", pred_args.intervals, "Also propagate lower/upper maps");

    auto* c_eval = app.add_subcommand("evaluate", "Station-based validation report");
    c_eval->set_config("--config");
    c_eval->add_option("--scene", eval_args.scene_dir, "Scene directory")->required();
    c_eval->add_option("--recon", eval_args.recon_dir, "Reconstruction directory")->required();
    c_eval->add_option("--models", eval_args.models_dir, "Air model directory")->required();
    c_eval->add_option("--out", eval_args.out_path, "Output report CSV")->required();
    c_eval->add_option("--key", eval_args.key, "Breakdown key (none|hour|month|temp_bin|elev_bin)")
        ->capture_default_str();
    c_eval->add_option("--stations", eval_args.stations, "Station filter (test|train|all)")
        ->capture_default_str();

    auto* c_abl = app.add_subcommand("ablate", "Three-way method comparison table");
    c_abl->set_config("--config");
    c_abl->add_option("--scene", abl_args.scene_dir, "Scene directory")->required();
    c_abl->add_option("--out", abl_args.out_dir, "Output directory")->required();
    c_abl->add_option("--epochs", abl_args.epochs, "Amplifier epochs")->capture_default_str();
    c_abl->add_option("--snapshot-start", abl_args.snapshot_start, "First snapshot epoch")
        ->capture_default_str();
    c_abl->add_option("--snapshot-end", abl_args.snapshot_end, "Last snapshot epoch")
        ->capture_default_str();
    c_abl->add_option("--snapshot-every", abl_args.snapshot_every, "Snapshot interval")
        ->capture_default_str();
    c_abl->add_option("--lr", abl_args.lr, "Amplifier learning rate")->capture_default_str();
    c_abl->add_option("--air-epochs", abl_args.air_epochs, "Air-transformer epochs")
        ->capture_default_str();
    c_abl->add_option("--air-lr", abl_args.air_lr, "Air-transformer learning rate")
        ->capture_default_str();
    c_abl->add_option("--air-batch", abl_args.air_batch, "Air-transformer batch size")
        ->capture_default_str();
    c_abl->add_option("--tile", abl_args.tile_size, "Tile size in pixels")->capture_default_str();
    c_abl->add_option("--coverage", abl_args.coverage, "Interval coverage target")
        ->capture_default_str();
    c_abl->add_option("--seed", abl_args.seed, "Seed")->required();
    c_abl->add_option("--lr-decay", abl_args.lr_decay, "Learning-rate schedule (none|cosine)")
        ->capture_default_str();
    c_abl->add_option("--warmup", abl_args.warmup, "Linear warmup epochs")->capture_default_str();

    auto* c_render = app.add_subcommand("render", "Render a grid channel to a PPM image");
    c_render->add_option("--grid", render_args.grid_path, "Grid file")->required();
    c_render->add_option("--out", render_args.out_path, "Output PPM path")->required();
    c_render->add_option("--channel", render_args.channel, "Channel index")->capture_default_str();
    c_render->add_option("--ramp", render_args.ramp, "Color ramp (thermal|gray)")->capture_default_str();
    double vmin = 0, vmax = 0;
    auto* vmin_opt = c_render->add_option("--vmin", vmin, "Explicit range minimum");
    auto* vmax_opt = c_render->add_option("--vmax", vmax, "Explicit range maximum");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (c_synth->parsed()) {
            if (synth_seed_opt->count() > 0) synth_args.seed = synth_seed;
            return cmd_synth(synth_args);
        }
        if (c_amp->parsed()) return cmd_train_amplifier(amp_args);
        if (c_rec->parsed()) return cmd_reconstruct(rec_args);
        if (c_air->parsed()) return cmd_train_air(air_args);
        if (c_pred->parsed()) return cmd_predict(pred_args);
        if (c_eval->parsed()) return cmd_evaluate(eval_args);
        if (c_abl->parsed()) return cmd_ablate(abl_args);
        if (c_render->parsed()) {
            if (vmin_opt->count() > 0) render_args.vmin = vmin;
            if (vmax_opt->count() > 0) render_args.vmax = vmax;
            return cmd_render(render_args);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace airtemp::cli
