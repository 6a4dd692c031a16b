#ifndef AIRTEMP_CLI_COMMANDS_HPP
#define AIRTEMP_CLI_COMMANDS_HPP

#include <cstdint>
#include <optional>
#include <string>

namespace airtemp::cli {

// Subcommand parameter blocks; the CLI fills them from flags and config
// files, tests construct them directly. Every command is idempotent given
// fixed seed and inputs and writes outputs via write-then-rename.

struct SynthArgs {
    std::string spec_path; // key=value scene spec; empty = defaults
    std::string out_dir;
    std::optional<std::uint64_t> seed; // overrides the spec file
};

struct TrainAmplifierArgs {
    std::string scene_dir;
    std::string out_dir;
    int hour = -1; // -1 = every hour in the scene
    int epochs = 600;
    double lr = 0.1;
    int snapshot_start = 201;
    int snapshot_end = 600;
    int snapshot_every = 2;
    double test_fraction = 0.2;
    int tile_size = 64;
    std::uint64_t seed = 0;
    std::string lr_decay = "none";
    int warmup = 0;
    bool baseline = false; // conv head frozen at zero
};

struct ReconstructArgs {
    std::string scene_dir;
    std::string models_dir;
    std::string out_dir;
    int hour = -1; // -1 = every hour with a trained model
    double coverage = 0.95;
};

struct TrainAirArgs {
    std::string scene_dir;
    std::string recon_dir;
    std::string out_dir;
    int epochs = 500;
    double lr = 0.01;
    int batch_size = 65536;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    std::string lr_decay = "none";
    int warmup = 0;
};

struct PredictArgs {
    std::string scene_dir;
    std::string recon_dir;
    std::string models_dir;
    std::string out_dir;
    int day = 0;
    int hour = 0;
    bool intervals = false; // also propagate lower/upper maps
};

struct EvaluateArgs {
    std::string scene_dir;
    std::string recon_dir;
    std::string models_dir;
    std::string out_path;
    std::string key = "none";      // none|hour|month|temp_bin|elev_bin
    std::string stations = "test"; // test|train|all
};

struct AblateArgs {
    std::string scene_dir;
    std::string out_dir;
    int epochs = 600;
    int snapshot_start = 201;
    int snapshot_end = 600;
    int snapshot_every = 2;
    double lr = 0.1;
    int air_epochs = 500;
    double air_lr = 0.01;
    int air_batch = 65536;
    int tile_size = 64;
    double coverage = 0.95;
    std::uint64_t seed = 0;
    std::string lr_decay = "none";
    int warmup = 0;
};

struct RenderArgs {
    std::string grid_path;
    std::string out_path;
    int channel = 0;
    std::string ramp = "thermal";
    std::optional<double> vmin, vmax;
};

int cmd_synth(const SynthArgs& args);
int cmd_train_amplifier(const TrainAmplifierArgs& args);
int cmd_reconstruct(const ReconstructArgs& args);
int cmd_train_air(const TrainAirArgs& args);
int cmd_predict(const PredictArgs& args);
int cmd_evaluate(const EvaluateArgs& args);
int cmd_ablate(const AblateArgs& args);
int cmd_render(const RenderArgs& args);

/// Full argv dispatcher used by the binary; returns the process exit code.
int run_cli(int argc, const char* const* argv);

} // namespace airtemp::cli

#endif
