#pragma once

#include "mixscape/dataset_io.hpp"
#include "mixscape/metrics.hpp"
#include "mixscape/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mixscape {

/// Every knob of a run. Text form: one `key = value` per line, `#` comments.
/// See README for the key list.
struct RunConfig {
    std::string roster = "desk"; // desk | paper
    std::size_t per_combo = 200;
    std::uint64_t data_seed = 7;
    double noise_level = 0.1;
    double gain_fg = 1.0;
    double gain_bg = 1.0;
    SplitRatios split;
    bool unrealistic_test_only = false; // paper roster only

    std::size_t embed_dim = 64;
    std::size_t pretrain_epochs = 15;
    std::size_t pretrain_pairs_per_class = 64;
    double pretrain_learning_rate = 1e-3;
    std::size_t prototype_images_per_class = 64;

    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    std::vector<AlignmentMode> modes = {AlignmentMode::A2A, AlignmentMode::A2V, AlignmentMode::A2APlusA2V};
    double a2v_weight = 1.0;
    bool cross_half_negatives = false;
    bool keep_epoch_checkpoints = true;

    double lambda = 0.5;
    double tau = 0.35;
    std::vector<std::uint64_t> seeds = {1, 2, 3};

    // Not part of the hash: where artifacts go and how images are written.
    std::filesystem::path output_dir = "runs";
    bool png = false;

    /// Sets one key from its text value. Throws ConfigError for an unknown
    /// key or a malformed value.
    void set(const std::string& key, const std::string& value);
    /// Throws ConfigError naming the first invalid setting.
    void validate() const;

    /// Sorted key=value lines of every hashed key.
    std::string canonical() const;
    /// FNV-1a 64 of canonical(), as 16 hex digits.
    std::string hash() const;

    Roster make_roster() const;
    std::vector<Combination> combinations() const;
    EncoderArchitecture architecture() const;
    AlignmentConfig alignment(AlignmentMode mode) const;
    GenerationConfig generation() const;
};

/// Reads key=value lines on top of `base`.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
/// Applies the large data settings (26-class roster, 20 combinations × 1000).
void apply_paper_scale(RunConfig& cfg);

/// Filesystem layout of one run.
struct RunLayout {
    std::filesystem::path root;

    std::filesystem::path config_file() const { return root / "config.txt"; }
    std::filesystem::path data_dir() const { return root / "data"; }
    std::filesystem::path seed_dir(std::uint64_t seed) const { return root / ("seed_" + std::to_string(seed)); }
    std::filesystem::path encoder_dir(std::uint64_t seed) const { return seed_dir(seed) / "encoders"; }
    std::filesystem::path run_dir(std::uint64_t seed, AlignmentMode mode) const;
    std::filesystem::path eval_dir() const { return root / "eval"; }
    std::filesystem::path report_dir() const { return root / "report"; }
    std::filesystem::path generated_dir() const { return root / "generated"; }
};

/// "a2a", "a2v", "a2a_a2v".
std::string mode_slug(AlignmentMode mode);

/// Root directory: MIXSCAPE_OUTPUT_ROOT when set, otherwise cfg.output_dir.
RunLayout resolve_layout(const RunConfig& cfg);

inline constexpr const char* kOutputRootEnv = "MIXSCAPE_OUTPUT_ROOT";

/// Builds, splits and stores the dataset; writes config.txt. Idempotent.
void make_data(const RunConfig& cfg, const RunLayout& layout);

/// Loads the stored dataset, rejecting one produced under another config.
StoredDataset load_run_dataset(const RunConfig& cfg, const RunLayout& layout);

struct PretrainSummary {
    std::uint64_t seed = 0;
    double val_loss = 0;
    double val_r1 = 0;
};

/// Pretrains f_A and f_V for one seed and stores them with the prototype
/// table. Throws NumericError when held-out retrieval misses the gate.
PretrainSummary pretrain_stage(const RunConfig& cfg, const RunLayout& layout, const StoredDataset& data,
                               std::uint64_t seed);

struct SeedArtifacts {
    Mlp audio;
    Mlp image;
    PrototypeTable prototypes;
};

/// Throws DataError naming a missing file, ConfigError on a hash mismatch.
SeedArtifacts load_seed_artifacts(const RunConfig& cfg, const RunLayout& layout, std::uint64_t seed);

/// Trains the separator for one (seed, mode). On divergence a diagnostics
/// file is written to the run directory before the error propagates.
TrainResult train_stage(const RunConfig& cfg, const RunLayout& layout, const StoredDataset& data,
                        std::uint64_t seed, AlignmentMode mode);

Mlp load_separator(const RunConfig& cfg, const RunLayout& layout, std::uint64_t seed, AlignmentMode mode);

/// Per-seed metric values for the test split of one seed.
std::vector<SeedResult> evaluate_seed(const RunConfig& cfg, const RunLayout& layout, const StoredDataset& data,
                                      std::uint64_t seed);

/// Evaluates every configured seed and mode plus the baseline; writes
/// eval/per_seed.csv, eval/results.csv and eval/table{1,2,3}.csv. Throws
/// DataError listing every missing run first.
std::vector<ReportRow> evaluate_stage(const RunConfig& cfg, const RunLayout& layout, const StoredDataset& data);

/// summary.txt, loss_curves.ppm and crs_bars.ppm (PNG copies when enabled).
void report_stage(const RunConfig& cfg, const RunLayout& layout);

enum class GenerationTask { Mixed, Separated };

/// Writes images plus truth sidecars for the selected tuples; returns the
/// number of image files written (one or two per tuple). A lambda override
/// only changes the rendered output, not the artifacts it reads.
std::size_t generate_stage(const RunConfig& cfg, const RunLayout& layout, const StoredDataset& data,
                           std::uint64_t seed, AlignmentMode mode, const std::vector<std::size_t>& tuple_ids,
                           GenerationTask task, std::optional<double> lambda = std::nullopt);

/// Runs every stage in order.
void run_all(const RunConfig& cfg, const RunLayout& layout);

} // namespace mixscape
