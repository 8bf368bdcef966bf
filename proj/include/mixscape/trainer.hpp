#pragma once

#include "mixscape/alignment.hpp"
#include "mixscape/encoders.hpp"
#include "mixscape/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mixscape {

struct OptimState {
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

OptimState make_optim_state(std::span<Tensor* const> params);

/// Adam with bias correction; weight decay enters as an L2 term added to
/// the gradient (coupled). Throws ContractError on any shape disagreement.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, OptimState& state, double lr,
               double weight_decay);

/// Separator inputs and alignment targets, one row per tuple.
struct AlignmentTargets {
    Tensor mixes;                         // [N × L]
    std::optional<GroundTruthPair> audio; // unit rows, [N × d] each
    std::optional<GroundTruthPair> image;

    std::size_t size() const { return mixes.empty() ? 0 : mixes.rows(); }
};

/// Encodes the ground-truth sources of the selected tuples with frozen
/// encoders. Throws ContractError if an encoder is not frozen.
AlignmentTargets prepare_targets(const std::vector<TrainingTuple>& tuples, std::span<const std::size_t> indices,
                                 const Mlp& audio_encoder, const Mlp& image_encoder, bool with_audio,
                                 bool with_image);

struct TrainConfig {
    std::size_t batch_size = 16;
    std::size_t epochs = 50; // the desk pipeline runs 30
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    std::uint64_t seed = 0;
    AlignmentConfig alignment;

    // Optional artifact directory: epoch_{k}.ckpt, best.ckpt, training_log.csv.
    std::optional<std::filesystem::path> output_dir;
    bool keep_epoch_checkpoints = true;
    std::string checkpoint_tag;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0;
    double val_loss = 0;
    double wall_ms = 0;
};

struct TrainResult {
    Mlp best;
    std::size_t best_epoch = 0;
    double initial_train_loss = 0;
    std::vector<EpochRecord> curve;
    std::size_t optimizer_steps = 0;
};

/// Raised when a loss turns non-finite; carries the epoch, batch and recent losses.
class TrainingDivergedError : public NumericError {
public:
    TrainingDivergedError(const std::string& what, std::string diagnostics)
        : NumericError(what), diagnostics_(std::move(diagnostics))
    {
    }
    const std::string& diagnostics() const noexcept { return diagnostics_; }

private:
    std::string diagnostics_;
};

/// 1-based epoch of the minimum validation loss; earliest on ties.
std::size_t select_best_epoch(std::span<const double> val_losses);

/// Mean batch loss of a fixed network over the targets in a fixed shuffled order.
/// Trailing batches smaller than 2 are dropped.
double evaluate_loss(const Mlp& separator, const AlignmentTargets& targets, std::size_t batch_size,
                     const AlignmentConfig& cfg);

/// Seeded-shuffle epochs of Adam on the alignment loss; returns the network
/// from the epoch with the lowest validation loss.
TrainResult train(Mlp separator, const AlignmentTargets& train_set, const AlignmentTargets& val_set,
                  const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Reference encoder pretraining

struct SingleClassPair {
    const Signal* audio = nullptr;
    const GlyphImage* image = nullptr;
    ClassId class_id = 0;
};

/// (A1, V1, fg) and (A2, V2, bg) of every tuple in `indices`, capped per class
/// in index order.
std::vector<SingleClassPair> single_class_pairs(const std::vector<TrainingTuple>& tuples,
                                                std::span<const std::size_t> indices, std::size_t cap_per_class);

struct PretrainConfig {
    EncoderArchitecture arch;
    std::size_t epochs = 30;
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    std::uint64_t seed = 0;
    std::size_t min_pairs_per_class = 10;
};

struct PretrainResult {
    Mlp audio;
    Mlp image;
    double val_loss = 0;
    double val_r1 = 0; // class-level audio→image retrieval on the held-out pairs
    std::vector<EpochRecord> curve;
};

inline constexpr double kPretrainRetrievalGate = 0.95;

/// Trains f_A and f_V jointly with the symmetric distance-softmax objective
/// on positive (audio, image) pairs, then freezes both. Each batch holds one
/// pair per class so that no negative shares the anchor's class. Throws ConfigError
/// for fewer than two classes or a class with too few pairs.
PretrainResult pretrain_reference_encoders(const std::vector<SingleClassPair>& train_pairs,
                                           const std::vector<SingleClassPair>& val_pairs, const PretrainConfig& cfg,
                                           std::size_t signal_length, const RenderParams& render);

/// Fraction of queries whose most similar (cosine) candidate has the same class.
double class_retrieval_r1(const Tensor& queries, const std::vector<ClassId>& query_classes,
                          const Tensor& candidates, const std::vector<ClassId>& candidate_classes);

} // namespace mixscape
