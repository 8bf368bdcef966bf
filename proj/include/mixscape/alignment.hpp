#pragma once

#include "mixscape/encoders.hpp"
#include "mixscape/graph.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mixscape {

enum class AlignmentMode { A2A, A2V, A2APlusA2V };

const char* mode_name(AlignmentMode m); // "A2A", "A2V", "A2A+A2V"
AlignmentMode parse_mode(const std::string& s);

struct AlignmentConfig {
    AlignmentMode mode = AlignmentMode::A2A;
    double weight = 1.0; // A2V weight in the combined mode
    // When set, half-1 and half-2 positives share one candidate pool.
    bool cross_half_negatives = false;
};

/// Unit-normalised ground-truth embeddings for both sources of a batch.
struct GroundTruthPair {
    Tensor first;  // [B × d], source 1 (foreground)
    Tensor second; // [B × d], source 2 (background)
};

inline constexpr double kUnitNormTolerance = 1e-6;

/// -log( exp(-|a_j - b_j|) / Σ_k exp(-|a_j - b_k|) ) for unit-norm rows.
/// Throws ContractError for rows off the unit sphere or an out-of-range j.
double infonce(std::size_t j, const Tensor& anchors, const Tensor& candidates);

/// Symmetric batch objective (1 / 2N) Σ_j [InfoNCE(a_j, {b}) + InfoNCE(b_j, {a})]
/// between row-aligned, already normalised embeddings.
NodeId symmetric_infonce(Graph& g, NodeId a, NodeId b);

/// Audio-to-audio alignment of separator output [B × 2d] against audio ground
/// truths. Halves are normalised on the graph; each (tuple, half) pair is one
/// positive, so the normaliser is 1 / (2 · 2B).
NodeId a2a_loss(Graph& g, NodeId separator_out, const GroundTruthPair& audio_gt, const AlignmentConfig& cfg = {});
/// Audio-to-visual alignment; identical structure against image ground truths.
NodeId a2v_loss(Graph& g, NodeId separator_out, const GroundTruthPair& image_gt, const AlignmentConfig& cfg = {});

/// Mode dispatch: A2A, A2V, or A2A + w · A2V. Throws DataError when the
/// ground truths required by the mode are missing.
NodeId total_loss(Graph& g, NodeId separator_out, const std::optional<GroundTruthPair>& audio_gt,
                  const std::optional<GroundTruthPair>& image_gt, const AlignmentConfig& cfg);

// Value-level conveniences over lists of split embeddings.
double a2a_loss(const std::vector<SplitEmbedding>& batch, const std::vector<std::pair<Tensor, Tensor>>& audio_gt,
                const AlignmentConfig& cfg = {});
double a2v_loss(const std::vector<SplitEmbedding>& batch, const std::vector<std::pair<Tensor, Tensor>>& image_gt,
                const AlignmentConfig& cfg = {});
double total_loss(const std::vector<SplitEmbedding>& batch,
                  const std::optional<std::vector<std::pair<Tensor, Tensor>>>& audio_gt,
                  const std::optional<std::vector<std::pair<Tensor, Tensor>>>& image_gt, const AlignmentConfig& cfg);

/// Stacks per-tuple (first, second) vectors into a GroundTruthPair.
GroundTruthPair stack_ground_truth(const std::vector<std::pair<Tensor, Tensor>>& per_tuple, std::size_t batch);

} // namespace mixscape
