#include "mixscape/alignment.hpp"

#include "mixscape/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mixscape {

const char* mode_name(AlignmentMode m)
{
    switch (m) {
    case AlignmentMode::A2A: return "A2A";
    case AlignmentMode::A2V: return "A2V";
    case AlignmentMode::A2APlusA2V: return "A2A+A2V";
    }
    return "?";
}

AlignmentMode parse_mode(const std::string& s)
{
    if (s == "A2A" || s == "a2a")
        return AlignmentMode::A2A;
    if (s == "A2V" || s == "a2v")
        return AlignmentMode::A2V;
    if (s == "A2A+A2V" || s == "a2a+a2v" || s == "A2A_plus_A2V" || s == "both")
        return AlignmentMode::A2APlusA2V;
    throw ConfigError("unknown alignment mode '" + s + "' (expected A2A, A2V or A2A+A2V)");
}

namespace {

void require_unit_rows(const Tensor& m, const char* what)
{
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double n = l2_norm(m.row(i));
        if (std::abs(n - 1.0) > kUnitNormTolerance)
            throw ContractError(std::string(what) + " row " + std::to_string(i) + " has norm " + std::to_string(n) +
                                "; InfoNCE inputs must be unit-normalised");
    }
}

void require_ground_truth(const GroundTruthPair& gt, std::size_t batch, std::size_t half)
{
    for (const Tensor* t : {&gt.first, &gt.second}) {
        if (t->rank() != 2 || t->rows() != batch || t->cols() != half)
            throw DataError("ground truth of shape " + shape_string(t->shape()) + " does not cover a batch of " +
                            std::to_string(batch) + " with half width " + std::to_string(half));
        require_unit_rows(*t, "ground-truth embedding");
    }
}

NodeId aligned_halves_loss(Graph& g, NodeId separator_out, const GroundTruthPair& gt, const AlignmentConfig& cfg)
{
    const Tensor& out = g.value(separator_out);
    if (out.rank() != 2 || out.cols() % 2 != 0)
        throw ConfigError("separator output must be [B x 2d], got " + shape_string(out.shape()));
    const std::size_t batch = out.rows(), half = out.cols() / 2;
    if (batch < 2)
        throw ContractError("alignment losses need a batch of at least 2 for in-batch negatives");
    require_ground_truth(gt, batch, half);

    const NodeId h1 = g.normalize_rows(g.slice_cols(separator_out, 0, half));
    const NodeId h2 = g.normalize_rows(g.slice_cols(separator_out, half, 2 * half));
    const NodeId t1 = g.constant(gt.first);
    const NodeId t2 = g.constant(gt.second);

    if (cfg.cross_half_negatives)
        return symmetric_infonce(g, g.concat_rows(h1, h2), g.concat_rows(t1, t2));

    // Each stream holds B positives; averaging the two streams gives 1/(2·2B).
    const NodeId s1 = symmetric_infonce(g, h1, t1);
    const NodeId s2 = symmetric_infonce(g, h2, t2);
    return g.scale(g.add(s1, s2), 0.5);
}

Tensor stack_batch(const std::vector<SplitEmbedding>& batch)
{
    if (batch.empty())
        throw ContractError("empty batch");
    const std::size_t w = batch.front().full().size();
    std::vector<double> data;
    for (const auto& s : batch) {
        if (s.full().size() != w)
            throw ShapeError("split embeddings of different widths in one batch");
        data.insert(data.end(), s.full().values().begin(), s.full().values().end());
    }
    return Tensor({batch.size(), w}, std::move(data));
}

} // namespace

double infonce(std::size_t j, const Tensor& anchors, const Tensor& candidates)
{
    if (anchors.rank() != 2 || candidates.rank() != 2 || anchors.shape() != candidates.shape())
        throw ShapeError("infonce expects equal [N x d] anchor and candidate sets, got " +
                         shape_string(anchors.shape()) + " and " + shape_string(candidates.shape()));
    if (j >= anchors.rows())
        throw ContractError("infonce anchor index out of range");
    require_unit_rows(anchors, "anchor");
    require_unit_rows(candidates, "candidate");
    const std::size_t n = candidates.rows();
    std::vector<double> logits(n);
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t c = 0; c < anchors.cols(); ++c) {
            const double d = anchors(j, c) - candidates(k, c);
            s += d * d;
        }
        logits[k] = -std::sqrt(s);
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits)
        z += std::exp(l - m);
    return -(logits[j] - m - std::log(z));
}

NodeId symmetric_infonce(Graph& g, NodeId a, NodeId b)
{
    const std::size_t n = g.value(a).rows();
    const NodeId dist = g.pairwise_dist(a, b);
    const NodeId forward = g.sum(g.infonce_rows(dist));
    const NodeId reverse = g.sum(g.infonce_rows(g.transpose(dist)));
    return g.scale(g.add(forward, reverse), 1.0 / (2.0 * static_cast<double>(n)));
}

NodeId a2a_loss(Graph& g, NodeId separator_out, const GroundTruthPair& audio_gt, const AlignmentConfig& cfg)
{
    return aligned_halves_loss(g, separator_out, audio_gt, cfg);
}

NodeId a2v_loss(Graph& g, NodeId separator_out, const GroundTruthPair& image_gt, const AlignmentConfig& cfg)
{
    return aligned_halves_loss(g, separator_out, image_gt, cfg);
}

NodeId total_loss(Graph& g, NodeId separator_out, const std::optional<GroundTruthPair>& audio_gt,
                  const std::optional<GroundTruthPair>& image_gt, const AlignmentConfig& cfg)
{
    const bool need_audio = cfg.mode != AlignmentMode::A2V;
    const bool need_image = cfg.mode != AlignmentMode::A2A;
    if (need_audio && !audio_gt)
        throw DataError(std::string(mode_name(cfg.mode)) + " alignment requires audio ground-truth embeddings");
    if (need_image && !image_gt)
        throw DataError(std::string(mode_name(cfg.mode)) + " alignment requires image ground-truth embeddings");
    switch (cfg.mode) {
    case AlignmentMode::A2A: return a2a_loss(g, separator_out, *audio_gt, cfg);
    case AlignmentMode::A2V: return a2v_loss(g, separator_out, *image_gt, cfg);
    case AlignmentMode::A2APlusA2V:
        return g.add(a2a_loss(g, separator_out, *audio_gt, cfg),
                     g.scale(a2v_loss(g, separator_out, *image_gt, cfg), cfg.weight));
    }
    throw ConfigError("unknown alignment mode");
}

GroundTruthPair stack_ground_truth(const std::vector<std::pair<Tensor, Tensor>>& per_tuple, std::size_t batch)
{
    if (per_tuple.size() != batch)
        throw DataError("ground truth provided for " + std::to_string(per_tuple.size()) + " of " +
                        std::to_string(batch) + " tuples");
    const std::size_t d = per_tuple.front().first.size();
    std::vector<double> a, b;
    for (const auto& [x, y] : per_tuple) {
        if (x.size() != d || y.size() != d)
            throw DataError("ground-truth embeddings of mixed widths");
        a.insert(a.end(), x.values().begin(), x.values().end());
        b.insert(b.end(), y.values().begin(), y.values().end());
    }
    return {Tensor({batch, d}, std::move(a)), Tensor({batch, d}, std::move(b))};
}

double a2a_loss(const std::vector<SplitEmbedding>& batch, const std::vector<std::pair<Tensor, Tensor>>& audio_gt,
                const AlignmentConfig& cfg)
{
    Graph g;
    const NodeId out = g.constant(stack_batch(batch));
    return g.value(a2a_loss(g, out, stack_ground_truth(audio_gt, batch.size()), cfg))[0];
}

double a2v_loss(const std::vector<SplitEmbedding>& batch, const std::vector<std::pair<Tensor, Tensor>>& image_gt,
                const AlignmentConfig& cfg)
{
    Graph g;
    const NodeId out = g.constant(stack_batch(batch));
    return g.value(a2v_loss(g, out, stack_ground_truth(image_gt, batch.size()), cfg))[0];
}

double total_loss(const std::vector<SplitEmbedding>& batch,
                  const std::optional<std::vector<std::pair<Tensor, Tensor>>>& audio_gt,
                  const std::optional<std::vector<std::pair<Tensor, Tensor>>>& image_gt, const AlignmentConfig& cfg)
{
    Graph g;
    const NodeId out = g.constant(stack_batch(batch));
    std::optional<GroundTruthPair> a, v;
    if (audio_gt)
        a = stack_ground_truth(*audio_gt, batch.size());
    if (image_gt)
        v = stack_ground_truth(*image_gt, batch.size());
    return g.value(total_loss(g, out, a, v, cfg))[0];
}

} // namespace mixscape
