#include "mixscape/errors.hpp"
#include "mixscape/rng.hpp"
#include "mixscape/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

namespace mixscape {

namespace {

// Per-class pair lists in ascending class order.
std::vector<std::vector<const SingleClassPair*>> group_by_class(const std::vector<SingleClassPair>& pairs)
{
    std::map<ClassId, std::vector<const SingleClassPair*>> groups;
    for (const auto& p : pairs) {
        if (!p.audio || !p.image)
            throw DataError("single-class pair without audio or image");
        groups[p.class_id].push_back(&p);
    }
    std::vector<std::vector<const SingleClassPair*>> out;
    for (auto& [id, g] : groups)
        out.push_back(std::move(g));
    return out;
}

std::size_t min_group(const std::vector<std::vector<const SingleClassPair*>>& groups)
{
    std::size_t n = groups.front().size();
    for (const auto& g : groups)
        n = std::min(n, g.size());
    return n;
}

double batch_objective(Graph& g, const Mlp& fa, const Mlp::Binding& ba, const Mlp& fv, const Mlp::Binding& bv,
                       const std::vector<const SingleClassPair*>& batch, NodeId* loss_out)
{
    std::vector<const Signal*> audio;
    std::vector<const GlyphImage*> images;
    for (const auto* p : batch) {
        audio.push_back(p->audio);
        images.push_back(p->image);
    }
    const NodeId za = g.normalize_rows(fa.forward(g, ba, g.constant(signal_batch(audio))));
    const NodeId zv = g.normalize_rows(fv.forward(g, bv, g.constant(image_batch(images))));
    const NodeId loss = symmetric_infonce(g, za, zv);
    if (loss_out)
        *loss_out = loss;
    return g.value(loss)[0];
}

// Batch i takes the i-th pair of every class.
std::vector<const SingleClassPair*> class_batch(const std::vector<std::vector<const SingleClassPair*>>& groups,
                                                std::size_t i)
{
    std::vector<const SingleClassPair*> batch;
    for (const auto& g : groups)
        batch.push_back(g[i]);
    return batch;
}

double held_out_loss(const Mlp& fa, const Mlp& fv, const std::vector<std::vector<const SingleClassPair*>>& groups)
{
    const std::size_t n = min_group(groups);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Graph g;
        const auto ba = fa.bind(g, false);
        const auto bv = fv.bind(g, false);
        total += batch_objective(g, fa, ba, fv, bv, class_batch(groups, i), nullptr);
    }
    return total / static_cast<double>(n);
}

} // namespace

std::vector<SingleClassPair> single_class_pairs(const std::vector<TrainingTuple>& tuples,
                                                std::span<const std::size_t> indices, std::size_t cap_per_class)
{
    std::map<ClassId, std::size_t> counts;
    std::vector<SingleClassPair> out;
    auto add = [&](const Signal& a, const GlyphImage& v, ClassId c) {
        if (counts[c] >= cap_per_class)
            return;
        ++counts[c];
        out.push_back({&a, &v, c});
    };
    for (std::size_t i : indices) {
        const TrainingTuple& t = tuples.at(i);
        add(t.a1, t.v1, t.fg_class);
        add(t.a2, t.v2, t.bg_class);
    }
    return out;
}

double class_retrieval_r1(const Tensor& queries, const std::vector<ClassId>& query_classes,
                          const Tensor& candidates, const std::vector<ClassId>& candidate_classes)
{
    if (queries.rows() != query_classes.size() || candidates.rows() != candidate_classes.size())
        throw ContractError("class_retrieval_r1: label count differs from row count");
    if (queries.rows() == 0 || candidates.rows() == 0)
        throw EvaluationError("class_retrieval_r1: empty query or candidate set");
    std::size_t hits = 0;
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        std::size_t best = 0;
        double best_sim = cosine_similarity(queries.row(q), candidates.row(0));
        for (std::size_t c = 1; c < candidates.rows(); ++c) {
            const double s = cosine_similarity(queries.row(q), candidates.row(c));
            if (s > best_sim) {
                best_sim = s;
                best = c;
            }
        }
        hits += candidate_classes[best] == query_classes[q];
    }
    return static_cast<double>(hits) / static_cast<double>(queries.rows());
}

PretrainResult pretrain_reference_encoders(const std::vector<SingleClassPair>& train_pairs,
                                           const std::vector<SingleClassPair>& val_pairs, const PretrainConfig& cfg,
                                           std::size_t signal_length, const RenderParams& render)
{
    if (cfg.epochs < 1 || !(cfg.learning_rate > 0) || !(cfg.weight_decay >= 0))
        throw ConfigError("pretraining needs epochs >= 1, learning_rate > 0 and weight_decay >= 0");
    if (train_pairs.empty() || val_pairs.empty())
        throw ConfigError("pretraining needs non-empty train and held-out pairs");
    auto train_groups = group_by_class(train_pairs);
    const auto val_groups = group_by_class(val_pairs);
    if (train_groups.size() < 2)
        throw ConfigError("pretraining needs at least 2 classes");
    for (const auto& g : train_groups)
        if (g.size() < cfg.min_pairs_per_class)
            throw ConfigError("class " + std::to_string(g.front()->class_id) + " has " + std::to_string(g.size()) +
                              " pairs; at least " + std::to_string(cfg.min_pairs_per_class) + " required");
    if (val_groups.size() < 2)
        throw ConfigError("held-out pairs cover fewer than 2 classes");

    Mlp fa = Mlp::init(cfg.arch.audio_widths(signal_length), derive_seed(cfg.seed, 101));
    Mlp fv = Mlp::init(cfg.arch.image_widths(render), derive_seed(cfg.seed, 102));

    std::vector<Tensor*> params = fa.parameters();
    for (Tensor* p : fv.parameters())
        params.push_back(p);
    OptimState state = make_optim_state(params);

    PretrainResult result;
    result.audio = fa;
    result.image = fv;
    double best_val = 0;
    const std::size_t steps = min_group(train_groups);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        Rng rng(derive_seed(cfg.seed, 1000 + epoch));
        for (auto& g : train_groups)
            rng.shuffle(g);

        double total = 0;
        for (std::size_t i = 0; i < steps; ++i) {
            Graph g;
            const auto ba = fa.bind(g, true);
            const auto bv = fv.bind(g, true);
            NodeId loss{};
            const double value = batch_objective(g, fa, ba, fv, bv, class_batch(train_groups, i), &loss);
            if (!std::isfinite(value))
                throw TrainingDivergedError("non-finite pretraining loss at epoch " + std::to_string(epoch),
                                            "epoch " + std::to_string(epoch) + ", batch " + std::to_string(i + 1));
            g.backward(loss);
            std::vector<Tensor> grads;
            for (NodeId p : ba.params)
                grads.push_back(g.grad(p));
            for (NodeId p : bv.params)
                grads.push_back(g.grad(p));
            adam_step(params, grads, state, cfg.learning_rate, cfg.weight_decay);
            total += value;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = total / static_cast<double>(steps);
        rec.val_loss = held_out_loss(fa, fv, val_groups);
        rec.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        result.curve.push_back(rec);
        if (epoch == 1 || rec.val_loss < best_val) {
            best_val = rec.val_loss;
            result.audio = fa;
            result.image = fv;
        }
    }

    result.audio.freeze();
    result.image.freeze();
    result.val_loss = best_val;

    std::vector<const Signal*> audio;
    std::vector<const GlyphImage*> images;
    std::vector<ClassId> classes;
    for (const auto& p : val_pairs) {
        audio.push_back(p.audio);
        images.push_back(p.image);
        classes.push_back(p.class_id);
    }
    result.val_r1 = class_retrieval_r1(result.audio.forward(signal_batch(audio)), classes,
                                       result.image.forward(image_batch(images)), classes);
    return result;
}

} // namespace mixscape
