#include "mixscape/errors.hpp"
#include "mixscape/rng.hpp"
#include "mixscape/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

namespace mixscape {

namespace {

Tensor gather_rows(const Tensor& m, std::span<const std::size_t> rows)
{
    Tensor out({rows.size(), m.cols()});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = m.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

std::optional<GroundTruthPair> gather_gt(const std::optional<GroundTruthPair>& gt, std::span<const std::size_t> rows)
{
    if (!gt)
        return std::nullopt;
    return GroundTruthPair{gather_rows(gt->first, rows), gather_rows(gt->second, rows)};
}

// Loss of the separator on one batch; the graph is left ready for backward().
NodeId batch_loss(Graph& g, const Mlp& net, const Mlp::Binding& binding, const AlignmentTargets& data,
                  std::span<const std::size_t> rows, const AlignmentConfig& cfg)
{
    const NodeId x = g.constant(gather_rows(data.mixes, rows));
    const NodeId out = net.forward(g, binding, x);
    return total_loss(g, out, gather_gt(data.audio, rows), gather_gt(data.image, rows), cfg);
}

constexpr std::uint64_t kEvaluationOrderSeed = 0x5eed'0f'e7a1ULL;

std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        const std::size_t end = std::min(n, begin + batch_size);
        if (end - begin >= 2)
            out.emplace_back(begin, end);
    }
    return out;
}

// evaluate_loss with an unnormalisable output reported as NaN.
double checked_loss(const Mlp& net, const AlignmentTargets& data, const TrainConfig& cfg)
{
    try {
        return evaluate_loss(net, data, cfg.batch_size, cfg.alignment);
    } catch (const DegenerateVectorError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

} // namespace

void TrainConfig::validate() const
{
    if (batch_size < 2)
        throw ConfigError("batch_size must be at least 2");
    if (epochs < 1)
        throw ConfigError("epochs must be at least 1");
    if (!(learning_rate > 0))
        throw ConfigError("learning_rate must be positive");
    if (!(weight_decay >= 0))
        throw ConfigError("weight_decay must be non-negative");
}

AlignmentTargets prepare_targets(const std::vector<TrainingTuple>& tuples, std::span<const std::size_t> indices,
                                 const Mlp& audio_encoder, const Mlp& image_encoder, bool with_audio,
                                 bool with_image)
{
    if (!audio_encoder.frozen() || !image_encoder.frozen())
        throw ContractError("reference encoders must be frozen before producing targets");
    if (indices.empty())
        throw DataError("no tuples selected");

    std::vector<const Signal*> mixes, a1, a2;
    std::vector<const GlyphImage*> v1, v2;
    for (std::size_t i : indices) {
        if (i >= tuples.size())
            throw DataError("tuple index " + std::to_string(i) + " out of range");
        const TrainingTuple& t = tuples[i];
        mixes.push_back(&t.a_mix);
        a1.push_back(&t.a1);
        a2.push_back(&t.a2);
        v1.push_back(&t.v1);
        v2.push_back(&t.v2);
    }

    AlignmentTargets out;
    out.mixes = signal_batch(mixes);
    if (with_audio)
        out.audio = GroundTruthPair{l2_normalize_rows(audio_encoder.forward(signal_batch(a1))),
                                    l2_normalize_rows(audio_encoder.forward(signal_batch(a2)))};
    if (with_image)
        out.image = GroundTruthPair{l2_normalize_rows(image_encoder.forward(image_batch(v1))),
                                    l2_normalize_rows(image_encoder.forward(image_batch(v2)))};
    return out;
}

std::size_t select_best_epoch(std::span<const double> val_losses)
{
    if (val_losses.empty())
        throw ContractError("select_best_epoch: empty curve");
    std::size_t best = 0;
    for (std::size_t i = 1; i < val_losses.size(); ++i)
        if (val_losses[i] < val_losses[best])
            best = i;
    return best + 1;
}

double evaluate_loss(const Mlp& separator, const AlignmentTargets& targets, std::size_t batch_size,
                     const AlignmentConfig& cfg)
{
    // Tuple ids run combination-major, so index order would fill a batch with
    // one combination. A fixed permutation keeps the value reproducible.
    std::vector<std::size_t> order(targets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng(kEvaluationOrderSeed).shuffle(order);
    const auto ranges = batch_ranges(order.size(), batch_size);
    if (ranges.empty())
        throw DataError("evaluation set has fewer than 2 tuples");
    double total = 0;
    for (const auto& [begin, end] : ranges) {
        Graph g;
        const auto binding = separator.bind(g, false);
        const NodeId loss =
            batch_loss(g, separator, binding, targets, std::span(order).subspan(begin, end - begin), cfg);
        total += g.value(loss)[0];
    }
    return total / static_cast<double>(ranges.size());
}

TrainResult train(Mlp separator, const AlignmentTargets& train_set, const AlignmentTargets& val_set,
                  const TrainConfig& cfg)
{
    cfg.validate();
    if (train_set.size() < 2 || val_set.size() < 2)
        throw DataError("train and validation sets need at least 2 tuples each");

    std::ofstream log;
    if (cfg.output_dir) {
        std::filesystem::create_directories(*cfg.output_dir);
        log.open(*cfg.output_dir / "training_log.csv", std::ios::binary | std::ios::trunc);
        if (!log)
            throw Error("cannot write training_log.csv in " + cfg.output_dir->string());
        log << "epoch,train_loss,val_loss,wall_ms\n";
    }

    TrainResult result;
    result.initial_train_loss = checked_loss(separator, train_set, cfg);
    if (!std::isfinite(result.initial_train_loss))
        throw TrainingDivergedError("non-finite loss before the first update", "epoch 0, initial evaluation");
    result.best = separator;
    double best_val = 0;

    const auto params = separator.parameters();
    OptimState state = make_optim_state(params);
    std::vector<double> trace;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(cfg.seed, epoch));
        rng.shuffle(order);

        const auto ranges = batch_ranges(order.size(), cfg.batch_size);
        double epoch_total = 0;
        for (std::size_t b = 0; b < ranges.size(); ++b) {
            const auto [begin, end] = ranges[b];
            Graph g;
            const auto binding = separator.bind(g, true);
            NodeId loss;
            double value = std::numeric_limits<double>::quiet_NaN();
            try {
                loss = batch_loss(g, separator, binding, train_set, std::span(order).subspan(begin, end - begin),
                                  cfg.alignment);
                value = g.value(loss)[0];
            } catch (const DegenerateVectorError&) {
                // Overflowing outputs cannot be normalised; same failure as a NaN loss.
            }
            trace.push_back(value);
            if (!std::isfinite(value)) {
                std::ostringstream diag;
                diag << "epoch " << epoch << ", batch " << b + 1 << ", recent losses:";
                const std::size_t from = trace.size() > 10 ? trace.size() - 10 : 0;
                for (std::size_t i = from; i < trace.size(); ++i)
                    diag << ' ' << trace[i];
                throw TrainingDivergedError("non-finite training loss (" + diag.str() + ")", diag.str());
            }
            g.backward(loss);
            std::vector<Tensor> grads;
            grads.reserve(binding.params.size());
            for (NodeId p : binding.params)
                grads.push_back(g.grad(p));
            adam_step(params, grads, state, cfg.learning_rate, cfg.weight_decay);
            ++result.optimizer_steps;
            epoch_total += value;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_total / static_cast<double>(ranges.size());
        rec.val_loss = checked_loss(separator, val_set, cfg);
        if (!std::isfinite(rec.val_loss))
            throw TrainingDivergedError("non-finite validation loss at epoch " + std::to_string(epoch),
                                        "epoch " + std::to_string(epoch) + ", validation");
        rec.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        result.curve.push_back(rec);

        if (epoch == 1 || rec.val_loss < best_val) {
            best_val = rec.val_loss;
            result.best = separator;
            result.best_epoch = epoch;
        }
        if (cfg.output_dir) {
            if (cfg.keep_epoch_checkpoints)
                save_checkpoint(*cfg.output_dir / ("epoch_" + std::to_string(epoch) + ".ckpt"), separator,
                                cfg.checkpoint_tag);
            log << epoch << ',' << format_double(rec.train_loss) << ',' << format_double(rec.val_loss) << ','
                << format_double(std::round(rec.wall_ms * 1000.0) / 1000.0) << '\n';
            log.flush();
        }
    }

    const std::size_t k = result.best_epoch;
    if (k >= 2 && result.curve[k - 1].train_loss > result.curve[k - 2].train_loss)
        std::clog << "warning: selected epoch " << k << " has a higher training loss than epoch " << k - 1 << '\n';

    if (cfg.output_dir)
        save_checkpoint(*cfg.output_dir / "best.ckpt", result.best, cfg.checkpoint_tag);
    return result;
}

} // namespace mixscape
