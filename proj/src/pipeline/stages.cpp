#include "mixscape/errors.hpp"
#include "mixscape/image_io.hpp"
#include "mixscape/pipeline.hpp"
#include "mixscape/rng.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mixscape {

namespace fs = std::filesystem;

namespace {

// Streams of derive_seed(run seed, ·). The separator initialisation and the
// batch order are shared by all alignment modes of a seed.
constexpr std::uint64_t kSeparatorInitStream = 300;
constexpr std::uint64_t kShuffleStream = 200;
constexpr std::uint64_t kGenerationNoiseSeed = 0x6e6f697365ULL;

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require_file(const fs::path& p)
{
    if (!fs::exists(p))
        throw DataError("missing artifact: " + p.string());
}

void require_tag(const std::string& tag, const std::string& expected, const fs::path& p)
{
    if (tag != expected)
        throw ConfigError(p.string() + " was produced under config hash " + (tag.empty() ? "<none>" : tag) +
                          "; the current config hashes to " + expected);
}

std::ofstream open_text(const fs::path& p)
{
    fs::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os)
        throw Error("cannot write " + p.string());
    return os;
}

void write_curve(const fs::path& p, const std::vector<EpochRecord>& curve)
{
    auto os = open_text(p);
    os << "epoch,train_loss,val_loss,wall_ms\n";
    for (const auto& r : curve)
        os << r.epoch << ',' << num(r.train_loss) << ',' << num(r.val_loss) << ',' << num(r.wall_ms) << '\n';
}

bool needs_audio(AlignmentMode m) { return m != AlignmentMode::A2V; }
bool needs_image(AlignmentMode m) { return m != AlignmentMode::A2A; }

std::uint64_t noise_seed_for(const TrainingTuple& t) { return derive_seed(kGenerationNoiseSeed, t.id); }

} // namespace

void make_data(const RunConfig& cfg, const RunLayout& layout)
{
    cfg.validate();
    const Roster roster = cfg.make_roster();
    const DatasetParams params{cfg.noise_level, cfg.gain_fg, cfg.gain_bg};
    const auto tuples = build_dataset(roster, cfg.combinations(), cfg.per_combo, cfg.data_seed, params);
    const auto test_only =
        cfg.unrealistic_test_only ? paper_unrealistic_combinations() : std::vector<Combination>{};
    const auto splits = split_dataset(tuples, cfg.split, cfg.data_seed, test_only);
    fs::create_directories(layout.root);
    save_dataset(layout.data_dir(), tuples, splits, cfg.hash());
    auto os = open_text(layout.config_file());
    os << "# config_hash=" << cfg.hash() << '\n' << cfg.canonical();
}

StoredDataset load_run_dataset(const RunConfig& cfg, const RunLayout& layout)
{
    require_file(layout.data_dir() / "manifest.csv");
    StoredDataset data = load_dataset(layout.data_dir(), cfg.make_roster());
    require_tag(data.config_hash, cfg.hash(), layout.data_dir() / "manifest.csv");
    return data;
}

PretrainSummary pretrain_stage(const RunConfig& cfg, const RunLayout& layout, const StoredDataset& data,
                               std::uint64_t seed)
{
    const Roster roster = cfg.make_roster();
    const auto train_pairs = single_class_pairs(data.tuples, data.splits.train, cfg.pretrain_pairs_per_class);
    const auto val_pairs = single_class_pairs(data.tuples, data.splits.val, cfg.pretrain_pairs_per_class);

    PretrainConfig pc;
    pc.arch = cfg.architecture();
    pc.epochs = cfg.pretrain_epochs;
    pc.learning_rate = cfg.pretrain_learning_rate;
    pc.weight_decay = cfg.weight_decay;
    pc.seed = seed;
    const PretrainResult r =
        pretrain_reference_encoders(train_pairs, val_pairs, pc, roster.signal_length(), roster.render());

    const fs::path dir = layout.encoder_dir(seed);
    fs::create_directories(dir);
    write_curve(dir / "pretrain_log.csv", r.curve);
    {
        auto os = open_text(dir / "pretrain.txt");
        os << "val_loss=" << num(r.val_loss) << "\nval_r1=" << num(r.val_r1) << "\nconfig_hash=" << cfg.hash()
           << '\n';
    }
    if (r.val_r1 < kPretrainRetrievalGate)
        throw NumericError("seed " + std::to_string(seed) + ": held-out audio-to-image R@1 " +
                           std::to_string(r.val_r1) + " is below the gate " +
                           std::to_string(kPretrainRetrievalGate) + " (more pretrain_epochs may help)");

    std::vector<std::pair<ClassId, const GlyphImage*>> images;
    for (const auto& p : single_class_pairs(data.tuples, data.splits.train, cfg.prototype_images_per_class))
        images.emplace_back(p.class_id, p.image);
    const PrototypeTable table = build_prototypes(r.image, images, roster);

    save_checkpoint(dir / "audio.ckpt", r.audio, cfg.hash());
    save_checkpoint(dir / "image.ckpt", r.image, cfg.hash());
    save_prototypes(dir / "prototypes.bin", table, cfg.hash());
    return {seed, r.val_loss, r.val_r1};
}

SeedArtifacts load_seed_artifacts(const RunConfig& cfg, const RunLayout& layout, std::uint64_t seed)
{
    const Roster roster = cfg.make_roster();
    const auto arch = cfg.architecture();
    const fs::path dir = layout.encoder_dir(seed);
    const fs::path audio = dir / "audio.ckpt", image = dir / "image.ckpt", protos = dir / "prototypes.bin";
    for (const auto& p : {audio, image, protos})
        require_file(p);
    std::string tag;
    Mlp fa = load_checkpoint_expecting(audio, arch.audio_widths(roster.signal_length()), &tag);
    require_tag(tag, cfg.hash(), audio);
    Mlp fv = load_checkpoint_expecting(image, arch.image_widths(roster.render()), &tag);
    require_tag(tag, cfg.hash(), image);
    if (!fa.frozen() || !fv.frozen())
        throw DataError("reference encoders in " + dir.string() + " are not frozen");
    PrototypeTable table = load_prototypes(protos, roster, &tag);
    require_tag(tag, cfg.hash(), protos);
    return {std::move(fa), std::move(fv), std::move(table)};
}

TrainResult train_stage(const RunConfig& cfg, const RunLayout& layout, const StoredDataset& data,
                        std::uint64_t seed, AlignmentMode mode)
{
    const Roster roster = cfg.make_roster();
    const SeedArtifacts enc = load_seed_artifacts(cfg, layout, seed);
    const auto train_set = prepare_targets(data.tuples, data.splits.train, enc.audio, enc.image, needs_audio(mode),
                                           needs_image(mode));
    const auto val_set = prepare_targets(data.tuples, data.splits.val, enc.audio, enc.image, needs_audio(mode),
                                         needs_image(mode));

    TrainConfig tc;
    tc.batch_size = cfg.batch_size;
    tc.epochs = cfg.epochs;
    tc.learning_rate = cfg.learning_rate;
    tc.weight_decay = cfg.weight_decay;
    tc.seed = derive_seed(seed, kShuffleStream);
    tc.alignment = cfg.alignment(mode);
    tc.output_dir = layout.run_dir(seed, mode);
    tc.keep_epoch_checkpoints = cfg.keep_epoch_checkpoints;
    tc.checkpoint_tag = cfg.hash();

    Mlp separator = Mlp::init(cfg.architecture().separator_widths(roster.signal_length()),
                              derive_seed(seed, kSeparatorInitStream));
    try {
        return train(std::move(separator), train_set, val_set, tc);
    } catch (const TrainingDivergedError& e) {
        auto os = open_text(*tc.output_dir / "divergence.txt");
        os << "error=" << e.what() << "\ndiagnostics=" << e.diagnostics() << "\nconfig_hash=" << cfg.hash() << '\n';
        throw;
    }
}

Mlp load_separator(const RunConfig& cfg, const RunLayout& layout, std::uint64_t seed, AlignmentMode mode)
{
    const fs::path p = layout.run_dir(seed, mode) / "best.ckpt";
    require_file(p);
    std::string tag;
    Mlp net = load_checkpoint_expecting(
        p, cfg.architecture().separator_widths(cfg.make_roster().signal_length()), &tag);
    require_tag(tag, cfg.hash(), p);
    return net;
}

std::vector<SeedResult> evaluate_seed(const RunConfig& cfg, const RunLayout& layout, const StoredDataset& data,
                                      std::uint64_t seed)
{
    const Roster roster = cfg.make_roster();
    const SeedArtifacts enc = load_seed_artifacts(cfg, layout, seed);
    const std::vector<ClassId> candidates = roster.ids();
    const auto& test = data.splits.test;
    if (test.empty())
        throw EvaluationError("the test split is empty");
    const double n = static_cast<double>(test.size());

    struct MixedScore {
        std::vector<DetectionResult> detected;
        std::vector<std::set<ClassId>> required;
        std::size_t r2 = 0;
    };
    auto score_mixed = [&](MixedScore& s, const TrainingTuple& t, const Generated& g) {
        s.detected.push_back(detect(g.image, roster));
        s.required.push_back({t.fg_class, t.bg_class});
        const Tensor z = encode_image(enc.image, g.image);
        s.r2 += r_at_k(z.data(), enc.prototypes, candidates, 2, {t.fg_class, t.bg_class}, RecallVariant::Star);
    };

    std::vector<SeedResult> out;
    {
        MixedScore s;
        for (std::size_t i : test) {
            const TrainingTuple& t = data.tuples[i];
            GenerationConfig gc = cfg.generation();
            gc.noise_seed = noise_seed_for(t);
            const Tensor z = encode_audio(enc.audio, t.a_mix);
            score_mixed(s, t, generate_from_embedding(z.data(), enc.prototypes, gc));
        }
        out.push_back({"baseline", "none", kMixedCrs, seed, crs(s.detected, s.required)});
        out.push_back({"baseline", "none", kMixedR2Star, seed, static_cast<double>(s.r2) / n});
    }

    for (AlignmentMode mode : cfg.modes) {
        const Mlp sep = load_separator(cfg, layout, seed, mode);
        MixedScore s;
        std::vector<DetectionResult> fg_det, bg_det;
        std::vector<std::set<ClassId>> fg_req, bg_req;
        std::size_t fg_r1 = 0, bg_r1 = 0;
        for (std::size_t i : test) {
            const TrainingTuple& t = data.tuples[i];
            GenerationConfig gc = cfg.generation();
            gc.noise_seed = noise_seed_for(t);
            const SplitEmbedding split = separate(sep, t.a_mix, cfg.embed_dim);
            score_mixed(s, t, generate_mixed(split, enc.prototypes, gc));

            const auto [g1, g2] = generate_separated(split, enc.prototypes, gc);
            fg_det.push_back(detect(g1.image, roster));
            fg_req.push_back({t.fg_class});
            bg_det.push_back(detect(g2.image, roster));
            bg_req.push_back({t.bg_class});
            fg_r1 += r_at_k(encode_image(enc.image, g1.image).data(), enc.prototypes, candidates, 1, {t.fg_class},
                            RecallVariant::Plain);
            bg_r1 += r_at_k(encode_image(enc.image, g2.image).data(), enc.prototypes, candidates, 1, {t.bg_class},
                            RecallVariant::Plain);
        }
        const std::string m = mode_name(mode);
        out.push_back({"separator", m, kMixedCrs, seed, crs(s.detected, s.required)});
        out.push_back({"separator", m, kMixedR2Star, seed, static_cast<double>(s.r2) / n});
        out.push_back({"separator", m, kForegroundCrs, seed, crs(fg_det, fg_req)});
        out.push_back({"separator", m, kForegroundR1, seed, static_cast<double>(fg_r1) / n});
        out.push_back({"separator", m, kBackgroundCrs, seed, crs(bg_det, bg_req)});
        out.push_back({"separator", m, kBackgroundR1, seed, static_cast<double>(bg_r1) / n});
    }
    return out;
}

std::vector<ReportRow> evaluate_stage(const RunConfig& cfg, const RunLayout& layout, const StoredDataset& data)
{
    std::vector<std::string> missing;
    for (auto seed : cfg.seeds) {
        for (const char* f : {"audio.ckpt", "image.ckpt", "prototypes.bin"})
            if (!fs::exists(layout.encoder_dir(seed) / f))
                missing.push_back((layout.encoder_dir(seed) / f).string());
        for (auto mode : cfg.modes)
            if (!fs::exists(layout.run_dir(seed, mode) / "best.ckpt"))
                missing.push_back((layout.run_dir(seed, mode) / "best.ckpt").string());
    }
    if (!missing.empty()) {
        std::string msg = "evaluation needs every configured run; missing:";
        for (const auto& m : missing)
            msg += "\n  " + m;
        throw DataError(msg);
    }

    // Group by (method, mode, metric) over seeds, in seed-major input order.
    std::vector<SeedResult> all;
    for (auto seed : cfg.seeds) {
        auto r = evaluate_seed(cfg, layout, data, seed);
        all.insert(all.end(), r.begin(), r.end());
    }
    const auto rows = aggregate(all);

    fs::create_directories(layout.eval_dir());
    auto os = open_text(layout.eval_dir() / "per_seed.csv");
    os << "method,mode,metric,seed,value,config_hash\n";
    for (const auto& r : all)
        os << r.method << ',' << r.mode << ',' << r.metric << ',' << r.seed << ',' << num(r.value) << ','
           << cfg.hash() << '\n';
    os.close();
    write_results_csv(layout.eval_dir() / "results.csv", rows, cfg.hash());
    write_tables(layout.eval_dir(), rows, cfg.hash());
    return rows;
}

std::size_t generate_stage(const RunConfig& cfg, const RunLayout& layout, const StoredDataset& data,
                           std::uint64_t seed, AlignmentMode mode, const std::vector<std::size_t>& tuple_ids,
                           GenerationTask task, std::optional<double> lambda)
{
    GenerationConfig base = cfg.generation();
    if (lambda)
        base.lambda = *lambda;
    base.validate();
    const SeedArtifacts enc = load_seed_artifacts(cfg, layout, seed);
    const Mlp sep = load_separator(cfg, layout, seed, mode);
    const fs::path dir = layout.generated_dir() / ("seed_" + std::to_string(seed)) / mode_slug(mode);
    fs::create_directories(dir);

    auto emit = [&](const Generated& g, const std::string& stem, const TrainingTuple& t, std::uint64_t noise,
                    const std::string& kind) {
        const Raster r = to_raster(g.image, 4);
        write_ppm(dir / (stem + ".ppm"), r);
        if (cfg.png)
            write_png(dir / (stem + ".png"), r);
        write_truth_record(dir / (stem + ".txt"), g,
                           {{"kind", kind},
                            {"tuple_id", std::to_string(t.id)},
                            {"fg_class", std::to_string(t.fg_class)},
                            {"bg_class", std::to_string(t.bg_class)},
                            {"lambda", num(base.lambda)},
                            {"tau", num(cfg.tau)},
                            {"noise_seed", std::to_string(noise)},
                            {"config_hash", cfg.hash()}});
    };

    std::size_t written = 0;
    for (std::size_t id : tuple_ids) {
        if (id >= data.tuples.size())
            throw DataError("tuple id " + std::to_string(id) + " is outside the dataset (" +
                            std::to_string(data.tuples.size()) + " tuples)");
        const TrainingTuple& t = data.tuples[id];
        GenerationConfig gc = base;
        gc.noise_seed = noise_seed_for(t);
        const SplitEmbedding split = separate(sep, t.a_mix, cfg.embed_dim);
        char stem[32];
        if (task == GenerationTask::Mixed) {
            std::snprintf(stem, sizeof stem, "mixed_%06zu", id);
            emit(generate_mixed(split, enc.prototypes, gc), stem, t, gc.noise_seed, "mixed");
            ++written;
        } else {
            const auto [g1, g2] = generate_separated(split, enc.prototypes, gc);
            std::snprintf(stem, sizeof stem, "separated_%06zu_1", id);
            emit(g1, stem, t, derive_seed(gc.noise_seed, 1), "separated_half1");
            std::snprintf(stem, sizeof stem, "separated_%06zu_2", id);
            emit(g2, stem, t, derive_seed(gc.noise_seed, 2), "separated_half2");
            written += 2;
        }
    }
    return written;
}

void run_all(const RunConfig& cfg, const RunLayout& layout)
{
    make_data(cfg, layout);
    const StoredDataset data = load_run_dataset(cfg, layout);
    for (auto seed : cfg.seeds)
        pretrain_stage(cfg, layout, data, seed);
    for (auto seed : cfg.seeds)
        for (auto mode : cfg.modes)
            train_stage(cfg, layout, data, seed, mode);
    evaluate_stage(cfg, layout, data);
    report_stage(cfg, layout);
}

} // namespace mixscape
