// Command-line front end: dataset generation, encoder pretraining, separator
// training, generation, evaluation and reporting.

#include "mixscape/errors.hpp"
#include "mixscape/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace mixscape;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct Options {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string output_dir;
    bool paper_scale = false;
    bool png = false;

    std::optional<std::uint64_t> seed;
    std::string mode;
    std::vector<std::size_t> tuples;
    std::string split = "test";
    std::size_t count = 4;
    std::optional<double> lambda;
};

RunConfig build_config(const Options& o)
{
    RunConfig cfg;
    if (o.paper_scale)
        apply_paper_scale(cfg);
    if (!o.config_file.empty())
        cfg = load_config(o.config_file, cfg);
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!o.output_dir.empty())
        cfg.output_dir = o.output_dir;
    if (o.png)
        cfg.png = true;
    cfg.validate();
    return cfg;
}

std::vector<std::uint64_t> selected_seeds(const RunConfig& cfg, const Options& o)
{
    return o.seed ? std::vector<std::uint64_t>{*o.seed} : cfg.seeds;
}

std::vector<AlignmentMode> selected_modes(const RunConfig& cfg, const Options& o)
{
    return o.mode.empty() ? cfg.modes : std::vector<AlignmentMode>{parse_mode(o.mode)};
}

std::vector<std::size_t> selected_tuples(const StoredDataset& data, const Options& o)
{
    if (!o.tuples.empty())
        return o.tuples;
    const Split s = parse_split(o.split);
    const auto& pool = s == Split::Train ? data.splits.train : s == Split::Val ? data.splits.val : data.splits.test;
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < pool.size() && ids.size() < o.count; ++i)
        ids.push_back(data.tuples[pool[i]].id);
    return ids;
}

int run_generate(const Options& o, GenerationTask task)
{
    const RunConfig cfg = build_config(o);
    const RunLayout layout = resolve_layout(cfg);
    if (!o.seed || o.mode.empty())
        throw ConfigError("--seed and --mode are required");
    const StoredDataset data = load_run_dataset(cfg, layout);
    const std::size_t n =
        generate_stage(cfg, layout, data, *o.seed, parse_mode(o.mode), selected_tuples(data, o), task, o.lambda);
    std::cout << "wrote " << n << " image(s) under " << layout.generated_dir().string() << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Split-embedding audio-visual separation on a synthetic glyph world"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("-c,--config", o.config_file, "key=value configuration file");
    app.add_option("-s,--set", o.overrides, "override one key (key=value); repeatable");
    app.add_option("-o,--output", o.output_dir, "output directory (MIXSCAPE_OUTPUT_ROOT takes precedence)");
    app.add_flag("--paper-scale", o.paper_scale, "26-class roster, 20 combinations x 1000 tuples");
    app.add_flag("--png", o.png, "also write PNG copies of images and plots");

    auto* make_data_cmd = app.add_subcommand("make-data", "generate and split the dataset");
    auto* pretrain_cmd = app.add_subcommand("pretrain-encoders", "pretrain and freeze the reference encoders");
    pretrain_cmd->add_option("--seed", o.seed, "only this seed");
    auto* train_cmd = app.add_subcommand("train", "train the separator");
    train_cmd->add_option("--seed", o.seed, "only this seed");
    train_cmd->add_option("--mode", o.mode, "only this mode: A2A, A2V or A2A+A2V");
    auto* generate_cmd = app.add_subcommand("generate", "render mixed scenes from mixed audio");
    auto* separate_cmd = app.add_subcommand("separate", "render one image per separated source");
    for (auto* cmd : {generate_cmd, separate_cmd}) {
        cmd->add_option("--seed", o.seed, "run seed")->required();
        cmd->add_option("--mode", o.mode, "alignment mode of the checkpoint")->required();
        cmd->add_option("--tuple", o.tuples, "tuple id; repeatable");
        cmd->add_option("--split", o.split, "split to draw tuples from when no --tuple is given")
            ->check(CLI::IsMember({"train", "val", "test"}));
        cmd->add_option("--count", o.count, "number of tuples drawn from --split");
        cmd->add_option("--lambda", o.lambda, "mixing weight of the first half, in [0, 1]");
    }
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score every seed and mode plus the baseline");
    auto* report_cmd = app.add_subcommand("report", "summary text and plots from the evaluation");
    auto* all_cmd = app.add_subcommand("all", "run every stage in order");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (make_data_cmd->parsed()) {
            const RunConfig cfg = build_config(o);
            const RunLayout layout = resolve_layout(cfg);
            make_data(cfg, layout);
            std::cout << "dataset written to " << layout.data_dir().string() << " (config " << cfg.hash() << ")\n";
        } else if (pretrain_cmd->parsed()) {
            const RunConfig cfg = build_config(o);
            const RunLayout layout = resolve_layout(cfg);
            const StoredDataset data = load_run_dataset(cfg, layout);
            for (auto seed : selected_seeds(cfg, o)) {
                const auto s = pretrain_stage(cfg, layout, data, seed);
                std::cout << "seed " << seed << ": held-out R@1 " << s.val_r1 << ", loss " << s.val_loss << '\n';
            }
        } else if (train_cmd->parsed()) {
            const RunConfig cfg = build_config(o);
            const RunLayout layout = resolve_layout(cfg);
            const StoredDataset data = load_run_dataset(cfg, layout);
            for (auto seed : selected_seeds(cfg, o))
                for (auto mode : selected_modes(cfg, o)) {
                    const auto r = train_stage(cfg, layout, data, seed, mode);
                    std::cout << "seed " << seed << ' ' << mode_name(mode) << ": best epoch " << r.best_epoch
                              << ", val loss " << r.curve[r.best_epoch - 1].val_loss << '\n';
                }
        } else if (generate_cmd->parsed()) {
            return run_generate(o, GenerationTask::Mixed);
        } else if (separate_cmd->parsed()) {
            return run_generate(o, GenerationTask::Separated);
        } else if (evaluate_cmd->parsed()) {
            const RunConfig cfg = build_config(o);
            const RunLayout layout = resolve_layout(cfg);
            const StoredDataset data = load_run_dataset(cfg, layout);
            const auto rows = evaluate_stage(cfg, layout, data);
            std::cout << rows.size() << " result rows written to " << layout.eval_dir().string() << '\n';
        } else if (report_cmd->parsed()) {
            const RunConfig cfg = build_config(o);
            const RunLayout layout = resolve_layout(cfg);
            report_stage(cfg, layout);
            std::cout << "report written to " << layout.report_dir().string() << '\n';
        } else if (all_cmd->parsed()) {
            const RunConfig cfg = build_config(o);
            const RunLayout layout = resolve_layout(cfg);
            run_all(cfg, layout);
            std::cout << "pipeline complete under " << layout.root.string() << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const DegenerateVectorError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}
