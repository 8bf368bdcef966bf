#include "mixscape/errors.hpp"
#include "mixscape/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mixscape {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty())
            out.push_back(trim(item));
    return out;
}

double to_double(const std::string& key, const std::string& v)
{
    std::size_t used = 0;
    double x = 0;
    try {
        x = std::stod(v, &used);
    } catch (const std::logic_error&) {
        used = 0;
    }
    if (used != v.size() || v.empty())
        throw ConfigError(key + ": '" + v + "' is not a number");
    return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v)
{
    std::size_t used = 0;
    unsigned long long x = 0;
    try {
        if (!v.empty() && v.front() != '-')
            x = std::stoull(v, &used);
    } catch (const std::logic_error&) {
        used = 0;
    }
    if (used != v.size() || v.empty())
        throw ConfigError(key + ": '" + v + "' is not a non-negative integer");
    return x;
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& raw)
{
    const std::string v = trim(raw);
    if (key == "roster") {
        if (v != "desk" && v != "paper")
            throw ConfigError("roster must be 'desk' or 'paper'");
        roster = v;
    } else if (key == "per_combo")
        per_combo = to_u64(key, v);
    else if (key == "data_seed")
        data_seed = to_u64(key, v);
    else if (key == "noise_level")
        noise_level = to_double(key, v);
    else if (key == "gain_fg")
        gain_fg = to_double(key, v);
    else if (key == "gain_bg")
        gain_bg = to_double(key, v);
    else if (key == "split_train")
        split.train = to_double(key, v);
    else if (key == "split_val")
        split.val = to_double(key, v);
    else if (key == "split_test")
        split.test = to_double(key, v);
    else if (key == "unrealistic_test_only")
        unrealistic_test_only = to_bool(key, v);
    else if (key == "embed_dim")
        embed_dim = to_u64(key, v);
    else if (key == "pretrain_epochs")
        pretrain_epochs = to_u64(key, v);
    else if (key == "pretrain_pairs_per_class")
        pretrain_pairs_per_class = to_u64(key, v);
    else if (key == "pretrain_learning_rate")
        pretrain_learning_rate = to_double(key, v);
    else if (key == "prototype_images_per_class")
        prototype_images_per_class = to_u64(key, v);
    else if (key == "epochs")
        epochs = to_u64(key, v);
    else if (key == "batch_size")
        batch_size = to_u64(key, v);
    else if (key == "learning_rate")
        learning_rate = to_double(key, v);
    else if (key == "weight_decay")
        weight_decay = to_double(key, v);
    else if (key == "modes") {
        std::vector<AlignmentMode> parsed;
        for (const auto& m : split_list(v))
            parsed.push_back(parse_mode(m));
        modes = parsed;
    } else if (key == "a2v_weight")
        a2v_weight = to_double(key, v);
    else if (key == "cross_half_negatives")
        cross_half_negatives = to_bool(key, v);
    else if (key == "keep_epoch_checkpoints")
        keep_epoch_checkpoints = to_bool(key, v);
    else if (key == "lambda")
        lambda = to_double(key, v);
    else if (key == "tau")
        tau = to_double(key, v);
    else if (key == "seeds") {
        std::vector<std::uint64_t> parsed;
        for (const auto& s : split_list(v))
            parsed.push_back(to_u64(key, s));
        seeds = parsed;
    } else if (key == "output_dir")
        output_dir = v;
    else if (key == "png")
        png = to_bool(key, v);
    else
        throw ConfigError("unknown configuration key '" + key + "'");
}

void RunConfig::validate() const
{
    if (per_combo < 3)
        throw ConfigError("per_combo must be at least 3");
    if (!(noise_level >= 0 && noise_level < 0.5))
        throw ConfigError("noise_level must lie in [0, 0.5)");
    if (!(gain_fg > 0) || !(gain_bg > 0))
        throw ConfigError("gains must be positive");
    if (unrealistic_test_only && roster != "paper")
        throw ConfigError("unrealistic_test_only needs roster = paper");
    if (embed_dim < 1)
        throw ConfigError("embed_dim must be positive");
    if (pretrain_epochs < 1 || !(pretrain_learning_rate > 0))
        throw ConfigError("pretraining needs pretrain_epochs >= 1 and pretrain_learning_rate > 0");
    if (prototype_images_per_class < 5)
        throw ConfigError("prototype_images_per_class must be at least 5");
    if (modes.empty())
        throw ConfigError("modes must name at least one alignment mode");
    for (std::size_t i = 0; i < modes.size(); ++i)
        for (std::size_t j = i + 1; j < modes.size(); ++j)
            if (modes[i] == modes[j])
                throw ConfigError(std::string("modes lists ") + mode_name(modes[i]) + " twice");
    if (seeds.empty())
        throw ConfigError("seeds must list at least one seed");
    std::vector<std::uint64_t> sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ConfigError("seeds contains a duplicate");
    if (!(a2v_weight >= 0))
        throw ConfigError("a2v_weight must be non-negative");
    TrainConfig tc;
    tc.batch_size = batch_size;
    tc.epochs = epochs;
    tc.learning_rate = learning_rate;
    tc.weight_decay = weight_decay;
    tc.validate();
    generation().validate();
}

std::string RunConfig::canonical() const
{
    std::map<std::string, std::string> kv;
    kv["roster"] = roster;
    kv["per_combo"] = std::to_string(per_combo);
    kv["data_seed"] = std::to_string(data_seed);
    kv["noise_level"] = num(noise_level);
    kv["gain_fg"] = num(gain_fg);
    kv["gain_bg"] = num(gain_bg);
    kv["split_train"] = num(split.train);
    kv["split_val"] = num(split.val);
    kv["split_test"] = num(split.test);
    kv["unrealistic_test_only"] = unrealistic_test_only ? "true" : "false";
    kv["embed_dim"] = std::to_string(embed_dim);
    kv["pretrain_epochs"] = std::to_string(pretrain_epochs);
    kv["pretrain_pairs_per_class"] = std::to_string(pretrain_pairs_per_class);
    kv["pretrain_learning_rate"] = num(pretrain_learning_rate);
    kv["prototype_images_per_class"] = std::to_string(prototype_images_per_class);
    kv["epochs"] = std::to_string(epochs);
    kv["batch_size"] = std::to_string(batch_size);
    kv["learning_rate"] = num(learning_rate);
    kv["weight_decay"] = num(weight_decay);
    std::string m;
    for (auto mode : modes)
        m += (m.empty() ? "" : ",") + std::string(mode_name(mode));
    kv["modes"] = m;
    kv["a2v_weight"] = num(a2v_weight);
    kv["cross_half_negatives"] = cross_half_negatives ? "true" : "false";
    kv["keep_epoch_checkpoints"] = keep_epoch_checkpoints ? "true" : "false";
    kv["lambda"] = num(lambda);
    kv["tau"] = num(tau);
    std::string s;
    for (auto seed : seeds)
        s += (s.empty() ? "" : ",") + std::to_string(seed);
    kv["seeds"] = s;

    std::string out;
    for (const auto& [k, v] : kv)
        out += k + "=" + v + "\n";
    return out;
}

std::string RunConfig::hash() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Roster RunConfig::make_roster() const
{
    return roster == "paper" ? paper_roster() : desk_roster();
}

std::vector<Combination> RunConfig::combinations() const
{
    return roster == "paper" ? paper_combinations() : desk_combinations();
}

EncoderArchitecture RunConfig::architecture() const
{
    EncoderArchitecture a;
    a.embed_dim = embed_dim;
    return a;
}

AlignmentConfig RunConfig::alignment(AlignmentMode mode) const
{
    AlignmentConfig a;
    a.mode = mode;
    a.weight = a2v_weight;
    a.cross_half_negatives = cross_half_negatives;
    return a;
}

GenerationConfig RunConfig::generation() const
{
    GenerationConfig g;
    g.lambda = lambda;
    g.tau = tau;
    return g;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot read config file " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return base;
}

void apply_paper_scale(RunConfig& cfg)
{
    cfg.roster = "paper";
    cfg.per_combo = 1000;
}

std::string mode_slug(AlignmentMode mode)
{
    switch (mode) {
    case AlignmentMode::A2A: return "a2a";
    case AlignmentMode::A2V: return "a2v";
    case AlignmentMode::A2APlusA2V: return "a2a_a2v";
    }
    throw ContractError("unknown alignment mode");
}

std::filesystem::path RunLayout::run_dir(std::uint64_t seed, AlignmentMode mode) const
{
    return seed_dir(seed) / mode_slug(mode);
}

RunLayout resolve_layout(const RunConfig& cfg)
{
    if (const char* env = std::getenv(kOutputRootEnv); env && *env)
        return RunLayout{env};
    return RunLayout{cfg.output_dir};
}

} // namespace mixscape
