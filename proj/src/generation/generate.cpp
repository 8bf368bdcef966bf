#include "mixscape/errors.hpp"
#include "mixscape/generation.hpp"
#include "mixscape/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace mixscape {

void GenerationConfig::validate() const
{
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw ConfigError("lambda must lie in [0, 1]");
    if (!(tau > 0.0 && tau < 1.0))
        throw ConfigError("tau must lie in (0, 1)");
}

std::vector<RankedClass> decode(std::span<const double> e, const PrototypeTable& table)
{
    if (e.size() != table.dim())
        throw ShapeError("decode: embedding has " + std::to_string(e.size()) + " entries, prototypes have " +
                         std::to_string(table.dim()));
    const double norm = l2_norm(e);
    if (!(norm > kNormFloor))
        throw DegenerateVectorError("decode: embedding norm " + std::to_string(norm) + " is degenerate");
    std::vector<RankedClass> ranking;
    for (const auto& p : table.entries())
        ranking.push_back({p.class_id, dot(e, p.centroid.data()) / norm});
    std::sort(ranking.begin(), ranking.end(), [](const RankedClass& a, const RankedClass& b) {
        if (a.similarity != b.similarity)
            return a.similarity > b.similarity;
        return a.class_id < b.class_id;
    });
    return ranking;
}

Tensor combine(const SplitEmbedding& split, double lambda)
{
    const auto h1 = split.half1();
    const auto h2 = split.half2();
    Tensor c({h1.size()});
    for (std::size_t i = 0; i < h1.size(); ++i)
        c[i] = lambda * h1[i] + (1.0 - lambda) * h2[i];
    return c;
}

std::vector<ClassId> select_scene_classes(const std::vector<RankedClass>& ranking, const Roster& roster,
                                          double tau)
{
    if (ranking.empty())
        throw ContractError("select_scene_classes: empty ranking");
    std::vector<ClassId> chosen;
    bool have_background = false;
    std::size_t glyphs = 0;
    for (const auto& r : ranking) {
        if (!(r.similarity > tau))
            break;
        if (roster.at(r.class_id).role == Role::Background) {
            if (have_background)
                continue;
            have_background = true;
        } else {
            if (glyphs == roster.render().capacity())
                continue;
            ++glyphs;
        }
        chosen.push_back(r.class_id);
    }
    if (chosen.empty())
        chosen.push_back(ranking.front().class_id);
    return chosen;
}

Generated generate_from_embedding(std::span<const double> e, const PrototypeTable& table,
                                  const GenerationConfig& cfg)
{
    cfg.validate();
    Generated g;
    g.ranking = decode(e, table);
    g.rendered = select_scene_classes(g.ranking, table.roster(), cfg.tau);
    g.image = render_image(g.rendered, table.roster(), cfg.noise_seed);
    return g;
}

Generated generate_mixed(const SplitEmbedding& split, const PrototypeTable& table, const GenerationConfig& cfg)
{
    cfg.validate();
    const Tensor c = combine(split, cfg.lambda);
    return generate_from_embedding(c.data(), table, cfg);
}

std::pair<Generated, Generated> generate_separated(const SplitEmbedding& split, const PrototypeTable& table,
                                                   const GenerationConfig& cfg)
{
    cfg.validate();
    auto single = [&](std::span<const double> half, std::uint64_t stream) {
        Generated g;
        g.ranking = decode(half, table);
        g.rendered = {g.ranking.front().class_id};
        g.image = render_image(g.rendered, table.roster(), derive_seed(cfg.noise_seed, stream));
        return g;
    };
    return {single(split.half1(), 1), single(split.half2(), 2)};
}

void write_truth_record(const std::filesystem::path& path, const Generated& g,
                        const std::vector<std::pair<std::string, std::string>>& extra)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw Error("cannot write " + path.string());
    os << "rendered=";
    for (std::size_t i = 0; i < g.rendered.size(); ++i)
        os << (i ? ";" : "") << g.rendered[i];
    os << "\nranking=";
    char buf[64];
    for (std::size_t i = 0; i < g.ranking.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%d:%.6f", g.ranking[i].class_id, g.ranking[i].similarity);
        os << (i ? ";" : "") << buf;
    }
    os << "\ntruth=";
    for (std::size_t i = 0; i < g.image.truth.size(); ++i) {
        const auto& t = g.image.truth[i];
        os << (i ? ";" : "") << t.class_id << '@' << t.box.x << ':' << t.box.y << ':' << t.box.w << ':' << t.box.h;
    }
    os << '\n';
    for (const auto& [k, v] : extra)
        os << k << '=' << v << '\n';
    if (!os)
        throw Error("failed writing " + path.string());
}

} // namespace mixscape
