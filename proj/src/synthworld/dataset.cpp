#include "mixscape/errors.hpp"
#include "mixscape/rng.hpp"
#include "mixscape/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mixscape {

namespace {

constexpr std::uint64_t kStreamA1 = 1, kStreamA2 = 2, kStreamV1 = 3, kStreamV2 = 4;

std::string tuple_label(const TrainingTuple& t)
{
    return "tuple " + std::to_string(t.id);
}

} // namespace

void verify_tuple(const TrainingTuple& t)
{
    if (t.a1.provenance != std::set<ClassId>{t.fg_class})
        throw DataError(tuple_label(t) + ": A1 provenance is not {fg}");
    if (t.a2.provenance != std::set<ClassId>{t.bg_class})
        throw DataError(tuple_label(t) + ": A2 provenance is not {bg}");
    if (t.a_mix.provenance != std::set<ClassId>{t.fg_class, t.bg_class})
        throw DataError(tuple_label(t) + ": A_mix provenance is not {fg, bg}");
    if (t.v1.truth_classes() != std::set<ClassId>{t.fg_class})
        throw DataError(tuple_label(t) + ": V1 truth is not {fg}");
    if (t.v2.truth_classes() != std::set<ClassId>{t.bg_class})
        throw DataError(tuple_label(t) + ": V2 truth is not {bg}");
    for (const Signal* s : {&t.a1, &t.a2, &t.a_mix})
        if (!s->samples.all_finite() || peak(*s) > 1.0)
            throw DataError(tuple_label(t) + ": signal is non-finite or exceeds unit peak");
}

TrainingTuple make_tuple(const Roster& roster, const Combination& combo, std::uint64_t seed, std::size_t id,
                         const DatasetParams& params)
{
    const ClassSpec& fg = roster.at(combo.first);
    const ClassSpec& bg = roster.at(combo.second);
    if (fg.role != Role::Foreground || bg.role != Role::Background)
        throw ConfigError("combination (" + std::to_string(combo.first) + ", " + std::to_string(combo.second) +
                          ") must pair a foreground class with a background class");
    const std::uint64_t ts = derive_seed(seed, id);
    TrainingTuple t;
    t.id = id;
    t.fg_class = fg.id;
    t.bg_class = bg.id;
    t.a1 = synth_signal(fg, derive_seed(ts, kStreamA1), params.noise_level, roster.signal_length());
    t.a2 = synth_signal(bg, derive_seed(ts, kStreamA2), params.noise_level, roster.signal_length());
    t.a_mix = mix(t.a1, t.a2, params.gain_fg, params.gain_bg);
    t.v1 = render_image({fg.id}, roster, derive_seed(ts, kStreamV1));
    t.v2 = render_image({bg.id}, roster, derive_seed(ts, kStreamV2));
    return t;
}

std::vector<TrainingTuple> build_dataset(const Roster& roster, const std::vector<Combination>& combinations,
                                         std::size_t per_combo, std::uint64_t seed, const DatasetParams& params)
{
    if (combinations.empty() || per_combo == 0)
        throw ConfigError("build_dataset needs at least one combination and per_combo >= 1");
    for (const auto& c : combinations)
        if (roster.at(c.first).role != Role::Foreground || roster.at(c.second).role != Role::Background)
            throw ConfigError("combination (" + std::to_string(c.first) + ", " + std::to_string(c.second) +
                              ") must pair a foreground class with a background class");
    std::vector<TrainingTuple> out;
    out.reserve(combinations.size() * per_combo);
    std::size_t id = 0;
    for (const auto& c : combinations)
        for (std::size_t k = 0; k < per_combo; ++k)
            out.push_back(make_tuple(roster, c, seed, id++, params));
    return out;
}

const char* split_name(Split s)
{
    switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(const std::string& s)
{
    if (s == "train")
        return Split::Train;
    if (s == "val")
        return Split::Val;
    if (s == "test")
        return Split::Test;
    throw FormatError("unknown split '" + s + "'");
}

DatasetSplits split_dataset(const std::vector<TrainingTuple>& tuples, const SplitRatios& ratios, std::uint64_t seed,
                            const std::vector<Combination>& test_only)
{
    if (!(ratios.train > 0) || !(ratios.val > 0) || !(ratios.test > 0) ||
        std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw ConfigError("split ratios must be positive and sum to 1");

    std::map<Combination, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < tuples.size(); ++i)
        groups[{tuples[i].fg_class, tuples[i].bg_class}].push_back(i);

    DatasetSplits out;
    for (auto& [combo, members] : groups) {
        if (std::find(test_only.begin(), test_only.end(), combo) != test_only.end()) {
            out.test.insert(out.test.end(), members.begin(), members.end());
            continue;
        }
        const std::size_t n = members.size();
        if (n < 3)
            throw DataError("combination (" + std::to_string(combo.first) + ", " + std::to_string(combo.second) +
                            ") has " + std::to_string(n) + " tuples; stratified splitting needs at least 3");
        const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * ratios.val)));
        const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * ratios.test)));
        if (n_val + n_test >= n)
            throw DataError("combination (" + std::to_string(combo.first) + ", " + std::to_string(combo.second) +
                            ") is too small for the requested ratios");
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(combo.first) * 1000003ULL +
                                      static_cast<std::uint64_t>(combo.second)));
        rng.shuffle(members);
        const std::size_t n_train = n - n_val - n_test;
        out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.val.insert(out.val.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train),
                       members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
        out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), members.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

} // namespace mixscape
