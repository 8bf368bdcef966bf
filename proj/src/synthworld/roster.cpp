#include "mixscape/errors.hpp"
#include "mixscape/synthworld.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace mixscape {

const char* role_name(Role r)
{
    return r == Role::Foreground ? "foreground" : "background";
}

const char* shape_name(GlyphShape s)
{
    switch (s) {
    case GlyphShape::Circle: return "circle";
    case GlyphShape::Triangle: return "triangle";
    case GlyphShape::Square: return "square";
    case GlyphShape::Cross: return "cross";
    case GlyphShape::Ring: return "ring";
    case GlyphShape::Bar: return "bar";
    }
    return "?";
}

const std::vector<Harmonic>& harmonic_pattern(int id)
{
    static const std::vector<std::vector<Harmonic>> patterns = {
        {{1, 1.0}, {2, 0.5}, {3, 0.3}},
        {{1, 1.0}, {3, 0.4}, {5, 0.2}},
        {{1, 1.0}, {2, 0.6}},
        {{1, 1.0}, {4, 0.35}},
    };
    if (id < 0 || id >= static_cast<int>(patterns.size()))
        throw ConfigError("unknown harmonic pattern " + std::to_string(id));
    return patterns[static_cast<std::size_t>(id)];
}

int harmonic_pattern_count()
{
    return 4;
}

Roster::Roster(std::vector<ClassSpec> classes, std::size_t signal_length, RenderParams render)
    : classes_(std::move(classes)), signal_length_(signal_length), render_(render)
{
    if (classes_.size() < 2)
        throw ConfigError("a roster needs at least two classes");
    if (signal_length_ < 8)
        throw ConfigError("signal length too short");
    if (render_.cell == 0 || render_.height % render_.cell || render_.width % render_.cell ||
        render_.glyph + 2 + 2 * static_cast<std::size_t>(render_.jitter) > render_.cell)
        throw ConfigError("glyph box plus jitter does not fit a layout cell");
    std::map<ClassId, int> ids;
    std::map<std::pair<int, std::tuple<double, double, double>>, int> looks;
    std::map<int, ClassId> bins;
    for (const auto& c : classes_) {
        if (ids[c.id]++)
            throw ConfigError("duplicate class id " + std::to_string(c.id));
        if (looks[{static_cast<int>(c.shape), {c.color.r, c.color.g, c.color.b}}]++)
            throw ConfigError("duplicate (shape, colour) for class " + c.name);
        if (c.color == kNeutralBackdrop)
            throw ConfigError("class " + c.name + " uses the neutral backdrop colour");
        if (c.base_frequency < 1)
            throw ConfigError("base frequency must be >= 1 for class " + c.name);
        for (const auto& h : harmonic_pattern(c.harmonic_pattern)) {
            const int bin = c.base_frequency * h.multiple;
            if (static_cast<std::size_t>(bin) * 2 >= signal_length_)
                throw ConfigError("harmonic bin " + std::to_string(bin) + " of class " + c.name +
                                  " is at or above Nyquist");
            auto [it, fresh] = bins.emplace(bin, c.id);
            if (!fresh)
                throw ConfigError("harmonic bin " + std::to_string(bin) + " shared by classes " +
                                  std::to_string(it->second) + " and " + std::to_string(c.id));
        }
    }
}

const ClassSpec& Roster::at(ClassId id) const
{
    for (const auto& c : classes_)
        if (c.id == id)
            return c;
    throw ConfigError("class " + std::to_string(id) + " is not in the roster");
}

bool Roster::contains(ClassId id) const noexcept
{
    return std::any_of(classes_.begin(), classes_.end(), [id](const ClassSpec& c) { return c.id == id; });
}

std::vector<ClassId> Roster::ids() const
{
    std::vector<ClassId> out;
    for (const auto& c : classes_)
        out.push_back(c.id);
    return out;
}

std::vector<ClassId> Roster::ids_with_role(Role r) const
{
    std::vector<ClassId> out;
    for (const auto& c : classes_)
        if (c.role == r)
            out.push_back(c.id);
    return out;
}

namespace {

// Grid colours on {0.1, 0.5, 0.9}³ without neutral grey; the first entries are
// the most saturated.
std::vector<Rgb> palette()
{
    std::vector<Rgb> out = {
        {0.9, 0.1, 0.1}, {0.1, 0.9, 0.1}, {0.1, 0.1, 0.9}, {0.9, 0.9, 0.1}, {0.9, 0.1, 0.9},
        {0.1, 0.9, 0.9}, {0.9, 0.5, 0.1}, {0.5, 0.1, 0.9}, {0.1, 0.5, 0.9},
    };
    const double levels[3] = {0.1, 0.5, 0.9};
    for (double r : levels)
        for (double g : levels)
            for (double b : levels) {
                const Rgb c{r, g, b};
                if (c == kNeutralBackdrop || std::find(out.begin(), out.end(), c) != out.end())
                    continue;
                out.push_back(c);
            }
    return out;
}

} // namespace

Roster desk_roster()
{
    using S = GlyphShape;
    std::vector<ClassSpec> classes = {
        {0, "bell", Role::Foreground, 5, 0, S::Circle, {0.9, 0.1, 0.1}},
        {1, "dog", Role::Foreground, 7, 1, S::Triangle, {0.1, 0.9, 0.1}},
        {2, "train", Role::Foreground, 11, 2, S::Square, {0.1, 0.1, 0.9}},
        {3, "bird", Role::Foreground, 13, 3, S::Cross, {0.9, 0.9, 0.1}},
        {4, "hail", Role::Background, 17, 0, S::Circle, {0.9, 0.1, 0.9}},
        {5, "sea_waves", Role::Background, 19, 2, S::Square, {0.1, 0.9, 0.9}},
        {6, "stream", Role::Background, 23, 1, S::Ring, {0.9, 0.5, 0.1}},
    };
    return Roster(std::move(classes));
}

Roster paper_roster()
{
    const std::vector<std::string> backgrounds = {"hail", "sea_waves", "stream", "volcano", "waterfall",
                                                  "underwater"};
    const std::vector<std::string> foregrounds = {
        "church_bell", "dog",     "train_horn", "ice_cream_truck", "cheering",    "harp",      "oriole",
        "railroad_car", "snake",  "ambulance",  "sheep",           "wood_thrush", "gibbon",    "crowd",
        "choir",        "airplane", "fire_truck", "orchestra",     "drum_kit",    "slot_machine"};
    const std::size_t length = 512; // 26 disjoint harmonic sets do not fit below bin 128
    const auto colors = palette();

    std::vector<ClassSpec> classes;
    std::set<int> used_bins;
    int next_base = 2;
    auto allocate = [&](int pattern) {
        // Smallest fundamental whose harmonics are all free and below Nyquist.
        for (int base = next_base; base * 2 < static_cast<int>(length); ++base) {
            bool ok = true;
            for (const auto& h : harmonic_pattern(pattern)) {
                const int bin = base * h.multiple;
                if (bin * 2 >= static_cast<int>(length) || used_bins.count(bin))
                    ok = false;
            }
            if (ok) {
                for (const auto& h : harmonic_pattern(pattern))
                    used_bins.insert(base * h.multiple);
                return base;
            }
        }
        throw ConfigError("cannot allocate disjoint harmonics for the 26-class roster");
    };

    std::size_t k = 0;
    for (const auto& name : foregrounds) {
        const int pattern = static_cast<int>(k % 4);
        const int base = allocate(pattern);
        classes.push_back({static_cast<ClassId>(k), name, Role::Foreground, base, pattern,
                           static_cast<GlyphShape>(k % 6), colors[k]});
        ++k;
    }
    for (const auto& name : backgrounds) {
        // Two-harmonic patterns keep the allocation dense enough for 26 classes.
        const int pattern = 2 + static_cast<int>(k % 2);
        const int base = allocate(pattern);
        classes.push_back({static_cast<ClassId>(k), name, Role::Background, base, pattern,
                           static_cast<GlyphShape>(k % 6), colors[k]});
        ++k;
    }
    return Roster(std::move(classes), length);
}

std::vector<Combination> desk_combinations()
{
    std::vector<Combination> out;
    for (ClassId fg = 0; fg < 4; ++fg)
        for (ClassId bg = 4; bg < 7; ++bg)
            out.emplace_back(fg, bg);
    return out;
}

std::vector<Combination> paper_combinations()
{
    std::vector<Combination> out;
    // Realistic: backdrop b (ids 20..24) with foregrounds 3b .. 3b+2.
    for (ClassId b = 0; b < 5; ++b)
        for (ClassId f = 0; f < 3; ++f)
            out.emplace_back(3 * b + f, 20 + b);
    for (const auto& c : paper_unrealistic_combinations())
        out.push_back(c);
    return out;
}

std::vector<Combination> paper_unrealistic_combinations()
{
    std::vector<Combination> out;
    for (ClassId f = 15; f < 20; ++f)
        out.emplace_back(f, 25);
    return out;
}

} // namespace mixscape
