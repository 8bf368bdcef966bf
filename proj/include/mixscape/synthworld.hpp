#pragma once

#include "mixscape/tensor.hpp"

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace mixscape {

using ClassId = int;

enum class Role { Foreground, Background };
enum class GlyphShape { Circle, Triangle, Square, Cross, Ring, Bar };

const char* role_name(Role r);
const char* shape_name(GlyphShape s);

struct Rgb {
    double r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct ClassSpec {
    ClassId id = 0;
    std::string name;
    Role role = Role::Foreground;
    int base_frequency = 1;   // DFT bin index of the fundamental
    int harmonic_pattern = 0; // index into harmonic_pattern()
    GlyphShape shape = GlyphShape::Circle;
    Rgb color;
};

struct Harmonic {
    int multiple;
    double amplitude;
};

/// Harmonic series for a pattern id; the fundamental always has the largest amplitude.
const std::vector<Harmonic>& harmonic_pattern(int id);
int harmonic_pattern_count();

/// Frequency/raster parameters shared by every class of a roster.
struct RenderParams {
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t cell = 16;   // layout grid pitch
    std::size_t glyph = 10;  // glyph box edge
    int jitter = 2;          // max |offset| of a glyph inside its cell
    std::size_t capacity() const { return (height / cell) * (width / cell); }
};

class Roster {
public:
    /// Validates id/(shape, color) uniqueness and that harmonic bins are
    /// distinct across classes and below the Nyquist bin.
    Roster(std::vector<ClassSpec> classes, std::size_t signal_length = 256, RenderParams render = {});

    const std::vector<ClassSpec>& classes() const noexcept { return classes_; }
    const ClassSpec& at(ClassId id) const;
    bool contains(ClassId id) const noexcept;
    std::size_t size() const noexcept { return classes_.size(); }
    std::size_t signal_length() const noexcept { return signal_length_; }
    const RenderParams& render() const noexcept { return render_; }
    std::vector<ClassId> ids() const;
    std::vector<ClassId> ids_with_role(Role r) const;

private:
    std::vector<ClassSpec> classes_;
    std::size_t signal_length_;
    RenderParams render_;
};

/// 4 foreground + 3 background classes.
Roster desk_roster();
/// 20 foreground + 6 background classes (five realistic backdrops, one unrealistic).
Roster paper_roster();

using Combination = std::pair<ClassId, ClassId>; // (foreground, background)

/// Every foreground × background pairing of the desk roster (12).
std::vector<Combination> desk_combinations();
/// 15 realistic pairings (3 per realistic backdrop) + 5 unrealistic ones.
std::vector<Combination> paper_combinations();
/// The five unrealistic pairings of paper_combinations().
std::vector<Combination> paper_unrealistic_combinations();

// ---------------------------------------------------------------------------
// Signals

struct Signal {
    Tensor samples; // [L], peak |x| <= 1
    std::set<ClassId> provenance;
};

double peak(const Signal& s);

/// Sum of the class harmonics with seeded amplitude/phase jitter plus
/// Gaussian noise, scaled to peak 1. Throws ConfigError unless
/// 0 <= noise_level < 0.5.
Signal synth_signal(const ClassSpec& spec, std::uint64_t seed, double noise_level, std::size_t length = 256);

/// (g1·a1 + g2·a2) / max(1, peak). Throws ShapeError on length mismatch.
Signal mix(const Signal& a1, const Signal& a2, double gain1 = 1.0, double gain2 = 1.0);

// ---------------------------------------------------------------------------
// Images

struct Box {
    std::size_t x = 0, y = 0, w = 0, h = 0;
    friend bool operator==(const Box&, const Box&) = default;
};

struct TruthEntry {
    ClassId class_id;
    Box box;
    friend bool operator==(const TruthEntry&, const TruthEntry&) = default;
};

struct GlyphImage {
    Tensor pixels; // [H×W×3] in [0,1]
    std::vector<TruthEntry> truth;

    std::size_t height() const { return pixels.extent(0); }
    std::size_t width() const { return pixels.extent(1); }
    Rgb pixel(std::size_t y, std::size_t x) const;
    std::set<ClassId> truth_classes() const;
};

inline constexpr Rgb kNeutralBackdrop{0.5, 0.5, 0.5};

/// Secondary stripe tone of a backdrop: halfway between the class colour and neutral grey.
Rgb stripe_tone(const Rgb& color);
/// True where the backdrop of background class `spec` shows its primary colour.
bool backdrop_primary(const ClassSpec& spec, std::size_t y, std::size_t x);
/// True where a glyph of `shape` covers local coordinate (u, v) of its box.
bool glyph_mask(GlyphShape shape, std::size_t u, std::size_t v, std::size_t box);

/// Paints at most one background class as a striped backdrop and each
/// foreground class as a glyph in its own seeded cell with seeded jitter.
/// Throws ConfigError for an empty list, duplicates, unknown classes, more
/// than one background or more glyphs than layout cells.
GlyphImage render_image(const std::vector<ClassId>& classes, const Roster& roster, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Tuples and datasets

struct TrainingTuple {
    std::size_t id = 0;
    GlyphImage v1, v2;
    Signal a1, a2, a_mix;
    ClassId fg_class = 0;
    ClassId bg_class = 0;
};

struct DatasetParams {
    double noise_level = 0.1;
    double gain_fg = 1.0;
    double gain_bg = 1.0;
};

/// Throws DataError naming the first broken tuple invariant.
void verify_tuple(const TrainingTuple& t);

/// Builds one tuple from (fg, bg) using randomness derived from (seed, id).
TrainingTuple make_tuple(const Roster& roster, const Combination& combo, std::uint64_t seed, std::size_t id,
                         const DatasetParams& params = {});

/// |combinations| × per_combo tuples; tuple ids run combination-major.
std::vector<TrainingTuple> build_dataset(const Roster& roster, const std::vector<Combination>& combinations,
                                         std::size_t per_combo, std::uint64_t seed,
                                         const DatasetParams& params = {});

enum class Split { Train, Val, Test };
const char* split_name(Split s);
Split parse_split(const std::string& s);

struct SplitRatios {
    double train = 0.8, val = 0.1, test = 0.1;
};

struct DatasetSplits {
    std::vector<std::size_t> train, val, test; // positions into the tuple list, ascending
};

/// Stratified by combination so that every combination reaches every split.
/// Combinations listed in `test_only` are routed entirely to the test split.
DatasetSplits split_dataset(const std::vector<TrainingTuple>& tuples, const SplitRatios& ratios,
                            std::uint64_t seed, const std::vector<Combination>& test_only = {});

} // namespace mixscape
