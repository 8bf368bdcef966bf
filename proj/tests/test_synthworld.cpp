#include "mixscape/dataset_io.hpp"
#include "mixscape/errors.hpp"
#include "mixscape/image_io.hpp"
#include "mixscape/synthworld.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>

using namespace mixscape;
namespace fs = std::filesystem;

namespace {

// Magnitude spectrum by the textbook O(L²) sum.
std::vector<double> dft_magnitude(std::span<const double> x)
{
    const std::size_t n = x.size();
    std::vector<double> mag(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        std::complex<double> s = 0;
        for (std::size_t t = 0; t < n; ++t)
            s += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n));
        mag[k] = std::abs(s);
    }
    return mag;
}

double pearson(std::span<const double> a, std::span<const double> b)
{
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += (a[i] - ma) * (b[i] - mb);
        aa += (a[i] - ma) * (a[i] - ma);
        bb += (b[i] - mb) * (b[i] - mb);
    }
    return ab / std::sqrt(aa * bb);
}

fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("mixscape_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST(Roster, DeskRosterShape)
{
    const Roster r = desk_roster();
    EXPECT_EQ(r.ids_with_role(Role::Foreground).size(), 4u);
    EXPECT_EQ(r.ids_with_role(Role::Background).size(), 3u);
    EXPECT_EQ(desk_combinations().size(), 12u);
}

TEST(Roster, PaperRosterShape)
{
    const Roster r = paper_roster();
    EXPECT_EQ(r.ids_with_role(Role::Foreground).size(), 20u);
    EXPECT_EQ(r.ids_with_role(Role::Background).size(), 6u);
    EXPECT_EQ(paper_combinations().size(), 20u);
    EXPECT_EQ(paper_unrealistic_combinations().size(), 5u);
}

TEST(Roster, RejectsDuplicateAppearance)
{
    auto classes = desk_roster().classes();
    classes[1].shape = classes[0].shape;
    classes[1].color = classes[0].color;
    EXPECT_THROW(Roster{classes}, ConfigError);
}

TEST(Roster, RejectsCollidingHarmonics)
{
    auto classes = desk_roster().classes();
    classes[1].base_frequency = classes[0].base_frequency;
    EXPECT_THROW(Roster{classes}, ConfigError);
}

TEST(Signal, DominantBinIsTheFundamental)
{
    const Roster r = desk_roster();
    for (const auto& spec : r.classes()) {
        const Signal s = synth_signal(spec, 3, 0.0, r.signal_length());
        const auto mag = dft_magnitude(s.samples.data());
        const auto top = std::max_element(mag.begin() + 1, mag.end()) - mag.begin();
        EXPECT_EQ(top, spec.base_frequency) << spec.name;
    }
}

TEST(Signal, CrossClassSignalsAreNearlyUncorrelated)
{
    const Roster r = desk_roster();
    const auto& cs = r.classes();
    for (std::size_t i = 0; i < cs.size(); ++i)
        for (std::size_t j = i + 1; j < cs.size(); ++j) {
            const Signal a = synth_signal(cs[i], 1, 0.0), b = synth_signal(cs[j], 2, 0.0);
            EXPECT_LT(std::abs(pearson(a.samples.data(), b.samples.data())), 0.2) << cs[i].name << " " << cs[j].name;
        }
}

TEST(Signal, NoiselessSynthesisIsDeterministic)
{
    const ClassSpec& spec = desk_roster().at(0);
    EXPECT_EQ(synth_signal(spec, 9, 0.0).samples, synth_signal(spec, 9, 0.0).samples);
    EXPECT_EQ(synth_signal(spec, 9, 0.1).samples, synth_signal(spec, 9, 0.1).samples);
}

TEST(Signal, PeakNormalisedAndLabelled)
{
    const ClassSpec& spec = desk_roster().at(4);
    const Signal s = synth_signal(spec, 5, 0.2);
    EXPECT_NEAR(peak(s), 1.0, 1e-12);
    EXPECT_EQ(s.provenance, std::set<ClassId>{4});
}

TEST(Signal, RejectsExcessiveNoise)
{
    EXPECT_THROW(synth_signal(desk_roster().at(0), 1, 0.5), ConfigError);
    EXPECT_THROW(synth_signal(desk_roster().at(0), 1, -0.1), ConfigError);
}

TEST(Signal, MixIsSumUnderPeakGuard)
{
    const Roster r = desk_roster();
    const Signal a = synth_signal(r.at(0), 1, 0.0), b = synth_signal(r.at(4), 2, 0.0);
    const Signal m = mix(a, b);
    EXPECT_LE(peak(m), 1.0 + 1e-12);
    EXPECT_EQ(m.provenance, (std::set<ClassId>{0, 4}));
    double raw_peak = 0;
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        raw_peak = std::max(raw_peak, std::abs(a.samples[i] + b.samples[i]));
    const double scale = std::max(1.0, raw_peak);
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        EXPECT_NEAR(m.samples[i], (a.samples[i] + b.samples[i]) / scale, 1e-15);

    const Signal short_one{Tensor({8}), {0}};
    EXPECT_THROW(mix(a, short_one), ShapeError);
}

TEST(Render, TruthMatchesRequestAndIsDeterministic)
{
    const Roster r = desk_roster();
    const GlyphImage img = render_image({1, 5}, r, 42);
    EXPECT_EQ(img.truth_classes(), (std::set<ClassId>{1, 5}));
    EXPECT_EQ(img.pixels, render_image({1, 5}, r, 42).pixels);
    for (const auto& t : img.truth) {
        EXPECT_LE(t.box.x + t.box.w, r.render().width);
        EXPECT_LE(t.box.y + t.box.h, r.render().height);
    }
}

TEST(Render, GlyphPixelsCarryTheClassColour)
{
    const Roster r = desk_roster();
    const GlyphImage img = render_image({2}, r, 3);
    const Box b = img.truth.front().box;
    const ClassSpec& spec = r.at(2);
    std::size_t painted = 0;
    for (std::size_t v = 0; v < b.h; ++v)
        for (std::size_t u = 0; u < b.w; ++u)
            if (glyph_mask(spec.shape, u, v, b.w)) {
                EXPECT_EQ(img.pixel(b.y + v, b.x + u), spec.color);
                ++painted;
            }
    EXPECT_GT(painted, 10u);
}

TEST(Render, RejectsInvalidSceneRequests)
{
    const Roster r = desk_roster();
    EXPECT_THROW(render_image({}, r, 1), ConfigError);
    EXPECT_THROW(render_image({0, 0}, r, 1), ConfigError);
    EXPECT_THROW(render_image({4, 5}, r, 1), ConfigError);
    EXPECT_THROW(render_image({99}, r, 1), ConfigError);
    // A full grid of glyphs still takes a backdrop.
    EXPECT_EQ(render_image({0, 1, 2, 3, 4}, r, 1).truth.size(), 5u);

    RenderParams one_cell;
    one_cell.cell = 32;
    const Roster tight(desk_roster().classes(), 256, one_cell);
    EXPECT_THROW(render_image({0, 1}, tight, 1), ConfigError);
    EXPECT_NO_THROW(render_image({0, 4}, tight, 1));
}

TEST(Dataset, DeskScaleCountsAndInvariants)
{
    const Roster r = desk_roster();
    const auto tuples = build_dataset(r, desk_combinations(), 200, 7);
    ASSERT_EQ(tuples.size(), 2400u);
    for (std::size_t i = 0; i < tuples.size(); i += 97) {
        EXPECT_NO_THROW(verify_tuple(tuples[i]));
        EXPECT_EQ(tuples[i].id, i);
        EXPECT_EQ(tuples[i].a_mix.provenance, (std::set<ClassId>{tuples[i].fg_class, tuples[i].bg_class}));
    }
    const auto splits = split_dataset(tuples, {}, 7);
    std::map<Combination, std::array<int, 3>> per;
    for (auto i : splits.train)
        ++per[{tuples[i].fg_class, tuples[i].bg_class}][0];
    for (auto i : splits.val)
        ++per[{tuples[i].fg_class, tuples[i].bg_class}][1];
    for (auto i : splits.test)
        ++per[{tuples[i].fg_class, tuples[i].bg_class}][2];
    ASSERT_EQ(per.size(), 12u);
    for (const auto& [combo, n] : per)
        EXPECT_EQ(n, (std::array<int, 3>{160, 20, 20}));
}

TEST(Dataset, SplitIsSeededAndDisjoint)
{
    const Roster r = desk_roster();
    const auto tuples = build_dataset(r, desk_combinations(), 10, 1);
    const auto a = split_dataset(tuples, {}, 5), b = split_dataset(tuples, {}, 5);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    std::set<std::size_t> all(a.train.begin(), a.train.end());
    all.insert(a.val.begin(), a.val.end());
    all.insert(a.test.begin(), a.test.end());
    EXPECT_EQ(all.size(), tuples.size());
}

TEST(Dataset, TestOnlyCombinationsStayOutOfTraining)
{
    const Roster r = paper_roster();
    const auto tuples = build_dataset(r, paper_combinations(), 4, 2);
    const auto unrealistic = paper_unrealistic_combinations();
    const auto s = split_dataset(tuples, {}, 2, unrealistic);
    for (auto i : s.train)
        EXPECT_EQ(std::count(unrealistic.begin(), unrealistic.end(),
                             Combination{tuples[i].fg_class, tuples[i].bg_class}),
                  0);
}

TEST(Dataset, TooSmallCombinationIsRejected)
{
    const Roster r = desk_roster();
    const auto tuples = build_dataset(r, desk_combinations(), 2, 1);
    EXPECT_THROW(split_dataset(tuples, {}, 1), DataError);
}

TEST(Dataset, VerifyTupleCatchesBrokenInvariants)
{
    const Roster r = desk_roster();
    TrainingTuple t = make_tuple(r, {0, 4}, 1, 0);
    TrainingTuple wrong_mix = t;
    wrong_mix.a_mix.provenance = {0};
    EXPECT_THROW(verify_tuple(wrong_mix), DataError);
    TrainingTuple wrong_image = t;
    wrong_image.v1 = t.v2;
    EXPECT_THROW(verify_tuple(wrong_image), DataError);
}

TEST(DatasetIo, RoundTripAndIdempotentManifest)
{
    const Roster r = desk_roster();
    const auto tuples = build_dataset(r, desk_combinations(), 3, 4);
    const auto splits = split_dataset(tuples, {}, 4);
    const fs::path dir = scratch_dir("dataset_io");
    save_dataset(dir, tuples, splits, "abc123");
    std::ifstream f1(dir / "manifest.csv");
    const std::string first((std::istreambuf_iterator<char>(f1)), {});
    save_dataset(dir, tuples, splits, "abc123");
    std::ifstream f2(dir / "manifest.csv");
    const std::string second((std::istreambuf_iterator<char>(f2)), {});
    EXPECT_EQ(first, second);
    EXPECT_EQ(std::count(first.begin(), first.end(), '\n'), 1 + static_cast<long>(tuples.size()));

    const StoredDataset loaded = load_dataset(dir, r);
    EXPECT_EQ(loaded.config_hash, "abc123");
    ASSERT_EQ(loaded.tuples.size(), tuples.size());
    EXPECT_EQ(loaded.tuples[5].a_mix.samples, tuples[5].a_mix.samples);
    EXPECT_EQ(loaded.tuples[5].v1.pixels, tuples[5].v1.pixels);
    EXPECT_EQ(loaded.splits.test, splits.test);
    fs::remove_all(dir);
}

TEST(DatasetIo, MissingManifestIsADataError)
{
    EXPECT_THROW(load_dataset(scratch_dir("empty"), desk_roster()), DataError);
}

TEST(ImageIo, PpmRoundTrip)
{
    const Roster r = desk_roster();
    const Raster ras = to_raster(render_image({0, 4}, r, 1), 2);
    EXPECT_EQ(ras.width, 64u);
    const fs::path p = scratch_dir("ppm") / "img.ppm";
    write_ppm(p, ras);
    const Raster back = read_ppm(p);
    EXPECT_EQ(back.rgb, ras.rgb);
}
