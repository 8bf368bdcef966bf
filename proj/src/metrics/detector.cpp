#include "mixscape/errors.hpp"
#include "mixscape/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace mixscape {

std::set<ClassId> DetectionResult::classes() const
{
    std::set<ClassId> out;
    for (const auto& d : detections)
        out.insert(d.class_id);
    return out;
}

bool DetectionResult::contains(ClassId id) const
{
    return std::any_of(detections.begin(), detections.end(), [&](const Detection& d) { return d.class_id == id; });
}

double normalized_cross_correlation(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size() || a.empty())
        throw ContractError("normalized_cross_correlation: sequences differ in length or are empty");
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    constexpr double kFlat = 1e-12;
    if (saa <= kFlat || sbb <= kFlat)
        return 0.0;
    return sab / std::sqrt(saa * sbb);
}

namespace {

// exp(-|pixel - colour|² / σ²) for every pixel, row-major.
std::vector<double> color_match(const GlyphImage& img, const Rgb& c)
{
    const std::size_t h = img.height(), w = img.width();
    std::vector<double> m(h * w);
    const double s2 = kColorMatchSigma * kColorMatchSigma;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const Rgb p = img.pixel(y, x);
            const double d2 = (p.r - c.r) * (p.r - c.r) + (p.g - c.g) * (p.g - c.g) + (p.b - c.b) * (p.b - c.b);
            m[y * w + x] = std::exp(-d2 / s2);
        }
    return m;
}

struct GlyphMatch {
    double score = 0;
    Box box;
};

// The glyph mask inside a window with a one-pixel empty margin, so that a
// uniformly coloured region does not correlate with the shape.
GlyphMatch match_glyph(const std::vector<double>& m, const ClassSpec& spec, const RenderParams& rp)
{
    const std::size_t win = rp.glyph + 2;
    std::vector<double> templ(win * win, 0.0);
    for (std::size_t v = 0; v < rp.glyph; ++v)
        for (std::size_t u = 0; u < rp.glyph; ++u)
            templ[(v + 1) * win + (u + 1)] = glyph_mask(spec.shape, u, v, rp.glyph) ? 1.0 : 0.0;

    const int inset = static_cast<int>((rp.cell - rp.glyph) / 2);
    const std::size_t per_row = rp.width / rp.cell;
    GlyphMatch best;
    std::vector<double> patch(win * win);
    for (std::size_t cell = 0; cell < rp.capacity(); ++cell)
        for (int jy = -rp.jitter; jy <= rp.jitter; ++jy)
            for (int jx = -rp.jitter; jx <= rp.jitter; ++jx) {
                const long ox = static_cast<long>((cell % per_row) * rp.cell) + inset + jx;
                const long oy = static_cast<long>((cell / per_row) * rp.cell) + inset + jy;
                const long wx = ox - 1, wy = oy - 1;
                if (wx < 0 || wy < 0 || wx + static_cast<long>(win) > static_cast<long>(rp.width) ||
                    wy + static_cast<long>(win) > static_cast<long>(rp.height))
                    continue;
                for (std::size_t v = 0; v < win; ++v)
                    for (std::size_t u = 0; u < win; ++u)
                        patch[v * win + u] = m[(static_cast<std::size_t>(wy) + v) * rp.width +
                                               static_cast<std::size_t>(wx) + u];
                const double s = normalized_cross_correlation(templ, patch);
                if (s > best.score) {
                    best.score = s;
                    best.box = Box{static_cast<std::size_t>(ox), static_cast<std::size_t>(oy), rp.glyph, rp.glyph};
                }
            }
    return best;
}

} // namespace

DetectionResult detect(const GlyphImage& image, const Roster& roster)
{
    const RenderParams& rp = roster.render();
    if (image.pixels.rank() != 3 || image.height() != rp.height || image.width() != rp.width ||
        image.pixels.extent(2) != 3)
        throw ConfigError("detect: image shape " + shape_string(image.pixels.shape()) + " does not match the roster's " +
                          std::to_string(rp.height) + "x" + std::to_string(rp.width) + "x3");

    DetectionResult result;
    std::vector<bool> covered(rp.height * rp.width, false);
    for (const ClassSpec& spec : roster.classes()) {
        if (spec.role != Role::Foreground)
            continue;
        const GlyphMatch g = match_glyph(color_match(image, spec.color), spec, rp);
        if (g.score >= kDetectionThreshold) {
            result.detections.push_back({spec.id, g.score, g.box});
            for (std::size_t y = g.box.y - 1; y < g.box.y + g.box.h + 1; ++y)
                for (std::size_t x = g.box.x - 1; x < g.box.x + g.box.w + 1; ++x)
                    covered[y * rp.width + x] = true;
        }
    }

    for (const ClassSpec& spec : roster.classes()) {
        if (spec.role != Role::Background)
            continue;
        const auto m = color_match(image, spec.color);
        std::vector<double> pattern, observed;
        for (std::size_t y = 0; y < rp.height; ++y)
            for (std::size_t x = 0; x < rp.width; ++x) {
                if (covered[y * rp.width + x])
                    continue;
                pattern.push_back(backdrop_primary(spec, y, x) ? 1.0 : 0.0);
                observed.push_back(m[y * rp.width + x]);
            }
        if (pattern.empty())
            continue;
        const double s = normalized_cross_correlation(pattern, observed);
        if (s >= kDetectionThreshold)
            result.detections.push_back({spec.id, s, Box{0, 0, rp.width, rp.height}});
    }
    std::sort(result.detections.begin(), result.detections.end(),
              [](const Detection& a, const Detection& b) { return a.class_id < b.class_id; });
    return result;
}

} // namespace mixscape
