#include "mixscape/errors.hpp"
#include "mixscape/rng.hpp"
#include "mixscape/synthworld.hpp"

#include <algorithm>
#include <numeric>

namespace mixscape {

Rgb GlyphImage::pixel(std::size_t y, std::size_t x) const
{
    const std::size_t w = width();
    const std::size_t base = (y * w + x) * 3;
    return {pixels[base], pixels[base + 1], pixels[base + 2]};
}

std::set<ClassId> GlyphImage::truth_classes() const
{
    std::set<ClassId> out;
    for (const auto& t : truth)
        out.insert(t.class_id);
    return out;
}

Rgb stripe_tone(const Rgb& c)
{
    return {0.5 * (c.r + kNeutralBackdrop.r), 0.5 * (c.g + kNeutralBackdrop.g), 0.5 * (c.b + kNeutralBackdrop.b)};
}

bool backdrop_primary(const ClassSpec& spec, std::size_t y, std::size_t x)
{
    const std::size_t band = 2 + static_cast<std::size_t>(spec.id / 3) % 3;
    switch (spec.id % 3) {
    case 0: return (y / band) % 2 == 0;
    case 1: return (x / band) % 2 == 0;
    default: return ((x + y) / band) % 2 == 0;
    }
}

bool glyph_mask(GlyphShape shape, std::size_t u, std::size_t v, std::size_t box)
{
    const double c = (static_cast<double>(box) - 1.0) / 2.0;
    const double du = static_cast<double>(u) - c;
    const double dv = static_cast<double>(v) - c;
    const double r2 = du * du + dv * dv;
    const double outer = c + 0.1;
    const double arm = static_cast<double>(box) * 0.15;
    switch (shape) {
    case GlyphShape::Circle: return r2 <= outer * outer;
    case GlyphShape::Ring: return r2 <= outer * outer && r2 >= (0.55 * c) * (0.55 * c);
    case GlyphShape::Square: return u >= 1 && v >= 1 && u + 2 <= box && v + 2 <= box;
    case GlyphShape::Cross: return std::abs(du) <= arm || std::abs(dv) <= arm;
    case GlyphShape::Bar: return std::abs(dv) <= arm;
    case GlyphShape::Triangle:
        // Apex at the top row, base on the bottom row.
        return v >= 1 && std::abs(du) <= 0.5 * static_cast<double>(v);
    }
    return false;
}

namespace {

void paint(Tensor& px, std::size_t width, std::size_t y, std::size_t x, const Rgb& c)
{
    const std::size_t base = (y * width + x) * 3;
    px[base] = c.r;
    px[base + 1] = c.g;
    px[base + 2] = c.b;
}

} // namespace

GlyphImage render_image(const std::vector<ClassId>& classes, const Roster& roster, std::uint64_t seed)
{
    const RenderParams& rp = roster.render();
    if (classes.empty())
        throw ConfigError("render_image needs at least one class");
    std::vector<const ClassSpec*> glyphs;
    const ClassSpec* backdrop = nullptr;
    std::set<ClassId> seen;
    for (ClassId id : classes) {
        if (!seen.insert(id).second)
            throw ConfigError("render_image: duplicate class " + std::to_string(id));
        const ClassSpec& spec = roster.at(id);
        if (spec.role == Role::Background) {
            if (backdrop)
                throw ConfigError("render_image: at most one background class per scene");
            backdrop = &spec;
        } else {
            glyphs.push_back(&spec);
        }
    }
    if (glyphs.size() > rp.capacity())
        throw ConfigError("render_image: " + std::to_string(glyphs.size()) + " glyphs exceed layout capacity " +
                          std::to_string(rp.capacity()));

    const std::size_t h = rp.height, w = rp.width;
    GlyphImage img;
    img.pixels = Tensor({h, w, 3});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            Rgb c = kNeutralBackdrop;
            if (backdrop)
                c = backdrop_primary(*backdrop, y, x) ? backdrop->color : stripe_tone(backdrop->color);
            paint(img.pixels, w, y, x, c);
        }

    Rng rng(derive_seed(seed, 0x6c61796f7574ULL));
    std::vector<std::size_t> cells(rp.capacity());
    std::iota(cells.begin(), cells.end(), std::size_t{0});
    rng.shuffle(cells);
    const std::size_t cells_per_row = w / rp.cell;
    const int inset = static_cast<int>((rp.cell - rp.glyph) / 2);

    std::size_t next_cell = 0;
    for (ClassId id : classes) {
        const ClassSpec& spec = roster.at(id);
        if (spec.role == Role::Background) {
            img.truth.push_back({id, Box{0, 0, w, h}});
            continue;
        }
        const std::size_t cell = cells[next_cell++];
        const int jx = static_cast<int>(rng.below(2 * rp.jitter + 1)) - rp.jitter;
        const int jy = static_cast<int>(rng.below(2 * rp.jitter + 1)) - rp.jitter;
        const std::size_t ox = (cell % cells_per_row) * rp.cell + static_cast<std::size_t>(inset + jx);
        const std::size_t oy = (cell / cells_per_row) * rp.cell + static_cast<std::size_t>(inset + jy);
        for (std::size_t v = 0; v < rp.glyph; ++v)
            for (std::size_t u = 0; u < rp.glyph; ++u)
                if (glyph_mask(spec.shape, u, v, rp.glyph))
                    paint(img.pixels, w, oy + v, ox + u, spec.color);
        img.truth.push_back({id, Box{ox, oy, rp.glyph, rp.glyph}});
    }
    return img;
}

} // namespace mixscape
