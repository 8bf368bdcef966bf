#include "mixscape/errors.hpp"
#include "mixscape/image_io.hpp"
#include "mixscape/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mixscape {

namespace fs = std::filesystem;

namespace {

struct Color {
    std::uint8_t r, g, b;
};

constexpr Color kWhite{255, 255, 255};
constexpr Color kAxis{40, 40, 40};
constexpr Color kGrid{215, 215, 215};
// baseline, A2A, A2V, A2A+A2V
constexpr Color kPalette[] = {{120, 120, 120}, {31, 119, 180}, {214, 39, 40}, {44, 160, 44}};

class Canvas {
public:
    Canvas(std::size_t w, std::size_t h) : r_{w, h, std::vector<std::uint8_t>(w * h * 3, 255)} {}

    void set(long x, long y, Color c)
    {
        if (x < 0 || y < 0 || x >= static_cast<long>(r_.width) || y >= static_cast<long>(r_.height))
            return;
        const std::size_t i = (static_cast<std::size_t>(y) * r_.width + static_cast<std::size_t>(x)) * 3;
        r_.rgb[i] = c.r;
        r_.rgb[i + 1] = c.g;
        r_.rgb[i + 2] = c.b;
    }

    void line(long x0, long y0, long x1, long y1, Color c)
    {
        const long dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        const long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        long err = dx + dy;
        while (true) {
            set(x0, y0, c);
            if (x0 == x1 && y0 == y1)
                break;
            const long e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }

    void fill(long x0, long y0, long x1, long y1, Color c)
    {
        for (long y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
            for (long x = std::min(x0, x1); x <= std::max(x0, x1); ++x)
                set(x, y, c);
    }

    const Raster& raster() const { return r_; }

private:
    Raster r_;
};

struct Curve {
    std::uint64_t seed;
    AlignmentMode mode;
    std::vector<double> val_loss;
};

std::vector<double> read_val_losses(const fs::path& p)
{
    std::ifstream is(p);
    if (!is)
        throw DataError("missing artifact: " + p.string());
    std::string line;
    std::getline(is, line);
    std::vector<double> out;
    while (std::getline(is, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (cells.size() != 4)
            throw FormatError(p.string() + ": malformed row '" + line + "'");
        out.push_back(std::stod(cells[2]));
    }
    return out;
}

std::size_t palette_index(AlignmentMode m)
{
    switch (m) {
    case AlignmentMode::A2A: return 1;
    case AlignmentMode::A2V: return 2;
    case AlignmentMode::A2APlusA2V: return 3;
    }
    return 0;
}

void save_plot(const RunConfig& cfg, const fs::path& stem, const Raster& r)
{
    write_ppm(stem.string() + ".ppm", r);
    if (cfg.png)
        write_png(stem.string() + ".png", r);
}

Raster loss_plot(const std::vector<Curve>& curves)
{
    constexpr long W = 480, H = 320, L = 40, R = 10, T = 10, B = 30;
    Canvas c(W, H);
    double lo = INFINITY, hi = -INFINITY;
    std::size_t epochs = 1;
    for (const auto& cv : curves) {
        for (double v : cv.val_loss) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        epochs = std::max(epochs, cv.val_loss.size());
    }
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    for (int k = 0; k <= 4; ++k) {
        const long y = T + (H - T - B) * k / 4;
        c.line(L, y, W - R, y, kGrid);
    }
    c.line(L, T, L, H - B, kAxis);
    c.line(L, H - B, W - R, H - B, kAxis);
    auto px = [&](std::size_t i) {
        return L + static_cast<long>(std::lround(static_cast<double>(i) * (W - L - R) /
                                                 static_cast<double>(std::max<std::size_t>(1, epochs - 1))));
    };
    auto py = [&](double v) { return T + static_cast<long>(std::lround((hi - v) / (hi - lo) * (H - T - B))); };
    for (const auto& cv : curves) {
        const Color col = kPalette[palette_index(cv.mode)];
        for (std::size_t i = 1; i < cv.val_loss.size(); ++i)
            c.line(px(i - 1), py(cv.val_loss[i - 1]), px(i), py(cv.val_loss[i]), col);
    }
    return c.raster();
}

Raster crs_plot(const std::vector<ReportRow>& rows)
{
    constexpr long W = 360, H = 240, L = 30, R = 10, T = 10, B = 20;
    Canvas c(W, H);
    for (int k = 0; k <= 4; ++k) {
        const long y = T + (H - T - B) * k / 4;
        c.line(L, y, W - R, y, kGrid);
    }
    c.line(L, T, L, H - B, kAxis);
    c.line(L, H - B, W - R, H - B, kAxis);
    const std::pair<const char*, const char*> order[] = {
        {"baseline", "none"}, {"separator", "A2A"}, {"separator", "A2V"}, {"separator", "A2A+A2V"}};
    const long slot = (W - L - R) / 4;
    auto py = [&](double v) { return T + static_cast<long>(std::lround((1.0 - v) * (H - T - B))); };
    for (std::size_t i = 0; i < 4; ++i) {
        const auto it = std::find_if(rows.begin(), rows.end(), [&](const ReportRow& r) {
            return r.method == order[i].first && r.mode == order[i].second && r.metric == kMixedCrs;
        });
        if (it == rows.end())
            continue;
        const long x0 = L + static_cast<long>(i) * slot + slot / 5, x1 = L + static_cast<long>(i + 1) * slot - slot / 5;
        c.fill(x0, py(it->mean), x1, H - B - 1, kPalette[i]);
        const long xm = (x0 + x1) / 2;
        c.line(xm, py(std::min(1.0, it->mean + it->std)), xm, py(std::max(0.0, it->mean - it->std)), kAxis);
    }
    return c.raster();
}

std::string fixed(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

} // namespace

void report_stage(const RunConfig& cfg, const RunLayout& layout)
{
    const fs::path results = layout.eval_dir() / "results.csv";
    if (!fs::exists(results))
        throw DataError("missing artifact: " + results.string());
    std::string hash;
    const auto rows = read_results_csv(results, &hash);
    if (hash != cfg.hash())
        throw ConfigError(results.string() + " was produced under config hash " + hash +
                          "; the current config hashes to " + cfg.hash());

    std::vector<Curve> curves;
    for (auto seed : cfg.seeds)
        for (auto mode : cfg.modes)
            curves.push_back({seed, mode, read_val_losses(layout.run_dir(seed, mode) / "training_log.csv")});

    fs::create_directories(layout.report_dir());
    std::ofstream os(layout.report_dir() / "summary.txt", std::ios::binary | std::ios::trunc);
    if (!os)
        throw Error("cannot write summary.txt");
    os << "config_hash " << hash << "\n";
    os << "seeds";
    for (auto s : cfg.seeds)
        os << ' ' << s;
    os << "\nR@K candidates: all " << cfg.make_roster().classes().size() << " roster classes\n\n";

    const char* metrics[] = {kMixedCrs, kMixedR2Star, kForegroundCrs, kForegroundR1, kBackgroundCrs, kBackgroundR1};
    os << "method     mode      metric        mean    std\n";
    for (const char* m : metrics)
        for (const auto& r : rows)
            if (r.metric == m) {
                char line[128];
                std::snprintf(line, sizeof line, "%-10s %-9s %-12s %6s %6s\n", r.method.c_str(), r.mode.c_str(),
                              r.metric.c_str(), fixed(r.mean).c_str(), fixed(r.std).c_str());
                os << line;
            }

    os << "\nbest epoch by validation loss\n";
    for (const auto& cv : curves) {
        const std::size_t best = select_best_epoch(cv.val_loss);
        os << "  seed " << cv.seed << ' ' << mode_name(cv.mode) << ": epoch " << best << " of " << cv.val_loss.size()
           << ", val_loss " << fixed(cv.val_loss[best - 1]) << '\n';
    }
    os << "\nplots: loss_curves (validation loss per epoch; blue A2A, red A2V, green A2A+A2V),\n"
          "       crs_bars (mixed-scene CRS mean with one-std whisker; grey baseline, then A2A, A2V, A2A+A2V)\n";

    save_plot(cfg, layout.report_dir() / "loss_curves", loss_plot(curves));
    save_plot(cfg, layout.report_dir() / "crs_bars", crs_plot(rows));
}

} // namespace mixscape
