#include "mixscape/dataset_io.hpp"

#include "mixscape/errors.hpp"
#include "mixscape/image_io.hpp"
#include "mixscape/tensor_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace mixscape {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestHeader = "tuple_id,fg_class,bg_class,split,tensor_file,v1_box,config_hash";

std::string tuple_file_name(std::size_t id)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "tuples/%06zu.mslt", id);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ','))
        out.push_back(cell);
    return out;
}

std::size_t parse_size(const std::string& s, const std::string& what)
{
    try {
        std::size_t pos = 0;
        const auto v = std::stoull(s, &pos);
        if (pos != s.size())
            throw FormatError("");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw FormatError("manifest: bad " + what + " '" + s + "'");
    }
}

} // namespace

void save_dataset(const fs::path& dir, const std::vector<TrainingTuple>& tuples, const DatasetSplits& splits,
                  const std::string& config_hash)
{
    fs::create_directories(dir / "tuples");
    std::map<std::size_t, Split> membership;
    for (auto i : splits.train)
        membership[i] = Split::Train;
    for (auto i : splits.val)
        membership[i] = Split::Val;
    for (auto i : splits.test)
        membership[i] = Split::Test;
    if (membership.size() != tuples.size())
        throw DataError("splits do not cover the tuple list exactly");

    std::ofstream manifest(dir / "manifest.csv", std::ios::trunc);
    if (!manifest)
        throw FormatError("cannot write " + (dir / "manifest.csv").string());
    manifest << kManifestHeader << '\n';
    for (std::size_t i = 0; i < tuples.size(); ++i) {
        const auto& t = tuples[i];
        const std::string file = tuple_file_name(t.id);
        save_tensors(dir / file, {t.a1.samples, t.a2.samples, t.a_mix.samples, t.v1.pixels, t.v2.pixels});
        const Box& b = t.v1.truth.front().box;
        manifest << t.id << ',' << t.fg_class << ',' << t.bg_class << ',' << split_name(membership.at(i)) << ','
                 << file << ',' << b.x << ':' << b.y << ':' << b.w << ':' << b.h << ',' << config_hash << '\n';
    }
    if (!manifest)
        throw FormatError("write failed: manifest.csv");
}

StoredDataset load_dataset(const fs::path& dir, const Roster& roster)
{
    std::ifstream manifest(dir / "manifest.csv");
    if (!manifest)
        throw DataError("dataset manifest not found: " + (dir / "manifest.csv").string());
    std::string line;
    if (!std::getline(manifest, line) || line != kManifestHeader)
        throw FormatError("manifest.csv has an unexpected header");

    StoredDataset out;
    while (std::getline(manifest, line)) {
        if (line.empty())
            continue;
        const auto cells = split_csv(line);
        if (cells.size() != 7)
            throw FormatError("manifest row has " + std::to_string(cells.size()) + " columns: " + line);
        TrainingTuple t;
        t.id = parse_size(cells[0], "tuple_id");
        t.fg_class = static_cast<ClassId>(parse_size(cells[1], "fg_class"));
        t.bg_class = static_cast<ClassId>(parse_size(cells[2], "bg_class"));
        const Split split = parse_split(cells[3]);
        if (out.config_hash.empty())
            out.config_hash = cells[6];
        else if (out.config_hash != cells[6])
            throw DataError("manifest mixes rows from different configurations");

        Box box;
        {
            std::istringstream bs(cells[5]);
            char c1 = 0, c2 = 0, c3 = 0;
            bs >> box.x >> c1 >> box.y >> c2 >> box.w >> c3 >> box.h;
            if (!bs || c1 != ':' || c2 != ':' || c3 != ':')
                throw FormatError("manifest: bad v1_box '" + cells[5] + "'");
        }
        auto tensors = load_tensors(dir / cells[4]);
        if (tensors.size() != 5)
            throw FormatError(cells[4] + ": expected 5 tensor records, found " + std::to_string(tensors.size()));
        if (!roster.contains(t.fg_class) || !roster.contains(t.bg_class))
            throw DataError("manifest references classes outside the roster");
        const RenderParams& rp = roster.render();
        t.a1 = Signal{std::move(tensors[0]), {t.fg_class}};
        t.a2 = Signal{std::move(tensors[1]), {t.bg_class}};
        t.a_mix = Signal{std::move(tensors[2]), {t.fg_class, t.bg_class}};
        t.v1 = GlyphImage{std::move(tensors[3]), {{t.fg_class, box}}};
        t.v2 = GlyphImage{std::move(tensors[4]), {{t.bg_class, Box{0, 0, rp.width, rp.height}}}};
        if (t.a1.samples.shape() != Shape{roster.signal_length()} ||
            t.v1.pixels.shape() != Shape{rp.height, rp.width, 3} || t.v2.pixels.shape() != t.v1.pixels.shape())
            throw DataError("tuple " + std::to_string(t.id) + " does not match the roster dimensions");
        verify_tuple(t);

        const std::size_t pos = out.tuples.size();
        switch (split) {
        case Split::Train: out.splits.train.push_back(pos); break;
        case Split::Val: out.splits.val.push_back(pos); break;
        case Split::Test: out.splits.test.push_back(pos); break;
        }
        out.tuples.push_back(std::move(t));
    }
    if (out.tuples.empty())
        throw DataError("dataset manifest is empty");
    return out;
}

void export_tuple_images(const fs::path& dir, const TrainingTuple& t, bool png)
{
    fs::create_directories(dir);
    char stem[32];
    std::snprintf(stem, sizeof stem, "%06zu", t.id);
    const Raster v1 = to_raster(t.v1, 4), v2 = to_raster(t.v2, 4);
    write_ppm(dir / (std::string(stem) + "_v1.ppm"), v1);
    write_ppm(dir / (std::string(stem) + "_v2.ppm"), v2);
    if (png) {
        write_png(dir / (std::string(stem) + "_v1.png"), v1);
        write_png(dir / (std::string(stem) + "_v2.png"), v2);
    }
}

} // namespace mixscape
