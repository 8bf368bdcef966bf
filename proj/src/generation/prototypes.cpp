#include "mixscape/errors.hpp"
#include "mixscape/generation.hpp"
#include "mixscape/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace mixscape {

namespace {
constexpr char kMagic[4] = {'M', 'S', 'L', 'P'};
constexpr unsigned char kVersion = 1;
} // namespace

PrototypeTable::PrototypeTable(Roster roster, std::vector<Prototype> entries)
    : roster_(std::move(roster)), entries_(std::move(entries))
{
    std::sort(entries_.begin(), entries_.end(),
              [](const Prototype& a, const Prototype& b) { return a.class_id < b.class_id; });
    const auto ids = roster_.ids();
    if (entries_.size() != ids.size())
        throw ConfigError("prototype table has " + std::to_string(entries_.size()) + " centroids for " +
                          std::to_string(ids.size()) + " classes");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (entries_[i].class_id != ids[i])
            throw ConfigError("prototype table does not match the roster at class " + std::to_string(ids[i]));
        const Tensor& c = entries_[i].centroid;
        if (c.rank() != 1 || c.size() != entries_.front().centroid.size())
            throw ConfigError("centroids must be vectors of one common dimension");
        if (std::abs(l2_norm(c.data()) - 1.0) > 1e-9)
            throw ConfigError("centroid of class " + std::to_string(ids[i]) + " is not unit norm");
    }
}

const Prototype& PrototypeTable::at(ClassId id) const
{
    for (const auto& p : entries_)
        if (p.class_id == id)
            return p;
    throw ConfigError("no prototype for class " + std::to_string(id));
}

PrototypeTable build_prototypes(const Mlp& image_encoder,
                                const std::vector<std::pair<ClassId, const GlyphImage*>>& images,
                                const Roster& roster, std::size_t min_per_class)
{
    std::map<ClassId, std::vector<const GlyphImage*>> by_class;
    for (const auto& [id, img] : images) {
        roster.at(id);
        by_class[id].push_back(img);
    }
    std::vector<Prototype> entries;
    for (ClassId id : roster.ids()) {
        const auto it = by_class.find(id);
        const std::size_t n = it == by_class.end() ? 0 : it->second.size();
        if (n < min_per_class)
            throw ConfigError("class " + std::to_string(id) + " has " + std::to_string(n) + " images; at least " +
                              std::to_string(min_per_class) + " required for a prototype");
        const Tensor z = l2_normalize_rows(image_encoder.forward(image_batch(it->second)));
        Tensor mean({z.cols()});
        for (std::size_t r = 0; r < z.rows(); ++r)
            for (std::size_t c = 0; c < z.cols(); ++c)
                mean[c] += z(r, c);
        entries.push_back({id, l2_normalize(mean)});
    }
    return PrototypeTable(roster, std::move(entries));
}

void save_prototypes(const std::filesystem::path& path, const PrototypeTable& table, const std::string& tag)
{
    const auto& entries = table.entries();
    Tensor ids({entries.size()});
    Tensor centroids({entries.size(), table.dim()});
    for (std::size_t i = 0; i < entries.size(); ++i) {
        ids[i] = entries[i].class_id;
        std::copy(entries[i].centroid.data().begin(), entries[i].centroid.data().end(), centroids.row(i).begin());
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw Error("cannot write " + path.string());
    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    write_string(os, tag);
    write_tensor(os, ids);
    write_tensor(os, centroids);
    if (!os)
        throw Error("failed writing " + path.string());
}

PrototypeTable load_prototypes(const std::filesystem::path& path, const Roster& roster, std::string* tag)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error("cannot open " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kMagic))
        throw FormatError(path.string() + ": not a prototype file");
    const int version = is.get();
    if (version != kVersion)
        throw FormatError(path.string() + ": unsupported prototype version");
    std::string stored_tag = read_string(is);
    const Tensor ids = read_tensor(is);
    const Tensor centroids = read_tensor(is);
    if (ids.rank() != 1 || centroids.rank() != 2 || centroids.rows() != ids.size())
        throw FormatError(path.string() + ": inconsistent prototype records");
    std::vector<Prototype> entries;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto row = centroids.row(i);
        entries.push_back({static_cast<ClassId>(ids[i]), Tensor({row.size()}, {row.begin(), row.end()})});
    }
    if (tag)
        *tag = std::move(stored_tag);
    return PrototypeTable(roster, std::move(entries));
}

} // namespace mixscape
