#include "mixscape/errors.hpp"
#include "mixscape/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace mixscape {

double crs(std::span<const DetectionResult> detected, std::span<const std::set<ClassId>> required)
{
    if (detected.size() != required.size())
        throw ContractError("crs: " + std::to_string(detected.size()) + " detections for " +
                            std::to_string(required.size()) + " requirements");
    if (detected.empty())
        throw EvaluationError("crs: empty evaluation set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < detected.size(); ++i) {
        const auto found = detected[i].classes();
        hits += std::includes(found.begin(), found.end(), required[i].begin(), required[i].end());
    }
    return static_cast<double>(hits) / static_cast<double>(detected.size());
}

bool r_at_k(std::span<const double> image_embedding, const PrototypeTable& table,
            std::span<const ClassId> candidates, std::size_t k, const std::set<ClassId>& required,
            RecallVariant variant)
{
    if (k == 0 || k > candidates.size())
        throw ConfigError("r_at_k: K = " + std::to_string(k) + " with " + std::to_string(candidates.size()) +
                          " candidates");
    if (required.empty())
        throw ConfigError("r_at_k: no required class");
    if (variant == RecallVariant::Plain && (k != 1 || required.size() != 1))
        throw ConfigError("r_at_k: the plain variant needs K = 1 and exactly one required class");
    if (variant == RecallVariant::Star && required.size() > k)
        throw ConfigError("r_at_k: more required classes than K");
    for (ClassId id : required)
        if (std::find(candidates.begin(), candidates.end(), id) == candidates.end())
            throw ConfigError("r_at_k: required class " + std::to_string(id) + " is not a candidate");

    const double norm = l2_norm(image_embedding);
    if (!(norm > kNormFloor))
        throw DegenerateVectorError("r_at_k: degenerate image embedding");
    std::vector<RankedClass> ranked;
    for (ClassId id : candidates)
        ranked.push_back({id, dot(image_embedding, table.at(id).centroid.data()) / norm});
    std::sort(ranked.begin(), ranked.end(), [](const RankedClass& a, const RankedClass& b) {
        if (a.similarity != b.similarity)
            return a.similarity > b.similarity;
        return a.class_id < b.class_id;
    });
    for (ClassId id : required) {
        const auto it = std::find_if(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k),
                                     [&](const RankedClass& r) { return r.class_id == id; });
        if (it == ranked.begin() + static_cast<std::ptrdiff_t>(k))
            return false;
    }
    return true;
}

std::vector<ReportRow> aggregate(const std::vector<SeedResult>& results)
{
    struct Group {
        ReportRow row;
        std::vector<double> values;
        std::set<std::uint64_t> seeds;
    };
    std::vector<Group> groups;
    for (const auto& r : results) {
        if (!(r.value >= 0.0 && r.value <= 1.0))
            throw EvaluationError("aggregate: " + r.metric + " value " + std::to_string(r.value) +
                                  " is not a rate in [0, 1]");
        auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
            return g.row.method == r.method && g.row.mode == r.mode && g.row.metric == r.metric;
        });
        if (it == groups.end()) {
            groups.push_back({ReportRow{r.method, r.mode, r.metric}, {}, {}});
            it = std::prev(groups.end());
        }
        if (!it->seeds.insert(r.seed).second)
            throw EvaluationError("aggregate: seed " + std::to_string(r.seed) + " repeated for " + r.method + "/" +
                                  r.mode + "/" + r.metric);
        it->values.push_back(r.value);
    }
    std::vector<ReportRow> rows;
    for (auto& g : groups) {
        const std::size_t n = g.values.size();
        if (n < kMinSeeds)
            throw EvaluationError("aggregate: " + g.row.method + "/" + g.row.mode + "/" + g.row.metric + " has " +
                                  std::to_string(n) + " seeds; at least " + std::to_string(kMinSeeds) + " required");
        double mean = 0;
        for (double v : g.values)
            mean += v;
        mean /= static_cast<double>(n);
        double var = 0;
        for (double v : g.values)
            var += (v - mean) * (v - mean);
        g.row.mean = mean;
        g.row.std = std::sqrt(var / static_cast<double>(n));
        g.row.n_seeds = n;
        rows.push_back(g.row);
    }
    return rows;
}

namespace {

std::string fixed(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw Error("cannot write " + path.string());
    return os;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ','))
        out.push_back(field);
    return out;
}

const ReportRow* find_row(const std::vector<ReportRow>& rows, const std::string& method, const std::string& mode,
                          const std::string& metric)
{
    for (const auto& r : rows)
        if (r.method == method && r.mode == mode && r.metric == metric)
            return &r;
    return nullptr;
}

} // namespace

void write_results_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows,
                       const std::string& config_hash)
{
    auto os = open_out(path);
    os << "method,mode,metric,mean,std,n_seeds,config_hash\n";
    for (const auto& r : rows)
        os << r.method << ',' << r.mode << ',' << r.metric << ',' << fixed(r.mean) << ',' << fixed(r.std) << ','
           << r.n_seeds << ',' << config_hash << '\n';
    if (!os)
        throw Error("failed writing " + path.string());
}

std::vector<ReportRow> read_results_csv(const std::filesystem::path& path, std::string* config_hash)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != "method,mode,metric,mean,std,n_seeds,config_hash")
        throw FormatError(path.string() + ": unexpected header");
    std::vector<ReportRow> rows;
    std::string hash;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        const auto f = split_csv(line);
        if (f.size() != 7)
            throw FormatError(path.string() + ": malformed row '" + line + "'");
        if (!hash.empty() && hash != f[6])
            throw DataError(path.string() + ": rows carry different config hashes");
        hash = f[6];
        try {
            rows.push_back({f[0], f[1], f[2], std::stod(f[3]), std::stod(f[4]), std::stoul(f[5])});
        } catch (const std::logic_error&) {
            throw FormatError(path.string() + ": malformed number in '" + line + "'");
        }
    }
    if (config_hash)
        *config_hash = hash;
    return rows;
}

void write_tables(const std::filesystem::path& dir, const std::vector<ReportRow>& rows,
                  const std::string& config_hash)
{
    struct Layout {
        const char* file;
        const char* first_metric;
        const char* first_label;
        const char* second_metric;
        const char* second_label;
    };
    const Layout layouts[] = {
        {"table1.csv", kMixedCrs, "crs", kMixedR2Star, "r2star"},
        {"table2.csv", kForegroundCrs, "crs", kForegroundR1, "r1"},
        {"table3.csv", kBackgroundCrs, "crs", kBackgroundR1, "r1"},
    };
    const std::pair<const char*, const char*> row_order[] = {
        {"baseline", "none"}, {"separator", "A2A"}, {"separator", "A2V"}, {"separator", "A2A+A2V"}};

    for (const auto& l : layouts) {
        auto os = open_out(dir / l.file);
        os << "method,mode," << l.first_label << "_mean," << l.first_label << "_std," << l.second_label << "_mean,"
           << l.second_label << "_std,n_seeds,config_hash\n";
        for (const auto& [method, mode] : row_order) {
            const ReportRow* a = find_row(rows, method, mode, l.first_metric);
            const ReportRow* b = find_row(rows, method, mode, l.second_metric);
            const bool any = a || b;
            if (!any && std::string(method) != "baseline")
                continue;
            os << method << ',' << mode;
            for (const ReportRow* r : {a, b})
                os << ',' << (r ? fixed(r->mean) : "NA") << ',' << (r ? fixed(r->std) : "NA");
            const std::size_t n = a ? a->n_seeds : (b ? b->n_seeds : 0);
            os << ',' << (n ? std::to_string(n) : "NA") << ',' << config_hash << '\n';
        }
        if (!os)
            throw Error("failed writing " + (dir / l.file).string());
    }
}

} // namespace mixscape
