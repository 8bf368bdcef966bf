#pragma once

#include "mixscape/encoders.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mixscape {

struct Prototype {
    ClassId class_id = 0;
    Tensor centroid; // [d], unit norm
};

/// One unit-norm centroid per roster class, ordered by class id.
class PrototypeTable {
public:
    /// Throws ConfigError unless every roster class has exactly one unit-norm
    /// centroid of a common dimension.
    PrototypeTable(Roster roster, std::vector<Prototype> entries);

    const Roster& roster() const noexcept { return roster_; }
    const std::vector<Prototype>& entries() const noexcept { return entries_; }
    const Prototype& at(ClassId id) const;
    std::size_t dim() const { return entries_.front().centroid.size(); }

private:
    Roster roster_;
    std::vector<Prototype> entries_;
};

/// Centroid = normalised mean of the normalised image embeddings of a class.
/// Throws ConfigError for a class with fewer than `min_per_class` images.
PrototypeTable build_prototypes(const Mlp& image_encoder,
                                const std::vector<std::pair<ClassId, const GlyphImage*>>& images,
                                const Roster& roster, std::size_t min_per_class = 5);

// Two tensor records (class ids as doubles, centroids [K × d]) after a
// "MSLP" header carrying the config hash.
void save_prototypes(const std::filesystem::path& path, const PrototypeTable& table, const std::string& tag = {});
PrototypeTable load_prototypes(const std::filesystem::path& path, const Roster& roster, std::string* tag = nullptr);

struct RankedClass {
    ClassId class_id = 0;
    double similarity = 0;
};

/// Every class ranked by cosine similarity to e, descending, ties by id.
/// Throws DegenerateVectorError when e cannot be normalised.
std::vector<RankedClass> decode(std::span<const double> e, const PrototypeTable& table);

struct GenerationConfig {
    double lambda = 0.5;
    double tau = 0.35;          // similarity a class needs to be rendered in a mixed scene
    std::uint64_t noise_seed = 0; // layout jitter

    /// Throws ConfigError unless lambda ∈ [0, 1] and tau ∈ (0, 1).
    void validate() const;
};

/// λ·half1 + (1 − λ)·half2.
Tensor combine(const SplitEmbedding& split, double lambda);

struct Generated {
    GlyphImage image;
    std::vector<RankedClass> ranking;
    std::vector<ClassId> rendered;
};

/// Classes of a ranking that clear tau, limited to what one scene can show
/// (one backdrop, as many glyphs as layout cells) by rank; the top class
/// alone when none clears tau.
std::vector<ClassId> select_scene_classes(const std::vector<RankedClass>& ranking, const Roster& roster,
                                          double tau);

/// Decodes an embedding and renders the selected classes in one scene.
Generated generate_from_embedding(std::span<const double> e, const PrototypeTable& table,
                                  const GenerationConfig& cfg);

Generated generate_mixed(const SplitEmbedding& split, const PrototypeTable& table, const GenerationConfig& cfg);

/// One single-class scene per half, showing that half's top decoded class.
std::pair<Generated, Generated> generate_separated(const SplitEmbedding& split, const PrototypeTable& table,
                                                   const GenerationConfig& cfg);

/// Sidecar audit record, one key=value per line:
///   rendered=<id;id...>, ranking=<id:similarity;...>, truth=<id@x:y:w:h;...>
/// followed by the caller's extra keys in the given order.
void write_truth_record(const std::filesystem::path& path, const Generated& g,
                        const std::vector<std::pair<std::string, std::string>>& extra = {});

} // namespace mixscape
