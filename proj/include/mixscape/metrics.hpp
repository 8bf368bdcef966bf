#pragma once

#include "mixscape/generation.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace mixscape {

struct Detection {
    ClassId class_id = 0;
    double score = 0; // best normalised cross-correlation
    Box box;          // matched glyph box, or the full image for a backdrop
};

struct DetectionResult {
    std::vector<Detection> detections; // ascending class id
    std::set<ClassId> classes() const;
    bool contains(ClassId id) const;
};

inline constexpr double kDetectionThreshold = 0.9;
inline constexpr double kColorMatchSigma = 0.05;

/// Pearson correlation of two equally long sequences; 0 when either is constant.
double normalized_cross_correlation(std::span<const double> a, std::span<const double> b);

/// Pixel-only template matcher. For every class it correlates a colour-match
/// map against the class glyph (at each layout cell and jitter offset) or its
/// backdrop stripe pattern (outside detected glyph windows); a class is
/// detected when the best correlation reaches the threshold.
/// Throws ConfigError when the image size differs from the roster's.
DetectionResult detect(const GlyphImage& image, const Roster& roster);

/// Fraction of images whose detected classes include every required class.
/// Throws EvaluationError for an empty set, ContractError on length mismatch.
double crs(std::span<const DetectionResult> detected, std::span<const std::set<ClassId>> required);

enum class RecallVariant {
    Star,  // hit iff all required classes are within the top K
    Plain, // K = 1, one required class, hit iff it ranks first
};

/// Ranks `candidates` by cosine similarity of an image embedding to the class
/// centroids. Throws ConfigError when K exceeds the candidate count, a
/// required class is not a candidate, or the variant preconditions fail.
bool r_at_k(std::span<const double> image_embedding, const PrototypeTable& table,
            std::span<const ClassId> candidates, std::size_t k, const std::set<ClassId>& required,
            RecallVariant variant);

struct SeedResult {
    std::string method; // "baseline" or "separator"
    std::string mode;   // alignment mode name; "none" for the baseline
    std::string metric; // e.g. "mixed_crs"
    std::uint64_t seed = 0;
    double value = 0;
};

struct ReportRow {
    std::string method, mode, metric;
    double mean = 0;
    double std = 0; // population
    std::size_t n_seeds = 0;
};

inline constexpr std::size_t kMinSeeds = 3;

/// One row per (method, mode, metric) in first-appearance order. Throws
/// EvaluationError for a group with fewer than three seeds, a repeated seed
/// or a rate outside [0, 1].
std::vector<ReportRow> aggregate(const std::vector<SeedResult>& results);

// Metric names used by the tables.
inline constexpr const char* kMixedCrs = "mixed_crs";
inline constexpr const char* kMixedR2Star = "mixed_r2star";
inline constexpr const char* kForegroundCrs = "fg_crs";
inline constexpr const char* kForegroundR1 = "fg_r1";
inline constexpr const char* kBackgroundCrs = "bg_crs";
inline constexpr const char* kBackgroundR1 = "bg_r1";

/// results.csv: method,mode,metric,mean,std,n_seeds,config_hash
void write_results_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows,
                       const std::string& config_hash);
std::vector<ReportRow> read_results_csv(const std::filesystem::path& path, std::string* config_hash = nullptr);

/// table1.csv (mixed: crs, r2star), table2.csv (separated foreground: crs, r1)
/// and table3.csv (separated background: crs, r1). Rows: baseline, A2A, A2V,
/// A2A+A2V; cells without a value are written as NA.
void write_tables(const std::filesystem::path& dir, const std::vector<ReportRow>& rows,
                  const std::string& config_hash);

} // namespace mixscape
