#pragma once

#include "mixscape/synthworld.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mixscape {

struct StoredDataset {
    std::vector<TrainingTuple> tuples;
    DatasetSplits splits;
    std::string config_hash;
};

// Layout: <dir>/manifest.csv plus <dir>/tuples/<id>.mslt, each holding the
// records A1, A2, A_mix, V1 pixels, V2 pixels in that order.
//
// manifest.csv columns:
//   tuple_id,fg_class,bg_class,split,tensor_file,v1_box,config_hash
// where v1_box is "x:y:w:h" of the foreground glyph.
void save_dataset(const std::filesystem::path& dir, const std::vector<TrainingTuple>& tuples,
                  const DatasetSplits& splits, const std::string& config_hash);

/// Throws FormatError for malformed manifests, DataError for tuples that
/// violate their invariants after loading.
StoredDataset load_dataset(const std::filesystem::path& dir, const Roster& roster);

/// Writes V1/V2 of a tuple as P6 PPM (and PNG when requested).
void export_tuple_images(const std::filesystem::path& dir, const TrainingTuple& t, bool png);

} // namespace mixscape
