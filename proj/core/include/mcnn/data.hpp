#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mcnn/error.hpp"

namespace mcnn {

// One real-valued series with a dense class index and the id of the original
// row it came from (slices keep their parent's id).
struct LabeledSeries {
    std::size_t label = 0;
    std::vector<double> values;
    std::size_t provenance = 0;
};

struct Dataset {
    std::vector<LabeledSeries> items;
    std::vector<double> label_values; // class index -> original label value
    std::size_t series_length = 0;    // uniform length; 0 when variable

    std::size_t num_classes() const { return label_values.size(); }
    std::vector<std::size_t> class_counts() const;
};

// UCR text format: one series per line, label first, comma-separated
// (whitespace-separated accepted as a fallback). Labels are remapped to
// dense 0-based indices by sorted original value.
Dataset load_ucr(const std::string& path);

// Same format, but rows may have different lengths (prediction input only).
Dataset load_ucr_variable(const std::string& path);

// Serialize in the comma-separated UCR format with full double precision.
void save_ucr(const Dataset& dataset, const std::string& path);

// Per-series standardization: mean 0, population standard deviation 1.
// Constant series map to all zeros.
std::vector<double> z_normalize(const std::vector<double>& series);
void z_normalize(Dataset& dataset);

// The datasets that are z-normalized during preprocessing by convention;
// matched case-insensitively against the dataset name.
bool znorm_by_default(const std::string& dataset_name);

// Dataset name from a file path: strip directories, extension, and a
// trailing _TRAIN/_TEST marker.
std::string dataset_name_from_path(const std::string& path);

// Per-class proportional split with a seeded shuffle; part_b gets
// max(1, round(fraction * class_count)) members of each class.
std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double fraction,
                                             std::uint64_t seed);

// Window-slicing augmentation: every slice of length max(2, round(ratio * n))
// becomes an independent instance with its parent's label and provenance.
Dataset augment_by_slicing(const Dataset& dataset, double slice_ratio);

} // namespace mcnn
