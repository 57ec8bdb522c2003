#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mcnn/nn.hpp"
#include "mcnn/transform.hpp"

namespace mcnn {

// Full architectural description of one model. Filter lengths are expressed
// as a ratio of the slice length, so one config scales across datasets.
struct McnnConfig {
    BranchSpec branch_spec = BranchSpec::defaults();
    std::size_t local_filters = 256;
    std::size_t full_filters = 256;
    double filter_ratio = 0.1;   // filter length = max(2, round(ratio * slice length))
    std::size_t pooling_factor = 3;
    std::size_t dense_units = 256;
    std::size_t num_classes = 0;
    std::size_t input_length = 0;
    double slice_ratio = 0.9;
    Activation activation = Activation::relu;
    std::size_t full_depth = 1; // number of conv+pool blocks in the full stage

    std::size_t slice_length() const;
    std::size_t local_filter_length() const;
    void validate() const;
};

// All learned parameters plus the config that shaped them.
struct McnnModel {
    McnnConfig config;
    std::uint64_t seed = 0;
    std::vector<ConvLayer> local_layers; // one per branch input, branch order
    std::vector<ConvLayer> full_layers;  // full_depth entries
    DenseLayer dense;                    // hidden fully connected layer
    DenseLayer output;                   // to num_classes logits
    std::vector<double> label_values;    // original label per class index; may be empty

    // Views over every parameter array, in the serialization order.
    std::vector<std::span<double>> param_spans();
    std::vector<std::span<const double>> param_spans() const;
    std::size_t parameter_count() const;
};

// Gradients congruent with McnnModel's parameters.
struct McnnGrads {
    std::vector<ConvGrads> local;
    std::vector<ConvGrads> full;
    DenseGrads dense;
    DenseGrads output;

    std::vector<std::span<double>> spans();
    std::vector<std::span<const double>> spans() const;
    void scale(double factor);
};

// Deterministic parameter initialization: identical (config, seed) pairs
// produce bit-identical models. Throws GeometryError naming the branch when
// the geometry is infeasible.
McnnModel assemble(const McnnConfig& config, std::uint64_t seed);

McnnGrads make_zero_grads(const McnnModel& model);

// Feature maps stacked vertically, channels in declared order. All maps must
// share one length.
Signal deep_concat(const std::vector<Signal>& maps);

// Inference on one slice (series length must equal the config slice length).
// Returns the class probability vector.
std::vector<double> forward(const McnnModel& model, const std::vector<double>& series);

// Forward + cross-entropy backward through the whole network; gradients are
// accumulated (+=) into `grads` so callers can average over a batch.
struct ForwardLoss {
    double loss = 0.0;
    std::size_t predicted = 0;
    std::vector<double> probs;
};
ForwardLoss forward_backward(const McnnModel& model, const std::vector<double>& series,
                             std::size_t label, McnnGrads& grads);

// Slice-level majority vote over all slices of a (possibly longer) series.
// Ties break by the largest summed probability, then the lowest class index.
struct VotePrediction {
    std::size_t cls = 0;
    std::vector<std::size_t> votes;       // slice-level argmax counts
    std::vector<double> summed_probs;     // per-class probability sums
};
VotePrediction predict_with_vote(const McnnModel& model, const std::vector<double>& series);

// Identity-branch-only counterpart with the local filter count scaled by the
// number of branches, so the concatenated map and everything above it keep
// the same width.
McnnConfig plain_cnn_variant(const McnnConfig& config);

// Model file: "MCNN-MODEL v1" header, textual config block, then each
// parameter array as a "param <name> <dims...>" line followed by raw
// little-endian IEEE-754 doubles, row-major. Round-trips are bit-exact.
void save_model(const McnnModel& model, const std::string& path);
void save_model(const McnnModel& model, std::ostream& out);
McnnModel load_model(const std::string& path);
McnnModel load_model(std::istream& in);

// Finite-difference check of the full analytic gradient at one instance.
GradCheckReport grad_check_model(McnnModel& model, const std::vector<double>& series,
                                 std::size_t label, double epsilon = 1e-5);

} // namespace mcnn
