#pragma once

#include <cstddef>
#include <vector>

#include "mcnn/signal.hpp"

namespace mcnn {

// Which transformed views of the raw series feed the network. The identity
// branch passes the series through unchanged; each down-sampling rate k adds
// a multi-scale branch; the moving-average windows together form one
// multi-frequency branch whose smoothed series are stacked as channels.
struct BranchSpec {
    std::vector<std::size_t> downsample_rates; // strictly increasing, each >= 2
    std::vector<std::size_t> ma_windows;       // strictly increasing, each >= 2
    bool include_identity = true;

    static BranchSpec defaults(); // identity + rates {2,3} + windows {3,5}
    static BranchSpec identity_only();

    std::size_t num_branches() const;
    void validate() const;
};

// The assembled per-branch inputs for one series.
struct BranchInputs {
    std::vector<Signal> signals; // in branch order: identity, one per rate, frequency
};

// Keep every k-th point: out[i] = series[k*i], i = 0 .. floor((n-1)/k).
std::vector<double> downsample(const std::vector<double>& series, std::size_t k);

// Mean over each window of `window` consecutive values; output length
// n - window + 1.
std::vector<double> moving_average(const std::vector<double>& series, std::size_t window);

// All contiguous length-s subsequences, in order; n - s + 1 of them.
std::vector<std::vector<double>> window_slices(const std::vector<double>& series, std::size_t s);

// Assemble branch inputs: identity as a 1-channel signal, one 1-channel
// signal per down-sampling rate, and one |ma_windows|-channel signal whose
// channels are the smoothed series truncated (left-aligned) to the common
// length n - max(window) + 1.
BranchInputs build_branches(const std::vector<double>& series, const BranchSpec& spec);

} // namespace mcnn
