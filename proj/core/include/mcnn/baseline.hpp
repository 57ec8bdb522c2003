#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mcnn/data.hpp"

namespace mcnn {

// Sakoe-Chiba warping window as a fraction of the series length; nullopt
// means unconstrained.
struct DtwParams {
    std::optional<double> window;

    static DtwParams unconstrained() { return {}; }
    static DtwParams banded(double fraction);
};

// 1-NN under squared Euclidean distance; ties go to the lowest train index.
double euclidean_1nn(const Dataset& train, const Dataset& test, std::size_t threads = 1);

// Dynamic-programming alignment cost with squared local costs and steps
// {diagonal, up, left}. With a window, cells outside the band of radius
// ceil(window * n) around the diagonal are infeasible. No square root is
// taken; the accumulated squared cost is returned.
double dtw_distance(const std::vector<double>& a, const std::vector<double>& b,
                    const DtwParams& params = {});

// 1-NN under dtw_distance.
double dtw_1nn(const Dataset& train, const Dataset& test, const DtwParams& params = {},
               std::size_t threads = 1);

// Leave-one-out 1-NN accuracy on the training set for each candidate window;
// the best accuracy wins, ties go to the smallest window. Default candidates
// are 0%..10% in 1% steps.
double dtw_cv_window(const Dataset& train, const std::vector<double>& candidates =
                                               {0.00, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07,
                                                0.08, 0.09, 0.10},
                     std::size_t threads = 1);

// Sliding squared Euclidean distance between every length-m window of T and
// the (index-reversed) filter f, computed via the three-term decomposition
//   sum t^2 + sum f^2 - 2 (T * f)[i]
// where T * f is the 1-D convolution.
std::vector<double> euclidean_via_conv(const std::vector<double>& series,
                                       const std::vector<double>& filter);

} // namespace mcnn
