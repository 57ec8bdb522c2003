#pragma once

#include <cstddef>
#include <vector>

#include "mcnn/signal.hpp"

namespace mcnn {

// 1-D discrete convolution of a C x n signal with an F x C x m filter bank,
// valid mode (no padding). The filter is index-reversed against the input
// (true convolution, not cross-correlation):
//
//   out[f][i] = bias[f] + sum_c sum_{j=0..m-1} w[f][c][m-1-j] * in[c][i+j]
//
// Output is F x (n - m + 1).
Signal conv1d(const Signal& input, const FilterBank& bank);

// Max pooling that always produces exactly p outputs per channel. Window i
// covers input positions [floor(i*n/p), floor((i+1)*n/p)), so the windows
// tile the input exactly even when p does not divide n. Ties break toward
// the lowest index. Argmax positions (input index per output cell, flat
// c * p + i indexing) are recorded for backpropagation.
struct PoolResult {
    Signal output;                  // C x p
    std::vector<std::size_t> argmax; // C * p entries, input position per cell
    std::size_t input_length = 0;
};
PoolResult maxpool_by_factor(const Signal& input, std::size_t p);

// Numerically safe softmax (max-subtraction). Output sums to 1.
std::vector<double> softmax(const std::vector<double>& logits);

// Affine map: out[i] = sum_j W[i][j] * x[j] + b[i].
std::vector<double> dense(const std::vector<double>& input, const Matrix& weights,
                          const std::vector<double>& bias);

} // namespace mcnn
