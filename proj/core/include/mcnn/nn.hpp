#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcnn/numerics.hpp"
#include "mcnn/signal.hpp"

namespace mcnn {

enum class Activation { identity, relu };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

// Convolution + elementwise activation.
struct ConvLayer {
    FilterBank bank;
    Activation activation = Activation::relu;
};

struct ConvCache {
    Signal input;
    Signal preact; // pre-activation conv output
};

struct ConvGrads {
    std::vector<double> weights; // same layout as FilterBank::weights
    std::vector<double> bias;
};

Signal conv_forward(const ConvLayer& layer, const Signal& input, ConvCache* cache = nullptr);

struct ConvBackward {
    ConvGrads grads;
    Signal input_grad;
};
ConvBackward conv_backward(const ConvLayer& layer, const ConvCache& cache,
                           const Signal& upstream_grad);

// Gradient of max pooling: upstream values route to the recorded argmax
// positions, everything else is zero.
Signal maxpool_backward(const PoolResult& cache, const Signal& upstream_grad);

// Fully connected layer.
struct DenseLayer {
    Matrix weights; // h x d
    std::vector<double> bias;
    Activation activation = Activation::identity;
};

struct DenseCache {
    std::vector<double> input;
    std::vector<double> preact;
};

struct DenseGrads {
    std::vector<double> weights; // h * d, row-major
    std::vector<double> bias;
};

std::vector<double> dense_forward(const DenseLayer& layer, const std::vector<double>& input,
                                  DenseCache* cache = nullptr);

struct DenseBackward {
    DenseGrads grads;
    std::vector<double> input_grad;
};
DenseBackward dense_backward(const DenseLayer& layer, const DenseCache& cache,
                             const std::vector<double>& upstream_grad);

// Per-instance cross-entropy: loss = -log softmax(logits)[label],
// logit gradient = softmax(logits) - onehot(label).
struct CrossEntropy {
    double loss = 0.0;
    std::vector<double> probs;
    std::vector<double> logit_grad;
};
CrossEntropy softmax_cross_entropy(const std::vector<double>& logits, std::size_t label);

// Compares an analytic gradient against central finite differences of a
// scalar loss, perturbing each parameter in place. `params` spans must stay
// valid while the check runs; the loss closure re-evaluates the model that
// owns them.
struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_array = 0;
    std::size_t worst_index = 0;
};
GradCheckReport grad_check(const std::vector<std::span<double>>& params,
                           const std::vector<std::span<const double>>& analytic,
                           const std::function<double()>& loss, double epsilon = 1e-5);

} // namespace mcnn
