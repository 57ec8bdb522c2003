#include "mcnn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mcnn {

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    throw ShapeError("unknown activation: " + name);
}

std::string to_string(Activation a) {
    return a == Activation::relu ? "relu" : "identity";
}

namespace {

void apply_activation(Activation act, Signal& s) {
    if (act == Activation::relu) {
        for (double& v : s.values()) v = v > 0.0 ? v : 0.0;
    }
}

// relu'(0) is taken as 0
double activation_grad(Activation act, double preact) {
    if (act == Activation::relu) return preact > 0.0 ? 1.0 : 0.0;
    return 1.0;
}

} // namespace

Signal conv_forward(const ConvLayer& layer, const Signal& input, ConvCache* cache) {
    Signal preact = conv1d(input, layer.bank);
    if (cache) {
        cache->input = input;
        cache->preact = preact;
    }
    apply_activation(layer.activation, preact);
    return preact;
}

ConvBackward conv_backward(const ConvLayer& layer, const ConvCache& cache,
                           const Signal& upstream_grad) {
    const FilterBank& bank = layer.bank;
    const std::size_t n = cache.input.length();
    const std::size_t m = bank.filter_len;
    const std::size_t out_len = n - m + 1;
    if (upstream_grad.channels() != bank.num_filters || upstream_grad.length() != out_len) {
        throw ShapeError("conv_backward: upstream gradient is " +
                         std::to_string(upstream_grad.channels()) + "x" +
                         std::to_string(upstream_grad.length()) + ", expected " +
                         std::to_string(bank.num_filters) + "x" + std::to_string(out_len));
    }

    ConvBackward res;
    res.grads.weights.assign(bank.weights.size(), 0.0);
    res.grads.bias.assign(bank.num_filters, 0.0);
    res.input_grad = Signal(cache.input.channels(), n);

    // fold the activation derivative into a local copy of the upstream grad
    Signal g = upstream_grad;
    for (std::size_t f = 0; f < bank.num_filters; ++f) {
        double* gf = g.channel(f).data();
        const double* zf = cache.preact.channel(f).data();
        for (std::size_t i = 0; i < out_len; ++i) {
            gf[i] *= activation_grad(layer.activation, zf[i]);
        }
    }

    for (std::size_t f = 0; f < bank.num_filters; ++f) {
        const double* gf = g.channel(f).data();
        double bsum = 0.0;
        for (std::size_t i = 0; i < out_len; ++i) bsum += gf[i];
        res.grads.bias[f] = bsum;

        for (std::size_t c = 0; c < cache.input.channels(); ++c) {
            const double* x = cache.input.channel(c).data();
            double* dx = res.input_grad.channel(c).data();
            double* dw = res.grads.weights.data() + (f * bank.in_channels + c) * m;
            for (std::size_t j = 0; j < m; ++j) {
                // forward used w[f][c][m-1-j] against x[i+j]
                const double wv = bank.w(f, c, m - 1 - j);
                double acc = 0.0;
                const double* xs = x + j;
                double* dxs = dx + j;
                for (std::size_t i = 0; i < out_len; ++i) {
                    acc += gf[i] * xs[i];
                    dxs[i] += wv * gf[i];
                }
                dw[m - 1 - j] = acc;
            }
        }
    }
    return res;
}

Signal maxpool_backward(const PoolResult& cache, const Signal& upstream_grad) {
    const std::size_t p = cache.output.length();
    if (!upstream_grad.same_shape(cache.output)) {
        throw ShapeError("maxpool_backward: upstream gradient is " +
                         std::to_string(upstream_grad.channels()) + "x" +
                         std::to_string(upstream_grad.length()) + ", expected " +
                         std::to_string(cache.output.channels()) + "x" + std::to_string(p));
    }
    Signal input_grad(cache.output.channels(), cache.input_length);
    for (std::size_t c = 0; c < cache.output.channels(); ++c) {
        for (std::size_t i = 0; i < p; ++i) {
            input_grad.at(c, cache.argmax[c * p + i]) += upstream_grad.at(c, i);
        }
    }
    return input_grad;
}

std::vector<double> dense_forward(const DenseLayer& layer, const std::vector<double>& input,
                                  DenseCache* cache) {
    std::vector<double> preact = dense(input, layer.weights, layer.bias);
    if (cache) {
        cache->input = input;
        cache->preact = preact;
    }
    if (layer.activation == Activation::relu) {
        for (double& v : preact) v = v > 0.0 ? v : 0.0;
    }
    return preact;
}

DenseBackward dense_backward(const DenseLayer& layer, const DenseCache& cache,
                             const std::vector<double>& upstream_grad) {
    const std::size_t h = layer.weights.rows;
    const std::size_t d = layer.weights.cols;
    if (upstream_grad.size() != h) {
        throw ShapeError("dense_backward: upstream gradient has " +
                         std::to_string(upstream_grad.size()) + " entries, expected " +
                         std::to_string(h));
    }
    if (cache.input.size() != d) {
        throw ShapeError("dense_backward: cached input has " + std::to_string(cache.input.size()) +
                         " entries, expected " + std::to_string(d));
    }

    DenseBackward res;
    res.grads.weights.assign(h * d, 0.0);
    res.grads.bias.assign(h, 0.0);
    res.input_grad.assign(d, 0.0);

    for (std::size_t i = 0; i < h; ++i) {
        const double gi = upstream_grad[i] * activation_grad(layer.activation, cache.preact[i]);
        res.grads.bias[i] = gi;
        const double* wrow = layer.weights.data.data() + i * d;
        double* dwrow = res.grads.weights.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) {
            dwrow[j] = gi * cache.input[j];
            res.input_grad[j] += gi * wrow[j];
        }
    }
    return res;
}

CrossEntropy softmax_cross_entropy(const std::vector<double>& logits, std::size_t label) {
    if (label >= logits.size()) {
        throw ShapeError("softmax_cross_entropy: label " + std::to_string(label) +
                         " out of range for " + std::to_string(logits.size()) + " classes");
    }
    CrossEntropy res;
    res.probs = softmax(logits);
    // -log p computed from the stable log-sum-exp rather than log(probs)
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    res.loss = std::log(sum) + mx - logits[label];
    res.logit_grad = res.probs;
    res.logit_grad[label] -= 1.0;
    return res;
}

GradCheckReport grad_check(const std::vector<std::span<double>>& params,
                           const std::vector<std::span<const double>>& analytic,
                           const std::function<double()>& loss, double epsilon) {
    if (params.size() != analytic.size()) {
        throw ShapeError("grad_check: parameter and gradient array counts differ");
    }
    GradCheckReport report;
    for (std::size_t a = 0; a < params.size(); ++a) {
        if (params[a].size() != analytic[a].size()) {
            throw ShapeError("grad_check: array " + std::to_string(a) + " shape mismatch");
        }
        for (std::size_t i = 0; i < params[a].size(); ++i) {
            double& theta = params[a][i];
            const double saved = theta;
            theta = saved + epsilon;
            const double up = loss();
            theta = saved - epsilon;
            const double down = loss();
            theta = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double g = analytic[a][i];
            const double denom = std::max({std::abs(numeric), std::abs(g), 1e-8});
            const double rel = std::abs(numeric - g) / denom;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_array = a;
                report.worst_index = i;
            }
        }
    }
    return report;
}

} // namespace mcnn
