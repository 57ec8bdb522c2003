#include "mcnn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mcnn {

Signal conv1d(const Signal& input, const FilterBank& bank) {
    if (bank.in_channels != input.channels()) {
        throw ShapeError("conv1d: channel axis mismatch, input has " +
                         std::to_string(input.channels()) + " channels, bank expects " +
                         std::to_string(bank.in_channels));
    }
    const std::size_t n = input.length();
    const std::size_t m = bank.filter_len;
    if (m > n) {
        throw ShapeError("conv1d: length axis too short, input length " + std::to_string(n) +
                         " < filter length " + std::to_string(m));
    }
    const std::size_t out_len = n - m + 1;
    Signal out(bank.num_filters, out_len);

    for (std::size_t f = 0; f < bank.num_filters; ++f) {
        double* o = out.channel(f).data();
        std::fill(o, o + out_len, bank.bias[f]);
        for (std::size_t c = 0; c < input.channels(); ++c) {
            const double* x = input.channel(c).data();
            for (std::size_t j = 0; j < m; ++j) {
                const double wv = bank.w(f, c, m - 1 - j);
                const double* xs = x + j;
                for (std::size_t i = 0; i < out_len; ++i) {
                    o[i] += wv * xs[i];
                }
            }
        }
    }
    return out;
}

PoolResult maxpool_by_factor(const Signal& input, std::size_t p) {
    const std::size_t n = input.length();
    if (p < 1 || p > n) {
        throw ShapeError("maxpool_by_factor: pooling factor " + std::to_string(p) +
                         " outside [1, " + std::to_string(n) + "]");
    }
    PoolResult res{Signal(input.channels(), p), std::vector<std::size_t>(input.channels() * p), n};
    for (std::size_t c = 0; c < input.channels(); ++c) {
        const double* x = input.channel(c).data();
        for (std::size_t i = 0; i < p; ++i) {
            const std::size_t lo = i * n / p;
            const std::size_t hi = (i + 1) * n / p;
            std::size_t best = lo;
            for (std::size_t t = lo + 1; t < hi; ++t) {
                if (x[t] > x[best]) best = t; // ties keep the lowest index
            }
            res.output.at(c, i) = x[best];
            res.argmax[c * p + i] = best;
        }
    }
    return res;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) {
        throw ShapeError("softmax: empty logits");
    }
    for (double v : logits) {
        if (!std::isfinite(v)) throw ShapeError("softmax: non-finite logit");
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

std::vector<double> dense(const std::vector<double>& input, const Matrix& weights,
                          const std::vector<double>& bias) {
    if (weights.cols != input.size()) {
        throw ShapeError("dense: input axis mismatch, weights expect " +
                         std::to_string(weights.cols) + " inputs, got " +
                         std::to_string(input.size()));
    }
    if (weights.rows != bias.size()) {
        throw ShapeError("dense: output axis mismatch, weights produce " +
                         std::to_string(weights.rows) + " outputs, bias has " +
                         std::to_string(bias.size()));
    }
    std::vector<double> out(weights.rows);
    for (std::size_t i = 0; i < weights.rows; ++i) {
        const double* row = weights.data.data() + i * weights.cols;
        double acc = bias[i];
        for (std::size_t j = 0; j < weights.cols; ++j) {
            acc += row[j] * input[j];
        }
        out[i] = acc;
    }
    return out;
}

} // namespace mcnn
