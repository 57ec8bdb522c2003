#include "mcnn/signal.hpp"

#include <cmath>
#include <string>

namespace mcnn {

namespace {

void check_positive(std::size_t v, const char* axis) {
    if (v == 0) {
        throw ShapeError(std::string(axis) + " must be positive");
    }
}

void check_finite(const std::vector<double>& values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw ShapeError(std::string(what) + " contains a non-finite value");
        }
    }
}

} // namespace

Signal::Signal(std::size_t channels, std::size_t length)
    : channels_(channels), length_(length), values_(channels * length, 0.0) {
    check_positive(channels, "channels");
    check_positive(length, "length");
}

Signal::Signal(std::size_t channels, std::size_t length, std::vector<double> values)
    : channels_(channels), length_(length), values_(std::move(values)) {
    check_positive(channels, "channels");
    check_positive(length, "length");
    if (values_.size() != channels * length) {
        throw ShapeError("signal values: expected " + std::to_string(channels * length) +
                         " entries (channels x length), got " + std::to_string(values_.size()));
    }
    check_finite(values_, "signal values");
}

Signal Signal::row(std::vector<double> values) {
    const std::size_t n = values.size();
    return Signal(1, n, std::move(values));
}

FilterBank::FilterBank(std::size_t f, std::size_t c, std::size_t m)
    : num_filters(f), in_channels(c), filter_len(m), weights(f * c * m, 0.0), bias(f, 0.0) {
    check_positive(f, "num_filters");
    check_positive(c, "in_channels");
    check_positive(m, "filter_len");
}

void FilterBank::validate() const {
    if (num_filters == 0 || in_channels == 0 || filter_len == 0) {
        throw ShapeError("filter bank has a zero dimension");
    }
    if (weights.size() != num_filters * in_channels * filter_len) {
        throw ShapeError("filter bank weights: expected " +
                         std::to_string(num_filters * in_channels * filter_len) + " entries, got " +
                         std::to_string(weights.size()));
    }
    if (bias.size() != num_filters) {
        throw ShapeError("filter bank bias: expected " + std::to_string(num_filters) +
                         " entries, got " + std::to_string(bias.size()));
    }
    check_finite(weights, "filter bank weights");
    check_finite(bias, "filter bank bias");
}

} // namespace mcnn
