#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mcnn/error.hpp"

namespace mcnn {

// A channels x length real array, row-major. This is the tensor that flows
// through branches and layers; a raw series is a 1-channel Signal.
class Signal {
public:
    Signal() = default;

    // zero-filled
    Signal(std::size_t channels, std::size_t length);

    // takes ownership of values; rejects wrong sizes and non-finite entries
    Signal(std::size_t channels, std::size_t length, std::vector<double> values);

    // 1 x n signal from a plain series
    static Signal row(std::vector<double> values);

    std::size_t channels() const { return channels_; }
    std::size_t length() const { return length_; }
    std::size_t size() const { return values_.size(); }

    double at(std::size_t c, std::size_t i) const { return values_[c * length_ + i]; }
    double& at(std::size_t c, std::size_t i) { return values_[c * length_ + i]; }

    std::span<const double> channel(std::size_t c) const {
        return {values_.data() + c * length_, length_};
    }
    std::span<double> channel(std::size_t c) {
        return {values_.data() + c * length_, length_};
    }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    bool same_shape(const Signal& other) const {
        return channels_ == other.channels_ && length_ == other.length_;
    }

private:
    std::size_t channels_ = 0;
    std::size_t length_ = 0;
    std::vector<double> values_;
};

// A bank of F filters, each in_channels x filter_len, plus one bias per
// filter. Weights are stored F x C x m row-major.
struct FilterBank {
    std::size_t num_filters = 0;
    std::size_t in_channels = 0;
    std::size_t filter_len = 0;
    std::vector<double> weights; // F * C * m
    std::vector<double> bias;    // F

    FilterBank() = default;
    FilterBank(std::size_t f, std::size_t c, std::size_t m);

    double w(std::size_t f, std::size_t c, std::size_t j) const {
        return weights[(f * in_channels + c) * filter_len + j];
    }
    double& w(std::size_t f, std::size_t c, std::size_t j) {
        return weights[(f * in_channels + c) * filter_len + j];
    }

    void validate() const;
};

// Dense h x d matrix, row-major.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

} // namespace mcnn
