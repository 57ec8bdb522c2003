#include "mcnn/transform.hpp"

#include <string>

namespace mcnn {

BranchSpec BranchSpec::defaults() {
    return BranchSpec{{2, 3}, {3, 5}, true};
}

BranchSpec BranchSpec::identity_only() {
    return BranchSpec{{}, {}, true};
}

std::size_t BranchSpec::num_branches() const {
    std::size_t n = downsample_rates.size();
    if (include_identity) ++n;
    if (!ma_windows.empty()) ++n;
    return n;
}

void BranchSpec::validate() const {
    std::size_t prev = 1;
    for (std::size_t k : downsample_rates) {
        if (k < 2) throw ShapeError("branch spec: down-sampling rate must be >= 2");
        if (k <= prev && prev != 1) throw ShapeError("branch spec: rates must be strictly increasing");
        prev = k;
    }
    prev = 1;
    for (std::size_t w : ma_windows) {
        if (w < 2) throw ShapeError("branch spec: moving-average window must be >= 2");
        if (w <= prev && prev != 1) throw ShapeError("branch spec: windows must be strictly increasing");
        prev = w;
    }
    if (num_branches() == 0) {
        throw ShapeError("branch spec: no branches enabled");
    }
}

std::vector<double> downsample(const std::vector<double>& series, std::size_t k) {
    if (k < 1) throw ShapeError("downsample: rate must be >= 1");
    if (series.empty()) throw ShapeError("downsample: empty series");
    const std::size_t count = (series.size() - 1) / k + 1;
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(series[k * i]);
    }
    return out;
}

std::vector<double> moving_average(const std::vector<double>& series, std::size_t window) {
    const std::size_t n = series.size();
    if (window < 1 || window > n) {
        throw ShapeError("moving_average: window " + std::to_string(window) + " outside [1, " +
                         std::to_string(n) + "]");
    }
    std::vector<double> out(n - window + 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < window; ++i) sum += series[i];
    out[0] = sum / static_cast<double>(window);
    for (std::size_t i = 1; i < out.size(); ++i) {
        sum += series[i + window - 1] - series[i - 1];
        out[i] = sum / static_cast<double>(window);
    }
    return out;
}

std::vector<std::vector<double>> window_slices(const std::vector<double>& series, std::size_t s) {
    const std::size_t n = series.size();
    if (s < 1 || s > n) {
        throw ShapeError("window_slices: slice length " + std::to_string(s) + " outside [1, " +
                         std::to_string(n) + "]");
    }
    std::vector<std::vector<double>> slices;
    slices.reserve(n - s + 1);
    for (std::size_t j = 0; j + s <= n; ++j) {
        slices.emplace_back(series.begin() + j, series.begin() + j + s);
    }
    return slices;
}

BranchInputs build_branches(const std::vector<double>& series, const BranchSpec& spec) {
    spec.validate();
    BranchInputs out;
    out.signals.reserve(spec.num_branches());
    if (spec.include_identity) {
        out.signals.push_back(Signal::row(series));
    }
    for (std::size_t k : spec.downsample_rates) {
        out.signals.push_back(Signal::row(downsample(series, k)));
    }
    if (!spec.ma_windows.empty()) {
        const std::size_t max_window = spec.ma_windows.back();
        if (max_window > series.size()) {
            throw ShapeError("build_branches: moving-average window " + std::to_string(max_window) +
                             " exceeds series length " + std::to_string(series.size()));
        }
        const std::size_t common_len = series.size() - max_window + 1;
        Signal freq(spec.ma_windows.size(), common_len);
        for (std::size_t c = 0; c < spec.ma_windows.size(); ++c) {
            const std::vector<double> smoothed = moving_average(series, spec.ma_windows[c]);
            for (std::size_t i = 0; i < common_len; ++i) {
                freq.at(c, i) = smoothed[i];
            }
        }
        out.signals.push_back(std::move(freq));
    }
    return out;
}

} // namespace mcnn
