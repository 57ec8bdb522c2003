#include "mcnn/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "mcnn/numerics.hpp"

namespace mcnn {

DtwParams DtwParams::banded(double fraction) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw ShapeError("dtw: window fraction must be in [0, 1]");
    }
    return DtwParams{fraction};
}

namespace {

void check_uniform_lengths(const Dataset& train, const Dataset& test) {
    if (train.items.empty() || test.items.empty()) {
        throw ShapeError("1-NN: empty dataset");
    }
    if (train.series_length == 0 || train.series_length != test.series_length) {
        throw ShapeError("1-NN: length axis mismatch, train length " +
                         std::to_string(train.series_length) + " vs test length " +
                         std::to_string(test.series_length));
    }
}

double squared_euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// Generic parallel 1-NN error; the distance is computed per (test, train)
// pair and ties keep the lowest train index.
template <typename Dist>
double nn_error(const Dataset& train, const Dataset& test, std::size_t threads, Dist&& dist) {
    const std::size_t n = test.items.size();
    std::vector<std::uint8_t> wrong(n, 0);
    auto classify = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_j = 0;
            for (std::size_t j = 0; j < train.items.size(); ++j) {
                const double d = dist(test.items[i].values, train.items[j].values);
                if (d < best) {
                    best = d;
                    best_j = j;
                }
            }
            wrong[i] = train.items[best_j].label != test.items[i].label ? 1 : 0;
        }
    };
    if (threads <= 1 || n < 2) {
        classify(0, n);
    } else {
        const std::size_t workers = std::min(threads, n);
        const std::size_t chunk = (n + workers - 1) / workers;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin < end) pool.emplace_back(classify, begin, end);
        }
        for (std::thread& t : pool) t.join();
    }
    const std::size_t total = std::accumulate(wrong.begin(), wrong.end(), std::size_t{0});
    return static_cast<double>(total) / static_cast<double>(n);
}

} // namespace

double euclidean_1nn(const Dataset& train, const Dataset& test, std::size_t threads) {
    check_uniform_lengths(train, test);
    return nn_error(train, test, threads,
                    [](const std::vector<double>& a, const std::vector<double>& b) {
                        return squared_euclidean(a, b);
                    });
}

double dtw_distance(const std::vector<double>& a, const std::vector<double>& b,
                    const DtwParams& params) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    if (n == 0 || m == 0) throw ShapeError("dtw: empty series");

    std::size_t radius = std::max(n, m); // effectively unconstrained
    if (params.window) {
        if (*params.window < 0.0 || *params.window > 1.0) {
            throw ShapeError("dtw: window fraction must be in [0, 1]");
        }
        radius = static_cast<std::size_t>(std::ceil(*params.window * static_cast<double>(n)));
    }

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        cur.assign(m + 1, inf);
        const double ai = a[i - 1];
        const std::size_t lo = i > radius ? i - radius : 1;
        const std::size_t hi = std::min(m, i + radius);
        for (std::size_t j = lo; j <= hi; ++j) {
            const double d = ai - b[j - 1];
            const double best = std::min({prev[j], cur[j - 1], prev[j - 1]});
            cur[j] = d * d + best;
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double dtw_1nn(const Dataset& train, const Dataset& test, const DtwParams& params,
               std::size_t threads) {
    check_uniform_lengths(train, test);
    return nn_error(train, test, threads,
                    [&params](const std::vector<double>& a, const std::vector<double>& b) {
                        return dtw_distance(a, b, params);
                    });
}

double dtw_cv_window(const Dataset& train, const std::vector<double>& candidates,
                     std::size_t threads) {
    if (train.items.size() < 2) throw ShapeError("dtw cv: need at least 2 training series");
    if (candidates.empty()) throw ShapeError("dtw cv: empty candidate set");

    double best_window = candidates.front();
    std::size_t best_correct = 0;
    bool first = true;
    for (double window : candidates) {
        const DtwParams params = DtwParams::banded(window);
        const std::size_t n = train.items.size();
        std::vector<std::uint8_t> correct(n, 0);
        auto loo = [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                double best = std::numeric_limits<double>::infinity();
                std::size_t best_j = 0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    const double d =
                        dtw_distance(train.items[i].values, train.items[j].values, params);
                    if (d < best) {
                        best = d;
                        best_j = j;
                    }
                }
                correct[i] = train.items[best_j].label == train.items[i].label ? 1 : 0;
            }
        };
        if (threads <= 1 || n < 2) {
            loo(0, n);
        } else {
            const std::size_t workers = std::min(threads, n);
            const std::size_t chunk = (n + workers - 1) / workers;
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                const std::size_t begin = w * chunk;
                const std::size_t end = std::min(n, begin + chunk);
                if (begin < end) pool.emplace_back(loo, begin, end);
            }
            for (std::thread& t : pool) t.join();
        }
        const std::size_t total = std::accumulate(correct.begin(), correct.end(), std::size_t{0});
        if (first || total > best_correct) { // ties keep the smallest window
            first = false;
            best_correct = total;
            best_window = window;
        }
    }
    return best_window;
}

std::vector<double> euclidean_via_conv(const std::vector<double>& series,
                                       const std::vector<double>& filter) {
    const std::size_t n = series.size();
    const std::size_t m = filter.size();
    if (m == 0 || m > n) {
        throw ShapeError("euclidean_via_conv: filter length " + std::to_string(m) +
                         " outside [1, " + std::to_string(n) + "]");
    }

    FilterBank bank(1, 1, m);
    bank.weights = filter;
    const Signal conv = conv1d(Signal::row(series), bank);

    double filter_norm = 0.0;
    for (double f : filter) filter_norm += f * f;

    // prefix sums of t^2 give each window's sum of squares
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + series[i] * series[i];

    std::vector<double> out(n - m + 1);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (prefix[i + m] - prefix[i]) + filter_norm - 2.0 * conv.at(0, i);
    }
    return out;
}

} // namespace mcnn
