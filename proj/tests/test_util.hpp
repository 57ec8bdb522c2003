#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include "mcnn/data.hpp"
#include "mcnn/rng.hpp"

namespace testutil {

// Resolved from the MCNN_DATA_DIR environment variable (set by ctest);
// falls back to ./data for manual runs from the repo root.
inline std::string data_dir() {
    if (const char* env = std::getenv("MCNN_DATA_DIR")) return env;
    return "data";
}

inline std::string ucr_path(const std::string& dataset, const std::string& split) {
    return data_dir() + "/ucr/" + dataset + "/" + dataset + "_" + split + ".txt";
}

inline std::vector<double> random_series(mcnn::Rng& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
    std::vector<double> out(n);
    for (double& v : out) v = rng.uniform(lo, hi);
    return out;
}

// Two linearly separable classes: rising ramps vs falling ramps with varied
// slope, offset, and a small deterministic wobble. A single gradient-style
// filter separates them.
inline mcnn::Dataset toy_ramp_dataset(std::size_t per_class = 10, std::size_t length = 32) {
    mcnn::Dataset ds;
    ds.label_values = {-1.0, 1.0};
    ds.series_length = length;
    mcnn::Rng rng(12345);
    for (std::size_t cls = 0; cls < 2; ++cls) {
        for (std::size_t i = 0; i < per_class; ++i) {
            const double slope = (0.5 + 0.1 * static_cast<double>(i)) * (cls == 0 ? 1.0 : -1.0);
            const double offset = rng.uniform(-0.5, 0.5);
            std::vector<double> v(length);
            for (std::size_t t = 0; t < length; ++t) {
                const double wobble = 0.05 * rng.uniform(-1.0, 1.0);
                v[t] = offset + slope * static_cast<double>(t) / static_cast<double>(length) +
                       wobble;
            }
            ds.items.push_back({cls, std::move(v), ds.items.size()});
        }
    }
    return ds;
}

} // namespace testutil
