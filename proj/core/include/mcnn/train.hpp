#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcnn/data.hpp"
#include "mcnn/mcnn.hpp"

namespace mcnn {

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 200;
    std::size_t patience = 20; // non-improving epochs tolerated before stopping
    std::uint64_t seed = 0;
    double val_fraction = 0.2;

    void validate() const;
};

// Momentum buffers congruent with the model's parameter arrays.
struct SgdState {
    std::vector<std::vector<double>> velocity;

    static SgdState zeros_like(const McnnModel& model);
};

// v <- mu * v - lr * g;  theta <- theta + v
void sgd_momentum_step(std::vector<std::span<double>> params,
                       const std::vector<std::span<const double>>& grads, SgdState& state,
                       double learning_rate, double momentum);

struct EpochStats {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    double train_error = 0.0; // slice-level error over the epoch's batches
    double val_error = 0.0;   // vote-based error on held-out original series
    double seconds = 0.0;
};

struct FitReport {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0; // 1-based
    double best_val_error = 1.0;
    std::optional<double> test_error;

    void write_text(const std::string& path) const;
};

struct FitResult {
    McnnModel model; // snapshot at the best validation epoch
    FitReport report;
};

// Splits original series stratified by label, augments the training side by
// window slicing, then runs mini-batch SGD with momentum and early stopping
// on the vote-based validation error. Identical (data, config, seeds) always
// produce identical results.
FitResult fit(const McnnConfig& config, const Dataset& train_data, const TrainConfig& tcfg,
              const Dataset* test_data = nullptr);

// Vote-based classification error rate on a dataset.
double evaluate(const McnnModel& model, const Dataset& data, std::size_t threads = 1);

struct GridSpec {
    std::vector<double> filter_ratios = {0.05, 0.1, 0.2};
    std::vector<std::size_t> pooling_factors = {2, 3, 5};
    std::vector<std::size_t> batch_sizes = {16, 32};
};

struct GridEntry {
    double filter_ratio = 0.0;
    std::size_t pooling_factor = 0;
    std::size_t batch_size = 0;
    bool feasible = false;
    std::string skip_reason;
    double val_error = 1.0;
    double train_loss = 0.0;
    std::size_t best_epoch = 0;
};

struct GridResult {
    McnnConfig best_config;
    McnnModel best_model;
    FitReport best_report;
    std::vector<GridEntry> leaderboard; // deterministic iteration order
};

// One fit per grid point with identical seeds; lowest validation error wins,
// ties go to the earliest point in (ratios, factors, batch sizes) order.
GridResult grid_search(const McnnConfig& base_config, const GridSpec& grid, const Dataset& data,
                       const TrainConfig& tcfg);

} // namespace mcnn
