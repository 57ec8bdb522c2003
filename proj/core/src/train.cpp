#include "mcnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

#include "mcnn/rng.hpp"

namespace mcnn {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ShapeError("train config: learning_rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) {
        throw ShapeError("train config: momentum must be in [0, 1)");
    }
    if (batch_size < 1) throw ShapeError("train config: batch_size must be >= 1");
    if (max_epochs < 1) throw ShapeError("train config: max_epochs must be >= 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw ShapeError("train config: val_fraction must be in (0, 1)");
    }
}

SgdState SgdState::zeros_like(const McnnModel& model) {
    SgdState state;
    for (const auto span : model.param_spans()) {
        state.velocity.emplace_back(span.size(), 0.0);
    }
    return state;
}

void sgd_momentum_step(std::vector<std::span<double>> params,
                       const std::vector<std::span<const double>>& grads, SgdState& state,
                       double learning_rate, double momentum) {
    if (params.size() != grads.size() || params.size() != state.velocity.size()) {
        throw ShapeError("sgd step: parameter, gradient, and velocity array counts differ");
    }
    for (std::size_t a = 0; a < params.size(); ++a) {
        if (params[a].size() != grads[a].size() || params[a].size() != state.velocity[a].size()) {
            throw ShapeError("sgd step: array " + std::to_string(a) + " shape mismatch");
        }
        double* v = state.velocity[a].data();
        double* theta = params[a].data();
        const double* g = grads[a].data();
        for (std::size_t i = 0; i < params[a].size(); ++i) {
            v[i] = momentum * v[i] - learning_rate * g[i];
            theta[i] += v[i];
        }
    }
}

void FitReport::write_text(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open report file for writing: " + path);
    out << "epoch train_loss train_err val_err seconds\n";
    char buf[160];
    for (const EpochStats& e : epochs) {
        std::snprintf(buf, sizeof(buf), "%zu %.6f %.6f %.6f %.3f\n", e.epoch, e.train_loss,
                      e.train_error, e.val_error, e.seconds);
        out << buf;
    }
    out << "best_epoch " << best_epoch << "\n";
    std::snprintf(buf, sizeof(buf), "best_val_err %.6f\n", best_val_error);
    out << buf;
    if (test_error) {
        std::snprintf(buf, sizeof(buf), "test_err %.6f\n", *test_error);
        out << buf;
    }
}

namespace {

double vote_error(const McnnModel& model, const std::vector<const LabeledSeries*>& items) {
    std::size_t wrong = 0;
    for (const LabeledSeries* item : items) {
        if (predict_with_vote(model, item->values).cls != item->label) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(items.size());
}

} // namespace

FitResult fit(const McnnConfig& config, const Dataset& train_data, const TrainConfig& tcfg,
              const Dataset* test_data) {
    tcfg.validate();
    if (train_data.num_classes() < 2) {
        throw TrainError("fit: need at least 2 classes");
    }
    const std::vector<std::size_t> counts = train_data.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) {
            throw TrainError("fit: class " + std::to_string(c) + " absent from training data");
        }
    }

    // one sub-seed per random decision, all derived from the run seed
    Rng master(tcfg.seed);
    const std::uint64_t split_seed = master.next_u64();
    const std::uint64_t init_seed = master.next_u64();
    const std::uint64_t shuffle_seed = master.next_u64();

    auto [train_side, val_side] = stratified_split(train_data, tcfg.val_fraction, split_seed);
    const std::vector<std::size_t> side_counts = train_side.class_counts();
    for (std::size_t c = 0; c < side_counts.size(); ++c) {
        if (side_counts[c] == 0) {
            throw TrainError("fit: class " + std::to_string(c) +
                             " absent from the training side after the validation split");
        }
    }

    const Dataset slices = augment_by_slicing(train_side, config.slice_ratio);

    // slices of validation series must never reach a training batch
    std::set<std::size_t> train_provenance, val_provenance;
    for (const LabeledSeries& s : slices.items) train_provenance.insert(s.provenance);
    for (const LabeledSeries& s : val_side.items) val_provenance.insert(s.provenance);
    for (std::size_t id : val_provenance) {
        if (train_provenance.count(id)) {
            throw TrainError("fit: validation series " + std::to_string(id) +
                             " leaked into training slices");
        }
    }

    McnnModel model = assemble(config, init_seed);
    model.label_values = train_data.label_values;
    SgdState state = SgdState::zeros_like(model);
    Rng shuffle_rng(shuffle_seed);

    std::vector<const LabeledSeries*> val_items;
    for (const LabeledSeries& s : val_side.items) val_items.push_back(&s);

    std::vector<std::size_t> order(slices.items.size());
    std::iota(order.begin(), order.end(), 0);

    FitResult result;
    result.report.best_val_error = std::numeric_limits<double>::infinity();
    double snapshot_train_loss = std::numeric_limits<double>::infinity();
    std::size_t non_improving = 0;

    for (std::size_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t wrong = 0;
        for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + tcfg.batch_size);
            McnnGrads grads = make_zero_grads(model);
            for (std::size_t i = start; i < end; ++i) {
                const LabeledSeries& item = slices.items[order[i]];
                ForwardLoss fl = forward_backward(model, item.values, item.label, grads);
                loss_sum += fl.loss;
                if (fl.predicted != item.label) ++wrong;
                if (!std::isfinite(fl.loss)) {
                    throw TrainError("fit: non-finite loss at epoch " + std::to_string(epoch));
                }
            }
            grads.scale(1.0 / static_cast<double>(end - start)); // mean over the batch
            sgd_momentum_step(model.param_spans(), std::as_const(grads).spans(), state,
                              tcfg.learning_rate, tcfg.momentum);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(order.size());
        stats.train_error = static_cast<double>(wrong) / static_cast<double>(order.size());
        stats.val_error = vote_error(model, val_items);
        stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.report.epochs.push_back(stats);

        // the snapshot follows the best validation error; exact ties go to
        // the epoch with the lower training loss, so a saturated validation
        // set still selects a converged model. Early stopping counts only
        // strict validation improvements.
        const bool improved = stats.val_error < result.report.best_val_error;
        if (improved || (stats.val_error == result.report.best_val_error &&
                         stats.train_loss < snapshot_train_loss)) {
            result.report.best_val_error = stats.val_error;
            result.report.best_epoch = epoch;
            snapshot_train_loss = stats.train_loss;
            result.model = model; // deep snapshot
        }
        non_improving = improved ? 0 : non_improving + 1;
        if (non_improving >= tcfg.patience) break;
    }

    if (test_data) {
        result.report.test_error = evaluate(result.model, *test_data);
    }
    return result;
}

double evaluate(const McnnModel& model, const Dataset& data, std::size_t threads) {
    if (data.items.empty()) throw ShapeError("evaluate: empty dataset");
    const std::size_t n = data.items.size();
    std::vector<std::uint8_t> wrong(n, 0);

    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            wrong[i] =
                predict_with_vote(model, data.items[i].values).cls != data.items[i].label ? 1 : 0;
        }
    };
    if (threads <= 1 || n < 2) {
        worker(0, n);
    } else {
        const std::size_t workers = std::min(threads, n);
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (std::thread& t : pool) t.join();
    }
    const std::size_t total = std::accumulate(wrong.begin(), wrong.end(), std::size_t{0});
    return static_cast<double>(total) / static_cast<double>(n);
}

GridResult grid_search(const McnnConfig& base_config, const GridSpec& grid, const Dataset& data,
                       const TrainConfig& tcfg) {
    if (grid.filter_ratios.empty() || grid.pooling_factors.empty() || grid.batch_sizes.empty()) {
        throw ShapeError("grid search: empty grid axis");
    }
    GridResult result;
    bool have_best = false;

    for (double ratio : grid.filter_ratios) {
        for (std::size_t pool : grid.pooling_factors) {
            for (std::size_t batch : grid.batch_sizes) {
                GridEntry entry;
                entry.filter_ratio = ratio;
                entry.pooling_factor = pool;
                entry.batch_size = batch;

                McnnConfig config = base_config;
                config.filter_ratio = ratio;
                config.pooling_factor = pool;
                TrainConfig point_tcfg = tcfg;
                point_tcfg.batch_size = batch;

                try {
                    assemble(config, tcfg.seed); // feasibility probe before the expensive fit
                } catch (const Error& e) {
                    entry.skip_reason = e.what();
                    result.leaderboard.push_back(entry);
                    continue;
                }

                FitResult fit_result = fit(config, data, point_tcfg);
                entry.feasible = true;
                entry.val_error = fit_result.report.best_val_error;
                entry.best_epoch = fit_result.report.best_epoch;
                entry.train_loss =
                    fit_result.report.epochs[fit_result.report.best_epoch - 1].train_loss;
                result.leaderboard.push_back(entry);

                if (!have_best || entry.val_error < result.best_report.best_val_error) {
                    have_best = true;
                    result.best_config = config;
                    result.best_model = std::move(fit_result.model);
                    result.best_report = std::move(fit_result.report);
                }
            }
        }
    }
    if (!have_best) {
        throw TrainError("grid search: every grid point was infeasible");
    }
    return result;
}

} // namespace mcnn
