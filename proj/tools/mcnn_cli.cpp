// Command-line surface: train, grid search, evaluation, prediction, and the
// 1-NN baselines, with seeded deterministic runs and a JSON manifest per run.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mcnn/baseline.hpp"
#include "mcnn/data.hpp"
#include "mcnn/mcnn.hpp"
#include "mcnn/train.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 1;
constexpr int kExitRunFailure = 2;

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

// FNV-1a over the file bytes; cheap and stable for manifest bookkeeping.
std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "unreadable";
    std::uint64_t hash = 1469598103934665603ull;
    char chunk[4096];
    while (in.read(chunk, sizeof(chunk)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(chunk[i]);
            hash *= 1099511628211ull;
        }
        if (!in) break;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

struct Manifest {
    json doc;
    std::string out_dir;

    Manifest(const std::string& command, const std::vector<std::string>& argv,
             const std::string& out) : out_dir(out) {
        doc["command"] = command;
        doc["argv"] = argv;
        doc["start_time"] = iso_timestamp();
        doc["datasets"] = json::array();
        doc["artifacts"] = json::array();
    }

    void add_dataset(const std::string& path) {
        doc["datasets"].push_back({{"path", path}, {"fnv1a", file_checksum(path)}});
    }

    void add_artifact(const std::string& path) { doc["artifacts"].push_back(path); }

    // write to a temp file, then rename: the manifest appears atomically
    void write() {
        doc["end_time"] = iso_timestamp();
        fs::create_directories(out_dir);
        const fs::path final_path = fs::path(out_dir) / "manifest.json";
        const fs::path tmp_path = fs::path(out_dir) / ".manifest.json.tmp";
        {
            std::ofstream out(tmp_path);
            out << doc.dump(2) << "\n";
            if (!out) throw mcnn::IoError("cannot write manifest: " + tmp_path.string());
        }
        fs::rename(tmp_path, final_path);
    }
};

struct CommonFlags {
    std::string data_path;
    std::string test_path;
    std::string out_dir = "mcnn_out";
    std::string json_out;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string znorm = "auto";
};

struct ModelFlags {
    std::size_t filters = 256;
    double filter_ratio = 0.1;
    std::size_t pool_factor = 3;
    std::size_t dense_units = 256;
    double slice_ratio = 0.9;
    std::vector<std::size_t> k_rates = {2, 3};
    std::vector<std::size_t> ma_windows = {3, 5};
    bool identity_only = false;
};

struct TrainFlags {
    double lr = 0.01;
    double momentum = 0.9;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 200;
    std::size_t patience = 20;
    double val_fraction = 0.2;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_test) {
    cmd->add_option("--data", flags.data_path, "input data file (UCR text format)")->required();
    if (with_test) cmd->add_option("--test", flags.test_path, "held-out test file");
    cmd->add_option("--out", flags.out_dir, "output directory for artifacts and the manifest");
    cmd->add_option("--json-out", flags.json_out, "write metrics as a JSON file");
    cmd->add_option("--seed", flags.seed, "seed for every random decision in the run");
    cmd->add_option("--threads", flags.threads, "worker threads for evaluation (1 = bit-deterministic)");
    cmd->add_option("--znorm", flags.znorm, "z-normalize series: auto | on | off")
        ->check(CLI::IsMember({"auto", "on", "off"}));
}

void add_model(CLI::App* cmd, ModelFlags& flags) {
    cmd->add_option("--filters", flags.filters, "filters per convolutional layer");
    cmd->add_option("--filter-ratio", flags.filter_ratio, "filter length as a ratio of the slice length");
    cmd->add_option("--pool-factor", flags.pool_factor, "outputs per channel after max pooling");
    cmd->add_option("--dense-units", flags.dense_units, "fully connected layer width");
    cmd->add_option("--slice-ratio", flags.slice_ratio, "slice length as a ratio of the series length");
    cmd->add_option("--k-rates", flags.k_rates, "down-sampling rates for the multi-scale branch")
        ->delimiter(',');
    cmd->add_option("--ma-windows", flags.ma_windows, "moving-average windows for the multi-frequency branch")
        ->delimiter(',');
    cmd->add_flag("--identity-only", flags.identity_only, "disable the multi-scale and multi-frequency branches");
}

void add_train(CLI::App* cmd, TrainFlags& flags) {
    cmd->add_option("--lr", flags.lr, "learning rate");
    cmd->add_option("--momentum", flags.momentum, "SGD momentum");
    cmd->add_option("--batch-size", flags.batch_size, "mini-batch size");
    cmd->add_option("--max-epochs", flags.max_epochs, "epoch limit");
    cmd->add_option("--patience", flags.patience, "non-improving epochs before early stopping");
    cmd->add_option("--val-fraction", flags.val_fraction, "fraction of training series held out for validation");
}

bool should_znorm(const std::string& mode, const std::string& data_path) {
    if (mode == "on") return true;
    if (mode == "off") return false;
    return mcnn::znorm_by_default(mcnn::dataset_name_from_path(data_path));
}

mcnn::Dataset load_dataset(const std::string& path, const std::string& znorm_mode) {
    mcnn::Dataset ds = mcnn::load_ucr(path);
    if (should_znorm(znorm_mode, path)) mcnn::z_normalize(ds);
    return ds;
}

mcnn::McnnConfig build_config(const ModelFlags& flags, const mcnn::Dataset& data) {
    mcnn::McnnConfig config;
    if (flags.identity_only) {
        config.branch_spec = mcnn::BranchSpec::identity_only();
    } else {
        config.branch_spec = mcnn::BranchSpec{flags.k_rates, flags.ma_windows, true};
    }
    config.local_filters = flags.filters;
    config.full_filters = flags.filters;
    config.filter_ratio = flags.filter_ratio;
    config.pooling_factor = flags.pool_factor;
    config.dense_units = flags.dense_units;
    config.slice_ratio = flags.slice_ratio;
    config.num_classes = data.num_classes();
    config.input_length = data.series_length;
    return config;
}

json config_to_json(const mcnn::McnnConfig& config) {
    return json{{"include_identity", config.branch_spec.include_identity},
                {"downsample_rates", config.branch_spec.downsample_rates},
                {"ma_windows", config.branch_spec.ma_windows},
                {"local_filters", config.local_filters},
                {"full_filters", config.full_filters},
                {"filter_ratio", config.filter_ratio},
                {"pooling_factor", config.pooling_factor},
                {"dense_units", config.dense_units},
                {"num_classes", config.num_classes},
                {"input_length", config.input_length},
                {"slice_ratio", config.slice_ratio},
                {"full_depth", config.full_depth}};
}

json train_to_json(const mcnn::TrainConfig& tcfg) {
    return json{{"learning_rate", tcfg.learning_rate}, {"momentum", tcfg.momentum},
                {"batch_size", tcfg.batch_size},       {"max_epochs", tcfg.max_epochs},
                {"patience", tcfg.patience},           {"seed", tcfg.seed},
                {"val_fraction", tcfg.val_fraction}};
}

void write_json_metrics(const std::string& path, const json& metrics) {
    if (path.empty()) return;
    std::ofstream out(path);
    out << metrics.dump(2) << "\n";
    if (!out) throw mcnn::IoError("cannot write metrics file: " + path);
}

// Remap a dataset's dense labels onto the model's class indices through the
// original label values.
void align_labels(mcnn::Dataset& ds, const std::vector<double>& model_labels) {
    if (model_labels.empty()) return;
    std::vector<std::size_t> remap(ds.label_values.size());
    for (std::size_t i = 0; i < ds.label_values.size(); ++i) {
        bool found = false;
        for (std::size_t j = 0; j < model_labels.size(); ++j) {
            if (ds.label_values[i] == model_labels[j]) {
                remap[i] = j;
                found = true;
                break;
            }
        }
        if (!found) {
            throw mcnn::ShapeError("dataset label " + std::to_string(ds.label_values[i]) +
                                   " is unknown to the model");
        }
    }
    for (mcnn::LabeledSeries& item : ds.items) item.label = remap[item.label];
    ds.label_values = model_labels;
}

std::string format_label(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

int cmd_train(const std::vector<std::string>& argv, const CommonFlags& common,
              const ModelFlags& model_flags, const TrainFlags& train_flags) {
    Manifest manifest("train", argv, common.out_dir);
    manifest.add_dataset(common.data_path);
    const mcnn::Dataset train_data = load_dataset(common.data_path, common.znorm);
    std::optional<mcnn::Dataset> test_data;
    if (!common.test_path.empty()) {
        manifest.add_dataset(common.test_path);
        test_data = load_dataset(common.test_path, common.znorm);
        align_labels(*test_data, train_data.label_values);
    }

    const mcnn::McnnConfig config = build_config(model_flags, train_data);
    mcnn::TrainConfig tcfg;
    tcfg.learning_rate = train_flags.lr;
    tcfg.momentum = train_flags.momentum;
    tcfg.batch_size = train_flags.batch_size;
    tcfg.max_epochs = train_flags.max_epochs;
    tcfg.patience = train_flags.patience;
    tcfg.val_fraction = train_flags.val_fraction;
    tcfg.seed = common.seed;

    manifest.doc["config"] = config_to_json(config);
    manifest.doc["train_config"] = train_to_json(tcfg);
    manifest.doc["seed"] = common.seed;

    const mcnn::FitResult result =
        mcnn::fit(config, train_data, tcfg, test_data ? &*test_data : nullptr);

    fs::create_directories(common.out_dir);
    const std::string model_path = (fs::path(common.out_dir) / "model.mcnn").string();
    const std::string report_path = (fs::path(common.out_dir) / "fit_report.txt").string();
    mcnn::save_model(result.model, model_path);
    result.report.write_text(report_path);
    manifest.add_artifact(model_path);
    manifest.add_artifact(report_path);

    std::printf("epochs %zu\n", result.report.epochs.size());
    std::printf("best_epoch %zu\n", result.report.best_epoch);
    std::printf("best_val_err %.3f\n", result.report.best_val_error);
    json metrics{{"epochs", result.report.epochs.size()},
                 {"best_epoch", result.report.best_epoch},
                 {"best_val_err", result.report.best_val_error}};
    if (result.report.test_error) {
        std::printf("test_err %.3f\n", *result.report.test_error);
        metrics["test_err"] = *result.report.test_error;
    }
    manifest.doc["metrics"] = metrics;
    write_json_metrics(common.json_out, metrics);
    manifest.write();
    return kExitOk;
}

int cmd_grid(const std::vector<std::string>& argv, const CommonFlags& common,
             const ModelFlags& model_flags, const TrainFlags& train_flags,
             const mcnn::GridSpec& grid) {
    Manifest manifest("grid", argv, common.out_dir);
    manifest.add_dataset(common.data_path);
    const mcnn::Dataset train_data = load_dataset(common.data_path, common.znorm);
    std::optional<mcnn::Dataset> test_data;
    if (!common.test_path.empty()) {
        manifest.add_dataset(common.test_path);
        test_data = load_dataset(common.test_path, common.znorm);
        align_labels(*test_data, train_data.label_values);
    }

    const mcnn::McnnConfig base = build_config(model_flags, train_data);
    mcnn::TrainConfig tcfg;
    tcfg.learning_rate = train_flags.lr;
    tcfg.momentum = train_flags.momentum;
    tcfg.batch_size = train_flags.batch_size;
    tcfg.max_epochs = train_flags.max_epochs;
    tcfg.patience = train_flags.patience;
    tcfg.val_fraction = train_flags.val_fraction;
    tcfg.seed = common.seed;

    manifest.doc["base_config"] = config_to_json(base);
    manifest.doc["train_config"] = train_to_json(tcfg);
    manifest.doc["grid"] = {{"filter_ratios", grid.filter_ratios},
                            {"pooling_factors", grid.pooling_factors},
                            {"batch_sizes", grid.batch_sizes}};
    manifest.doc["seed"] = common.seed;

    const mcnn::GridResult result = mcnn::grid_search(base, grid, train_data, tcfg);

    fs::create_directories(common.out_dir);
    const std::string board_path = (fs::path(common.out_dir) / "leaderboard.txt").string();
    std::ofstream board(board_path);
    json board_json = json::array();
    for (const mcnn::GridEntry& e : result.leaderboard) {
        char line[200];
        if (e.feasible) {
            std::snprintf(line, sizeof(line),
                          "ratio=%.3g pool=%zu batch=%zu val_err=%.3f best_epoch=%zu",
                          e.filter_ratio, e.pooling_factor, e.batch_size, e.val_error,
                          e.best_epoch);
        } else {
            std::snprintf(line, sizeof(line), "ratio=%.3g pool=%zu batch=%zu skipped: %s",
                          e.filter_ratio, e.pooling_factor, e.batch_size, e.skip_reason.c_str());
        }
        board << line << "\n";
        std::printf("%s\n", line);
        board_json.push_back({{"filter_ratio", e.filter_ratio},
                              {"pooling_factor", e.pooling_factor},
                              {"batch_size", e.batch_size},
                              {"feasible", e.feasible},
                              {"val_err", e.val_error},
                              {"skip_reason", e.skip_reason}});
    }
    manifest.add_artifact(board_path);

    const std::string model_path = (fs::path(common.out_dir) / "model.mcnn").string();
    mcnn::McnnModel best = result.best_model;
    best.label_values = train_data.label_values;
    mcnn::save_model(best, model_path);
    manifest.add_artifact(model_path);

    std::printf("best ratio=%.3g pool=%zu val_err=%.3f\n", result.best_config.filter_ratio,
                result.best_config.pooling_factor, result.best_report.best_val_error);
    json metrics{{"best_filter_ratio", result.best_config.filter_ratio},
                 {"best_pooling_factor", result.best_config.pooling_factor},
                 {"best_val_err", result.best_report.best_val_error},
                 {"leaderboard", board_json}};
    if (test_data) {
        const double err = mcnn::evaluate(best, *test_data, common.threads);
        std::printf("test_err %.3f\n", err);
        metrics["test_err"] = err;
    }
    manifest.doc["metrics"] = metrics;
    write_json_metrics(common.json_out, metrics);
    manifest.write();
    return kExitOk;
}

int cmd_eval(const std::vector<std::string>& argv, const CommonFlags& common,
             const std::string& model_path) {
    Manifest manifest("eval", argv, common.out_dir);
    manifest.add_dataset(common.data_path);
    manifest.doc["model"] = model_path;
    manifest.doc["seed"] = common.seed;

    const mcnn::McnnModel model = mcnn::load_model(model_path);
    mcnn::Dataset data = load_dataset(common.data_path, common.znorm);
    align_labels(data, model.label_values);

    const double err = mcnn::evaluate(model, data, common.threads);
    std::printf("error %.3f\n", err);
    manifest.doc["metrics"] = {{"error", err}};
    write_json_metrics(common.json_out, {{"error", err}});
    manifest.write();
    return kExitOk;
}

int cmd_predict(const std::vector<std::string>& argv, const CommonFlags& common,
                const std::string& model_path, bool with_probs) {
    Manifest manifest("predict", argv, common.out_dir);
    manifest.add_dataset(common.data_path);
    manifest.doc["model"] = model_path;
    manifest.doc["seed"] = common.seed;

    const mcnn::McnnModel model = mcnn::load_model(model_path);
    mcnn::Dataset data = mcnn::load_ucr_variable(common.data_path);
    if (should_znorm(common.znorm, common.data_path)) {
        for (mcnn::LabeledSeries& item : data.items) item.values = mcnn::z_normalize(item.values);
    }

    for (const mcnn::LabeledSeries& item : data.items) {
        const mcnn::VotePrediction pred = mcnn::predict_with_vote(model, item.values);
        const double label = model.label_values.empty() ? static_cast<double>(pred.cls)
                                                        : model.label_values[pred.cls];
        std::printf("%s", format_label(label).c_str());
        if (with_probs) {
            for (double p : pred.summed_probs) std::printf(" %.6f", p);
        }
        std::printf("\n");
    }
    manifest.doc["metrics"] = {{"predicted", data.items.size()}};
    manifest.write();
    return kExitOk;
}

int cmd_baseline(const std::vector<std::string>& argv, const CommonFlags& common,
                 const std::string& method, std::optional<double> window) {
    Manifest manifest("baseline", argv, common.out_dir);
    manifest.add_dataset(common.data_path);
    manifest.add_dataset(common.test_path);
    manifest.doc["method"] = method;
    manifest.doc["seed"] = common.seed;

    const mcnn::Dataset train = load_dataset(common.data_path, common.znorm);
    mcnn::Dataset test = load_dataset(common.test_path, common.znorm);
    align_labels(test, train.label_values);

    double err = 0.0;
    json metrics;
    if (method == "ed") {
        err = mcnn::euclidean_1nn(train, test, common.threads);
    } else if (method == "dtw") {
        const mcnn::DtwParams params =
            window ? mcnn::DtwParams::banded(*window) : mcnn::DtwParams::unconstrained();
        err = mcnn::dtw_1nn(train, test, params, common.threads);
        if (window) metrics["window"] = *window;
    } else if (method == "dtwcv") {
        const double best_window = mcnn::dtw_cv_window(train, {0.00, 0.01, 0.02, 0.03, 0.04, 0.05,
                                                               0.06, 0.07, 0.08, 0.09, 0.10},
                                                       common.threads);
        err = mcnn::dtw_1nn(train, test, mcnn::DtwParams::banded(best_window), common.threads);
        std::printf("window %.2f\n", best_window);
        metrics["window"] = best_window;
    }

    std::printf("error %.3f\n", err); // three-decimal reporting convention
    metrics["error"] = err;
    manifest.doc["metrics"] = metrics;
    write_json_metrics(common.json_out, metrics);
    manifest.write();
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-scale convolutional network for time series classification"};
    app.require_subcommand(1);

    CommonFlags common;
    ModelFlags model_flags;
    TrainFlags train_flags;

    CLI::App* train_cmd = app.add_subcommand("train", "fit a model on a UCR training file");
    add_common(train_cmd, common, true);
    add_model(train_cmd, model_flags);
    add_train(train_cmd, train_flags);

    CLI::App* grid_cmd = app.add_subcommand("grid", "grid search over filter ratio, pooling factor, and batch size");
    add_common(grid_cmd, common, true);
    add_model(grid_cmd, model_flags);
    add_train(grid_cmd, train_flags);
    std::vector<double> grid_ratios = {0.05, 0.1, 0.2};
    std::vector<std::size_t> grid_pools = {2, 3, 5};
    std::vector<std::size_t> grid_batches = {16, 32};
    grid_cmd->add_option("--filter-ratios", grid_ratios, "filter ratio grid")->delimiter(',');
    grid_cmd->add_option("--pool-factors", grid_pools, "pooling factor grid")->delimiter(',');
    grid_cmd->add_option("--batch-sizes", grid_batches, "batch size grid")->delimiter(',');

    CLI::App* eval_cmd = app.add_subcommand("eval", "error rate of a saved model on a data file");
    std::string model_path;
    add_common(eval_cmd, common, false);
    eval_cmd->add_option("--model", model_path, "saved model file")->required();

    CLI::App* predict_cmd = app.add_subcommand("predict", "print one predicted label per input series");
    bool with_probs = false;
    add_common(predict_cmd, common, false);
    predict_cmd->add_option("--model", model_path, "saved model file")->required();
    predict_cmd->add_flag("--probs", with_probs, "append per-class vote probabilities");

    CLI::App* baseline_cmd = app.add_subcommand("baseline", "1-NN reference classifiers");
    std::string method;
    std::optional<double> window;
    add_common(baseline_cmd, common, false);
    baseline_cmd->add_option("--test", common.test_path, "held-out test file")->required();
    baseline_cmd->add_option("--method", method, "ed | dtw | dtwcv")
        ->required()
        ->check(CLI::IsMember({"ed", "dtw", "dtwcv"}));
    baseline_cmd->add_option("--window", window, "DTW warping window as a fraction of the length");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitBadInput;
    }

    const std::vector<std::string> argv_copy(argv, argv + argc);
    try {
        if (app.got_subcommand(train_cmd)) {
            return cmd_train(argv_copy, common, model_flags, train_flags);
        }
        if (app.got_subcommand(grid_cmd)) {
            mcnn::GridSpec grid;
            grid.filter_ratios = grid_ratios;
            grid.pooling_factors = grid_pools;
            grid.batch_sizes = grid_batches;
            return cmd_grid(argv_copy, common, model_flags, train_flags, grid);
        }
        if (app.got_subcommand(eval_cmd)) {
            return cmd_eval(argv_copy, common, model_path);
        }
        if (app.got_subcommand(predict_cmd)) {
            return cmd_predict(argv_copy, common, model_path, with_probs);
        }
        if (app.got_subcommand(baseline_cmd)) {
            return cmd_baseline(argv_copy, common, method, window);
        }
    } catch (const mcnn::GeometryError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRunFailure;
    } catch (const mcnn::TrainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRunFailure;
    } catch (const mcnn::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    }
    return kExitBadInput;
}
