#include "mcnn/mcnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mcnn/rng.hpp"

namespace mcnn {

std::size_t McnnConfig::slice_length() const {
    const auto s = static_cast<std::size_t>(std::lround(slice_ratio * static_cast<double>(input_length)));
    return std::max<std::size_t>(2, s);
}

std::size_t McnnConfig::local_filter_length() const {
    const auto m = static_cast<std::size_t>(
        std::lround(filter_ratio * static_cast<double>(slice_length())));
    return std::max<std::size_t>(2, m);
}

void McnnConfig::validate() const {
    branch_spec.validate();
    if (num_classes < 2) throw ShapeError("config: num_classes must be >= 2");
    if (input_length < 2) throw ShapeError("config: input_length must be >= 2");
    if (!(slice_ratio > 0.0 && slice_ratio <= 1.0)) {
        throw ShapeError("config: slice_ratio must be in (0, 1]");
    }
    if (!(filter_ratio > 0.0 && filter_ratio <= 1.0)) {
        throw ShapeError("config: filter_ratio must be in (0, 1]");
    }
    if (pooling_factor < 1) throw ShapeError("config: pooling_factor must be >= 1");
    if (local_filters < 1 || full_filters < 1 || dense_units < 1) {
        throw ShapeError("config: filter and unit counts must be >= 1");
    }
    if (full_depth < 1) throw ShapeError("config: full_depth must be >= 1");
    if (slice_length() > input_length) {
        throw ShapeError("config: slice length exceeds input length");
    }
}

namespace {

struct BranchShape {
    std::string name;
    std::size_t channels;
    std::size_t length;
};

std::vector<BranchShape> branch_shapes(const McnnConfig& config) {
    const std::size_t s = config.slice_length();
    std::vector<BranchShape> shapes;
    if (config.branch_spec.include_identity) {
        shapes.push_back({"identity", 1, s});
    }
    for (std::size_t k : config.branch_spec.downsample_rates) {
        shapes.push_back({"scale k=" + std::to_string(k), 1, (s - 1) / k + 1});
    }
    if (!config.branch_spec.ma_windows.empty()) {
        const std::size_t max_w = config.branch_spec.ma_windows.back();
        if (max_w > s) {
            throw GeometryError("branch frequency: moving-average window " +
                                std::to_string(max_w) + " exceeds slice length " +
                                std::to_string(s));
        }
        shapes.push_back({"frequency", config.branch_spec.ma_windows.size(), s - max_w + 1});
    }
    return shapes;
}

std::size_t full_filter_length(const McnnConfig& config, std::size_t map_len) {
    const auto m =
        static_cast<std::size_t>(std::lround(config.filter_ratio * static_cast<double>(map_len)));
    return std::max<std::size_t>(2, m);
}

void glorot_fill(FilterBank& bank, Rng& rng) {
    const double fan_in = static_cast<double>(bank.in_channels * bank.filter_len);
    const double fan_out = static_cast<double>(bank.num_filters * bank.filter_len);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : bank.weights) w = rng.uniform(-limit, limit);
}

void glorot_fill(Matrix& weights, Rng& rng) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(weights.cols + weights.rows));
    for (double& w : weights.data) w = rng.uniform(-limit, limit);
}

} // namespace

McnnModel assemble(const McnnConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t m = config.local_filter_length();
    const std::size_t p = config.pooling_factor;

    const std::vector<BranchShape> shapes = branch_shapes(config);
    for (const BranchShape& b : shapes) {
        if (b.length < m) {
            throw GeometryError("branch " + b.name + ": transformed length " +
                                std::to_string(b.length) + " < filter length " +
                                std::to_string(m));
        }
        const std::size_t post = b.length - m + 1;
        if (p > post) {
            throw GeometryError("branch " + b.name + ": pooling factor " + std::to_string(p) +
                                " > post-convolution length " + std::to_string(post));
        }
    }

    McnnModel model;
    model.config = config;
    model.seed = seed;
    Rng rng(seed);

    for (const BranchShape& b : shapes) {
        ConvLayer layer;
        layer.bank = FilterBank(config.local_filters, b.channels, m);
        layer.activation = config.activation;
        glorot_fill(layer.bank, rng);
        model.local_layers.push_back(std::move(layer));
    }

    std::size_t cur_channels = shapes.size() * config.local_filters;
    std::size_t cur_len = p;
    for (std::size_t d = 0; d < config.full_depth; ++d) {
        const std::size_t mf = full_filter_length(config, cur_len);
        if (cur_len < mf) {
            throw GeometryError("full stage layer " + std::to_string(d) + ": map length " +
                                std::to_string(cur_len) + " < filter length " +
                                std::to_string(mf));
        }
        ConvLayer layer;
        layer.bank = FilterBank(config.full_filters, cur_channels, mf);
        layer.activation = config.activation;
        glorot_fill(layer.bank, rng);
        model.full_layers.push_back(std::move(layer));
        const std::size_t post = cur_len - mf + 1;
        cur_len = std::min(p, post); // pools to p outputs when the map allows it
        cur_channels = config.full_filters;
    }

    const std::size_t dense_in = cur_channels * cur_len;
    model.dense.weights = Matrix(config.dense_units, dense_in);
    model.dense.bias.assign(config.dense_units, 0.0);
    model.dense.activation = config.activation;
    glorot_fill(model.dense.weights, rng);

    model.output.weights = Matrix(config.num_classes, config.dense_units);
    model.output.bias.assign(config.num_classes, 0.0);
    model.output.activation = Activation::identity;
    glorot_fill(model.output.weights, rng);

    return model;
}

std::vector<std::span<double>> McnnModel::param_spans() {
    std::vector<std::span<double>> spans;
    for (ConvLayer& l : local_layers) {
        spans.emplace_back(l.bank.weights);
        spans.emplace_back(l.bank.bias);
    }
    for (ConvLayer& l : full_layers) {
        spans.emplace_back(l.bank.weights);
        spans.emplace_back(l.bank.bias);
    }
    spans.emplace_back(dense.weights.data);
    spans.emplace_back(dense.bias);
    spans.emplace_back(output.weights.data);
    spans.emplace_back(output.bias);
    return spans;
}

std::vector<std::span<const double>> McnnModel::param_spans() const {
    std::vector<std::span<const double>> spans;
    for (const ConvLayer& l : local_layers) {
        spans.emplace_back(l.bank.weights);
        spans.emplace_back(l.bank.bias);
    }
    for (const ConvLayer& l : full_layers) {
        spans.emplace_back(l.bank.weights);
        spans.emplace_back(l.bank.bias);
    }
    spans.emplace_back(dense.weights.data);
    spans.emplace_back(dense.bias);
    spans.emplace_back(output.weights.data);
    spans.emplace_back(output.bias);
    return spans;
}

std::size_t McnnModel::parameter_count() const {
    std::size_t total = 0;
    for (const auto& span : param_spans()) total += span.size();
    return total;
}

McnnGrads make_zero_grads(const McnnModel& model) {
    McnnGrads g;
    for (const ConvLayer& l : model.local_layers) {
        g.local.push_back({std::vector<double>(l.bank.weights.size(), 0.0),
                           std::vector<double>(l.bank.bias.size(), 0.0)});
    }
    for (const ConvLayer& l : model.full_layers) {
        g.full.push_back({std::vector<double>(l.bank.weights.size(), 0.0),
                          std::vector<double>(l.bank.bias.size(), 0.0)});
    }
    g.dense.weights.assign(model.dense.weights.data.size(), 0.0);
    g.dense.bias.assign(model.dense.bias.size(), 0.0);
    g.output.weights.assign(model.output.weights.data.size(), 0.0);
    g.output.bias.assign(model.output.bias.size(), 0.0);
    return g;
}

std::vector<std::span<double>> McnnGrads::spans() {
    std::vector<std::span<double>> spans;
    for (ConvGrads& g : local) {
        spans.emplace_back(g.weights);
        spans.emplace_back(g.bias);
    }
    for (ConvGrads& g : full) {
        spans.emplace_back(g.weights);
        spans.emplace_back(g.bias);
    }
    spans.emplace_back(dense.weights);
    spans.emplace_back(dense.bias);
    spans.emplace_back(output.weights);
    spans.emplace_back(output.bias);
    return spans;
}

std::vector<std::span<const double>> McnnGrads::spans() const {
    std::vector<std::span<const double>> spans;
    for (const ConvGrads& g : local) {
        spans.emplace_back(g.weights);
        spans.emplace_back(g.bias);
    }
    for (const ConvGrads& g : full) {
        spans.emplace_back(g.weights);
        spans.emplace_back(g.bias);
    }
    spans.emplace_back(dense.weights);
    spans.emplace_back(dense.bias);
    spans.emplace_back(output.weights);
    spans.emplace_back(output.bias);
    return spans;
}

void McnnGrads::scale(double factor) {
    for (auto span : spans()) {
        for (double& v : span) v *= factor;
    }
}

Signal deep_concat(const std::vector<Signal>& maps) {
    if (maps.empty()) throw ShapeError("deep_concat: no maps");
    const std::size_t len = maps.front().length();
    std::size_t channels = 0;
    for (const Signal& s : maps) {
        if (s.length() != len) {
            throw ShapeError("deep_concat: length axis mismatch, " + std::to_string(s.length()) +
                             " vs " + std::to_string(len));
        }
        channels += s.channels();
    }
    Signal out(channels, len);
    std::size_t row = 0;
    for (const Signal& s : maps) {
        std::copy(s.values().begin(), s.values().end(), out.values().begin() + row * len);
        row += s.channels();
    }
    return out;
}

namespace {

struct Trace {
    BranchInputs branches;
    std::vector<ConvCache> local_conv;
    std::vector<PoolResult> local_pool;
    Signal concat;
    std::vector<ConvCache> full_conv;
    std::vector<PoolResult> full_pool;
    DenseCache dense;
    DenseCache output;
    std::vector<double> logits;
};

std::vector<double> run_forward(const McnnModel& model, const std::vector<double>& series,
                                Trace* trace) {
    const std::size_t s = model.config.slice_length();
    if (series.size() != s) {
        throw ShapeError("forward: series length " + std::to_string(series.size()) +
                         " != slice length " + std::to_string(s));
    }
    BranchInputs branches = build_branches(series, model.config.branch_spec);
    if (branches.signals.size() != model.local_layers.size()) {
        throw ShapeError("forward: branch count does not match assembled model");
    }
    const std::size_t p = model.config.pooling_factor;

    std::vector<Signal> pooled;
    pooled.reserve(branches.signals.size());
    if (trace) {
        trace->local_conv.resize(branches.signals.size());
        trace->local_pool.reserve(branches.signals.size());
    }
    for (std::size_t b = 0; b < branches.signals.size(); ++b) {
        ConvCache* cache = trace ? &trace->local_conv[b] : nullptr;
        Signal activated = conv_forward(model.local_layers[b], branches.signals[b], cache);
        PoolResult pool = maxpool_by_factor(activated, p);
        pooled.push_back(pool.output);
        if (trace) trace->local_pool.push_back(std::move(pool));
    }

    Signal map = deep_concat(pooled);
    if (trace) trace->concat = map;

    if (trace) {
        trace->full_conv.resize(model.full_layers.size());
        trace->full_pool.reserve(model.full_layers.size());
    }
    for (std::size_t d = 0; d < model.full_layers.size(); ++d) {
        ConvCache* cache = trace ? &trace->full_conv[d] : nullptr;
        Signal activated = conv_forward(model.full_layers[d], map, cache);
        PoolResult pool = maxpool_by_factor(activated, std::min(p, activated.length()));
        map = pool.output;
        if (trace) trace->full_pool.push_back(std::move(pool));
    }

    std::vector<double> flat = map.values();
    std::vector<double> hidden =
        dense_forward(model.dense, flat, trace ? &trace->dense : nullptr);
    std::vector<double> logits =
        dense_forward(model.output, hidden, trace ? &trace->output : nullptr);
    if (trace) {
        trace->branches = std::move(branches);
        trace->logits = logits;
    }
    return logits;
}

void accumulate(std::vector<double>& into, const std::vector<double>& from) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += from[i];
}

std::size_t argmax_lowest(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

} // namespace

std::vector<double> forward(const McnnModel& model, const std::vector<double>& series) {
    return softmax(run_forward(model, series, nullptr));
}

ForwardLoss forward_backward(const McnnModel& model, const std::vector<double>& series,
                             std::size_t label, McnnGrads& grads) {
    Trace trace;
    run_forward(model, series, &trace);
    CrossEntropy ce = softmax_cross_entropy(trace.logits, label);

    ForwardLoss result;
    result.loss = ce.loss;
    result.probs = ce.probs;
    result.predicted = argmax_lowest(ce.probs);

    DenseBackward out_back = dense_backward(model.output, trace.output, ce.logit_grad);
    accumulate(grads.output.weights, out_back.grads.weights);
    accumulate(grads.output.bias, out_back.grads.bias);

    DenseBackward dense_back = dense_backward(model.dense, trace.dense, out_back.input_grad);
    accumulate(grads.dense.weights, dense_back.grads.weights);
    accumulate(grads.dense.bias, dense_back.grads.bias);

    // reshape the flat dense-input gradient back into the last full-stage map
    const PoolResult& last_pool = trace.full_pool.back();
    Signal g(last_pool.output.channels(), last_pool.output.length(), dense_back.input_grad);

    for (std::size_t d = model.full_layers.size(); d-- > 0;) {
        Signal conv_grad = maxpool_backward(trace.full_pool[d], g);
        ConvBackward back = conv_backward(model.full_layers[d], trace.full_conv[d], conv_grad);
        accumulate(grads.full[d].weights, back.grads.weights);
        accumulate(grads.full[d].bias, back.grads.bias);
        g = std::move(back.input_grad);
    }

    // split the concat gradient back into per-branch segments
    std::size_t row = 0;
    for (std::size_t b = 0; b < model.local_layers.size(); ++b) {
        const std::size_t channels = trace.local_pool[b].output.channels();
        const std::size_t len = g.length();
        Signal segment(channels, len);
        std::copy(g.values().begin() + row * len, g.values().begin() + (row + channels) * len,
                  segment.values().begin());
        row += channels;

        Signal conv_grad = maxpool_backward(trace.local_pool[b], segment);
        ConvBackward back = conv_backward(model.local_layers[b], trace.local_conv[b], conv_grad);
        accumulate(grads.local[b].weights, back.grads.weights);
        accumulate(grads.local[b].bias, back.grads.bias);
    }
    return result;
}

VotePrediction predict_with_vote(const McnnModel& model, const std::vector<double>& series) {
    const std::size_t s = model.config.slice_length();
    if (series.size() < s) {
        throw ShapeError("predict: series length " + std::to_string(series.size()) +
                         " < slice length " + std::to_string(s));
    }
    VotePrediction pred;
    pred.votes.assign(model.config.num_classes, 0);
    pred.summed_probs.assign(model.config.num_classes, 0.0);

    for (const std::vector<double>& slice : window_slices(series, s)) {
        std::vector<double> probs = forward(model, slice);
        pred.votes[argmax_lowest(probs)]++;
        accumulate(pred.summed_probs, probs);
    }

    std::size_t best = 0;
    for (std::size_t c = 1; c < pred.votes.size(); ++c) {
        if (pred.votes[c] > pred.votes[best] ||
            (pred.votes[c] == pred.votes[best] &&
             pred.summed_probs[c] > pred.summed_probs[best])) {
            best = c;
        }
    }
    pred.cls = best;
    return pred;
}

McnnConfig plain_cnn_variant(const McnnConfig& config) {
    McnnConfig cnn = config;
    cnn.local_filters = config.local_filters * config.branch_spec.num_branches();
    cnn.branch_spec = BranchSpec::identity_only();
    return cnn;
}

GradCheckReport grad_check_model(McnnModel& model, const std::vector<double>& series,
                                 std::size_t label, double epsilon) {
    McnnGrads grads = make_zero_grads(model);
    forward_backward(model, series, label, grads);
    const McnnGrads analytic = grads;

    auto loss = [&model, &series, label]() {
        Trace trace;
        run_forward(model, series, &trace);
        return softmax_cross_entropy(trace.logits, label).loss;
    };
    return grad_check(model.param_spans(), analytic.spans(), loss, epsilon);
}

// ---------------------------------------------------------------------------
// serialization

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts are unsupported");

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_sizes(const std::vector<std::size_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(values[i]);
    }
    return out;
}

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_double(values[i]);
    }
    return out;
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : text) {
        if (ch == ',') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) parts.push_back(cur);
    return parts;
}

void write_param(std::ostream& out, const std::string& name,
                 const std::vector<std::size_t>& dims, std::span<const double> values) {
    out << "param " << name;
    for (std::size_t d : dims) out << ' ' << d;
    out << '\n';
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

struct NamedParam {
    std::string name;
    std::vector<std::size_t> dims;
    std::span<const double> values;
};

template <typename Model>
std::vector<NamedParam> named_params(Model& model) {
    std::vector<NamedParam> out;
    for (std::size_t b = 0; b < model.local_layers.size(); ++b) {
        auto& bank = model.local_layers[b].bank;
        out.push_back({"local" + std::to_string(b) + ".weights",
                       {bank.num_filters, bank.in_channels, bank.filter_len},
                       bank.weights});
        out.push_back({"local" + std::to_string(b) + ".bias", {bank.num_filters}, bank.bias});
    }
    for (std::size_t d = 0; d < model.full_layers.size(); ++d) {
        auto& bank = model.full_layers[d].bank;
        out.push_back({"full" + std::to_string(d) + ".weights",
                       {bank.num_filters, bank.in_channels, bank.filter_len},
                       bank.weights});
        out.push_back({"full" + std::to_string(d) + ".bias", {bank.num_filters}, bank.bias});
    }
    out.push_back({"dense.weights",
                   {model.dense.weights.rows, model.dense.weights.cols},
                   model.dense.weights.data});
    out.push_back({"dense.bias", {model.dense.bias.size()}, model.dense.bias});
    out.push_back({"output.weights",
                   {model.output.weights.rows, model.output.weights.cols},
                   model.output.weights.data});
    out.push_back({"output.bias", {model.output.bias.size()}, model.output.bias});
    return out;
}

} // namespace

void save_model(const McnnModel& model, std::ostream& out) {
    out << "MCNN-MODEL v1\n";
    out << "config_begin\n";
    out << "include_identity " << (model.config.branch_spec.include_identity ? 1 : 0) << '\n';
    out << "downsample_rates " << join_sizes(model.config.branch_spec.downsample_rates) << '\n';
    out << "ma_windows " << join_sizes(model.config.branch_spec.ma_windows) << '\n';
    out << "local_filters " << model.config.local_filters << '\n';
    out << "full_filters " << model.config.full_filters << '\n';
    out << "filter_ratio " << format_double(model.config.filter_ratio) << '\n';
    out << "pooling_factor " << model.config.pooling_factor << '\n';
    out << "dense_units " << model.config.dense_units << '\n';
    out << "num_classes " << model.config.num_classes << '\n';
    out << "input_length " << model.config.input_length << '\n';
    out << "slice_ratio " << format_double(model.config.slice_ratio) << '\n';
    out << "activation " << to_string(model.config.activation) << '\n';
    out << "full_depth " << model.config.full_depth << '\n';
    out << "seed " << model.seed << '\n';
    if (!model.label_values.empty()) {
        out << "labels " << join_doubles(model.label_values) << '\n';
    }
    out << "config_end\n";

    for (const NamedParam& p : named_params(model)) {
        write_param(out, p.name, p.dims, p.values);
    }
    if (!out) throw IoError("model write failed");
}

void save_model(const McnnModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open model file for writing: " + path);
    save_model(model, out);
}

McnnModel load_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "MCNN-MODEL v1") {
        throw IoError("model file: bad header, expected 'MCNN-MODEL v1'");
    }
    if (!std::getline(in, line) || line != "config_begin") {
        throw IoError("model file: missing config block");
    }

    McnnConfig config;
    config.branch_spec = BranchSpec{{}, {}, false};
    std::uint64_t seed = 0;
    std::vector<double> label_values;
    while (std::getline(in, line) && line != "config_end") {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        std::string value;
        std::getline(ls, value);
        if (!value.empty() && value.front() == ' ') value.erase(0, 1);
        if (key == "include_identity") {
            config.branch_spec.include_identity = value == "1";
        } else if (key == "downsample_rates") {
            for (const std::string& v : split_csv(value)) {
                config.branch_spec.downsample_rates.push_back(std::stoull(v));
            }
        } else if (key == "ma_windows") {
            for (const std::string& v : split_csv(value)) {
                config.branch_spec.ma_windows.push_back(std::stoull(v));
            }
        } else if (key == "local_filters") {
            config.local_filters = std::stoull(value);
        } else if (key == "full_filters") {
            config.full_filters = std::stoull(value);
        } else if (key == "filter_ratio") {
            config.filter_ratio = std::stod(value);
        } else if (key == "pooling_factor") {
            config.pooling_factor = std::stoull(value);
        } else if (key == "dense_units") {
            config.dense_units = std::stoull(value);
        } else if (key == "num_classes") {
            config.num_classes = std::stoull(value);
        } else if (key == "input_length") {
            config.input_length = std::stoull(value);
        } else if (key == "slice_ratio") {
            config.slice_ratio = std::stod(value);
        } else if (key == "activation") {
            config.activation = activation_from_string(value);
        } else if (key == "full_depth") {
            config.full_depth = std::stoull(value);
        } else if (key == "seed") {
            seed = std::stoull(value);
        } else if (key == "labels") {
            for (const std::string& v : split_csv(value)) {
                label_values.push_back(std::stod(v));
            }
        } else {
            throw IoError("model file: unknown config key '" + key + "'");
        }
    }
    if (line != "config_end") throw IoError("model file: unterminated config block");

    McnnModel model = assemble(config, seed);
    model.label_values = std::move(label_values);

    for (const NamedParam& expected : named_params(model)) {
        if (!std::getline(in, line)) {
            throw IoError("model file: missing parameter block '" + expected.name + "'");
        }
        std::istringstream ls(line);
        std::string tag, name;
        ls >> tag >> name;
        if (tag != "param" || name != expected.name) {
            throw IoError("model file: expected parameter '" + expected.name + "', found '" +
                          line + "'");
        }
        std::vector<std::size_t> dims;
        std::size_t d;
        while (ls >> d) dims.push_back(d);
        if (dims != expected.dims) {
            throw IoError("model file: dimension mismatch for '" + expected.name + "'");
        }
        auto* dst = const_cast<double*>(expected.values.data());
        in.read(reinterpret_cast<char*>(dst),
                static_cast<std::streamsize>(expected.values.size() * sizeof(double)));
        if (!in) throw IoError("model file: truncated data for '" + expected.name + "'");
    }
    for (auto span : model.param_spans()) {
        for (double v : span) {
            if (!std::isfinite(v)) throw IoError("model file: non-finite parameter value");
        }
    }
    return model;
}

McnnModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path);
    return load_model(in);
}

} // namespace mcnn
