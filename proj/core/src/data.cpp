#include "mcnn/data.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mcnn/rng.hpp"
#include "mcnn/transform.hpp"

namespace mcnn {

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes(), 0);
    for (const LabeledSeries& item : items) counts[item.label]++;
    return counts;
}

namespace {

std::vector<std::string> tokenize_row(const std::string& line) {
    std::vector<std::string> fields;
    if (line.find(',') != std::string::npos) {
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                fields.push_back(cur);
                cur.clear();
            } else if (!std::isspace(static_cast<unsigned char>(ch))) {
                cur += ch;
            }
        }
        fields.push_back(cur);
    } else {
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) fields.push_back(tok);
    }
    return fields;
}

double parse_field(const std::string& field, const std::string& path, std::size_t line_no) {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(field, &consumed);
        if (consumed != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(line_no) + ": unparseable field '" + field +
                      "'");
    }
}

Dataset load_impl(const std::string& path, bool rectangular) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open data file: " + path);

    struct Row {
        double label;
        std::vector<double> values;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t expected_fields = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const std::vector<std::string> fields = tokenize_row(line);
        if (fields.size() < 2) {
            throw IoError(path + ":" + std::to_string(line_no) +
                          ": a row needs a label and at least one value");
        }
        if (rectangular) {
            if (expected_fields == 0) {
                expected_fields = fields.size();
            } else if (fields.size() != expected_fields) {
                throw IoError(path + ":" + std::to_string(line_no) + ": ragged row, expected " +
                              std::to_string(expected_fields) + " fields, got " +
                              std::to_string(fields.size()));
            }
        }
        Row row;
        row.label = parse_field(fields[0], path, line_no);
        row.values.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            row.values.push_back(parse_field(fields[i], path, line_no));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path + ": empty data file");

    std::map<double, std::size_t> label_map; // sorted original value -> dense index
    for (const Row& row : rows) label_map.emplace(row.label, 0);
    Dataset dataset;
    for (auto& [value, index] : label_map) {
        index = dataset.label_values.size();
        dataset.label_values.push_back(value);
    }
    dataset.series_length = rectangular ? rows.front().values.size() : 0;

    dataset.items.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        dataset.items.push_back({label_map.at(rows[i].label), std::move(rows[i].values), i});
    }
    return dataset;
}

} // namespace

Dataset load_ucr(const std::string& path) { return load_impl(path, true); }

Dataset load_ucr_variable(const std::string& path) { return load_impl(path, false); }

void save_ucr(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open data file for writing: " + path);
    char buf[40];
    for (const LabeledSeries& item : dataset.items) {
        std::snprintf(buf, sizeof(buf), "%.17g", dataset.label_values[item.label]);
        out << buf;
        for (double v : item.values) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("data write failed: " + path);
}

std::vector<double> z_normalize(const std::vector<double>& series) {
    if (series.size() < 2) throw ShapeError("z_normalize: series needs >= 2 values");
    const double n = static_cast<double>(series.size());
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : series) var += (v - mean) * (v - mean);
    var /= n; // population variance
    std::vector<double> out(series.size());
    if (var == 0.0) return out; // constant series -> zeros
    const double inv_sd = 1.0 / std::sqrt(var);
    for (std::size_t i = 0; i < series.size(); ++i) {
        out[i] = (series[i] - mean) * inv_sd;
    }
    return out;
}

void z_normalize(Dataset& dataset) {
    for (LabeledSeries& item : dataset.items) {
        item.values = z_normalize(item.values);
    }
}

bool znorm_by_default(const std::string& dataset_name) {
    static const std::array<const char*, 5> names = {"beef", "coffee", "fish", "osuleaf",
                                                     "oliveoil"};
    std::string lower;
    for (char ch : dataset_name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return std::find(names.begin(), names.end(), lower) != names.end();
}

std::string dataset_name_from_path(const std::string& path) {
    std::size_t start = path.find_last_of("/\\");
    start = start == std::string::npos ? 0 : start + 1;
    std::string name = path.substr(start);
    const std::size_t dot = name.find_last_of('.');
    if (dot != std::string::npos) name.erase(dot);
    for (const char* suffix : {"_TRAIN", "_TEST", "_train", "_test"}) {
        const std::string s(suffix);
        if (name.size() > s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0) {
            name.erase(name.size() - s.size());
            break;
        }
    }
    return name;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double fraction,
                                             std::uint64_t seed) {
    if (fraction < 0.0 || fraction >= 1.0) {
        throw ShapeError("stratified_split: fraction must be in [0, 1)");
    }
    Dataset part_a, part_b;
    part_a.label_values = dataset.label_values;
    part_b.label_values = dataset.label_values;
    part_a.series_length = dataset.series_length;
    part_b.series_length = dataset.series_length;
    if (fraction == 0.0) {
        part_a.items = dataset.items;
        return {std::move(part_a), std::move(part_b)};
    }

    std::vector<std::vector<std::size_t>> by_class(dataset.num_classes());
    for (std::size_t i = 0; i < dataset.items.size(); ++i) {
        by_class[dataset.items[i].label].push_back(i);
    }
    Rng rng(seed);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        std::vector<std::size_t>& members = by_class[c];
        if (members.size() < 2) {
            throw ShapeError("stratified_split: class " + std::to_string(c) +
                             " has fewer than 2 members");
        }
        rng.shuffle(members);
        const auto take = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::lround(fraction * static_cast<double>(members.size()))));
        if (take >= members.size()) {
            throw ShapeError("stratified_split: fraction leaves class " + std::to_string(c) +
                             " empty on one side");
        }
        for (std::size_t i = 0; i < members.size(); ++i) {
            (i < take ? part_b : part_a).items.push_back(dataset.items[members[i]]);
        }
    }
    return {std::move(part_a), std::move(part_b)};
}

Dataset augment_by_slicing(const Dataset& dataset, double slice_ratio) {
    if (dataset.series_length == 0) {
        throw ShapeError("augment_by_slicing: dataset must be rectangular");
    }
    const std::size_t n = dataset.series_length;
    const auto s = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::lround(slice_ratio * static_cast<double>(n))));
    if (s > n) {
        throw ShapeError("augment_by_slicing: slice length " + std::to_string(s) +
                         " exceeds series length " + std::to_string(n));
    }
    Dataset out;
    out.label_values = dataset.label_values;
    out.series_length = s;
    out.items.reserve(dataset.items.size() * (n - s + 1));
    for (const LabeledSeries& item : dataset.items) {
        for (std::vector<double>& slice : window_slices(item.values, s)) {
            out.items.push_back({item.label, std::move(slice), item.provenance});
        }
    }
    return out;
}

} // namespace mcnn
