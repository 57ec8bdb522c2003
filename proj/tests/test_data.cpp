#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "mcnn/data.hpp"
#include "mcnn/rng.hpp"
#include "test_util.hpp"

using namespace mcnn;

namespace {

std::string write_temp(const std::string& name, const std::string& contents) {
    std::ofstream out(name);
    out << contents;
    return name;
}

} // namespace

TEST_CASE("load_ucr parses a comma-separated fixture") {
    const std::string path = write_temp("fixture_basic.txt", "1,0.5,0.7\n2,0.1,0.2\n");
    const Dataset ds = load_ucr(path);
    REQUIRE(ds.items.size() == 2);
    CHECK(ds.series_length == 2);
    CHECK(ds.num_classes() == 2);
    CHECK(ds.items[0].label == 0);
    CHECK(ds.items[1].label == 1);
    CHECK(ds.items[0].values == std::vector<double>{0.5, 0.7});
    CHECK(ds.label_values == std::vector<double>{1.0, 2.0});
    std::remove(path.c_str());
}

TEST_CASE("load_ucr remaps labels by sorted original value") {
    const std::string path = write_temp("fixture_labels.txt", "1,0.1,0.2\n-1,0.3,0.4\n1,0.5,0.6\n");
    const Dataset ds = load_ucr(path);
    CHECK(ds.label_values == std::vector<double>{-1.0, 1.0});
    CHECK(ds.items[0].label == 1);
    CHECK(ds.items[1].label == 0);
    std::remove(path.c_str());
}

TEST_CASE("load_ucr reads the Gun_Point training file") {
    const Dataset ds = load_ucr(testutil::ucr_path("GunPoint", "TRAIN"));
    CHECK(ds.items.size() == 50);
    CHECK(ds.series_length == 150);
    CHECK(ds.num_classes() == 2);
}

TEST_CASE("load_ucr errors carry line numbers") {
    const std::string ragged = write_temp("fixture_ragged.txt", "1,0.1,0.2\n2,0.3\n");
    CHECK_THROWS_WITH_AS(load_ucr(ragged), doctest::Contains(":2"), IoError);
    std::remove(ragged.c_str());

    const std::string garbage = write_temp("fixture_garbage.txt", "1,0.1,zzz\n");
    CHECK_THROWS_WITH_AS(load_ucr(garbage), doctest::Contains(":1"), IoError);
    std::remove(garbage.c_str());

    const std::string empty = write_temp("fixture_empty.txt", "");
    CHECK_THROWS_AS(load_ucr(empty), IoError);
    std::remove(empty.c_str());
}

TEST_CASE("load_ucr accepts whitespace separation as a fallback") {
    const std::string path = write_temp("fixture_ws.txt", "  1.0  0.5 0.7\n 2.0 0.1 0.2\n");
    const Dataset ds = load_ucr(path);
    REQUIRE(ds.items.size() == 2);
    CHECK(ds.items[0].values == std::vector<double>{0.5, 0.7});
    std::remove(path.c_str());
}

TEST_CASE("load then re-serialize preserves full precision") {
    Rng rng(3);
    std::string contents;
    for (int row = 0; row < 4; ++row) {
        contents += row % 2 ? "1" : "2";
        for (int i = 0; i < 6; ++i) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), ",%.17g", rng.uniform(-5.0, 5.0));
            contents += buf;
        }
        contents += "\n";
    }
    const std::string path = write_temp("fixture_precision.txt", contents);
    const Dataset first = load_ucr(path);
    save_ucr(first, path);
    const Dataset second = load_ucr(path);
    for (std::size_t i = 0; i < first.items.size(); ++i) {
        CHECK(first.items[i].values == second.items[i].values); // bit-exact
        CHECK(first.items[i].label == second.items[i].label);
    }
    std::remove(path.c_str());
}

TEST_CASE("z_normalize matches the closed form") {
    const std::vector<double> out = z_normalize({1.0, 2.0, 3.0});
    CHECK(out[0] == doctest::Approx(-1.2247448713915889).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(0.0));
    CHECK(out[2] == doctest::Approx(1.2247448713915889).epsilon(1e-12));
}

TEST_CASE("z_normalize maps constant series to zeros") {
    CHECK(z_normalize({5.0, 5.0, 5.0}) == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("z_normalize is idempotent and fixes the moments") {
    Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 2 + rng.next_below(200);
        const std::vector<double> x = testutil::random_series(rng, n, -10.0, 10.0);
        const std::vector<double> z = z_normalize(x);

        double mean = 0.0;
        for (double v : z) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : z) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        CHECK(std::abs(mean) < 1e-10);
        CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-10);

        const std::vector<double> zz = z_normalize(z);
        for (std::size_t i = 0; i < n; ++i) CHECK(zz[i] == doctest::Approx(z[i]).epsilon(1e-10));
    }
}

TEST_CASE("znorm_by_default matches the named datasets case-insensitively") {
    CHECK(znorm_by_default("Coffee"));
    CHECK(znorm_by_default("OSULeaf"));
    CHECK(znorm_by_default("oliveoil"));
    CHECK_FALSE(znorm_by_default("GunPoint"));
    CHECK(dataset_name_from_path("/x/y/Coffee_TRAIN.txt") == "Coffee");
    CHECK(dataset_name_from_path("GunPoint_TEST.txt") == "GunPoint");
}

TEST_CASE("stratified_split is proportional") {
    Dataset ds;
    ds.label_values = {0.0, 1.0};
    ds.series_length = 4;
    for (std::size_t i = 0; i < 20; ++i) {
        ds.items.push_back({i < 10 ? std::size_t{0} : std::size_t{1},
                            std::vector<double>(4, static_cast<double>(i)), i});
    }
    const auto [a, b] = stratified_split(ds, 0.2, 9);
    CHECK(a.items.size() == 16);
    CHECK(b.items.size() == 4);
    CHECK(a.class_counts() == std::vector<std::size_t>{8, 8});
    CHECK(b.class_counts() == std::vector<std::size_t>{2, 2});

    // no item lost or duplicated
    std::set<std::size_t> seen;
    for (const auto& item : a.items) seen.insert(item.provenance);
    for (const auto& item : b.items) seen.insert(item.provenance);
    CHECK(seen.size() == 20);
}

TEST_CASE("stratified_split with fraction 0 returns everything in part a") {
    Dataset ds;
    ds.label_values = {0.0, 1.0};
    ds.series_length = 2;
    ds.items = {{0, {1.0, 2.0}, 0}, {1, {3.0, 4.0}, 1}};
    const auto [a, b] = stratified_split(ds, 0.0, 1);
    CHECK(a.items.size() == 2);
    CHECK(b.items.empty());
}

TEST_CASE("stratified_split is deterministic in the seed") {
    const Dataset ds = testutil::toy_ramp_dataset();
    const auto [a1, b1] = stratified_split(ds, 0.3, 42);
    const auto [a2, b2] = stratified_split(ds, 0.3, 42);
    REQUIRE(a1.items.size() == a2.items.size());
    for (std::size_t i = 0; i < a1.items.size(); ++i) {
        CHECK(a1.items[i].provenance == a2.items[i].provenance);
    }
    const auto [a3, b3] = stratified_split(ds, 0.3, 43);
    bool identical = a1.items.size() == a3.items.size();
    if (identical) {
        identical = false;
        for (std::size_t i = 0; i < a1.items.size(); ++i) {
            if (a1.items[i].provenance != a3.items[i].provenance) break;
            if (i + 1 == a1.items.size()) identical = true;
        }
    }
    CHECK_FALSE(identical);
}

TEST_CASE("stratified_split rejects singleton classes") {
    Dataset ds;
    ds.label_values = {0.0, 1.0};
    ds.series_length = 2;
    ds.items = {{0, {1.0, 2.0}, 0}, {0, {1.0, 2.0}, 1}, {1, {3.0, 4.0}, 2}};
    CHECK_THROWS_AS(stratified_split(ds, 0.2, 1), ShapeError);
}

TEST_CASE("augment_by_slicing produces N*(n-s+1) instances") {
    Dataset ds;
    ds.label_values = {1.0, 2.0};
    ds.series_length = 150;
    Rng rng(11);
    for (std::size_t i = 0; i < 50; ++i) {
        ds.items.push_back({i % 2, testutil::random_series(rng, 150), i});
    }
    const Dataset sliced = augment_by_slicing(ds, 0.9);
    CHECK(sliced.series_length == 135);
    CHECK(sliced.items.size() == 50 * 16); // 800

    // provenance partitions the slices by parent, labels inherited
    std::vector<std::size_t> per_parent(50, 0);
    for (const auto& item : sliced.items) {
        per_parent[item.provenance]++;
        CHECK(item.label == ds.items[item.provenance].label);
    }
    for (std::size_t parent = 0; parent < 50; ++parent) CHECK(per_parent[parent] == 16);
}

TEST_CASE("augment_by_slicing with ratio 1 only rewrites provenance") {
    const Dataset ds = testutil::toy_ramp_dataset(3, 16);
    const Dataset sliced = augment_by_slicing(ds, 1.0);
    REQUIRE(sliced.items.size() == ds.items.size());
    for (std::size_t i = 0; i < ds.items.size(); ++i) {
        CHECK(sliced.items[i].values == ds.items[i].values);
        CHECK(sliced.items[i].label == ds.items[i].label);
    }
}

TEST_CASE("label remap is a bijection onto 0..C-1") {
    const Dataset ds = load_ucr(testutil::ucr_path("ItalyPowerDemand", "TRAIN"));
    std::set<std::size_t> used;
    for (const auto& item : ds.items) used.insert(item.label);
    CHECK(used.size() == ds.num_classes());
    CHECK(*used.begin() == 0);
    CHECK(*used.rbegin() == ds.num_classes() - 1);
}
