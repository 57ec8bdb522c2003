#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcnn/nn.hpp"
#include "mcnn/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mcnn;

namespace {

ConvLayer random_conv_layer(Rng& rng, std::size_t f, std::size_t c, std::size_t m,
                            Activation act) {
    ConvLayer layer;
    layer.bank = FilterBank(f, c, m);
    for (double& w : layer.bank.weights) w = rng.uniform(-1.0, 1.0);
    for (double& b : layer.bank.bias) b = rng.uniform(-0.5, 0.5);
    layer.activation = act;
    return layer;
}

DenseLayer random_dense_layer(Rng& rng, std::size_t h, std::size_t d, Activation act) {
    DenseLayer layer;
    layer.weights = Matrix(h, d);
    for (double& w : layer.weights.data) w = rng.uniform(-1.0, 1.0);
    layer.bias = testutil::random_series(rng, h, -0.5, 0.5);
    layer.activation = act;
    return layer;
}

// scalar loss used to exercise backward passes: weighted sum of the outputs
double weighted_sum(const Signal& s, const Signal& weights) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.values().size(); ++i) {
        acc += s.values()[i] * weights.values()[i];
    }
    return acc;
}

} // namespace

TEST_CASE("conv_forward with identity activation equals conv1d") {
    Rng rng(41);
    const ConvLayer layer = random_conv_layer(rng, 2, 1, 3, Activation::identity);
    const Signal x = Signal::row(testutil::random_series(rng, 12));
    const Signal got = conv_forward(layer, x);
    const Signal want = conv1d(x, layer.bank);
    for (std::size_t i = 0; i < got.values().size(); ++i) {
        CHECK(got.values()[i] == want.values()[i]);
    }
}

TEST_CASE("relu zeroes all-negative pre-activations") {
    ConvLayer layer;
    layer.bank = FilterBank(1, 1, 1);
    layer.bank.weights = {1.0};
    layer.bank.bias = {-100.0};
    layer.activation = Activation::relu;
    const Signal out = conv_forward(layer, Signal::row({1.0, 2.0, 3.0}));
    for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("conv_forward random case matches composed oracles") {
    Rng rng(43);
    const ConvLayer layer = random_conv_layer(rng, 3, 2, 4, Activation::relu);
    const Signal x(2, 15, testutil::random_series(rng, 30));
    const Signal got = conv_forward(layer, x);
    Signal want = oracle::conv_direct(x, layer.bank);
    for (double& v : want.values()) v = std::max(0.0, v);
    for (std::size_t i = 0; i < got.values().size(); ++i) {
        CHECK(got.values()[i] == doctest::Approx(want.values()[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv_backward of a zero upstream gradient is zero") {
    Rng rng(47);
    const ConvLayer layer = random_conv_layer(rng, 2, 1, 3, Activation::relu);
    ConvCache cache;
    const Signal x = Signal::row(testutil::random_series(rng, 10));
    const Signal out = conv_forward(layer, x, &cache);
    const ConvBackward back = conv_backward(layer, cache, Signal(out.channels(), out.length()));
    for (double v : back.grads.weights) CHECK(v == 0.0);
    for (double v : back.grads.bias) CHECK(v == 0.0);
    for (double v : back.input_grad.values()) CHECK(v == 0.0);
}

TEST_CASE("m=1 identity conv layer reduces to per-channel scaling") {
    // forward is out = w * x + b, so dL/dw = sum upstream * x
    ConvLayer layer;
    layer.bank = FilterBank(1, 1, 1);
    layer.bank.weights = {2.0};
    layer.activation = Activation::identity;
    const std::vector<double> x = {1.0, -2.0, 3.0};
    ConvCache cache;
    conv_forward(layer, Signal::row(x), &cache);
    Signal upstream = Signal::row({0.5, 1.0, -1.0});
    const ConvBackward back = conv_backward(layer, cache, upstream);
    CHECK(back.grads.weights[0] == doctest::Approx(0.5 * 1.0 + 1.0 * -2.0 + -1.0 * 3.0));
    CHECK(back.grads.bias[0] == doctest::Approx(0.5));
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(back.input_grad.at(0, i) == doctest::Approx(2.0 * upstream.at(0, i)));
    }
}

TEST_CASE("conv_backward matches central finite differences") {
    Rng rng(53);
    ConvLayer layer = random_conv_layer(rng, 3, 2, 5, Activation::relu);
    const Signal x(2, 14, testutil::random_series(rng, 28));
    const Signal loss_weights(3, 10, testutil::random_series(rng, 30));

    ConvCache cache;
    conv_forward(layer, x, &cache);
    const ConvBackward back = conv_backward(layer, cache, loss_weights);

    auto loss = [&]() { return weighted_sum(conv_forward(layer, x), loss_weights); };
    const GradCheckReport report =
        grad_check({std::span<double>(layer.bank.weights), std::span<double>(layer.bank.bias)},
                   {std::span<const double>(back.grads.weights),
                    std::span<const double>(back.grads.bias)},
                   loss);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("conv_backward input gradient matches finite differences") {
    Rng rng(59);
    ConvLayer layer = random_conv_layer(rng, 2, 1, 4, Activation::identity);
    std::vector<double> series = testutil::random_series(rng, 12);
    const Signal loss_weights(2, 9, testutil::random_series(rng, 18));

    ConvCache cache;
    conv_forward(layer, Signal::row(series), &cache);
    const ConvBackward back = conv_backward(layer, cache, loss_weights);

    auto loss = [&]() { return weighted_sum(conv_forward(layer, Signal::row(series)), loss_weights); };
    const GradCheckReport report =
        grad_check({std::span<double>(series)},
                   {std::span<const double>(back.input_grad.values())}, loss);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("maxpool_backward routes upstream values to argmax positions") {
    const Signal x = Signal::row({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    const PoolResult pool = maxpool_by_factor(x, 2);
    const Signal grad = maxpool_backward(pool, Signal::row({1.0, 1.0}));
    std::size_t nonzero = 0;
    for (double v : grad.values()) {
        if (v != 0.0) {
            ++nonzero;
            CHECK(v == 1.0);
        }
    }
    CHECK(nonzero == 2);
    CHECK(grad.at(0, 4) == 1.0);
    CHECK(grad.at(0, 9) == 1.0);
}

TEST_CASE("maxpool_backward with p = n passes the gradient through") {
    Rng rng(61);
    const std::vector<double> x = testutil::random_series(rng, 7);
    const PoolResult pool = maxpool_by_factor(Signal::row(x), 7);
    const std::vector<double> up = testutil::random_series(rng, 7);
    const Signal grad = maxpool_backward(pool, Signal::row(up));
    for (std::size_t i = 0; i < 7; ++i) CHECK(grad.at(0, i) == up[i]);
}

TEST_CASE("maxpool gradient matches finite differences away from ties") {
    Rng rng(67);
    std::vector<double> x = testutil::random_series(rng, 13); // distinct values w.p. 1
    const std::vector<double> up = testutil::random_series(rng, 4);

    const PoolResult pool = maxpool_by_factor(Signal::row(x), 4);
    const Signal analytic = maxpool_backward(pool, Signal::row(up));

    auto loss = [&]() {
        const PoolResult res = maxpool_by_factor(Signal::row(x), 4);
        double acc = 0.0;
        for (std::size_t i = 0; i < 4; ++i) acc += res.output.at(0, i) * up[i];
        return acc;
    };
    const GradCheckReport report = grad_check(
        {std::span<double>(x)}, {std::span<const double>(analytic.values())}, loss);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("dense_forward with zero weights returns the bias") {
    DenseLayer layer;
    layer.weights = Matrix(2, 3);
    layer.bias = {4.0, -1.0};
    const std::vector<double> out = dense_forward(layer, {1.0, 2.0, 3.0});
    CHECK(out[0] == 4.0);
    CHECK(out[1] == -1.0);
}

TEST_CASE("1x1 dense layer weight gradient is upstream times input") {
    DenseLayer layer;
    layer.weights = Matrix(1, 1);
    layer.weights.data = {3.0};
    layer.bias = {0.0};
    DenseCache cache;
    dense_forward(layer, {2.5}, &cache);
    const DenseBackward back = dense_backward(layer, cache, {1.5});
    CHECK(back.grads.weights[0] == doctest::Approx(1.5 * 2.5));
    CHECK(back.grads.bias[0] == doctest::Approx(1.5));
    CHECK(back.input_grad[0] == doctest::Approx(1.5 * 3.0));
}

TEST_CASE("dense_backward matches central finite differences") {
    Rng rng(71);
    DenseLayer layer = random_dense_layer(rng, 5, 7, Activation::relu);
    std::vector<double> x = testutil::random_series(rng, 7);
    const std::vector<double> up = testutil::random_series(rng, 5);

    DenseCache cache;
    dense_forward(layer, x, &cache);
    const DenseBackward back = dense_backward(layer, cache, up);

    auto loss = [&]() {
        const std::vector<double> out = dense_forward(layer, x);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) acc += out[i] * up[i];
        return acc;
    };
    const GradCheckReport report =
        grad_check({std::span<double>(layer.weights.data), std::span<double>(layer.bias),
                    std::span<double>(x)},
                   {std::span<const double>(back.grads.weights),
                    std::span<const double>(back.grads.bias),
                    std::span<const double>(back.input_grad)},
                   loss);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("cross entropy of uniform logits is ln 2") {
    const CrossEntropy ce = softmax_cross_entropy({0.0, 0.0}, 0);
    CHECK(ce.loss == doctest::Approx(std::log(2.0)));
    const CrossEntropy ce1 = softmax_cross_entropy({0.0, 0.0}, 1);
    CHECK(ce1.loss == doctest::Approx(std::log(2.0)));
}

TEST_CASE("cross entropy vanishes when the true class dominates") {
    const CrossEntropy ce = softmax_cross_entropy({50.0, 0.0}, 0);
    CHECK(ce.loss == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ce.loss >= 0.0);
}

TEST_CASE("cross entropy gradient matches finite differences and sums to zero") {
    Rng rng(73);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t c = 2 + rng.next_below(5);
        std::vector<double> logits = testutil::random_series(rng, c, -3.0, 3.0);
        const std::size_t label = rng.next_below(c);
        const CrossEntropy ce = softmax_cross_entropy(logits, label);
        CHECK(ce.loss >= 0.0);

        double grad_sum = 0.0;
        for (double g : ce.logit_grad) grad_sum += g;
        CHECK(grad_sum == doctest::Approx(0.0).epsilon(1e-12));

        auto loss = [&]() { return softmax_cross_entropy(logits, label).loss; };
        const GradCheckReport report = grad_check(
            {std::span<double>(logits)}, {std::span<const double>(ce.logit_grad)}, loss);
        CHECK(report.max_rel_error < 1e-6);
    }
}

TEST_CASE("cross entropy rejects an out-of-range label") {
    CHECK_THROWS_AS(softmax_cross_entropy({0.0, 0.0}, 2), ShapeError);
}

TEST_CASE("grad_check flags a corrupted gradient") {
    Rng rng(79);
    DenseLayer layer = random_dense_layer(rng, 3, 3, Activation::identity);
    std::vector<double> x = testutil::random_series(rng, 3);
    const std::vector<double> up = {1.0, 1.0, 1.0};
    DenseCache cache;
    dense_forward(layer, x, &cache);
    DenseBackward back = dense_backward(layer, cache, up);
    back.grads.weights[4] += 0.5; // corrupt one partial

    auto loss = [&]() {
        const std::vector<double> out = dense_forward(layer, x);
        return out[0] + out[1] + out[2];
    };
    const GradCheckReport report =
        grad_check({std::span<double>(layer.weights.data)},
                   {std::span<const double>(back.grads.weights)}, loss);
    CHECK(report.max_rel_error > 1e-3);
    CHECK(report.worst_index == 4);
}
