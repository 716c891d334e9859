#include <doctest.h>

#include <cmath>
#include <sstream>

#include "../gradcheck.h"
#include "hesplit/data/dataset.h"
#include "hesplit/nn/layers.h"
#include "hesplit/nn/model.h"
#include "hesplit/nn/optim.h"
#include "hesplit/nn/train_local.h"

using namespace hesplit;
using namespace hesplit::nn;

namespace {

LayerParams conv_params(std::vector<float> w, std::size_t cout, std::size_t cin, std::size_t m, std::vector<float> b) {
    return LayerParams{Tensor({cout, cin, m}, std::move(w)), Tensor({cout}, std::move(b)), {}};
}

}  // namespace

TEST_CASE("conv1d forward examples") {
    const Tensor x({1, 1, 3}, {1, 2, 3});
    CHECK(conv1d_forward(x, Tensor({1, 1, 1}, {1}), Tensor({1}, {0}), 1, 0).values() == std::vector<float>{1, 2, 3});
    CHECK(conv1d_forward(x, Tensor({1, 1, 2}, {1, 1}), Tensor({1}, {0}), 1, 0).values() == std::vector<float>{3, 5});
    const Tensor x2({1, 1, 3}, {1, 0, -1});
    CHECK(conv1d_forward(x2, Tensor({1, 1, 2}, {2, 0}), Tensor({1}, {1}), 1, 0).values() == std::vector<float>{3, 1});
}

TEST_CASE("conv1d output length and padding") {
    const Tensor x({2, 3, 10}, 1.0f);
    const Tensor w({4, 3, 3}, 1.0f);
    CHECK(conv1d_forward(x, w, Tensor({4}), 1, 0).shape() == Shape{2, 4, 8});
    CHECK(conv1d_forward(x, w, Tensor({4}), 2, 1).shape() == Shape{2, 4, 5});
    // Zero padding: the edge windows see fewer ones.
    auto y = conv1d_forward(x, w, Tensor({4}), 1, 1);
    CHECK(y.at(0, 0, 0) == 6.0f);
    CHECK(y.at(0, 0, 1) == 9.0f);
}

TEST_CASE("conv1d shape errors name the axis") {
    const Tensor x({1, 2, 5});
    try {
        conv1d_forward(x, Tensor({1, 3, 2}), Tensor({1}), 1, 0);
        FAIL("expected a dimension error");
    } catch (const DimensionError& e) {
        CHECK(e.axis() == "channel");
    }
    try {
        conv1d_forward(x, Tensor({1, 2, 9}), Tensor({1}), 1, 1);
        FAIL("expected a dimension error");
    } catch (const DimensionError& e) {
        CHECK(e.axis() == "time");
    }
}

TEST_CASE("conv1d backward examples") {
    Conv1d identity(conv_params({1}, 1, 1, 1, {0}), 1, 0);
    identity.forward(Tensor({1, 1, 4}, {1, 2, 3, 4}));
    const Tensor g({1, 1, 4}, {0.5f, -1, 2, 3});
    CHECK(identity.backward(g) == g);

    Conv1d scalar(conv_params({2.5f}, 1, 1, 1, {0}), 1, 0);
    scalar.forward(Tensor({1, 1, 1}, {3}));
    scalar.backward(Tensor({1, 1, 1}, {0.5f}));
    CHECK(scalar.grads().weight[0] == doctest::Approx(1.5f));
    CHECK(scalar.grads().bias[0] == doctest::Approx(0.5f));

    Conv1d fresh(conv_params({1}, 1, 1, 1, {0}), 1, 0);
    CHECK_THROWS_AS(fresh.backward(g), InvalidStateError);
}

TEST_CASE("conv1d gradient matches finite differences") {
    // One fixed small case (n=1, C=1, T=8, m=3) plus the random sweep.
    gradcheck::Rng rng(11);
    auto x = rng.vec(8), w = rng.vec(3), b = rng.vec(1), proj = rng.vec(6);
    auto g = conv1d_backward(Tensor64({1, 1, 6}, proj), Tensor64({1, 1, 8}, x), Tensor64({1, 1, 3}, w), 1, 0);
    auto loss = [&](const gradcheck::Vec& v) { return gradcheck::dot(proj, gradcheck::naive_conv(x, v, b, 1, 1, 8, 1, 3, 1, 0)); };
    CHECK(gradcheck::rel_err(g.weight.values(), gradcheck::central_diff(w, loss)) <= 1e-3);
    CHECK(gradcheck::check_conv(20, 1).worst <= 1e-3);
}

TEST_CASE("leaky relu") {
    const Tensor x({1, 1, 3}, {5, -1, -2});
    const auto y = leaky_relu_forward(x, 0.01f);
    CHECK(y[0] == 5.0f);
    CHECK(y[1] == doctest::Approx(-0.01f));
    const auto g = leaky_relu_backward(Tensor({1, 1, 3}, {1, 1, 3}), x, 0.01f);
    CHECK(g[2] == doctest::Approx(0.03f));
    CHECK(gradcheck::check_leaky_relu(20, 2).worst <= 1e-3);
}

TEST_CASE("maxpool forward, tie rule and backward routing") {
    MaxPool1d pool(2, 2);
    CHECK(pool.forward(Tensor({1, 1, 4}, {1, 3, 2, 0})).values() == std::vector<float>{3, 2});
    CHECK(pool.backward(Tensor({1, 1, 2}, {1, 1})).values() == std::vector<float>{0, 1, 1, 0});

    CHECK(pool.forward(Tensor({1, 1, 4}, {5, 5, 5, 5})).values() == std::vector<float>{5, 5});
    CHECK(pool.backward(Tensor({1, 1, 2}, {1, 2})).values() == std::vector<float>{1, 0, 2, 0});

    CHECK_THROWS_AS(maxpool1d_forward(Tensor({1, 1, 2}), 3, 1), DimensionError);
    CHECK(gradcheck::check_maxpool(20, 3).worst <= 1e-3);
}

TEST_CASE("maxpool backward conserves gradient mass") {
    gradcheck::Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t len = rng.pick(4, 32), width = rng.pick(1, 4), stride = rng.pick(1, 4);
        auto x = rng.vec(2 * 3 * len);
        auto fwd = maxpool1d_forward(Tensor64({2, 3, len}, x), width, stride);
        auto go = rng.vec(fwd.output.size());
        auto gi = maxpool1d_backward(Tensor64(fwd.output.shape(), go), fwd.argmax, {2, 3, len});
        double in_sum = 0, out_sum = 0;
        for (double v : gi.values()) in_sum += v;
        for (double v : go) out_sum += v;
        CHECK(in_sum == doctest::Approx(out_sum).epsilon(1e-12));
    }
}

TEST_CASE("linear forward examples") {
    Tensor w({5, 256});
    for (std::size_t j = 0; j < 5; ++j) w.at(j, j) = 1.0f;
    Tensor e2({1, 256});
    e2.at(0, 2) = 1.0f;
    CHECK(linear_forward(e2, w, Tensor({5})).values() == std::vector<float>{0, 0, 1, 0, 0});

    const auto y = linear_forward(Tensor({1, 256}, 1.0f), Tensor({5, 256}, 0.01f), Tensor({5}));
    for (float v : y.values()) CHECK(v == doctest::Approx(2.56f).epsilon(1e-5));

    CHECK_THROWS_AS(linear_forward(Tensor({1, 255}), w, Tensor({5})), DimensionError);
    CHECK(gradcheck::check_linear(20, 4).worst <= 1e-3);
}

TEST_CASE("softmax cross-entropy") {
    const auto uniform = softmax_cross_entropy(Tensor({2, 5}, 0.3f), {0, 4});
    CHECK(uniform.loss == doctest::Approx(std::log(5.0)).epsilon(1e-6));
    for (float p : uniform.probs.values()) CHECK(p == doctest::Approx(0.2f));

    Tensor margin({1, 5}, -20.0f);
    margin.at(0, 3) = 20.0f;
    CHECK(softmax_cross_entropy(margin, {3}).loss < 1e-6f);

    CHECK_THROWS_AS(softmax_cross_entropy(Tensor({1, 5}), {5}), ValueError);
    CHECK(gradcheck::check_softmax_ce(20, 5).worst <= 1e-3);

    gradcheck::Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        auto z = rng.vec(15, -30, 30);
        std::vector<float> zf(z.begin(), z.end());
        auto sl = softmax_cross_entropy(Tensor({3, 5}, zf), {0, 1, 2});
        CHECK(sl.loss >= 0.0f);
        for (std::size_t b = 0; b < 3; ++b) {
            double s = 0;
            for (std::size_t j = 0; j < 5; ++j) s += sl.probs.at(b, j);
            CHECK(std::abs(s - 1.0) <= 1e-6);
        }
    }
}

TEST_CASE("adam step") {
    SUBCASE("first step moves by eta against the gradient sign") {
        LayerParams p{Tensor({3}, {1, 1, 1}), Tensor({1}, {0}), {}};
        Gradients g{Tensor({3}, {0.3f, -2.0f, 1e-3f}), Tensor({1}, {5})};
        adam_step(p, g, AdamConfig{0.001f, 0.9f, 0.999f, 0.0f});
        CHECK(p.weight[0] == doctest::Approx(0.999f).epsilon(1e-6));
        CHECK(p.weight[1] == doctest::Approx(1.001f).epsilon(1e-6));
        CHECK(p.weight[2] == doctest::Approx(0.999f).epsilon(1e-6));
        CHECK(p.bias[0] == doctest::Approx(-0.001f).epsilon(1e-6));
    }
    SUBCASE("zero gradient leaves parameters unchanged") {
        LayerParams p{Tensor({2}, {0.5f, -0.25f}), Tensor({1}, {1}), {}};
        const auto before = p.weight;
        adam_step(p, Gradients{Tensor({2}), Tensor({1})}, AdamConfig{});
        CHECK(p.weight == before);
        CHECK(p.bias[0] == 1.0f);
    }
    SUBCASE("two steps match the binary64 recurrence") {
        const std::vector<double> w0{0.3, -0.7, 1.2}, g1{0.5, -0.1, 0.02}, g2{-0.4, 0.3, 0.01};
        std::vector<double> w = w0, m(3, 0.0), v(3, 0.0);
        const double eta = 0.001, b1 = 0.9, b2 = 0.999, eps = 1e-8;
        int t = 0;
        for (const auto* g : {&g1, &g2}) {
            ++t;
            for (std::size_t i = 0; i < 3; ++i) {
                m[i] = b1 * m[i] + (1 - b1) * (*g)[i];
                v[i] = b2 * v[i] + (1 - b2) * (*g)[i] * (*g)[i];
                w[i] -= eta * (m[i] / (1 - std::pow(b1, t))) / (std::sqrt(v[i] / (1 - std::pow(b2, t))) + eps);
            }
        }
        LayerParams p{Tensor({3}, std::vector<float>(w0.begin(), w0.end())), Tensor({1}), {}};
        for (const auto* g : {&g1, &g2}) {
            adam_step(p, Gradients{Tensor({3}, std::vector<float>(g->begin(), g->end())), Tensor({1})}, AdamConfig{});
        }
        CHECK(p.adam.step == 2);
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(p.weight[i] - w[i]) <= 1e-6);
    }
}

TEST_CASE("sgd step") {
    LayerParams p{Tensor({1}, {1}), Tensor({1}, {0}), {}};
    sgd_step(p, Gradients{Tensor({1}, {1}), Tensor({1}, {0})}, 0.001f);
    CHECK(p.weight[0] == 0.999f);
    CHECK(p.bias[0] == 0.0f);

    LayerParams toy{Tensor({2}, {0.25f, -1.5f}), Tensor({1}, {0.125f}), {}};
    const Gradients g{Tensor({2}, {0.1f, -0.3f}), Tensor({1}, {2.0f})};
    const float eta = 0.01f;
    const float expect[3] = {0.25f - eta * 0.1f, -1.5f - eta * -0.3f, 0.125f - eta * 2.0f};
    sgd_step(toy, g, eta);
    CHECK(toy.weight[0] == expect[0]);
    CHECK(toy.weight[1] == expect[1]);
    CHECK(toy.bias[0] == expect[2]);

    CHECK_THROWS_AS(sgd_step(toy, Gradients{Tensor({3}), Tensor({1})}, eta), DimensionError);
}

TEST_CASE("M1 shape contract") {
    const auto spec = m1_spec();
    CHECK(spec.split_features() == 256);
    CHECK(spec.classes() == 5);
    LocalModel model(spec, init_params(spec, 7));
    const Tensor x({4, 1, 128}, 0.5f);
    CHECK(model.client_forward(x).shape() == Shape{4, 256});
    CHECK(model.forward(x).shape() == Shape{4, 5});
}

TEST_CASE("model spec validation") {
    auto spec = m1_spec();
    spec.layers[7].in_features = 128;
    CHECK_THROWS_AS(spec.validate(), DimensionError);
    spec = m1_spec();
    spec.layers.insert(spec.layers.begin() + 8, spec.layers[7]);
    spec.layers[8].in_features = 5;
    CHECK_THROWS_AS(spec.validate(), ValueError);
}

TEST_CASE("zero-weight model on uniform data starts at ln 5") {
    const auto spec = m1_spec();
    LocalModel model(spec, zero_params(spec));
    const auto sl = softmax_cross_entropy(model.forward(Tensor({4, 1, 128}, 0.7f)), {0, 1, 2, 3});
    CHECK(sl.loss == doctest::Approx(std::log(5.0)).epsilon(1e-6));
}

TEST_CASE("init is deterministic in the seed") {
    const auto spec = m1_spec();
    const auto a = init_params(spec, 42), b = init_params(spec, 42), c = init_params(spec, 43);
    CHECK(a.conv[0].weight == b.conv[0].weight);
    CHECK(a.linear.weight == b.linear.weight);
    CHECK_FALSE(a.linear.weight == c.linear.weight);
    for (float v : a.linear.weight.values()) CHECK(std::abs(v) <= 1.0f / 16.0f);
}

TEST_CASE("local training is bit-deterministic") {
    const auto spec = m1_spec();
    const auto train = data::synth_ecg(64, 1), test = data::synth_ecg(40, 2);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 3;
    LocalModel a(spec, init_params(spec, cfg.seed)), b(spec, init_params(spec, cfg.seed));
    const auto ra = train_local(a, train, test, cfg), rb = train_local(b, train, test, cfg);
    CHECK(ra.epochs[1].mean_loss == rb.epochs[1].mean_loss);
    const auto pa = a.params(), pb = b.params();
    CHECK(pa.conv[0].weight == pb.conv[0].weight);
    CHECK(pa.conv[1].bias == pb.conv[1].bias);
    CHECK(pa.linear.weight == pb.linear.weight);
    for (const auto& l : pa.conv) CHECK(l.weight.all_finite());
}

TEST_CASE("checkpoint roundtrip and header") {
    const auto spec = m1_spec();
    const auto p = init_params(spec, 1);
    std::vector<LayerParams> layers{p.conv[0], p.conv[1], p.linear};
    const auto bytes = encode_checkpoint(layers);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "SFHE");
    CHECK(bytes[4] == kCheckpointVersion);
    CHECK(bytes[5] == 3);
    const auto back = decode_checkpoint(bytes);
    REQUIRE(back.size() == 3);
    CHECK(back[1].weight == layers[1].weight);
    CHECK(back[2].bias == layers[2].bias);

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(bad), ProtocolError);
    CHECK_THROWS_AS(decode_checkpoint(std::span(bytes).first(bytes.size() - 1)), ProtocolError);
}
