#include <doctest.h>

#include <cmath>

#include "cor/gradcheck.hpp"
#include "cor/optim.hpp"
#include "cor/tensor.hpp"

using namespace cor;

namespace {
TensorPtr randt(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    auto t = Tensor::make(std::move(shape), 0.0, true);
    for (double& v : t->data) v = rng.next_range(lo, hi);
    return t;
}
}  // namespace

TEST_CASE("grad_check: linear layer is exact to 1e-8") {
    Rng rng(101);
    auto x = randt({3, 4}, rng);
    auto w = randt({4, 2}, rng);
    auto b = randt({2}, rng);
    auto fn = [&]() { return sum(mul(linear(x, w, b), linear(x, w, b))); };
    CHECK(grad_check(fn, {x, w, b}) < 1e-8);
}

TEST_CASE("grad_check: layer_norm under 1e-5") {
    Rng rng(102);
    auto x = randt({2, 3, 5}, rng, -2, 2);
    auto g = randt({5}, rng, 0.5, 1.5);
    auto b = randt({5}, rng);
    auto fn = [&]() { return sum(mul(layer_norm(x, g, b), layer_norm(x, g, b))); };
    CHECK(grad_check(fn, {x, g, b}) < 1e-5);
}

TEST_CASE("grad_check: conv2d depthwise and pointwise") {
    Rng rng(103);
    auto x = randt({4, 4, 3}, rng);
    SUBCASE("depthwise") {
        auto w = randt({3, 3, 1, 3}, rng);
        auto b = randt({3}, rng);
        auto fn = [&]() {
            auto y = conv2d(x, w, b, 3, 1);
            return sum(mul(y, y));
        };
        CHECK(grad_check(fn, {x, w, b}) < 1e-4);
    }
    SUBCASE("pointwise strided") {
        auto w = randt({1, 1, 3, 2}, rng);
        auto b = randt({2}, rng);
        auto fn = [&]() {
            auto y = conv2d(x, w, b, 1, 0, 2);
            return sum(mul(y, y));
        };
        CHECK(grad_check(fn, {x, w, b}) < 1e-4);
    }
}

TEST_CASE("grad_check: activations, softmax, cosine, pooling, upsample") {
    Rng rng(104);
    SUBCASE("gelu/sigmoid") {
        auto x = randt({3, 3}, rng, -2, 2);
        auto fn_g = [&]() { return sum(activation(x, Act::gelu)); };
        CHECK(grad_check(fn_g, {x}) < 1e-4);
        auto fn_s = [&]() { return sum(mul(activation(x, Act::sigmoid), x)); };
        CHECK(grad_check(fn_s, {x}) < 1e-4);
    }
    SUBCASE("relu away from the origin") {
        auto x = randt({4, 4}, rng, 0.2, 1.5);
        for (std::size_t i = 0; i < x->data.size(); i += 2) x->data[i] = -x->data[i];
        auto fn = [&]() { return sum(mul(activation(x, Act::relu), x)); };
        CHECK(grad_check(fn, {x}) < 1e-4);
    }
    SUBCASE("softmax over positions") {
        auto x = randt({3, 4}, rng, -2, 2);
        auto w = randt({3, 4}, rng);
        auto fn = [&]() { return sum(mul(softmax_over_positions(x), w)); };
        CHECK(grad_check(fn, {x, w}) < 1e-4);
    }
    SUBCASE("cosine similarity") {
        auto a = randt({6}, rng, 0.3, 1.2);
        auto b = randt({6}, rng, 0.3, 1.2);
        auto fn = [&]() { return cosine_similarity(a, b); };
        CHECK(grad_check(fn, {a, b}) < 1e-4);
    }
    SUBCASE("masked pool") {
        auto f = randt({3, 3, 4}, rng);
        std::vector<double> mask = {1, 0, 1, 0, 0, 1, 0, 0, 1};
        auto fn = [&]() {
            auto p = masked_pool(f, mask);
            return sum(mul(p, p));
        };
        CHECK(grad_check(fn, {f}) < 1e-4);
    }
    SUBCASE("bilinear upsample") {
        auto x = randt({3, 3}, rng);
        auto fn = [&]() {
            auto y = bilinear_upsample(x, 9, 9);
            return sum(mul(y, y));
        };
        CHECK(grad_check(fn, {x}) < 1e-4);
    }
    SUBCASE("dot_positions and aggregate_maps") {
        auto f = randt({2, 3, 4}, rng);
        auto v = randt({4}, rng);
        auto m = randt({2, 3, 2}, rng, 0.0, 1.0);
        auto fn = [&]() {
            auto s = dot_positions(f, v);
            auto a = aggregate_maps(f, softmax_hw(m));
            return add(sum(mul(s, s)), sum(mul(a, a)));
        };
        CHECK(grad_check(fn, {f, v, m}) < 1e-4);
    }
    SUBCASE("bce with logits") {
        auto z = randt({3, 3}, rng, -2, 2);
        std::vector<double> gt = {1, 0, 1, 0, 0, 1, 1, 0, 0};
        std::vector<double> w(9, 1.0);
        w[0] = 3.0;
        w[4] = 2.0;
        auto fn = [&]() { return bce_logits_weighted(z, gt, w); };
        CHECK(grad_check(fn, {z}) < 1e-4);
    }
    SUBCASE("embedding sum") {
        auto table = randt({8, 3}, rng);
        std::vector<int> ids = {1, 5, 5, 2};
        auto fn = [&]() {
            auto e = embedding_sum(table, ids);
            return sum(mul(e, e));
        };
        CHECK(grad_check(fn, {table}) < 1e-4);
    }
    SUBCASE("div and scale_t") {
        auto a = randt({4}, rng, 0.5, 2.0);
        auto b = randt({4}, rng, 0.5, 2.0);
        auto s = randt({}, rng, 0.5, 2.0);
        auto fn = [&]() { return sum(scale_t(div(a, b), s)); };
        CHECK(grad_check(fn, {a, b, s}) < 1e-4);
    }
}

TEST_CASE("adamw: zero gradient and zero weight decay leaves parameters unchanged") {
    auto w = Tensor::from({3}, {1.0, -2.0, 0.5}, true);
    AdamW::Config cfg;
    cfg.weight_decay = 0.0;
    AdamW opt({w}, cfg);
    w->ensure_grad();
    opt.step();
    CHECK(w->data[0] == doctest::Approx(1.0));
    CHECK(w->data[1] == doctest::Approx(-2.0));
    CHECK(w->data[2] == doctest::Approx(0.5));
    CHECK(opt.step_count() == 1);
}

TEST_CASE("adamw: one step on f(w)=w^2 decreases w from 1") {
    auto w = Tensor::scalar(1.0, true);
    AdamW::Config cfg;
    cfg.lr = 1e-2;
    cfg.weight_decay = 0.0;
    AdamW opt({w}, cfg);
    auto loss = mul(w, w);
    backward(loss);
    opt.step();
    CHECK(w->data[0] < 1.0);
}

TEST_CASE("adamw: 200 steps on a convex quadratic reach |w| < 1e-2") {
    auto w = Tensor::scalar(1.0, true);
    AdamW::Config cfg;
    cfg.lr = 2e-2;
    cfg.weight_decay = 0.0;
    AdamW opt({w}, cfg);
    for (int i = 0; i < 200; ++i) {
        opt.zero_grad();
        auto loss = mul(w, w);
        backward(loss);
        opt.step();
    }
    CHECK(std::fabs(w->data[0]) < 1e-2);
}
