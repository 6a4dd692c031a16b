#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "airtemp/core/layers.hpp"
#include "airtemp/core/param_store.hpp"
#include "airtemp/core/rng.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace airtemp;

namespace {

std::vector<double> to_f64(const Tensor& t) {
    return std::vector<double>(t.data.begin(), t.data.end());
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (float& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

} // namespace

TEST_CASE("conv2d identity kernel reproduces the input") {
    Rng rng(7);
    Tensor x = random_tensor({1, 6, 7}, rng);
    Tensor w = Tensor::zeros({1, 1, 3, 3});
    w.at4(0, 0, 1, 1) = 1.0f;
    Tensor b = Tensor::zeros({1});
    const Tensor y = conv2d_forward(x, w, b);
    REQUIRE(y.shape == x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(y.data[i] == x.data[i]);
}

TEST_CASE("conv2d all-ones kernel padding arithmetic") {
    Tensor x = Tensor::full({1, 5, 5}, 1.0f);
    Tensor w = Tensor::full({1, 1, 3, 3}, 1.0f);
    Tensor b = Tensor::zeros({1});
    const Tensor y = conv2d_forward(x, w, b);
    CHECK(y.at3(0, 2, 2) == doctest::Approx(9.0));
    CHECK(y.at3(0, 0, 0) == doctest::Approx(4.0));
    CHECK(y.at3(0, 0, 2) == doctest::Approx(6.0));
}

TEST_CASE("conv2d matches the direct-convolution oracle") {
    Rng rng(11);
    Tensor x = random_tensor({2, 8, 8}, rng);
    Tensor w = random_tensor({4, 2, 3, 3}, rng);
    Tensor b = random_tensor({4}, rng);
    const Tensor y = conv2d_forward(x, w, b);
    const auto ref = oracle::conv3x3(to_f64(x), 2, 8, 8, to_f64(w), to_f64(b), 4);
    REQUIRE(y.data.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
        CHECK(std::fabs(y.data[i] - ref[i]) < 1e-5);
    }
}

TEST_CASE("conv2d rejects channel mismatch") {
    Tensor x = Tensor::zeros({3, 4, 4});
    Tensor w = Tensor::zeros({2, 2, 3, 3});
    Tensor b = Tensor::zeros({2});
    CHECK_THROWS_AS(conv2d_forward(x, w, b), DimensionError);
}

TEST_CASE("dense identity and constant maps") {
    Tensor x = Tensor::from({2, 3}, {1.f, 2.f, 3.f, 4.f, 5.f, 6.f});
    Tensor w = Tensor::zeros({3, 3});
    for (int i = 0; i < 3; ++i) w.at2(i, i) = 1.0f;
    Tensor b = Tensor::zeros({3});
    const Tensor y = dense_forward(x, w, b);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(y.data[i] == x.data[i]);

    Tensor wz = Tensor::zeros({4, 3});
    Tensor bz = Tensor::from({4}, {1.f, -2.f, 0.5f, 3.f});
    const Tensor yc = dense_forward(x, wz, bz);
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 4; ++c) CHECK(yc.at2(r, c) == bz.data[static_cast<std::size_t>(c)]);
    }
}

TEST_CASE("dense matches the dot-product oracle") {
    Rng rng(13);
    Tensor x = random_tensor({3, 5}, rng);
    Tensor w = random_tensor({7, 5}, rng);
    Tensor b = random_tensor({7}, rng);
    const Tensor y = dense_forward(x, w, b);
    const auto ref = oracle::dense(to_f64(x), 3, 5, to_f64(w), to_f64(b), 7);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::fabs(y.data[i] - ref[i]) < 1e-6);
    CHECK_THROWS_AS(dense_forward(x, Tensor::zeros({7, 6}), b), DimensionError);
}

TEST_CASE("relu definition and oracle equality") {
    Tensor x = Tensor::from({1, 3}, {-1.f, 0.f, 2.f});
    const Tensor y = relu_forward(x);
    CHECK(y.data[0] == 0.f);
    CHECK(y.data[1] == 0.f);
    CHECK(y.data[2] == 2.f);

    Tensor neg = Tensor::full({2, 4}, -3.5f);
    for (float v : relu_forward(neg).data) CHECK(v == 0.f);

    Rng rng(17);
    Tensor r = random_tensor({4, 9}, rng, -2.0, 2.0);
    const Tensor yr = relu_forward(r);
    const auto ref = oracle::relu(to_f64(r));
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(yr.data[i] == doctest::Approx(ref[i]));
}

TEST_CASE("self-attention residual identity with zero V") {
    Rng rng(19);
    ParamStore ps;
    SelfAttentionLayer attn("");
    // Free-op parameter names are the unprefixed defaults.
    ps.create("wq", {8, 8});
    ps.create("wk", {8, 8});
    ps.create("wv", {8, 8});
    glorot_fill(ps.param("wq"), 8, 8, rng);
    glorot_fill(ps.param("wk"), 8, 8, rng);
    // wv stays zero.
    Tensor x = random_tensor({3, 64}, rng);
    const Tensor y = self_attention_forward(x, ps);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(y.data[i] == doctest::Approx(x.data[i]).epsilon(1e-6));
}

TEST_CASE("self-attention uniform weights with zero Q and K") {
    Rng rng(23);
    ParamStore ps;
    ps.create("wq", {8, 8});
    ps.create("wk", {8, 8});
    ps.create("wv", {8, 8});
    glorot_fill(ps.param("wv"), 8, 8, rng);
    Tensor x = random_tensor({2, 64}, rng);
    const Tensor y = self_attention_forward(x, ps);
    // Uniform softmax: every output token is the input token plus the mean
    // of the V-projected tokens.
    const auto xv = to_f64(x);
    const auto wv = to_f64(ps.param("wv"));
    for (int b = 0; b < 2; ++b) {
        double vproj[8][8];
        for (int t = 0; t < 8; ++t) {
            for (int j = 0; j < 8; ++j) {
                double acc = 0;
                for (int i = 0; i < 8; ++i) {
                    acc += xv[static_cast<std::size_t>(b) * 64 + t * 8 + i] * wv[static_cast<std::size_t>(i) * 8 + j];
                }
                vproj[t][j] = acc;
            }
        }
        for (int t = 0; t < 8; ++t) {
            for (int j = 0; j < 8; ++j) {
                double mean_v = 0;
                for (int u = 0; u < 8; ++u) mean_v += vproj[u][j];
                mean_v /= 8.0;
                const double want = xv[static_cast<std::size_t>(b) * 64 + t * 8 + j] + mean_v;
                CHECK(y.at2(b, t * 8 + j) == doctest::Approx(want).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("self-attention matches the per-token oracle") {
    Rng rng(29);
    ParamStore ps;
    ps.create("wq", {8, 8});
    ps.create("wk", {8, 8});
    ps.create("wv", {8, 8});
    glorot_fill(ps.param("wq"), 8, 8, rng);
    glorot_fill(ps.param("wk"), 8, 8, rng);
    glorot_fill(ps.param("wv"), 8, 8, rng);
    Tensor x = random_tensor({5, 64}, rng);
    const Tensor y = self_attention_forward(x, ps);
    const auto ref = oracle::attention(to_f64(x), 5, to_f64(ps.param("wq")), to_f64(ps.param("wk")),
                                       to_f64(ps.param("wv")));
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::fabs(y.data[i] - ref[i]) < 1e-5);

    CHECK_THROWS_AS(self_attention_forward(Tensor::zeros({2, 32}), ps), DimensionError);
}

TEST_CASE("backward: linear loss makes every dense gradient one") {
    ParamStore ps;
    DenseLayer fc("fc", 4, 3);
    fc.register_params(ps);
    Rng rng(31);
    fc.init_params(ps, rng);
    Tensor x = Tensor::full({1, 4}, 1.0f);
    fc.train_forward(ps, x);
    fc.backward(ps, Tensor::full({1, 3}, 1.0f));
    for (float g : ps.grad("fc.w").data) CHECK(g == doctest::Approx(1.0));
    for (float g : ps.grad("fc.b").data) CHECK(g == doctest::Approx(1.0));
}

TEST_CASE("backward: dead relu unit has zero gradient") {
    ParamStore ps;
    ReluLayer relu;
    Tensor x = Tensor::from({1, 3}, {-2.f, 0.5f, -0.1f});
    relu.train_forward(ps, x);
    const Tensor gx = relu.backward(ps, Tensor::full({1, 3}, 1.0f));
    CHECK(gx.data[0] == 0.f);
    CHECK(gx.data[1] == 1.f);
    CHECK(gx.data[2] == 0.f);
}

TEST_CASE("backward without forward is a state error") {
    ParamStore ps;
    DenseLayer fc("fc", 4, 3);
    fc.register_params(ps);
    CHECK_THROWS_AS(fc.backward(ps, Tensor::zeros({1, 3})), StateError);

    Conv3x3Layer conv("conv", 2, 2);
    ParamStore ps2;
    conv.register_params(ps2);
    CHECK_THROWS_AS(conv.backward(ps2, Tensor::zeros({2, 4, 4})), StateError);
}

TEST_CASE("gradient check: every layer kind against the FD oracle") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        CAPTURE(seed);
        CHECK(gradcheck::dense_max_rel_err(seed) < 1e-3);
        CHECK(gradcheck::conv_max_rel_err(seed) < 1e-3);
        CHECK(gradcheck::relu_max_rel_err(seed) < 1e-3);
        CHECK(gradcheck::attention_max_rel_err(seed) < 1e-3);
        CHECK(gradcheck::residual_conv_max_rel_err(seed) < 1e-3);
        CHECK(gradcheck::residual_dense_max_rel_err(seed) < 1e-3);
    }
}

TEST_CASE("adam: zero gradient is a fixed point") {
    ParamStore ps;
    Tensor& p = ps.create("p", {3});
    p.data = {1.f, -2.f, 0.5f};
    const std::vector<float> before = p.data;
    ps.mark_grads_ready(); // gradients are zero-filled
    ps.adam_step(0.1);
    CHECK(p.data == before);
    CHECK(ps.step_count() == 1);
}

TEST_CASE("adam: first step is a signed unit step") {
    ParamStore ps;
    Tensor& p = ps.create("p", {2});
    p.data = {0.5f, -1.5f};
    ps.grad("p").data = {0.3f, -0.02f};
    ps.mark_grads_ready();
    const double lr = 0.1;
    ps.adam_step(lr);
    const double d0 = static_cast<double>(p.data[0]) - 0.5;
    const double d1 = static_cast<double>(p.data[1]) + 1.5;
    CHECK(std::fabs(d0 - (-lr * 0.3 / (0.3 + 1e-8))) < 1e-6);
    CHECK(std::fabs(d1 - (-lr * (-0.02) / (0.02 + 1e-8))) < 1e-6);
}

TEST_CASE("adam: two steps match the 64-bit reference") {
    ParamStore ps;
    Tensor& p = ps.create("p", {3});
    p.data = {1.f, 0.25f, -0.75f};
    const std::vector<double> grads = {0.11, -0.4, 0.9};
    std::vector<double> ref_params = {1.0, 0.25, -0.75};
    oracle::AdamRef ref(3);
    for (int step = 0; step < 2; ++step) {
        for (int i = 0; i < 3; ++i) ps.grad("p").data[static_cast<std::size_t>(i)] = static_cast<float>(grads[static_cast<std::size_t>(i)]);
        ps.mark_grads_ready();
        ps.adam_step(0.05);
        ref.update(ref_params, grads, 0.05);
    }
    for (int i = 0; i < 3; ++i) {
        CHECK(std::fabs(static_cast<double>(p.data[static_cast<std::size_t>(i)]) -
                        ref_params[static_cast<std::size_t>(i)]) < 1e-7);
    }
}

TEST_CASE("adam without gradients is a state error") {
    ParamStore ps;
    ps.create("p", {2});
    CHECK_THROWS_AS(ps.adam_step(0.1), StateError);
}

TEST_CASE("shape preservation: residual blocks and attention") {
    Rng rng(37);
    ParamStore ps;
    ResidualConvBlock same("same", 3, 3);
    same.register_params(ps);
    same.init_params(ps, rng);
    Tensor x = random_tensor({3, 6, 5}, rng);
    CHECK(same.forward(ps, x).shape == x.shape);

    ParamStore ps2;
    ResidualConvBlock grow("grow", 3, 7);
    grow.register_params(ps2);
    grow.init_params(ps2, rng);
    const Tensor y = grow.forward(ps2, x);
    CHECK(y.shape == std::vector<int>{7, 6, 5});

    ParamStore ps3;
    SelfAttentionLayer attn("attn");
    attn.register_params(ps3);
    attn.init_params(ps3, rng);
    Tensor xa = random_tensor({4, 64}, rng);
    CHECK(attn.forward(ps3, xa).shape == xa.shape);

    ParamStore ps4;
    ResidualDenseBlock rdb("rdb", 64);
    rdb.register_params(ps4);
    rdb.init_params(ps4, rng);
    CHECK(rdb.forward(ps4, xa).shape == xa.shape);
}

TEST_CASE("determinism: identical seed gives bit-identical forward outputs") {
    auto build_and_run = [](std::uint64_t seed) {
        Rng rng(seed);
        ParamStore ps;
        ResidualConvBlock block("b", 2, 4);
        block.register_params(ps);
        block.init_params(ps, rng);
        Tensor x = random_tensor({2, 8, 8}, rng);
        return block.forward(ps, x);
    };
    const Tensor a = build_and_run(99);
    const Tensor b = build_and_run(99);
    REQUIRE(a.data.size() == b.data.size());
    CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0);
}

TEST_CASE("finiteness: finite inputs and parameters give finite outputs") {
    Rng rng(41);
    ParamStore ps;
    ResidualConvBlock block("b", 2, 3);
    block.register_params(ps);
    block.init_params(ps, rng);
    Tensor x = random_tensor({2, 10, 10}, rng, -50.0, 50.0);
    CHECK(block.forward(ps, x).all_finite());

    ParamStore ps2;
    SelfAttentionLayer attn("attn");
    attn.register_params(ps2);
    attn.init_params(ps2, rng);
    Tensor xa = random_tensor({6, 64}, rng, -100.0, 100.0);
    CHECK(attn.forward(ps2, xa).all_finite());
}
