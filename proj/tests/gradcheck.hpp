#ifndef AIRTEMP_TESTS_GRADCHECK_HPP
#define AIRTEMP_TESTS_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "airtemp/core/layers.hpp"
#include "airtemp/core/param_store.hpp"
#include "airtemp/core/rng.hpp"
#include "oracles.hpp"

// Analytic gradients from the engine vs central finite differences of the
// float64 oracle forwards (h = 1e-3). ReLU-bearing checks resample until
// every pre-activation sits clear of the kink, where the FD quotient is
// valid.
namespace gradcheck {

inline double rel_err(double analytic, double fd) {
    const double denom = std::max({std::fabs(analytic), std::fabs(fd), 0.05});
    return std::fabs(analytic - fd) / denom;
}

inline std::vector<double> to_f64(const airtemp::Tensor& t) {
    return std::vector<double>(t.data.begin(), t.data.end());
}

inline std::vector<double> coeffs(std::size_t n, airtemp::Rng& rng) {
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = (i % 2 == 0 ? 1.0 : -1.0) * rng.uniform(0.5, 1.5);
    }
    return c;
}

inline double weighted_sum(const std::vector<double>& y, const std::vector<double>& c) {
    double acc = 0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += c[i] * y[i];
    return acc;
}

inline airtemp::Tensor coeff_tensor(const std::vector<int>& shape, const std::vector<double>& c) {
    airtemp::Tensor t = airtemp::Tensor::zeros(shape);
    for (std::size_t i = 0; i < c.size(); ++i) t.data[i] = static_cast<float>(c[i]);
    return t;
}

/// Max relative error between the engine gradient tensor and the FD
/// gradient of `loss` with respect to the same values.
inline double compare_group(const airtemp::Tensor& engine_grad, const std::vector<double>& base,
                            const std::function<double(const std::vector<double>&)>& loss) {
    const std::vector<double> fd = oracle::fd_gradient(loss, base);
    double worst = 0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
        worst = std::max(worst, rel_err(engine_grad.data[i], fd[i]));
    }
    return worst;
}

inline airtemp::Tensor random_tensor(std::vector<int> shape, airtemp::Rng& rng, double lo = -1.0,
                                     double hi = 1.0) {
    airtemp::Tensor t = airtemp::Tensor::zeros(std::move(shape));
    for (float& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

// ---------------------------------------------------------------------------

inline double dense_max_rel_err(std::uint64_t seed) {
    using namespace airtemp;
    Rng rng(seed * 2654435761ull + 1);
    ParamStore ps;
    DenseLayer fc("fc", 4, 3);
    fc.register_params(ps);
    fc.init_params(ps, rng);
    Tensor x = random_tensor({2, 4}, rng);
    const auto c = coeffs(6, rng);

    fc.train_forward(ps, x);
    const Tensor gx = fc.backward(ps, coeff_tensor({2, 3}, c));

    const auto w0 = to_f64(ps.param("fc.w"));
    const auto b0 = to_f64(ps.param("fc.b"));
    const auto x0 = to_f64(x);
    double worst = 0;
    worst = std::max(worst, compare_group(ps.grad("fc.w"), w0, [&](const std::vector<double>& w) {
        return weighted_sum(oracle::dense(x0, 2, 4, w, b0, 3), c);
    }));
    worst = std::max(worst, compare_group(ps.grad("fc.b"), b0, [&](const std::vector<double>& b) {
        return weighted_sum(oracle::dense(x0, 2, 4, w0, b, 3), c);
    }));
    worst = std::max(worst, compare_group(gx, x0, [&](const std::vector<double>& xin) {
        return weighted_sum(oracle::dense(xin, 2, 4, w0, b0, 3), c);
    }));
    return worst;
}

inline double conv_max_rel_err(std::uint64_t seed) {
    using namespace airtemp;
    Rng rng(seed * 2654435761ull + 2);
    ParamStore ps;
    Conv3x3Layer conv("cv", 2, 3);
    conv.register_params(ps);
    conv.init_params(ps, rng);
    Tensor x = random_tensor({2, 5, 5}, rng);
    const auto c = coeffs(3 * 5 * 5, rng);

    conv.train_forward(ps, x);
    const Tensor gx = conv.backward(ps, coeff_tensor({3, 5, 5}, c));

    const auto w0 = to_f64(ps.param("cv.w"));
    const auto b0 = to_f64(ps.param("cv.b"));
    const auto x0 = to_f64(x);
    double worst = 0;
    worst = std::max(worst, compare_group(ps.grad("cv.w"), w0, [&](const std::vector<double>& w) {
        return weighted_sum(oracle::conv3x3(x0, 2, 5, 5, w, b0, 3), c);
    }));
    worst = std::max(worst, compare_group(ps.grad("cv.b"), b0, [&](const std::vector<double>& b) {
        return weighted_sum(oracle::conv3x3(x0, 2, 5, 5, w0, b, 3), c);
    }));
    worst = std::max(worst, compare_group(gx, x0, [&](const std::vector<double>& xin) {
        return weighted_sum(oracle::conv3x3(xin, 2, 5, 5, w0, b0, 3), c);
    }));
    return worst;
}

inline double relu_max_rel_err(std::uint64_t seed) {
    using namespace airtemp;
    Rng rng(seed * 2654435761ull + 3);
    ParamStore ps;
    ReluLayer relu;
    // Inputs clear of the kink so central differences are valid.
    Tensor x = Tensor::zeros({3, 7});
    for (float& v : x.data) {
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        v = static_cast<float>(sign * rng.uniform(0.02, 1.0));
    }
    const auto c = coeffs(x.data.size(), rng);
    relu.train_forward(ps, x);
    const Tensor gx = relu.backward(ps, coeff_tensor({3, 7}, c));
    return compare_group(gx, to_f64(x), [&](const std::vector<double>& xin) {
        return weighted_sum(oracle::relu(xin), c);
    });
}

inline double attention_max_rel_err(std::uint64_t seed) {
    using namespace airtemp;
    Rng rng(seed * 2654435761ull + 4);
    ParamStore ps;
    SelfAttentionLayer attn("at");
    attn.register_params(ps);
    attn.init_params(ps, rng);
    Tensor x = random_tensor({3, 64}, rng);
    const auto c = coeffs(3 * 64, rng);

    attn.train_forward(ps, x);
    const Tensor gx = attn.backward(ps, coeff_tensor({3, 64}, c));

    const auto q0 = to_f64(ps.param("at.wq"));
    const auto k0 = to_f64(ps.param("at.wk"));
    const auto v0 = to_f64(ps.param("at.wv"));
    const auto x0 = to_f64(x);
    double worst = 0;
    worst = std::max(worst, compare_group(ps.grad("at.wq"), q0, [&](const std::vector<double>& q) {
        return weighted_sum(oracle::attention(x0, 3, q, k0, v0), c);
    }));
    worst = std::max(worst, compare_group(ps.grad("at.wk"), k0, [&](const std::vector<double>& k) {
        return weighted_sum(oracle::attention(x0, 3, q0, k, v0), c);
    }));
    worst = std::max(worst, compare_group(ps.grad("at.wv"), v0, [&](const std::vector<double>& v) {
        return weighted_sum(oracle::attention(x0, 3, q0, k0, v), c);
    }));
    worst = std::max(worst, compare_group(gx, x0, [&](const std::vector<double>& xin) {
        return weighted_sum(oracle::attention(xin, 3, q0, k0, v0), c);
    }));
    return worst;
}

inline double residual_conv_max_rel_err(std::uint64_t seed) {
    using namespace airtemp;
    const bool final_relu = seed % 2 == 0;
    for (std::uint64_t attempt = 0; true; ++attempt) {
        Rng rng(seed * 2654435761ull + 5 + 7919 * attempt);
        ParamStore ps;
        ResidualConvBlock block("blk", 2, 3, final_relu);
        block.register_params(ps);
        block.init_params(ps, rng);
        Tensor x = random_tensor({2, 5, 5}, rng);

        oracle::ResidualConvParams p;
        p.w1 = to_f64(ps.param("blk.c1.w"));
        p.b1 = to_f64(ps.param("blk.c1.b"));
        p.w2 = to_f64(ps.param("blk.c2.w"));
        p.b2 = to_f64(ps.param("blk.c2.b"));
        p.wp = to_f64(ps.param("blk.proj.w"));
        p.bp = to_f64(ps.param("blk.proj.b"));
        const auto x0 = to_f64(x);

        // Kink margins at the base point.
        const auto pre1 = oracle::conv3x3(x0, 2, 5, 5, p.w1, p.b1, 3);
        const auto mid = oracle::relu(pre1);
        auto sum = oracle::conv3x3(mid, 3, 5, 5, p.w2, p.b2, 3);
        const auto skip = oracle::conv1x1(x0, 2, 5, 5, p.wp, p.bp, 3);
        double margin = 1e300;
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] += skip[i];
            if (final_relu) margin = std::min(margin, std::fabs(sum[i]));
        }
        for (double v : pre1) margin = std::min(margin, std::fabs(v));
        if (margin < 6e-3) continue;

        const auto c = coeffs(3 * 5 * 5, rng);
        block.train_forward(ps, x);
        const Tensor gx = block.backward(ps, coeff_tensor({3, 5, 5}, c));

        auto loss_with = [&](const oracle::ResidualConvParams& pp, const std::vector<double>& xin) {
            return weighted_sum(oracle::residual_conv_block(xin, 2, 5, 5, 3, pp, final_relu), c);
        };
        double worst = 0;
        auto probe = [&](const Tensor& engine_grad, std::vector<double> oracle::ResidualConvParams::*field,
                         const std::vector<double>& base) {
            worst = std::max(worst, compare_group(engine_grad, base, [&](const std::vector<double>& v) {
                oracle::ResidualConvParams pp = p;
                pp.*field = v;
                return loss_with(pp, x0);
            }));
        };
        probe(ps.grad("blk.c1.w"), &oracle::ResidualConvParams::w1, p.w1);
        probe(ps.grad("blk.c1.b"), &oracle::ResidualConvParams::b1, p.b1);
        probe(ps.grad("blk.c2.w"), &oracle::ResidualConvParams::w2, p.w2);
        probe(ps.grad("blk.c2.b"), &oracle::ResidualConvParams::b2, p.b2);
        probe(ps.grad("blk.proj.w"), &oracle::ResidualConvParams::wp, p.wp);
        probe(ps.grad("blk.proj.b"), &oracle::ResidualConvParams::bp, p.bp);
        worst = std::max(worst, compare_group(gx, x0, [&](const std::vector<double>& xin) {
            return loss_with(p, xin);
        }));
        return worst;
    }
}

inline double residual_dense_max_rel_err(std::uint64_t seed) {
    using namespace airtemp;
    constexpr int kWidth = 8, kBatch = 2;
    for (std::uint64_t attempt = 0; true; ++attempt) {
        Rng rng(seed * 2654435761ull + 6 + 104729 * attempt);
        ParamStore ps;
        ResidualDenseBlock block("rb", kWidth);
        block.register_params(ps);
        block.init_params(ps, rng);
        Tensor x = random_tensor({kBatch, kWidth}, rng);

        oracle::ResidualDenseParams p;
        p.w1 = to_f64(ps.param("rb.f1.w"));
        p.b1 = to_f64(ps.param("rb.f1.b"));
        p.w2 = to_f64(ps.param("rb.f2.w"));
        p.b2 = to_f64(ps.param("rb.f2.b"));
        const auto x0 = to_f64(x);

        const auto pre1 = oracle::dense(x0, kBatch, kWidth, p.w1, p.b1, kWidth);
        auto sum = oracle::dense(oracle::relu(pre1), kBatch, kWidth, p.w2, p.b2, kWidth);
        double margin = 1e300;
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] += x0[i];
            margin = std::min(margin, std::fabs(sum[i]));
        }
        for (double v : pre1) margin = std::min(margin, std::fabs(v));
        if (margin < 6e-3) continue;

        const auto c = coeffs(static_cast<std::size_t>(kBatch) * kWidth, rng);
        block.train_forward(ps, x);
        const Tensor gx = block.backward(ps, coeff_tensor({kBatch, kWidth}, c));

        auto loss_with = [&](const oracle::ResidualDenseParams& pp, const std::vector<double>& xin) {
            return weighted_sum(oracle::residual_dense_block(xin, kBatch, kWidth, pp), c);
        };
        double worst = 0;
        auto probe = [&](const Tensor& engine_grad, std::vector<double> oracle::ResidualDenseParams::*field,
                         const std::vector<double>& base) {
            worst = std::max(worst, compare_group(engine_grad, base, [&](const std::vector<double>& v) {
                oracle::ResidualDenseParams pp = p;
                pp.*field = v;
                return loss_with(pp, x0);
            }));
        };
        probe(ps.grad("rb.f1.w"), &oracle::ResidualDenseParams::w1, p.w1);
        probe(ps.grad("rb.f1.b"), &oracle::ResidualDenseParams::b1, p.b1);
        probe(ps.grad("rb.f2.w"), &oracle::ResidualDenseParams::w2, p.w2);
        probe(ps.grad("rb.f2.b"), &oracle::ResidualDenseParams::b2, p.b2);
        worst = std::max(worst, compare_group(gx, x0, [&](const std::vector<double>& xin) {
            return loss_with(p, xin);
        }));
        return worst;
    }
}

} // namespace gradcheck

#endif
