#include <doctest.h>

#include <cmath>

#include "estrnn/errors.hpp"
#include "estrnn/nn_kernels.hpp"
#include "estrnn/rng.hpp"
#include "support.hpp"

using namespace estrnn;
using testsup::random_tensor;

namespace {

// Central-difference check of d(sum(f(x)*seed))/dx against an analytic
// gradient routine, coordinate by coordinate.
template <class Forward, class Backward>
void check_grad(Tensor& x, Forward fwd, Backward bwd, double tol = 1e-7) {
    Rng rng(7);
    Tensor y0 = fwd(x);
    Tensor seed = random_tensor(y0.shape(), rng);
    Tensor analytic(x.shape());
    bwd(seed, analytic);
    const double h = 1e-6;
    for (std::int64_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        Tensor yp = fwd(x);
        x[i] = saved - h;
        Tensor ym = fwd(x);
        x[i] = saved;
        double num = 0.0;
        for (std::int64_t j = 0; j < yp.size(); ++j) num += (yp[j] - ym[j]) * seed[j] / (2.0 * h);
        const double rel = std::fabs(num - analytic[i]) /
                           std::max({std::fabs(num), std::fabs(analytic[i]), 1e-6});
        CHECK(rel < tol);
    }
}

}  // namespace

TEST_CASE("conv2d geometry and shapes") {
    Rng rng(1);
    Tensor x = random_tensor({3, 8, 8}, rng);
    Tensor w = random_tensor({5, 3, 3, 3}, rng);
    Tensor b = random_tensor({5}, rng);
    nn::ConvGeom g{3, 1, 1};
    Tensor y = nn::conv2d(x, w, &b, g);
    CHECK(y.shape() == std::vector<int>{5, 8, 8});

    nn::ConvGeom s2{5, 2, 2};
    Tensor y2 = nn::conv2d(x, random_tensor({4, 3, 5, 5}, rng), nullptr, s2);
    CHECK(y2.shape() == std::vector<int>{4, 4, 4});

    CHECK_THROWS_AS(nn::conv2d(x, random_tensor({4, 2, 3, 3}, rng), nullptr, g), ShapeError);
}

TEST_CASE("conv2d matches direct computation") {
    Rng rng(2);
    Tensor x = random_tensor({2, 6, 5}, rng);
    Tensor w = random_tensor({3, 2, 3, 3}, rng);
    Tensor b = random_tensor({3}, rng);
    nn::ConvGeom g{3, 2, 1};
    Tensor y = nn::conv2d(x, w, &b, g);
    const int ho = y.dim(1);
    const int wo = y.dim(2);
    for (int co = 0; co < 3; ++co) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                double acc = b[co];
                for (int ci = 0; ci < 2; ++ci) {
                    for (int ky = 0; ky < 3; ++ky) {
                        for (int kx = 0; kx < 3; ++kx) {
                            const int iy = oy * 2 - 1 + ky;
                            const int ix = ox * 2 - 1 + kx;
                            if (iy < 0 || iy >= 6 || ix < 0 || ix >= 5) continue;
                            acc += x.at3(ci, iy, ix) *
                                   w[((static_cast<std::int64_t>(co) * 2 + ci) * 3 + ky) * 3 + kx];
                        }
                    }
                }
                CHECK(y.at3(co, oy, ox) == doctest::Approx(acc).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("conv2d gradients agree with finite differences") {
    Rng rng(3);
    Tensor x = random_tensor({2, 5, 6}, rng);
    Tensor w = random_tensor({3, 2, 3, 3}, rng);
    Tensor b = random_tensor({3}, rng);
    nn::ConvGeom g{3, 2, 1};

    SUBCASE("input gradient") {
        check_grad(
            x, [&](const Tensor& xv) { return nn::conv2d(xv, w, &b, g); },
            [&](const Tensor& seed, Tensor& out) {
                out = nn::conv2d_grad_input(seed, w, g, x.dim(1), x.dim(2));
            });
    }
    SUBCASE("weight gradient") {
        check_grad(
            w, [&](const Tensor& wv) { return nn::conv2d(x, wv, &b, g); },
            [&](const Tensor& seed, Tensor& out) { nn::conv2d_grad_weight(seed, x, g, out); });
    }
    SUBCASE("bias gradient") {
        check_grad(
            b, [&](const Tensor& bv) { return nn::conv2d(x, w, &bv, g); },
            [&](const Tensor& seed, Tensor& out) { nn::conv2d_grad_bias(seed, out); });
    }
}

TEST_CASE("transposed conv upsamples by exactly 2x with k4 s2 p1") {
    Rng rng(4);
    Tensor x = random_tensor({3, 5, 7}, rng);
    Tensor w = random_tensor({3, 2, 4, 4}, rng);
    Tensor b = random_tensor({2}, rng);
    nn::ConvGeom g{4, 2, 1};
    Tensor y = nn::deconv2d(x, w, &b, g);
    CHECK(y.shape() == std::vector<int>{2, 10, 14});
}

TEST_CASE("deconv matches direct scatter computation") {
    Rng rng(5);
    Tensor x = random_tensor({2, 3, 4}, rng);
    Tensor w = random_tensor({2, 3, 4, 4}, rng);
    Tensor b = random_tensor({3}, rng);
    nn::ConvGeom g{4, 2, 1};
    Tensor y = nn::deconv2d(x, w, &b, g);
    Tensor ref({3, 6, 8});
    ref.fill(0.0);
    for (int co = 0; co < 3; ++co) {
        for (int oy = 0; oy < 6; ++oy) {
            for (int ox = 0; ox < 8; ++ox) ref.at3(co, oy, ox) = b[co];
        }
    }
    for (int ci = 0; ci < 2; ++ci) {
        for (int iy = 0; iy < 3; ++iy) {
            for (int ix = 0; ix < 4; ++ix) {
                for (int co = 0; co < 3; ++co) {
                    for (int ky = 0; ky < 4; ++ky) {
                        for (int kx = 0; kx < 4; ++kx) {
                            const int oy = iy * 2 - 1 + ky;
                            const int ox = ix * 2 - 1 + kx;
                            if (oy < 0 || oy >= 6 || ox < 0 || ox >= 8) continue;
                            ref.at3(co, oy, ox) +=
                                x.at3(ci, iy, ix) *
                                w[((static_cast<std::int64_t>(ci) * 3 + co) * 4 + ky) * 4 + kx];
                        }
                    }
                }
            }
        }
    }
    CHECK(testsup::max_abs_diff(y, ref) < 1e-12);
}

TEST_CASE("deconv gradients agree with finite differences") {
    Rng rng(6);
    Tensor x = random_tensor({2, 3, 4}, rng);
    Tensor w = random_tensor({2, 3, 4, 4}, rng);
    Tensor b = random_tensor({3}, rng);
    nn::ConvGeom g{4, 2, 1};

    SUBCASE("input gradient") {
        check_grad(
            x, [&](const Tensor& xv) { return nn::deconv2d(xv, w, &b, g); },
            [&](const Tensor& seed, Tensor& out) { out = nn::deconv2d_grad_input(seed, w, g); });
    }
    SUBCASE("weight gradient") {
        check_grad(
            w, [&](const Tensor& wv) { return nn::deconv2d(x, wv, &b, g); },
            [&](const Tensor& seed, Tensor& out) { nn::deconv2d_grad_weight(seed, x, g, out); });
    }
}

TEST_CASE("linear, activations, pooling and channel scaling backward") {
    Rng rng(8);

    SUBCASE("linear") {
        Tensor x = random_tensor({6}, rng);
        Tensor w = random_tensor({4, 6}, rng);
        Tensor b = random_tensor({4}, rng);
        check_grad(
            x, [&](const Tensor& xv) { return nn::linear(xv, w, &b); },
            [&](const Tensor& seed, Tensor& out) { out = nn::linear_grad_input(seed, w); });
        check_grad(
            w, [&](const Tensor& wv) { return nn::linear(x, wv, &b); },
            [&](const Tensor& seed, Tensor& out) { nn::linear_grad_weight(seed, x, out); });
    }

    SUBCASE("relu") {
        Tensor x = random_tensor({3, 4, 4}, rng);
        check_grad(
            x, [&](const Tensor& xv) { return nn::relu(xv); },
            [&](const Tensor& seed, Tensor& out) { nn::relu_grad(seed, x, out); });
    }

    SUBCASE("sigmoid") {
        Tensor x = random_tensor({10}, rng);
        Tensor y = nn::sigmoid(x);
        check_grad(
            x, [&](const Tensor& xv) { return nn::sigmoid(xv); },
            [&](const Tensor& seed, Tensor& out) { nn::sigmoid_grad(seed, y, out); }, 1e-6);
    }

    SUBCASE("global average pool") {
        Tensor x = random_tensor({3, 5, 4}, rng);
        Tensor pooled = nn::global_avg_pool(x);
        CHECK(pooled.shape() == std::vector<int>{3});
        Tensor constant = Tensor::full({2, 4, 4}, 0.37);
        Tensor cp = nn::global_avg_pool(constant);
        CHECK(cp[0] == doctest::Approx(0.37));
        CHECK(cp[1] == doctest::Approx(0.37));
        check_grad(
            x, [&](const Tensor& xv) { return nn::global_avg_pool(xv); },
            [&](const Tensor& seed, Tensor& out) { nn::global_avg_pool_grad(seed, x.shape(), out); });
    }

    SUBCASE("channel scaling") {
        Tensor x = random_tensor({3, 4, 4}, rng);
        Tensor gate = random_tensor({3}, rng);
        Tensor y = nn::scale_channels(x, gate);
        for (int c = 0; c < 3; ++c) {
            CHECK(y.at3(c, 1, 2) == doctest::Approx(x.at3(c, 1, 2) * gate[c]));
        }
    }

    SUBCASE("concat") {
        Tensor a = random_tensor({2, 3, 3}, rng);
        Tensor b2 = random_tensor({4, 3, 3}, rng);
        Tensor y = nn::concat_channels({&a, &b2});
        CHECK(y.shape() == std::vector<int>{6, 3, 3});
        CHECK(y.at3(0, 1, 1) == a.at3(0, 1, 1));
        CHECK(y.at3(2, 1, 1) == b2.at3(0, 1, 1));
        Tensor c = random_tensor({1, 2, 3}, rng);
        CHECK_THROWS_AS(nn::concat_channels({&a, &c}), ShapeError);
    }
}
