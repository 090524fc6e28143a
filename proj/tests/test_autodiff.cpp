#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msgdd/ops.hpp"
#include "msgdd/rng.hpp"

#include <functional>

using namespace msgdd;

namespace {

using BuildFn = std::function<Var(Tape<double>&, Var)>;

// Central-difference check of d(loss)/d(x) for every element of the tracked
// leaf (or the first `max_checks` of them).
double max_grad_error(const Shape& s, const BuildFn& build, std::uint64_t seed, double h = 1e-4,
                      int max_checks = 80) {
    SeededRng rng(seed);
    ArrayX<double> x0(s.count());
    rng.fill_normal(x0, 1.0);

    Tape<double> t;
    Var x = t.leaf(s, x0);
    Var loss = build(t, x);
    t.backward(loss);
    const ArrayX<double> analytic = t.grad(x);

    auto value_at = [&](const ArrayX<double>& xv) {
        Tape<double> tt;
        Var xc = tt.constant(s, xv);
        return tt.val(build(tt, xc))[0];
    };

    double worst = 0;
    const Eigen::Index n = std::min<Eigen::Index>(s.count(), max_checks);
    for (Eigen::Index i = 0; i < n; ++i) {
        ArrayX<double> xp = x0, xm = x0;
        xp[i] += h;
        xm[i] -= h;
        const double numeric = (value_at(xp) - value_at(xm)) / (2 * h);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

ArrayX<double> randn(Eigen::Index n, std::uint64_t seed, double stddev = 1.0) {
    SeededRng rng(seed);
    ArrayX<double> out(n);
    rng.fill_normal(out, stddev);
    return out;
}

} // namespace

TEST_CASE("conv2d SAME geometry") {
    CHECK(conv_same_geometry(8, 8, 3, 1).out_h == 8);
    CHECK(conv_same_geometry(8, 8, 3, 2).out_h == 4);
    CHECK(conv_same_geometry(8, 8, 4, 2).out_h == 4);
    CHECK(conv_same_geometry(8, 8, 4, 1).out_h == 8);
    CHECK(conv_same_geometry(2, 2, 4, 2).out_h == 1);
    CHECK_THROWS_AS(conv_same_geometry(7, 7, 3, 2), Error);
}

TEST_CASE("conv2d forward matches a direct dot product") {
    // 1x1x2x2 input, single 3x3 kernel, stride 1: center output = sum of the
    // overlapping products with zero padding.
    Tape<double> t;
    ArrayX<double> xv(4);
    xv << 1, 2, 3, 4;
    Var x = t.constant(Shape{1, 1, 2, 2}, xv);
    ArrayX<double> wv(9);
    wv << 1, 0, 0, 0, 1, 0, 0, 0, 1; // identity-ish kernel rows
    Var w = t.constant(Shape{1, 1, 3, 3}, wv);
    ArrayX<double> bv(1);
    bv << 0.5;
    Var b = t.constant(Shape{1, 1, 1, 1}, bv);
    Var y = t.constant(Shape{1, 1, 1, 1}, ArrayX<double>::Zero(1));
    y = conv2d(t, x, w, b, 3, 1);
    // out(0,0) touches (iy,ix) = (-1,-1)..(1,1); kernel hits at (0,0)->w(1,1)=1 and (1,1)->w(2,2)=1
    CHECK(t.val(y)[0] == doctest::Approx(1 * 1 + 4 * 1 + 0.5));
    CHECK(t.shape(y).h == 2);
}

TEST_CASE("conv2d gradients (all kernel/stride combinations in use)") {
    struct Case {
        int k, stride, h;
    };
    for (const Case c : {Case{3, 1, 6}, Case{3, 2, 6}, Case{4, 2, 6}, Case{4, 1, 6}, Case{1, 1, 6}}) {
        const Shape xs{2, 3, c.h, c.h};
        const int out_c = 2;
        const ArrayX<double> wv = randn(3 * c.k * c.k * out_c, 42 + c.k * 10 + c.stride, 0.4);
        const ArrayX<double> bv = randn(out_c, 7, 0.2);

        // w.r.t. input
        double err = max_grad_error(xs, [&](Tape<double>& t, Var x) {
            Var w = t.constant(Shape{out_c, 3, c.k, c.k}, wv);
            Var b = t.constant(Shape{1, out_c, 1, 1}, bv);
            return mean_squared_to(t, conv2d(t, x, w, b, c.k, c.stride), 0.3);
        }, 1000 + c.k);
        CAPTURE(c.k);
        CAPTURE(c.stride);
        CHECK(err < 1e-6);

        // w.r.t. weights
        const ArrayX<double> xv = randn(xs.count(), 99, 0.8);
        err = max_grad_error(Shape{out_c, 3, c.k, c.k}, [&](Tape<double>& t, Var w) {
            Var x = t.constant(xs, xv);
            Var b = t.constant(Shape{1, out_c, 1, 1}, bv);
            return mean_squared_to(t, conv2d(t, x, w, b, c.k, c.stride), -0.1);
        }, 2000 + c.k);
        CHECK(err < 1e-6);

        // w.r.t. bias
        err = max_grad_error(Shape{1, out_c, 1, 1}, [&](Tape<double>& t, Var b) {
            Var x = t.constant(xs, xv);
            Var w = t.constant(Shape{out_c, 3, c.k, c.k}, wv);
            return mean_squared_to(t, conv2d(t, x, w, b, c.k, c.stride), 0.0);
        }, 3000 + c.k);
        CHECK(err < 1e-6);
    }
}

TEST_CASE("instance_norm normalizes per plane and backpropagates") {
    const Shape s{2, 2, 4, 4};
    Tape<double> t;
    Var x = t.constant(s, randn(s.count(), 5, 2.0));
    Var y = instance_norm(t, x);
    for (int p = 0; p < 4; ++p) {
        auto seg = t.val(y).segment(p * 16, 16);
        CHECK(seg.mean() == doctest::Approx(0).epsilon(1e-10));
        CHECK(seg.square().mean() == doctest::Approx(1).epsilon(1e-3)); // eps shifts variance slightly
    }
    const double err = max_grad_error(s, [](Tape<double>& tt, Var xx) {
        return mean_squared_to(tt, instance_norm(tt, xx), 0.2);
    }, 17);
    CHECK(err < 1e-5);
}

TEST_CASE("batch_norm training statistics, running update, gradients") {
    const Shape s{3, 2, 4, 4};
    BatchNormState<double> state;
    state.init(2);
    NormMode mode; // training, update running

    Tape<double> t;
    Var x = t.constant(s, randn(s.count(), 11, 1.5));
    Var gamma = t.constant(Shape{1, 2, 1, 1}, ArrayX<double>::Ones(2));
    Var beta = t.constant(Shape{1, 2, 1, 1}, ArrayX<double>::Zero(2));
    Var y = batch_norm(t, x, gamma, beta, &state, mode);
    // batch statistics: per channel across samples, zero mean / unit variance
    for (int c = 0; c < 2; ++c) {
        double mean = 0, var = 0;
        for (int n = 0; n < 3; ++n) mean += t.val(y).segment((n * 2 + c) * 16, 16).sum();
        mean /= 48;
        for (int n = 0; n < 3; ++n)
            var += (t.val(y).segment((n * 2 + c) * 16, 16) - mean).square().sum();
        CHECK(mean == doctest::Approx(0).epsilon(1e-10));
        CHECK(var / 48 == doctest::Approx(1).epsilon(1e-3));
        CHECK(state.running_mean[c] != 0); // updated away from init
    }

    BatchNormState<double> frozen;
    frozen.init(2);
    NormMode probe_mode;
    probe_mode.update_running = false;
    const ArrayX<double> gv = randn(2, 21, 0.5) + 1.0;
    const ArrayX<double> bv = randn(2, 22, 0.3);

    double err = max_grad_error(s, [&](Tape<double>& tt, Var xx) {
        Var g = tt.constant(Shape{1, 2, 1, 1}, gv);
        Var b = tt.constant(Shape{1, 2, 1, 1}, bv);
        return mean_squared_to(tt, batch_norm(tt, xx, g, b, &frozen, probe_mode), 0.1);
    }, 23);
    CHECK(err < 1e-5);

    const ArrayX<double> xv = randn(s.count(), 31, 1.0);
    err = max_grad_error(Shape{1, 2, 1, 1}, [&](Tape<double>& tt, Var g) {
        Var xx = tt.constant(s, xv);
        Var b = tt.constant(Shape{1, 2, 1, 1}, bv);
        return mean_squared_to(tt, batch_norm(tt, xx, g, b, &frozen, probe_mode), -0.2);
    }, 24);
    CHECK(err < 1e-5);
}

TEST_CASE("batch_norm eval mode uses running statistics") {
    const Shape s{2, 1, 2, 2};
    BatchNormState<double> state;
    state.init(1);
    state.running_mean[0] = 1.0;
    state.running_var[0] = 4.0;
    NormMode eval_mode;
    eval_mode.training = false;
    Tape<double> t;
    ArrayX<double> xv(8);
    xv << 1, 3, 5, 1, 1, 1, 3, 3;
    Var x = t.constant(s, xv);
    Var y = batch_norm(t, x, t.constant(Shape{1, 1, 1, 1}, ArrayX<double>::Ones(1)),
                       t.constant(Shape{1, 1, 1, 1}, ArrayX<double>::Zero(1)), &state, eval_mode);
    CHECK(t.val(y)[0] == doctest::Approx((1 - 1.0) / 2.0).epsilon(1e-5));
    CHECK(t.val(y)[1] == doctest::Approx((3 - 1.0) / 2.0).epsilon(1e-5));
}

TEST_CASE("activation and layout op gradients") {
    const Shape s{2, 2, 4, 4};
    // inputs shifted away from the ReLU corner
    CHECK(max_grad_error(s, [](Tape<double>& t, Var x) {
        return mean_squared_to(t, relu(t, x), 0.3);
    }, 41) < 1e-5);
    CHECK(max_grad_error(s, [](Tape<double>& t, Var x) {
        return mean_squared_to(t, tanh_op(t, x), -0.4);
    }, 43) < 1e-6);
    CHECK(max_grad_error(s, [](Tape<double>& t, Var x) {
        return mean_squared_to(t, upsample_nearest2x(t, x), 0.1);
    }, 47) < 1e-6);
    CHECK(max_grad_error(s, [](Tape<double>& t, Var x) {
        Var other = t.constant(Shape{2, 1, 4, 4}, ArrayX<double>::Constant(32, 0.5));
        return mean_squared_to(t, concat_channels(t, x, other), 0.0);
    }, 53) < 1e-6);
    CHECK(max_grad_error(s, [&s](Tape<double>& t, Var x) {
        Var other = t.constant(s, ArrayX<double>::Constant(s.count(), 0.25));
        return mean_abs(t, sub(t, x, other));
    }, 59) < 1e-6);
}

TEST_CASE("upsample_nearest2x duplicates 2x2 blocks") {
    Tape<double> t;
    ArrayX<double> xv(4);
    xv << 1, 2, 3, 4;
    Var y = upsample_nearest2x(t, t.constant(Shape{1, 1, 2, 2}, xv));
    CHECK(t.shape(y).h == 4);
    CHECK(t.val(y)[0] == 1);
    CHECK(t.val(y)[1] == 1);
    CHECK(t.val(y)[4] == 1);
    CHECK(t.val(y)[15] == 4);
}

TEST_CASE("reduction values") {
    Tape<double> t;
    ArrayX<double> v(4);
    v << 1, 2, 3, 4;
    Var x = t.constant(Shape{1, 1, 2, 2}, v);
    CHECK(t.val(mean_squared_to(t, x, 1.0))[0] == doctest::Approx((0 + 1 + 4 + 9) / 4.0));
    CHECK(t.val(mean_abs(t, x))[0] == doctest::Approx(2.5));
    Var a = mean_abs(t, x);
    Var b = mean_squared_to(t, x, 0.0);
    CHECK(t.val(add_weighted(t, {a, b}, {2.0, 0.5}))[0] ==
          doctest::Approx(2 * 2.5 + 0.5 * (1 + 4 + 9 + 16) / 4.0));
}

TEST_CASE("detach blocks gradients") {
    Tape<double> t;
    Var x = t.leaf(Shape{1, 1, 2, 2}, randn(4, 61));
    Var d = detach(t, x);
    CHECK_FALSE(t.requires_grad(d));
    Var loss = mean_squared_to(t, d, 0.0);
    CHECK_FALSE(t.requires_grad(loss));
}

TEST_CASE("composite chain gradient (conv -> IN -> relu -> conv -> tanh)") {
    const Shape s{2, 2, 8, 8};
    const ArrayX<double> w1 = randn(2 * 9 * 3, 71, 0.5);
    const ArrayX<double> b1 = randn(3, 72, 0.1);
    const ArrayX<double> w2 = randn(3 * 9 * 1, 73, 0.5);
    const ArrayX<double> b2 = randn(1, 74, 0.1);
    const double err = max_grad_error(s, [&](Tape<double>& t, Var x) {
        Var h1 = conv2d(t, x, t.constant(Shape{3, 2, 3, 3}, w1), t.constant(Shape{1, 3, 1, 1}, b1), 3, 2);
        h1 = relu(t, instance_norm(t, h1));
        Var h2 = conv2d(t, h1, t.constant(Shape{1, 3, 3, 3}, w2), t.constant(Shape{1, 1, 1, 1}, b2), 3, 1);
        return mean_squared_to(t, tanh_op(t, h2), 0.5);
    }, 79);
    CHECK(err < 1e-5);
}

TEST_CASE("backward accumulates through shared subexpressions") {
    // y = mean_sq(x) + mean_sq(x) must give twice the single-term gradient.
    const Shape s{1, 1, 2, 2};
    const ArrayX<double> xv = randn(4, 83);
    Tape<double> t1;
    Var x1 = t1.leaf(s, xv);
    Var term1 = mean_squared_to(t1, x1, 0.0);
    t1.backward(term1);
    Tape<double> t2;
    Var x2 = t2.leaf(s, xv);
    Var sum = add_weighted(t2, {mean_squared_to(t2, x2, 0.0), mean_squared_to(t2, x2, 0.0)},
                           {1.0, 1.0});
    t2.backward(sum);
    for (int i = 0; i < 4; ++i) CHECK(t2.grad(x2)[i] == doctest::Approx(2 * t1.grad(x1)[i]));
}
