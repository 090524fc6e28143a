#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msgdd/dataset.hpp"
#include "msgdd/losses.hpp"
#include "msgdd/rng.hpp"

using namespace msgdd;

namespace {

Image<double> const_map(int h, int w, double v) {
    Image<double> im(h, w, 1);
    im.values.setConstant(v);
    return im;
}

std::vector<Image<double>> const_batch(int n, int h, int w, double v) {
    return std::vector<Image<double>>(static_cast<size_t>(n), const_map(h, w, v));
}

} // namespace

TEST_CASE("discriminator loss on perfect scores is zero") {
    CHECK(loss_dis_e(const_batch(2, 4, 4, 1.0), const_batch(2, 4, 4, 0.0)) == doctest::Approx(0.0));
    CHECK(loss_dis_d(const_batch(3, 2, 2, 1.0), const_batch(3, 2, 2, 0.0)) == doctest::Approx(0.0));
}

TEST_CASE("discriminator loss on inverted scores is 1") {
    CHECK(loss_dis_e(const_batch(2, 4, 4, 0.0), const_batch(2, 4, 4, 1.0)) == doctest::Approx(1.0));
}

TEST_CASE("discriminator loss at 0.5 everywhere is 0.25") {
    CHECK(loss_dis_e(const_batch(1, 8, 8, 0.5), const_batch(1, 8, 8, 0.5)) == doctest::Approx(0.25));
}

TEST_CASE("shared-score quadratic is minimized at one half") {
    auto value = [](double c) {
        return loss_dis_d(const_batch(2, 4, 4, c), const_batch(2, 4, 4, c));
    };
    CHECK(value(0.5) == doctest::Approx(0.25));
    for (double c : {-0.5, 0.0, 0.25, 0.75, 1.0, 1.5})
        if (c != 0.5) CHECK(value(c) > 0.25);
}

TEST_CASE("mixed half-ones map against zero fakes gives 0.25") {
    Image<double> mixed(4, 4, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) mixed.at(0, y, x) = y < 2 ? 1.0 : 0.0;
    CHECK(loss_dis_d({mixed}, const_batch(1, 4, 4, 0.0)) == doctest::Approx(0.25));
}

TEST_CASE("combined discriminator loss is the average of the two terms") {
    CHECK(loss_dis_total(0.0, 0.0) == doctest::Approx(0.0));
    CHECK(loss_dis_total(1.0, 1.0) == doctest::Approx(1.0));
    CHECK(loss_dis_total(0.25, 0.75) == doctest::Approx(0.5));
}

TEST_CASE("generator adversarial loss scalar evaluations") {
    CHECK(loss_gen_adv(const_batch(2, 4, 4, 1.0), const_batch(2, 4, 4, 1.0)) == doctest::Approx(0.0));
    CHECK(loss_gen_adv(const_batch(2, 4, 4, 0.0), const_batch(2, 4, 4, 0.0)) == doctest::Approx(1.0));
    CHECK(loss_gen_adv(const_batch(2, 4, 4, 1.0), const_batch(2, 4, 4, 0.0)) == doctest::Approx(0.5));
}

namespace {

struct L1Fixture {
    Image<double> gt = const_map(16, 16, 0.5);
    ScalePyramid<double> gt_pyr;
    Image<double> output;
    ScalePyramid<double> taps;

    L1Fixture() {
        gt_pyr = build_pyramid(gt, 4);
        output = gt;
        taps = gt_pyr;
    }
};

} // namespace

TEST_CASE("multi-scale L1 is zero when every pair matches") {
    L1Fixture f;
    for (int k : {1, 2, 4})
        CHECK(loss_gen_l1(f.output, f.taps, f.gt, f.gt_pyr, k) == doctest::Approx(0.0));
}

TEST_CASE("constant 0.1 full-resolution offset with matching taps gives exactly 0.1 under 4L1") {
    L1Fixture f;
    f.output.values += 0.1;
    CHECK(loss_gen_l1(f.output, f.taps, f.gt, f.gt_pyr, 4) == doctest::Approx(0.1));
    CHECK(loss_gen_l1(f.output, f.taps, f.gt, f.gt_pyr, 1) == doctest::Approx(0.1));
}

TEST_CASE("more scales never decrease the L1 total on mismatched taps") {
    L1Fixture f;
    SeededRng rng(9);
    f.output.values += 0.05;
    for (auto& level : f.taps.levels)
        for (Eigen::Index i = 0; i < level.values.size(); ++i)
            level.values[i] += 0.2 * rng.normal();
    const double l1 = loss_gen_l1(f.output, f.taps, f.gt, f.gt_pyr, 1);
    const double l2 = loss_gen_l1(f.output, f.taps, f.gt, f.gt_pyr, 2);
    const double l4 = loss_gen_l1(f.output, f.taps, f.gt, f.gt_pyr, 4);
    CHECK(l2 >= l1);
    CHECK(l4 >= l2);
    CHECK(l4 >= l1);
}

TEST_CASE("multi-scale L1 rejects unknown k and mismatched resolutions") {
    L1Fixture f;
    CHECK_THROWS_AS((void)loss_gen_l1(f.output, f.taps, f.gt, f.gt_pyr, 3), Error);
    Image<double> wrong = const_map(8, 8, 0.5);
    CHECK_THROWS_AS((void)loss_gen_l1(wrong, f.taps, f.gt, f.gt_pyr, 1), Error);
}

TEST_CASE("total generator objective is lambda * L1 + adversarial") {
    CHECK(loss_gen_total(0.0, 0.0, 7.0) == doctest::Approx(0.0));
    CHECK(loss_gen_total(1.0, 0.5, 1.0) == doctest::Approx(1.5));  // literal unweighted sum
    CHECK(loss_gen_total(1.0, 0.5, 100.0) == doctest::Approx(51.0));
}

TEST_CASE("losses are non-negative on random score maps") {
    SeededRng rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Image<double>> real, fake;
        for (int n = 0; n < 3; ++n) {
            Image<double> r(4, 4, 1), f(4, 4, 1);
            for (Eigen::Index i = 0; i < 16; ++i) {
                r.values[i] = 2.0 * rng.normal();
                f.values[i] = 2.0 * rng.normal();
            }
            real.push_back(r);
            fake.push_back(f);
        }
        CHECK(loss_dis_e(real, fake) >= 0.0);
        CHECK(loss_gen_adv(fake, real) >= 0.0);
    }
}

TEST_CASE("discriminator losses are invariant under batch permutation") {
    SeededRng rng(37);
    std::vector<Image<double>> real, fake;
    for (int n = 0; n < 4; ++n) {
        Image<double> r(3, 3, 1), f(3, 3, 1);
        for (Eigen::Index i = 0; i < 9; ++i) {
            r.values[i] = rng.normal();
            f.values[i] = rng.normal();
        }
        real.push_back(r);
        fake.push_back(f);
    }
    const double direct = loss_dis_e(real, fake);
    std::vector<Image<double>> real_p{real[2], real[0], real[3], real[1]};
    std::vector<Image<double>> fake_p{fake[1], fake[3], fake[0], fake[2]};
    CHECK(loss_dis_e(real_p, fake_p) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("generator adversarial gradient pushes scores toward 1") {
    // d(loss)/d(score) < 0 whenever score < 1
    Tape<double> t;
    SeededRng rng(41);
    ArrayX<double> scores(12);
    for (Eigen::Index i = 0; i < scores.size(); ++i) scores[i] = rng.uniform(-1.0, 0.99);
    Var fake_e = t.leaf(Shape{3, 1, 2, 2}, scores);
    Var fake_d = t.constant(Shape{3, 1, 2, 2}, ArrayX<double>::Constant(12, 0.5));
    Var loss = lsgan_gen_loss(t, fake_e, fake_d);
    t.backward(loss);
    for (Eigen::Index i = 0; i < scores.size(); ++i) CHECK(t.grad(fake_e)[i] < 0.0);
}

TEST_CASE("multi-scale L1 is zero only when every selected pair matches") {
    L1Fixture f;
    f.taps.levels[0].values[5] += 0.3; // finest decoder tap differs
    CHECK(loss_gen_l1(f.output, f.taps, f.gt, f.gt_pyr, 1) == doctest::Approx(0.0));
    CHECK(loss_gen_l1(f.output, f.taps, f.gt, f.gt_pyr, 2) > 0.0);
    CHECK(loss_gen_l1(f.output, f.taps, f.gt, f.gt_pyr, 4) > 0.0);
}

TEST_CASE("empty score batches are rejected") {
    CHECK_THROWS_AS((void)loss_dis_e<double>({}, {}), Error);
}
