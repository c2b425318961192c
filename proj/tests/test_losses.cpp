#include <doctest.h>

#include <cmath>

#include "selfreg/common.hpp"
#include "selfreg/losses.hpp"

using namespace selfreg;

namespace {

double central_difference(const LossSpec& loss, double y, double t, double h) {
    return (loss_value(loss, y, t + h) - loss_value(loss, y, t - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("loss values at the anchor points") {
    CHECK(loss_value(LossSpec::least_squares(1.0), 1.0, 0.0) == doctest::Approx(1.0));
    CHECK(loss_value(LossSpec::logistic(), 1.0, 0.0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(loss_value(LossSpec::huber(1.0, 1.0), 0.0, 2.0) == doctest::Approx(1.5));
}

TEST_CASE("loss derivatives at the anchor points") {
    CHECK(loss_derivative(LossSpec::least_squares(1.0), 1.0, 0.0) ==
          doctest::Approx(-2.0));
    CHECK(loss_derivative(LossSpec::logistic(), 1.0, 0.0) == doctest::Approx(-0.5));
    // Huber inside the quadratic branch, frozen from the central-difference
    // oracle on loss_value.
    const LossSpec huber = LossSpec::huber(1.0, 1.0);
    const double fd = central_difference(huber, 0.0, 0.3, 1e-6);
    CHECK(fd == doctest::Approx(0.3).epsilon(1e-8));
    CHECK(loss_derivative(huber, 0.0, 0.3) == doctest::Approx(0.3));
}

TEST_CASE("clip saturates and is the identity inside") {
    CHECK(clip_value(1.5, 1.0) == 1.0);
    CHECK(clip_value(-2.0, 1.0) == -1.0);
    CHECK(clip_value(0.3, 1.0) == 0.3);
    CHECK_THROWS_AS(clip_value(0.0, 0.0), input_error);
}

TEST_CASE("smoothness constants") {
    CHECK(smoothness_constant(LossSpec::least_squares(1.0)) == 2.0);
    CHECK(smoothness_constant(LossSpec::logistic()) == 0.25);
    CHECK(smoothness_constant(LossSpec::huber(0.5, 1.0)) == 1.0);

    // Numeric maximization of |L'(y,s) - L'(y,t)| / |s - t| stays below the
    // returned constant.
    for (const LossSpec& loss :
         {LossSpec::least_squares(1.0), LossSpec::logistic(), LossSpec::huber(1.0, 1.0)}) {
        const double M = smoothness_constant(loss);
        Rng rng(42);
        double worst = 0.0;
        for (int i = 0; i < 20000; ++i) {
            const double y = loss.kind == LossKind::logistic_classification
                                 ? (rng.uniform() < 0.5 ? -1.0 : 1.0)
                                 : rng.uniform(-1.0, 1.0);
            const double s = rng.uniform(-6.0, 6.0);
            const double t = rng.uniform(-6.0, 6.0);
            if (std::abs(s - t) < 1e-9) continue;
            worst = std::max(worst, std::abs(loss_derivative(loss, y, s) -
                                             loss_derivative(loss, y, t)) /
                                        std::abs(s - t));
        }
        CHECK(worst <= M * (1.0 + 1e-9));
    }
}

TEST_CASE("growth parameters hold on a sampling grid") {
    struct Expect {
        LossSpec loss;
        double B;
        double q;
    };
    const Expect table[] = {{LossSpec::least_squares(1.0), 2.0, 2.0},
                            {LossSpec::logistic(), 1.0, 1.0},
                            {LossSpec::huber(1.0, 1.0), 2.0, 1.0}};
    for (const auto& e : table) {
        const GrowthParams g = growth_params(e.loss);
        CHECK(g.B == doctest::Approx(e.B));
        CHECK(g.q == doctest::Approx(e.q));
        const double M = e.loss.clip_level;
        for (double y = -M; y <= M; y += M / 8.0) {
            const double yy = e.loss.kind == LossKind::logistic_classification
                                  ? (y >= 0.0 ? 1.0 : -1.0)
                                  : y;
            for (double t = -50.0; t <= 50.0; t += 0.25)
                CHECK(loss_value(e.loss, yy, t) <=
                      g.B * (1.0 + std::pow(std::abs(t), g.q)) + 1e-12);
        }
    }
}

TEST_CASE("midpoint convexity over random triples") {
    Rng rng(7);
    for (const LossSpec& loss :
         {LossSpec::least_squares(1.0), LossSpec::logistic(), LossSpec::huber(0.8, 1.0)}) {
        for (int i = 0; i < 10000; ++i) {
            const double y = loss.kind == LossKind::logistic_classification
                                 ? (rng.uniform() < 0.5 ? -1.0 : 1.0)
                                 : rng.uniform(-1.0, 1.0);
            const double t1 = rng.uniform(-10.0, 10.0);
            const double t2 = rng.uniform(-10.0, 10.0);
            const double mid = loss_value(loss, y, 0.5 * (t1 + t2));
            const double avg = 0.5 * (loss_value(loss, y, t1) + loss_value(loss, y, t2));
            CHECK(mid <= avg + 1e-12);
        }
    }
}

TEST_CASE("clipping monotonicity for the clippable losses") {
    Rng rng(11);
    for (const LossSpec& loss : {LossSpec::least_squares(1.0), LossSpec::huber(1.0, 1.5)}) {
        REQUIRE(is_clippable(loss));
        const double M = loss.clip_level;
        for (int i = 0; i < 10000; ++i) {
            const double y = rng.uniform(-M, M);
            const double t = rng.uniform(-12.0, 12.0);
            CHECK(loss_value(loss, y, clip_value(t, M)) <=
                  loss_value(loss, y, t) + 1e-12);
        }
    }
}

TEST_CASE("logistic classification is not clippable") {
    const LossSpec logistic = LossSpec::logistic();
    CHECK_FALSE(is_clippable(logistic));
    // Witness: a correct confident prediction gets worse when clipped.
    CHECK(loss_value(logistic, 1.0, clip_value(3.0, 1.0)) >
          loss_value(logistic, 1.0, 3.0));
}

TEST_CASE("analytic derivative against central differences") {
    Rng rng(13);
    for (const LossSpec& loss :
         {LossSpec::least_squares(1.0), LossSpec::logistic(), LossSpec::huber(1.0, 1.0)}) {
        for (int i = 0; i < 5000; ++i) {
            const double y = loss.kind == LossKind::logistic_classification
                                 ? (rng.uniform() < 0.5 ? -1.0 : 1.0)
                                 : rng.uniform(-1.0, 1.0);
            const double t = rng.uniform(-5.0, 5.0);
            const double h = 1e-5 * (1.0 + std::abs(t));
            if (loss.kind == LossKind::huber &&
                std::abs(std::abs(t - y) - loss.delta) < 1e-4 + h)
                continue;  // kink neighborhood excluded
            const double fd = central_difference(loss, y, t, h);
            const double an = loss_derivative(loss, y, t);
            CHECK(std::abs(fd - an) <= 1e-6 * (1.0 + std::abs(an)));
        }
    }
}

TEST_CASE("loss input validation") {
    CHECK_THROWS_AS(loss_value(LossSpec::least_squares(1.0), 1.0,
                               std::numeric_limits<double>::infinity()),
                    input_error);
    CHECK_THROWS_AS(loss_value(LossSpec::least_squares(1.0),
                               std::numeric_limits<double>::quiet_NaN(), 0.0),
                    input_error);
    CHECK_THROWS_AS(LossSpec::huber(0.0, 1.0), input_error);
    CHECK_THROWS_AS(LossSpec::least_squares(-1.0), input_error);
}

TEST_CASE("lipschitz constant on the clipped interval") {
    CHECK(lipschitz_on_clip(LossSpec::least_squares(1.0), 2.0) == doctest::Approx(6.0));
    CHECK(lipschitz_on_clip(LossSpec::huber(1.0, 1.0), 5.0) == doctest::Approx(1.0));
    const double a = 2.0;
    CHECK(lipschitz_on_clip(LossSpec::logistic(), a) ==
          doctest::Approx(1.0 / (1.0 + std::exp(-a))));
}
