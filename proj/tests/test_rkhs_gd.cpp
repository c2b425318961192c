#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "selfreg/common.hpp"
#include "selfreg/rkhs_gd.hpp"

using namespace selfreg;

namespace {

// One point with K = [[1]], y = 1, least squares: every quantity in closed
// form.
std::shared_ptr<const Dataset> one_point_instance() {
    Dataset d;
    d.xs = Eigen::MatrixXd::Zero(1, 1);
    d.ys = Eigen::VectorXd::Ones(1);
    return std::make_shared<const Dataset>(std::move(d));
}

std::shared_ptr<const Dataset> random_instance(long n, int d, Rng& rng,
                                               bool labels = false) {
    Dataset data;
    data.xs.resize(n, d);
    data.ys.resize(n);
    for (long i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) data.xs(i, j) = rng.uniform(-1.0, 1.0);
        data.ys(i) = labels ? (rng.uniform() < 0.5 ? -1.0 : 1.0)
                            : std::sin(3.0 * data.xs(i, 0)) + 0.1 * rng.normal();
    }
    return std::make_shared<const Dataset>(std::move(data));
}

RkhsFunction span_fn(const std::shared_ptr<const Dataset>& data,
                     const KernelSpec& kernel, Eigen::VectorXd alpha) {
    RkhsFunction f;
    f.support = std::shared_ptr<const Eigen::MatrixXd>(data, &data->xs);
    f.coeffs = std::move(alpha);
    f.kernel = kernel;
    return f;
}

}  // namespace

TEST_CASE("empirical risk anchors") {
    const LossSpec ls = LossSpec::least_squares(1.0);

    Dataset two;
    two.xs = Eigen::MatrixXd::Zero(2, 1);
    two.xs << 0.0, 1.0;
    two.ys.resize(2);
    two.ys << 1.0, -1.0;
    auto shared = std::make_shared<const Dataset>(two);
    const RkhsFunction zero =
        span_fn(shared, KernelSpec::gaussian(1.0), Eigen::VectorXd::Zero(2));
    CHECK(empirical_risk(ls, *shared, zero) == doctest::Approx(1.0));

    // Hand example: linear kernel, alpha = (0.5, 0), xs = (1, 2), ys = (1, 1).
    Dataset lin;
    lin.xs.resize(2, 1);
    lin.xs << 1.0, 2.0;
    lin.ys.resize(2);
    lin.ys << 1.0, 1.0;
    auto lshared = std::make_shared<const Dataset>(lin);
    Eigen::VectorXd alpha(2);
    alpha << 0.5, 0.0;
    const RkhsFunction f = span_fn(lshared, KernelSpec::linear(), alpha);
    CHECK(empirical_risk(ls, *lshared, f) == doctest::Approx(0.125));

    CHECK_THROWS_AS(empirical_risk(ls, Dataset{}, f), input_error);
}

TEST_CASE("risk gradient coefficients") {
    const LossSpec ls = LossSpec::least_squares(1.0);
    auto data = one_point_instance();
    const KernelSpec kernel = KernelSpec::gaussian(1.0);

    const RkhsFunction zero = span_fn(data, kernel, Eigen::VectorXd::Zero(1));
    const Eigen::VectorXd g = risk_gradient_coeffs(ls, *data, zero);
    CHECK(g(0) == doctest::Approx(-2.0));

    // Gradient vanishes at an interpolant.
    Rng rng(31);
    auto inst = random_instance(12, 2, rng);
    const Eigen::MatrixXd K = gram_matrix(kernel, inst->xs);
    const Eigen::VectorXd alpha = K.ldlt().solve(inst->ys);
    const RkhsFunction interp = span_fn(inst, kernel, alpha);
    const Eigen::VectorXd gi = risk_gradient_coeffs(ls, *inst, interp);
    CHECK(gi.cwiseAbs().maxCoeff() <= 1e-9);

    // Directional finite differences of the empirical risk match <grad, h>.
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd a(12), h(12);
        for (int i = 0; i < 12; ++i) {
            a(i) = rng.normal();
            h(i) = rng.normal();
        }
        const RkhsFunction fa = span_fn(inst, kernel, a);
        const Eigen::VectorXd grad = risk_gradient_coeffs(ls, *inst, fa);
        const double analytic = grad.dot(K * h);
        const double eps = 1e-6;
        RkhsFunction fp = fa, fm = fa;
        fp.coeffs += eps * h;
        fm.coeffs -= eps * h;
        const double fd =
            (empirical_risk(ls, *inst, fp) - empirical_risk(ls, *inst, fm)) / (2 * eps);
        CHECK(std::abs(fd - analytic) <= 1e-6 * (1.0 + std::abs(analytic)));
    }

    // Support mismatch is a contract violation.
    Dataset other;
    other.xs = Eigen::MatrixXd::Ones(1, 1);
    other.ys = Eigen::VectorXd::Ones(1);
    CHECK_THROWS_AS(risk_gradient_coeffs(ls, other, zero), std::logic_error);
}

TEST_CASE("gd_step closed forms on the one-point instance") {
    const LossSpec ls = LossSpec::least_squares(1.0);
    auto data = one_point_instance();
    const KernelSpec kernel = KernelSpec::gaussian(1.0);
    const RkhsFunction f0 = span_fn(data, kernel, Eigen::VectorXd::Zero(1));

    // Stationary point: zero gradient leaves f unchanged.
    const RkhsFunction same = gd_step(f0, Eigen::VectorXd::Zero(1), 0.5);
    CHECK(same.coeffs(0) == 0.0);

    // eta = 1/M' = 0.5 reaches the interpolant in one step.
    const Eigen::VectorXd g = risk_gradient_coeffs(ls, *data, f0);
    const RkhsFunction f1 = gd_step(f0, g, 0.5);
    CHECK(f1.coeffs(0) == doctest::Approx(1.0));
    CHECK(empirical_risk(ls, *data, f1) == doctest::Approx(0.0));

    // eta = 0.25 for two steps: alpha_{k+1} = alpha_k + 0.5 (1 - alpha_k).
    RkhsFunction f = f0;
    for (int k = 0; k < 2; ++k)
        f = gd_step(f, risk_gradient_coeffs(ls, *data, f), 0.25);
    CHECK(f.coeffs(0) == doctest::Approx(0.75));
    CHECK(empirical_risk(ls, *data, f) == doctest::Approx(0.0625));

    Eigen::VectorXd bad(1);
    bad << std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(gd_step(f0, bad, 0.5), numeric_error);
}

TEST_CASE("run_gd trajectory invariants and anchors") {
    const LossSpec ls = LossSpec::least_squares(1.0);
    auto data = one_point_instance();
    const KernelSpec kernel = KernelSpec::gaussian(1.0);

    SUBCASE("zero steps") {
        GdTrajectory traj = run_gd(ls, data, kernel, GdConfig::constant(0.5, 0));
        CHECK(traj.risks.size() == 1);
        CHECK(traj.risks[0] == doctest::Approx(1.0));
        CHECK(traj.snapshots.at(0).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("one step at the cap gives risks 1, 0") {
        GdTrajectory traj = run_gd(ls, data, kernel, GdConfig::constant(0.5, 1));
        REQUIRE(traj.risks.size() == 2);
        CHECK(traj.risks[0] == doctest::Approx(1.0));
        CHECK(traj.risks[1] == doctest::Approx(0.0));
    }

    SUBCASE("strict mode rejects a step above 1/M'") {
        CHECK_THROWS_AS(run_gd(ls, data, kernel, GdConfig::constant(0.6, 2)),
                        config_error);
        GdConfig warn = GdConfig::constant(0.6, 2);
        warn.strict_cap = false;
        GdTrajectory traj = run_gd(ls, data, kernel, warn);
        CHECK(traj.cap_violated);
    }

    SUBCASE("risks are non-increasing across random instances") {
        Rng rng(37);
        for (int rep = 0; rep < 100; ++rep) {
            auto inst = random_instance(5 + static_cast<long>(rng.uniform_index(30)), 2,
                                        rng);
            const double eta =
                std::min(1.0, 1.0 / risk_smoothness(ls, kernel, *inst));
            GdTrajectory traj = run_gd(ls, inst, kernel, GdConfig::constant(eta, 40));
            for (std::size_t k = 0; k + 1 < traj.risks.size(); ++k)
                CHECK(traj.risks[k + 1] <= traj.risks[k] + 1e-12 * (1.0 + traj.risks[0]));
        }
    }
}

TEST_CASE("interpolation implements the shortened gradient step") {
    const LossSpec ls = LossSpec::least_squares(1.0);
    auto data = one_point_instance();
    const KernelSpec kernel = KernelSpec::gaussian(1.0);
    GdTrajectory traj = run_gd(ls, data, kernel, GdConfig::constant(0.5, 2, {0, 1, 2}));

    // Integer times reproduce the snapshots exactly.
    for (int m : {0, 1, 2})
        CHECK(interpolate(traj, m).coeffs == traj.snapshots.at(m));

    // Half step: alpha = 0 - 0.5 * 0.5 * (-2) = 0.5, risk 0.25.
    const RkhsFunction mid = interpolate(traj, 0.5);
    CHECK(mid.coeffs(0) == doctest::Approx(0.5));
    CHECK(empirical_risk(ls, *data, mid) == doctest::Approx(0.25));

    // Constant eta: the fractional iterate is affine between the endpoints.
    const RkhsFunction q = interpolate(traj, 0.25);
    CHECK(q.coeffs(0) ==
          doctest::Approx(0.75 * traj.snapshots.at(0)(0) + 0.25 * traj.snapshots.at(1)(0)));

    CHECK_THROWS_AS(interpolate(traj, 2.5), input_error);
}

TEST_CASE("cumulative step sums") {
    const LossSpec ls = LossSpec::least_squares(1.0);
    auto data = one_point_instance();
    GdTrajectory traj =
        run_gd(ls, data, KernelSpec::gaussian(1.0), GdConfig::constant(0.5, 4));
    CHECK(cumulative_step_sum(traj, 4) == doctest::Approx(2.0));
    CHECK(cumulative_step_sum(traj, 1) == doctest::Approx(0.5));
    CHECK_THROWS_AS(cumulative_step_sum(traj, 0), std::domain_error);

    GdConfig explicit_steps;
    explicit_steps.step_sizes = {0.5, 0.25, 0.125};
    explicit_steps.max_steps = 3;
    GdTrajectory t2 = run_gd(ls, data, KernelSpec::gaussian(1.0), explicit_steps);
    CHECK(cumulative_step_sum(t2, 3) == doctest::Approx(0.875));
    // Strictly increasing prefix sums.
    for (int m = 1; m < 3; ++m)
        CHECK(cumulative_step_sum(t2, m) < cumulative_step_sum(t2, m + 1));
}

TEST_CASE("trajectory CSV and snapshot round trip") {
    const LossSpec ls = LossSpec::least_squares(1.0);
    Rng rng(41);
    auto inst = random_instance(9, 1, rng);
    const double eta =
        std::min(1.0, 1.0 / risk_smoothness(ls, KernelSpec::gaussian(1.0), *inst));
    GdTrajectory traj = run_gd(ls, inst, KernelSpec::gaussian(1.0),
                               GdConfig::constant(eta, 8, {0, 2, 4, 8}));

    const auto dir = std::filesystem::temp_directory_path() / "selfreg_gd_test";
    std::filesystem::create_directories(dir);
    write_trajectory_csv(traj, dir / "traj.csv");
    write_snapshots(traj, dir / "snaps.bin");

    const auto snaps = read_snapshots(dir / "snaps.bin");
    CHECK(snaps.size() == traj.snapshots.size());
    for (const auto& [idx, alpha] : traj.snapshots) {
        REQUIRE(snaps.count(idx));
        CHECK((snaps.at(idx) - alpha).cwiseAbs().maxCoeff() == 0.0);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("coeffs_at replays unrecorded steps") {
    const LossSpec ls = LossSpec::least_squares(1.0);
    Rng rng(43);
    auto inst = random_instance(7, 1, rng);
    const KernelSpec kernel = KernelSpec::gaussian(1.0);
    const double eta = std::min(1.0, 1.0 / risk_smoothness(ls, kernel, *inst));

    GdTrajectory sparse = run_gd(ls, inst, kernel, GdConfig::constant(eta, 8, {0, 8}));
    GdTrajectory dense =
        run_gd(ls, inst, kernel, GdConfig::constant(eta, 8, {0, 1, 2, 3, 4, 5, 6, 7, 8}));
    for (int m : {3, 5, 7})
        CHECK((sparse.coeffs_at(m) - dense.snapshots.at(m)).cwiseAbs().maxCoeff() <=
              1e-14);
}
