#include <doctest.h>

#include <cmath>

#include "selfreg/common.hpp"
#include "selfreg/experiments.hpp"
#include "selfreg/verify.hpp"

using namespace selfreg;

namespace {

std::shared_ptr<const Dataset> one_point_instance() {
    Dataset d;
    d.xs = Eigen::MatrixXd::Zero(1, 1);
    d.ys = Eigen::VectorXd::Ones(1);
    return std::make_shared<const Dataset>(std::move(d));
}

ApproxErrorProblem small_problem() {
    ApproxErrorProblem p;
    p.kernel = KernelSpec::gaussian(0.8);
    p.support.resize(2, 1);
    p.support << -0.4, 0.5;
    p.fstar_coeffs.resize(2);
    p.fstar_coeffs << 0.7, -0.4;
    p.grid_points_per_axis = 41;
    return p;
}

}  // namespace

TEST_CASE("self-regularization check on the one-point anchors") {
    const LossSpec ls = LossSpec::least_squares(1.0);
    auto data = one_point_instance();
    const KernelSpec kernel = KernelSpec::gaussian(1.0);
    RermSolver solver(ls, data, kernel);

    // eta 0.25: f_1 has alpha 0.5, risk 0.25, matched lambda 1, equal norms.
    GdTrajectory traj = run_gd(ls, data, kernel, GdConfig::constant(0.25, 1));
    const CheckResult r = check_self_regularization_gd(traj, solver, {1}, 1e-6);
    CHECK(r.passed);
    CHECK(r.instances == 1);
    CHECK(r.violations == 0);
    // ||f|| = ||g|| = 0.5, so the normalized slack is 0.5 / 1.5.
    CHECK(r.worst_slack == doctest::Approx(0.5 / 1.5).epsilon(1e-6));
}

TEST_CASE("factor-17 and factor-4 checks on the eta = 0.5 anchor") {
    const LossSpec ls = LossSpec::least_squares(1.0);
    auto data = one_point_instance();
    const KernelSpec kernel = KernelSpec::gaussian(1.0);
    RermSolver solver(ls, data, kernel);
    GdTrajectory traj = run_gd(ls, data, kernel, GdConfig::constant(0.5, 1));

    // Psi(1) = 2, g has alpha 1/3, risk 4/9; lhs = 2, rhs = 38/9.
    const CheckResult m17 = check_risk_matching_17(traj, solver, {1}, 1e-6);
    CHECK(m17.passed);
    REQUIRE(m17.details.size() >= 1);
    CHECK(m17.details[0].lhs == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(m17.details[0].rhs == doctest::Approx(38.0 / 9.0).epsilon(1e-8));

    const CheckResult n4 = check_norm_bound_telgarsky(traj, solver, {1}, 1e-6);
    CHECK(n4.passed);
    CHECK(n4.details[0].lhs == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(n4.details[0].rhs == doctest::Approx(4.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("fejer check: terminal comparator and matched comparator") {
    const LossSpec ls = LossSpec::least_squares(2.0);
    SyntheticProblem prob = generate_regression(20, 1, "sine", 0.15, 333);
    auto data = std::make_shared<const Dataset>(std::move(prob.data));
    const KernelSpec kernel = KernelSpec::gaussian(1.0);
    const double eta = std::min(1.0, 1.0 / risk_smoothness(ls, kernel, *data));
    GdTrajectory traj = run_gd(ls, data, kernel, GdConfig::constant(eta, 16));
    TrajectoryCache cache(traj);

    // h = f_{t0} itself: distances decrease to zero.
    const CheckResult self = check_fejer(traj, traj.function_at(16), 16, 1e-9, &cache);
    CHECK(self.passed);

    RermSolver solver(ls, data, kernel);
    const double r0 = solver.risk_zero();
    auto [lambda, g] = match_risk(solver, traj.risks[16], 1e-9 * r0);
    const CheckResult matched = check_fejer(traj, g.f, 16, 1e-9, &cache);
    CHECK(matched.passed);

    // Telescoping with the closed-form minimizer as comparator.
    const Eigen::MatrixXd& K = *traj.gram;
    RkhsFunction mini;
    mini.support = std::shared_ptr<const Eigen::MatrixXd>(data, &data->xs);
    mini.kernel = kernel;
    Eigen::MatrixXd Kreg = K;
    Kreg.diagonal().array() += 1e-10 * K.trace();
    mini.coeffs = Kreg.ldlt().solve(data->ys);
    const CheckResult tele = check_telescoping(traj, mini, 16, 1e-9, &cache);
    CHECK(tele.passed);
}

TEST_CASE("bregman contraction check cross-validates the fejer check at p=2") {
    // A single shared instance: weighted l2 mirror descent on a quadratic is
    // Euclidean GD, so Bregman monotonicity and distance monotonicity must
    // agree pass-for-pass.
    Rng rng(107);
    auto space = std::make_shared<const LpSpace>(
        2.0, Eigen::VectorXd::Constant(4, 0.25));
    Eigen::MatrixXd A(4, 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) A(r, c) = rng.normal();
    Eigen::MatrixXd H = A.transpose() * A / 4.0;
    H.diagonal().array() += 0.3;
    QuadraticLpObjective obj(H, Eigen::VectorXd::Zero(4), space);

    Eigen::VectorXd f0(4);
    for (int i = 0; i < 4; ++i) f0(i) = rng.uniform(-1.0, 1.0);
    const double l = estimate_relative_smoothness(
        obj, make_lp_point(Eigen::VectorXd::Constant(4, -5.0), space),
        make_lp_point(Eigen::VectorXd::Constant(4, 5.0), space), 3000, rng);
    const MirrorTrajectory traj =
        run_mirror_descent(obj, make_lp_point(f0, space), 1.0 / l, 40, l);

    const int t0 = 20;
    const LpPoint& u = traj.iterates[t0];
    const CheckResult bregman = check_bregman_contraction(traj, obj, u, t0, 1e-9);
    CHECK(bregman.passed);

    // Direct distance monotonicity in the weighted norm: equivalent statement.
    bool fejer_pass = true;
    for (int t = 0; t < t0; ++t) {
        const double dt = (space->weights.array() *
                           (u.values - traj.iterates[t].values).array().square())
                              .sum();
        const double dn = (space->weights.array() *
                           (u.values - traj.iterates[t + 1].values).array().square())
                              .sum();
        if (dn > dt + 1e-9 * (1.0 + dt)) fejer_pass = false;
    }
    CHECK(bregman.passed == fejer_pass);
}

TEST_CASE("brute-force approximation error") {
    const ApproxErrorProblem problem = small_problem();

    SUBCASE("zero at lambda 0 and monotone in lambda") {
        std::vector<double> lambdas = {0.0};
        for (int i = 0; i < 20; ++i) lambdas.push_back(std::pow(10.0, -5.0 + 0.3 * i));
        const std::vector<double> a2 = brute_force_approx_error(problem, 2.0, lambdas);
        CHECK(a2.front() == 0.0);
        for (std::size_t i = 0; i + 1 < a2.size(); ++i) CHECK(a2[i] <= a2[i + 1] + 1e-15);
    }

    SUBCASE("slope near zero is bounded by the f* norm (beta = 1 case)") {
        ApproxErrorGrid grid(problem);
        const double fnorm = grid.fstar_norm;
        for (double lambda : {1e-5, 1e-4, 1e-3}) {
            const double a2 = grid.a_hat(2.0, lambda);
            // Any grid point near f* witnesses A_2(lambda) <= lambda ||f*||^2
            // up to grid resolution.
            CHECK(a2 <= lambda * fnorm * fnorm * 1.2 + 1e-4 * lambda + 1e-12);
        }
    }

    SUBCASE("empty lambda grid is rejected") {
        CHECK_THROWS_AS(brute_force_approx_error(problem, 2.0, {}), input_error);
    }
}

TEST_CASE("reg-trafo check") {
    const ApproxErrorProblem problem = small_problem();
    std::vector<double> lambdas, gammas;
    for (int i = 0; i < 8; ++i) {
        lambdas.push_back(std::pow(10.0, -4.0 + 4.0 * i / 7.0));
        gammas.push_back(std::pow(10.0, -3.0 + 3.0 * i / 7.0));
    }

    SUBCASE("p = r collapses to A_p(lambda) <= 2 gamma for gamma above A_p") {
        const CheckResult r = check_reg_trafo(problem, 2.0, 2.0, lambdas, gammas, 1e-9);
        CHECK(r.passed);
        CHECK(r.instances > 0);
    }

    SUBCASE("cross exponents (1,2) and (2,1)") {
        CHECK(check_reg_trafo(problem, 1.0, 2.0, lambdas, gammas, 1e-9).passed);
        CHECK(check_reg_trafo(problem, 2.0, 1.0, lambdas, gammas, 1e-9).passed);
    }

    SUBCASE("an unreachable gamma grid is inconclusive") {
        const CheckResult r =
            check_reg_trafo(problem, 2.0, 2.0, {1000.0}, {1e-12}, 1e-9);
        CHECK(r.inconclusive);
        CHECK_FALSE(r.passed);
    }
}

TEST_CASE("clipping risk check") {
    SyntheticProblem prob = generate_regression(15, 1, "sine", 0.1, 41);
    auto data = std::make_shared<const Dataset>(std::move(prob.data));
    const double clip = data->ys.cwiseAbs().maxCoeff();
    const LossSpec ls = LossSpec::least_squares(clip);

    // A wildly overshooting interpolant-style function: clipping strictly
    // helps.
    Eigen::MatrixXd K = gram_matrix(KernelSpec::gaussian(1.0), data->xs);
    K.diagonal().array() += 1e-10 * K.trace();
    RkhsFunction f;
    f.support = std::shared_ptr<const Eigen::MatrixXd>(data, &data->xs);
    f.kernel = KernelSpec::gaussian(1.0);
    f.coeffs = K.ldlt().solve((10.0 * data->ys).eval());
    const CheckResult r = check_clipping_risk(ls, *data, f, clip, 1e-12);
    CHECK(r.passed);
    CHECK(r.worst_slack > 0.1);  // strict decrease

    // Bounded functions are untouched: equality.
    RkhsFunction zero = f;
    zero.coeffs.setZero();
    const CheckResult eq = check_clipping_risk(ls, *data, zero, clip, 1e-12);
    CHECK(eq.passed);
    CHECK(eq.worst_slack == 0.0);

    // Non-clippable loss reports a skip.
    const CheckResult skip =
        check_clipping_risk(LossSpec::logistic(), *data, zero, 1.0, 1e-12);
    CHECK_FALSE(skip.passed);
    CHECK(skip.inconclusive);
}

TEST_CASE("default check suite passes end to end") {
    SuiteParams params;
    params.seed = 5;
    params.gd_instances = 6;
    params.n_min = 10;
    params.n_max = 60;
    params.random_comparators = 5;
    params.raw_h1_comparators = 2;
    params.mirror_steps = 30;
    params.mirror_random_u = 10;
    params.algebra_cases = 500;
    params.perturbations = 100;
    params.match_targets = 4;
    params.cv_seeds = 3;
    params.cv_n = 96;
    params.cv_test_n = 128;

    const std::vector<CheckResult> results = run_check_suite(params);
    CHECK(results.size() >= 20);
    for (const auto& r : results) {
        INFO(r.name, " worst_slack=", r.worst_slack, " violations=", r.violations);
        CHECK(r.passed);
    }
}
