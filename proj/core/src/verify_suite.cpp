#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "selfreg/common.hpp"
#include "selfreg/experiments.hpp"
#include "selfreg/verify.hpp"

namespace selfreg {

namespace {

// Tolerances pinned from the acceptance criteria.
constexpr double kTolSelfReg = 1e-6;
constexpr double kTol17 = 1e-6;
constexpr double kTolNorm4 = 1e-6;
constexpr double kTolFejer = 1e-9;
constexpr double kTolRiskMono = 1e-12;
constexpr double kTolMdMono = 1e-12;
constexpr double kTolMdRecursion = 1e-10;
constexpr double kTolMdContraction = 1e-9;
constexpr double kTolAlgebra = 1e-10;
constexpr double kTolBregman = 1e-12;
constexpr double kTolRegTrafo = 1e-9;
constexpr double kInnerP2Match = 1e-10;
constexpr double kInnerAgreement = 1e-6;
constexpr double kTolPerturbation = 1e-9;
constexpr double kTolPath = 1e-10;
constexpr double kTolLoss = 1e-6;

CheckResult merge_parts(const std::string& name, double tol,
                        std::vector<CheckResult> parts) {
    CheckResult out;
    out.name = name;
    bool any = false;
    for (auto& p : parts) {
        if (p.instances > 0) {
            out.worst_slack =
                any ? std::min(out.worst_slack, p.worst_slack) : p.worst_slack;
            any = true;
        }
        out.instances += p.instances;
        out.violations += p.violations;
        for (auto& d : p.details)
            if (out.details.size() < 5) out.details.push_back(std::move(d));
        for (auto& s : p.skipped)
            if (out.skipped.size() < 20) out.skipped.push_back(std::move(s));
    }
    out.finish(tol);
    out.passed = out.instances > 0 && out.violations == 0 && !out.inconclusive;
    return out;
}

void record_checked(CheckResult& r, const std::string& id, double lhs, double rhs,
                    double slack, double tol) {
    r.record(id, lhs, rhs, slack);
    if (slack < -tol) ++r.violations;
}

// ---------------------------------------------------------------------------
// GD sweep (acceptance criteria 1-5)

struct GdSweepPartial {
    CheckResult selfreg, m17, norm4, fejer_matched, fejer_general, telescoping, mono;
};

GdSweepPartial process_gd_instance(const SuiteParams& params, int index) {
    Rng rng(derive_seed(params.seed, 7000 + static_cast<std::uint64_t>(index)));
    const std::uint64_t data_seed =
        derive_seed(params.seed, 9000 + static_cast<std::uint64_t>(index));

    const int loss_pick = index % 3;
    const int d = 1 + (index / 2) % 3;
    const long n = static_cast<long>(std::lround(
        std::exp(rng.uniform(std::log(static_cast<double>(params.n_min)),
                             std::log(static_cast<double>(params.n_max))))));

    const KernelSpec kernel = (index % 2 == 0)
                                  ? KernelSpec::gaussian(rng.uniform(0.6, 1.4))
                                  : KernelSpec::linear();

    SyntheticProblem prob;
    LossSpec loss = LossSpec::least_squares(1.0);
    if (loss_pick == 1) {
        const char* profiles[] = {"easy", "noisy", "hard"};
        prob = generate_classification(n, d, profiles[(index / 3) % 3], data_seed);
        loss = LossSpec::logistic(1.0);
    } else {
        const char* targets[] = {"sine", "poly", "linear"};
        const double sigmas[] = {0.05, 0.2, 0.35, 0.0};
        prob = generate_regression(n, d, targets[(index / 3) % 3],
                                   sigmas[(index / 4) % 4], data_seed);
        const double clip = std::max(prob.data.ys.cwiseAbs().maxCoeff(), 1e-8);
        loss = loss_pick == 0 ? LossSpec::least_squares(clip)
                              : LossSpec::huber(rng.uniform(0.5, 1.5), clip);
    }

    auto data = std::make_shared<const Dataset>(std::move(prob.data));
    const double eta = std::min(1.0, 1.0 / risk_smoothness(loss, kernel, *data));
    const std::vector<int> times = build_geometric_time_grid(std::max<long>(n, 2), eta);
    GdConfig config = GdConfig::constant(eta, times.back(), times);
    GdTrajectory traj = run_gd(loss, data, kernel, config);
    TrajectoryCache cache(traj);
    RermSolver solver(loss, data, kernel);
    const std::string tag = "i" + std::to_string(index);

    GdSweepPartial out;
    out.selfreg = check_self_regularization_gd(traj, solver, times, kTolSelfReg);
    out.m17 = check_risk_matching_17(traj, solver, times, kTol17);
    out.norm4 = check_norm_bound_telgarsky(traj, solver, times, kTolNorm4);

    // Fejer with risk-matched comparators at every dyadic time.
    std::vector<CheckResult> fejer_parts;
    const double match_tol = 1e-9 * std::max(solver.risk_zero(), 1e-12);
    for (int m : times) {
        try {
            auto [lambda, g] = match_risk(solver, traj.risks.at(m), match_tol);
            if (g.at_boundary) continue;
            fejer_parts.push_back(check_fejer(traj, g.f, m, kTolFejer, &cache));
        } catch (const risk_range_error&) {
            continue;
        }
    }
    out.fejer_matched = merge_parts("gd_fejer_matched", kTolFejer, std::move(fejer_parts));
    if (out.fejer_matched.instances == 0) out.fejer_matched.inconclusive = false;

    // Random comparators: telescoping everywhere, raw h1 on a few.
    std::vector<CheckResult> tele_parts, h1_parts;
    const int m_last = times.back();
    for (int j = 0; j < params.random_comparators; ++j) {
        Eigen::VectorXd beta(data->n());
        for (long i = 0; i < beta.size(); ++i) beta(i) = rng.normal();
        RkhsFunction h;
        h.support = std::shared_ptr<const Eigen::MatrixXd>(data, &data->xs);
        h.kernel = kernel;
        h.coeffs = beta;
        const double norm = rkhs_norm(h, *traj.gram);
        if (norm > 0.0)
            h.coeffs *= std::exp(rng.uniform(std::log(0.05), std::log(3.0))) / norm;
        tele_parts.push_back(check_telescoping(traj, h, m_last, kTolFejer, &cache));
        if (j < params.raw_h1_comparators)
            h1_parts.push_back(check_fejer(traj, h, m_last, kTolFejer, &cache));
    }
    out.telescoping = merge_parts("gd_telescoping", kTolFejer, std::move(tele_parts));
    out.fejer_general = merge_parts("gd_fejer_general", kTolFejer, std::move(h1_parts));

    CheckResult mono;
    mono.name = "gd_risk_monotonicity";
    for (std::size_t k = 0; k + 1 < traj.risks.size(); ++k) {
        const double slack =
            (traj.risks[k] - traj.risks[k + 1]) / (1.0 + traj.risks[0]);
        mono.record(tag + " k=" + std::to_string(k), traj.risks[k + 1], traj.risks[k],
                    slack);
        if (slack < -kTolRiskMono) ++mono.violations;
    }
    mono.finish(kTolRiskMono);
    out.mono = std::move(mono);
    return out;
}

// ---------------------------------------------------------------------------
// Mirror descent suite (criteria 6-7)

struct MirrorSuitePartial {
    CheckResult loss_mono, recursion, contraction, p2_match;
};

LpSpacePtr make_space(double p, int dim, Rng& rng) {
    Eigen::VectorXd w(dim);
    for (int i = 0; i < dim; ++i) w(i) = 1.0 + rng.uniform();
    w /= w.sum();
    return std::make_shared<const LpSpace>(p, std::move(w));
}

MirrorSuitePartial process_mirror_instance(const SuiteParams& params, double p,
                                           bool logistic) {
    Rng rng(derive_seed(params.seed,
                        31000 + static_cast<std::uint64_t>(p * 100) + (logistic ? 7 : 0)));
    const int dim = params.mirror_dim;
    LpSpacePtr space = make_space(p, dim, rng);

    // For p > 2 the mirror map degenerates at coordinate zeros, so the test
    // instances live in the positive orthant and the step size is validated
    // against the relative-smoothness inequality on the realized trajectory.
    std::unique_ptr<LpObjective> objective;
    if (logistic) {
        const int rows = 3 * dim;
        Eigen::MatrixXd Z(rows, dim);
        Eigen::VectorXd y(rows);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < dim; ++c) Z(r, c) = rng.uniform(0.3, 1.2);
            y(r) = rng.uniform() < 0.8 ? 1.0 : -1.0;
        }
        objective = std::make_unique<LogisticLpObjective>(std::move(Z), std::move(y),
                                                          space);
    } else {
        Eigen::MatrixXd A(dim, dim);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) A(r, c) = rng.normal() / std::sqrt(dim);
        Eigen::MatrixXd H = A.transpose() * A;
        H.diagonal().array() += 0.1;
        Eigen::VectorXd center(dim);
        for (int i = 0; i < dim; ++i) center(i) = rng.uniform(1.5, 2.5);
        objective =
            std::make_unique<QuadraticLpObjective>(std::move(H), std::move(center), space);
    }

    Eigen::VectorXd f0v(dim);
    for (int i = 0; i < dim; ++i) f0v(i) = rng.uniform(1.0, 3.0);
    const LpPoint f0 = make_lp_point(f0v, space);

    Rng est_rng(derive_seed(params.seed, 4100));
    const double l0 = estimate_relative_smoothness(
        *objective, make_lp_point(Eigen::VectorXd::Constant(dim, 0.2), space),
        make_lp_point(Eigen::VectorXd::Constant(dim, 4.0), space), 4000, est_rng);
    ValidatedMirrorRun run =
        run_mirror_descent_validated(*objective, f0, l0, params.mirror_steps);
    const MirrorTrajectory& traj = run.trajectory;
    double radius = 0.0;
    for (const auto& it : traj.iterates)
        radius = std::max(radius, it.values.cwiseAbs().maxCoeff());
    radius = std::max(radius, 4.0);

    MirrorSuitePartial out;
    const std::string tag = (logistic ? "logistic" : "quadratic") +
                            std::string(" p=") + format_double(p);

    CheckResult mono;
    mono.name = "md_loss_monotonicity";
    for (std::size_t t = 0; t + 1 < traj.losses.size(); ++t) {
        const double slack =
            (traj.losses[t] - traj.losses[t + 1]) / (1.0 + traj.losses[0]);
        record_checked(mono, tag + " t=" + std::to_string(t), traj.losses[t + 1],
                       traj.losses[t], slack, kTolMdMono);
    }
    mono.finish(kTolMdMono);
    out.loss_mono = std::move(mono);

    // Universal key recursion on fresh random u at every step.
    CheckResult rec;
    rec.name = "md_key_recursion";
    for (std::size_t t = 0; t + 1 < traj.iterates.size(); ++t) {
        for (int j = 0; j < params.mirror_random_u; ++j) {
            Eigen::VectorXd uv(dim);
            for (int i = 0; i < dim; ++i) uv(i) = rng.uniform(-radius, radius);
            const LpPoint u = make_lp_point(std::move(uv), space);
            const double obj_u = objective->value(u);
            const double d_t = bregman_divergence(u, traj.iterates[t]);
            const double d_next = bregman_divergence(u, traj.iterates[t + 1]);
            const double rhs = d_t + traj.eta * (obj_u - traj.losses[t + 1]);
            const double slack =
                (rhs - d_next) /
                (1.0 + d_t + std::abs(traj.eta * (obj_u - traj.losses[t + 1])));
            record_checked(rec, tag + " t=" + std::to_string(t), d_next, rhs, slack,
                           kTolMdRecursion);
        }
    }
    rec.finish(kTolMdRecursion);
    out.recursion = std::move(rec);

    // Level-set contraction with a ray-bisected comparator, plus the terminal
    // iterate as the trivial comparator.
    std::vector<CheckResult> contraction_parts;
    const int t0 = params.mirror_steps / 2;
    contraction_parts.push_back(check_bregman_contraction(
        traj, *objective, traj.iterates[static_cast<std::size_t>(t0)], t0,
        kTolMdContraction, 0.0));
    const double target = traj.losses[static_cast<std::size_t>(t0)];
    const LpPoint& base = traj.iterates.back();
    if (objective->value(base) < target) {
        const double level_tol = 1e-12 * (1.0 + std::abs(target));
        for (int attempt = 0; attempt < 5; ++attempt) {
            Eigen::VectorXd dir(dim);
            for (int i = 0; i < dim; ++i) dir(i) = rng.normal();
            try {
                const LpPoint u =
                    level_set_comparator(*objective, base, dir, target, level_tol);
                const double mismatch = std::abs(objective->value(u) - target);
                contraction_parts.push_back(check_bregman_contraction(
                    traj, *objective, u, t0, kTolMdContraction, mismatch));
                break;
            } catch (const numeric_error&) {
                continue;  // direction of recession, try another ray
            }
        }
    }
    out.contraction =
        merge_parts("md_level_set_contraction", kTolMdContraction,
                    std::move(contraction_parts));

    // p = 2 reduces to plain gradient descent in the weighted metric.
    CheckResult p2;
    p2.name = "md_p2_equals_euclidean_gd";
    if (p == 2.0) {
        Eigen::VectorXd g = f0.values;
        for (std::size_t t = 1; t < traj.iterates.size(); ++t) {
            g -= traj.eta *
                 objective->gradient(make_lp_point(g, space));
            const double dev =
                (g - traj.iterates[t].values).cwiseAbs().maxCoeff();
            const double slack = 1.0 - dev / kInnerP2Match;
            record_checked(p2, tag + " t=" + std::to_string(t), dev, kInnerP2Match,
                           slack, 0.0);
        }
    }
    p2.finish(0.0);
    if (p != 2.0) p2.passed = true;
    out.p2_match = std::move(p2);
    return out;
}

// ---------------------------------------------------------------------------
// Duality / Bregman algebra (criterion 7)

void algebra_checks(const SuiteParams& params, CheckResult& roundtrip,
                    CheckResult& three_point, CheckResult& bregman) {
    const double ps[] = {1.5, 2.0, 3.0, 4.0};
    for (double p : ps) {
        Rng rng(derive_seed(params.seed, 50000 + static_cast<std::uint64_t>(p * 10)));
        LpSpacePtr space = make_space(p, 6, rng);
        const std::string tag = "p=" + format_double(p);
        for (int c = 0; c < params.algebra_cases; ++c) {
            Eigen::VectorXd fv(6), uv(6), zv(6);
            for (int i = 0; i < 6; ++i) {
                fv(i) = rng.uniform(-5.0, 5.0);
                uv(i) = rng.uniform(-5.0, 5.0);
                zv(i) = rng.uniform(-5.0, 5.0);
            }
            const LpPoint f = make_lp_point(fv, space);
            const LpPoint u = make_lp_point(uv, space);
            const LpPoint z = make_lp_point(zv, space);

            const LpPoint back = duality_map_inverse(duality_map(f), space);
            const double rt_dev =
                ((back.values - f.values).cwiseAbs().array() /
                 (1.0 + f.values.cwiseAbs().array()))
                    .maxCoeff();
            record_checked(roundtrip, tag, rt_dev, kTolAlgebra, kTolAlgebra - rt_dev,
                           kTolAlgebra);

            const double resid = three_point_identity_check(f, u, z);
            const double scale = 1.0 + std::abs(bregman_divergence(z, u)) +
                                 std::abs(bregman_divergence(z, f)) +
                                 std::abs(bregman_divergence(f, u));
            record_checked(three_point, tag, resid, kTolAlgebra * scale,
                           kTolAlgebra - resid / scale, kTolAlgebra);

            const double div = bregman_divergence(u, f);
            record_checked(bregman, tag, -div, 0.0, div / (1.0 + div), kTolBregman);
            if ((u.values - f.values).cwiseAbs().maxCoeff() > 1e-8 && div <= 0.0)
                ++bregman.violations;
            const double self_div = bregman_divergence(f, f);
            record_checked(bregman, tag + " self", self_div, 0.0,
                           self_div == 0.0 ? 0.0 : -std::abs(self_div), kTolBregman);
        }
    }
    roundtrip.finish(kTolAlgebra);
    three_point.finish(kTolAlgebra);
    bregman.finish(kTolBregman);
}

// ---------------------------------------------------------------------------
// RERM checks (criterion 8) and risk matching (criterion 9)

CheckResult rerm_agreement_check(const SuiteParams& params) {
    CheckResult r;
    r.name = "rerm_ls_agreement";
    const long sizes[] = {1, 7, 25, 60};
    int which = 0;
    for (long n : sizes) {
        const SyntheticProblem prob = generate_regression(
            n, 1, "sine", 0.15, derive_seed(params.seed, 61000 + which));
        const KernelSpec kernel = which % 2 == 0 ? KernelSpec::gaussian(0.9)
                                                 : KernelSpec::linear();
        ++which;
        const LossSpec loss = LossSpec::least_squares(
            std::max(prob.data.ys.cwiseAbs().maxCoeff(), 1e-8));
        for (double lambda : {1e-3, 0.1, 1.0, 100.0}) {
            const RermSolution closed = solve_rerm_ls(prob.data, kernel, lambda);
            const RermSolution iterative =
                solve_rerm_smooth(loss, prob.data, kernel, lambda);
            const double dev =
                ((closed.f.coeffs - iterative.f.coeffs).cwiseAbs().array() /
                 (1.0 + closed.f.coeffs.cwiseAbs().array()))
                    .maxCoeff();
            record_checked(r, "n=" + std::to_string(n) +
                               " lambda=" + format_double(lambda),
                           dev, kInnerAgreement, 1.0 - dev / kInnerAgreement, 0.0);
        }
    }
    r.finish(0.0);
    return r;
}

CheckResult rerm_perturbation_check(const SuiteParams& params) {
    CheckResult r;
    r.name = "rerm_perturbation_minimality";
    Rng rng(derive_seed(params.seed, 62000));
    const LossSpec losses[] = {LossSpec::least_squares(2.0), LossSpec::logistic(1.0),
                               LossSpec::huber(1.0, 2.0)};
    for (int which = 0; which < 3; ++which) {
        const bool classify = which == 1;
        SyntheticProblem prob =
            classify ? generate_classification(24, 2, "noisy",
                                               derive_seed(params.seed, 62100 + which))
                     : generate_regression(24, 2, "sine", 0.2,
                                           derive_seed(params.seed, 62100 + which));
        auto data = std::make_shared<const Dataset>(std::move(prob.data));
        const KernelSpec kernel = KernelSpec::gaussian(0.8);
        RermSolver solver(losses[which], data, kernel);
        for (double lambda : {0.01, 1.0}) {
            const RermSolution sol = solver.solve(lambda);
            const Eigen::VectorXd u0 = solver.gram() * sol.f.coeffs;
            const double obj0 = sol.achieved_objective;
            for (int j = 0; j < params.perturbations; ++j) {
                Eigen::VectorXd delta(data->n());
                for (long i = 0; i < delta.size(); ++i) delta(i) = rng.normal();
                const double scale = std::exp(rng.uniform(std::log(1e-3), std::log(1.0)));
                delta *= scale / std::sqrt(static_cast<double>(data->n()));
                const Eigen::VectorXd alpha = sol.f.coeffs + delta;
                const Eigen::VectorXd u = solver.gram() * alpha;
                const double obj =
                    empirical_risk_predictions(losses[which], data->ys, u) +
                    lambda * std::max(0.0, alpha.dot(u));
                const double slack = (obj - obj0) / (1.0 + obj0);
                record_checked(r, losses[which].name() + " j=" + std::to_string(j),
                               obj0, obj, slack, kTolPerturbation);
            }
        }
    }
    r.finish(kTolPerturbation);
    return r;
}

CheckResult rerm_path_check(const SuiteParams& params) {
    CheckResult r;
    r.name = "rerm_path_monotone";
    const LossSpec losses[] = {LossSpec::least_squares(2.0), LossSpec::logistic(1.0),
                               LossSpec::huber(0.8, 2.0)};
    for (int which = 0; which < 3; ++which) {
        const bool classify = which == 1;
        SyntheticProblem prob =
            classify ? generate_classification(30, 1, "noisy",
                                               derive_seed(params.seed, 63100 + which))
                     : generate_regression(30, 1, "poly", 0.25,
                                           derive_seed(params.seed, 63100 + which));
        std::vector<double> lambdas;
        for (int i = 0; i < params.rerm_grid_points; ++i)
            lambdas.push_back(std::pow(10.0, -4.0 + 5.0 * i /
                                                   (params.rerm_grid_points - 1)));
        const auto path =
            rerm_risk_path(losses[which], prob.data, KernelSpec::gaussian(1.0), lambdas);
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            const double rs = (path[i + 1].risk - path[i].risk) / (1.0 + path[i].risk);
            record_checked(r, losses[which].name() + " risk i=" + std::to_string(i),
                           path[i].risk, path[i + 1].risk, rs, kTolPath);
            const double ns = (path[i].norm - path[i + 1].norm) / (1.0 + path[i].norm);
            record_checked(r, losses[which].name() + " norm i=" + std::to_string(i),
                           path[i + 1].norm, path[i].norm, ns, kTolPath);
        }
    }
    r.finish(kTolPath);
    return r;
}

CheckResult risk_matching_check(const SuiteParams& params) {
    CheckResult r;
    r.name = "risk_matching_bisection";
    Rng rng(derive_seed(params.seed, 64000));
    const LossSpec losses[] = {LossSpec::least_squares(2.0), LossSpec::logistic(1.0),
                               LossSpec::huber(1.2, 2.0)};
    for (int which = 0; which < 6; ++which) {
        const LossSpec& loss = losses[which % 3];
        const bool classify = which % 3 == 1;
        SyntheticProblem prob =
            classify ? generate_classification(20 + 7 * which, 1, "noisy",
                                               derive_seed(params.seed, 64100 + which))
                     : generate_regression(20 + 7 * which, 1, "sine", 0.2,
                                           derive_seed(params.seed, 64100 + which));
        auto data = std::make_shared<const Dataset>(std::move(prob.data));
        RermSolver solver(loss, data, KernelSpec::gaussian(1.0));
        const double r0 = solver.risk_zero();
        const double rmin = solver.min_achievable_risk();
        const double tol = 1e-9 * std::max(r0, 1e-12);
        for (int j = 0; j < params.match_targets; ++j) {
            const double target = rmin + rng.uniform(0.05, 0.95) * (r0 - rmin);
            auto [lambda, sol] = match_risk(solver, target, tol);
            const double dev = std::abs(sol.risk - target);
            record_checked(r, loss.name() + " j=" + std::to_string(j), dev, tol,
                           1.0 - dev / tol, 0.0);
        }
    }

    // Closed-form anchor: one point, K = [[1]], y = 1, target risk 1/4 at
    // lambda = 1.
    Dataset one;
    one.xs = Eigen::MatrixXd::Zero(1, 1);
    one.ys = Eigen::VectorXd::Ones(1);
    auto [lambda, sol] =
        match_risk(LossSpec::least_squares(1.0), one, KernelSpec::gaussian(1.0), 0.25,
                   1e-9);
    record_checked(r, "anchor lambda", std::abs(lambda - 1.0), 1e-6,
                   1.0 - std::abs(lambda - 1.0) / 1e-6, 0.0);
    record_checked(r, "anchor risk", std::abs(sol.risk - 0.25), 1e-9,
                   1.0 - std::abs(sol.risk - 0.25) / 1e-9, 0.0);
    r.finish(0.0);
    return r;
}

// ---------------------------------------------------------------------------
// Geometric grid arithmetic (criterion 10)

CheckResult grid_check() {
    CheckResult r;
    r.name = "grid_construction_exact";
    const long ns[] = {16, 100, 1000};
    const double etas[] = {1.0, 0.5, 0.1};
    for (long n : ns) {
        for (double eta : etas) {
            const std::vector<int> times = build_geometric_time_grid(n, eta);
            const int m = static_cast<int>(times.size()) - 1;
            const std::string tag =
                "n=" + std::to_string(n) + " eta=" + format_double(eta);

            // lambda_i = 1/(eta t_i); dyadic products are exact in binary.
            std::vector<double> lambda;
            for (auto it = times.rbegin(); it != times.rend(); ++it)
                lambda.push_back(1.0 / (eta * static_cast<double>(*it)));
            double cgrid = 1.0;
            for (std::size_t i = 0; i + 1 < lambda.size(); ++i)
                cgrid = std::max(cgrid, lambda[i + 1] / lambda[i]);

            record_checked(r, tag + " cgrid", cgrid, 2.0,
                           cgrid == 2.0 || times.size() == 1 ? 0.0 : -1.0, 0.0);
            record_checked(r, tag + " lambda1", lambda.front(), 1.0 / n,
                           lambda.front() <= 1.0 / n ? 0.0 : -1.0, 0.0);
            record_checked(r, tag + " lambdamax", 1.0, lambda.back(),
                           lambda.back() >= 1.0 ? 0.0 : -1.0, 0.0);
            const double top = std::ldexp(1.0, m);
            record_checked(r, tag + " topstep", top, 2.0 * n / eta,
                           top <= 2.0 * n / eta ? 0.0 : -1.0, 0.0);
            bool dyadic = true;
            for (int i = 0; i <= m; ++i)
                dyadic = dyadic && times[static_cast<std::size_t>(i)] == (1 << i);
            record_checked(r, tag + " dyadic", dyadic ? 1.0 : 0.0, 1.0,
                           dyadic ? 0.0 : -1.0, 0.0);
        }
    }
    r.finish(0.0);
    return r;
}

// ---------------------------------------------------------------------------
// Lemma reg-trafo (criterion 11)

ApproxErrorProblem default_approx_problem() {
    ApproxErrorProblem p;
    p.kernel = KernelSpec::gaussian(0.8);
    p.support.resize(3, 1);
    p.support << -0.5, 0.1, 0.7;
    p.fstar_coeffs.resize(3);
    p.fstar_coeffs << 0.8, -0.5, 0.3;
    return p;
}

CheckResult reg_trafo_check() {
    const ApproxErrorProblem problem = default_approx_problem();
    std::vector<double> lambdas, gammas;
    for (int i = 0; i < 10; ++i) {
        lambdas.push_back(std::pow(10.0, -4.0 + 4.0 * i / 9.0));
        gammas.push_back(std::pow(10.0, -3.0 + 3.3 * i / 9.0));
    }
    std::vector<CheckResult> parts;
    const double prs[][2] = {{1.0, 2.0}, {2.0, 1.0}, {2.0, 2.0}};
    for (const auto& pr : prs)
        parts.push_back(
            check_reg_trafo(problem, pr[0], pr[1], lambdas, gammas, kTolRegTrafo));
    return merge_parts("reg_trafo", kTolRegTrafo, std::move(parts));
}

// ---------------------------------------------------------------------------
// End-to-end CV sanity (criterion 12) with pass-count semantics

struct CvChecks {
    CheckResult realizable, noise, oracle_gap;
};

CvChecks cv_checks(const SuiteParams& params) {
    CvChecks out;
    out.realizable.name = "cv_sanity_realizable";
    out.noise.name = "cv_sanity_noise";
    out.oracle_gap.name = "cv_oracle_gap";

    auto run_scenario = [&](bool realizable, int s, CheckResult& target) {
        const std::uint64_t ds =
            derive_seed(params.seed, (realizable ? 71000 : 72000) + s);
        SyntheticProblem prob =
            realizable ? generate_regression(params.cv_n, 1, "sine", 0.0, ds)
                       : generate_regression(params.cv_n, 1, "zero", 0.3, ds);
        SyntheticProblem test = generate_regression(
            params.cv_test_n, 1, realizable ? "sine" : "zero", realizable ? 0.0 : 0.3,
            derive_seed(params.seed, 73000 + s + (realizable ? 0 : 500)));

        CvPipelineSpec spec;
        spec.loss = LossSpec::least_squares(
            std::max(prob.data.ys.cwiseAbs().maxCoeff(), 1e-8));
        // Narrow enough to overfit pure noise decisively within the grid
        // horizon, so early and late stopping separate cleanly.
        spec.kernel = KernelSpec::gaussian(0.1);
        spec.n1 = params.cv_n - params.cv_n / 2;
        spec.n2 = params.cv_n / 2;
        spec.seed = derive_seed(params.seed, 74000 + s + (realizable ? 0 : 500));
        const CvOutcome outcome = cv_pipeline(prob.data, spec, &test.data);

        const auto& times = outcome.report.grid.times;
        const long L = static_cast<long>(times.size());
        long idx = 0;
        for (long i = 0; i < L; ++i)
            if (times[static_cast<std::size_t>(i)] == outcome.report.selected_time)
                idx = i;
        const bool in_half =
            realizable ? (2 * idx >= L - 1) : (2 * idx <= L - 1);
        target.record("seed=" + std::to_string(s), static_cast<double>(idx),
                      static_cast<double>(L), in_half ? 0.0 : -1.0);
        if (!in_half) ++target.violations;

        // Selection risk against the grid-best test risk plus the empirical
        // validation-test deviation margin.
        double best_test = std::numeric_limits<double>::infinity();
        double max_dev = 0.0;
        for (int t : times) {
            const double vt = outcome.report.validation_risks.at(t);
            const double tt = outcome.report.test_risks.at(t);
            best_test = std::min(best_test, tt);
            max_dev = std::max(max_dev, std::abs(vt - tt));
        }
        const double margin = 2.0 * max_dev;
        const double lhs = outcome.report.selected_test_risk;
        const double rhs = best_test + margin + 1e-12 * (1.0 + best_test);
        out.oracle_gap.record("seed=" + std::to_string(s), lhs, rhs,
                              lhs <= rhs ? 0.0 : -1.0);
        if (lhs > rhs) ++out.oracle_gap.violations;
    };

    for (int s = 0; s < params.cv_seeds; ++s) {
        run_scenario(true, s, out.realizable);
        run_scenario(false, s, out.noise);
    }

    // Pass-count semantics: at least 90 percent of seeds must land correctly.
    auto finish_counted = [&](CheckResult& r, long trials) {
        const long need = static_cast<long>(std::floor(0.9 * trials));
        const long passes = trials - r.violations;
        r.tolerance = 0.0;
        r.worst_slack = static_cast<double>(passes - need);
        r.passed = passes >= need;
    };
    finish_counted(out.realizable, params.cv_seeds);
    finish_counted(out.noise, params.cv_seeds);
    finish_counted(out.oracle_gap, 2L * params.cv_seeds);
    return out;
}

// ---------------------------------------------------------------------------
// Determinism (criterion 13)

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

CheckResult determinism_check(const SuiteParams& params) {
    CheckResult r;
    r.name = "determinism";
    const auto base = std::filesystem::temp_directory_path() /
                      ("selfreg_det_" + std::to_string(params.seed));
    const char* configs[] = {
        "mode = train\nseed = 9\ndataset.n = 24\ndataset.noise_sigma = 0.2\n",
        "mode = cv\nseed = 11\ndataset.n = 40\ndataset.noise_sigma = 0.1\n"
        "cv.test_n = 32\n",
        "mode = rates\nseed = 3\nrates.table = 1,0.5,1,2; 0.5,0.25,0,1\n"};
    const char* files[] = {"trajectory.csv", "cv_report.csv", "rates.csv"};
    for (int c = 0; c < 3; ++c) {
        ExperimentConfig cfg = parse_config_text(configs[c]);
        const auto dir_a = base / ("a" + std::to_string(c));
        const auto dir_b = base / ("b" + std::to_string(c));
        cfg.out_dir = dir_a;
        run(cfg);
        cfg.out_dir = dir_b;
        run(cfg);
        const std::string a = slurp(dir_a / files[c]);
        const std::string b = slurp(dir_b / files[c]);
        const bool same = !a.empty() && a == b;
        record_checked(r, files[c], static_cast<double>(a.size()),
                       static_cast<double>(b.size()), same ? 0.0 : -1.0, 0.0);
    }
    std::filesystem::remove_all(base);
    r.finish(0.0);
    return r;
}

// ---------------------------------------------------------------------------
// Loss certificates (criterion 14)

CheckResult loss_certificates_check(const SuiteParams& params) {
    CheckResult r;
    r.name = "loss_certificates";
    Rng rng(derive_seed(params.seed, 81000));
    const LossSpec catalogue[] = {
        LossSpec::least_squares(1.0), LossSpec::least_squares(2.5),
        LossSpec::logistic(1.0), LossSpec::huber(0.7, 1.0), LossSpec::huber(1.0, 2.0)};

    for (const LossSpec& loss : catalogue) {
        const std::string tag = loss.name();
        const double M = loss.clip_level;
        double worst_fd = 0.0, worst_convex = 0.0, worst_clip = 0.0;
        double worst_growth = 0.0, worst_smooth = 0.0;
        const GrowthParams growth = growth_params(loss);
        const double smooth = smoothness_constant(loss);

        const int cases = std::max(params.algebra_cases, 1000);
        for (int c = 0; c < cases; ++c) {
            const double y = loss.kind == LossKind::logistic_classification
                                 ? (rng.uniform() < 0.5 ? -1.0 : 1.0)
                                 : rng.uniform(-M, M);
            const double t1 = rng.uniform(-8.0, 8.0);
            const double t2 = rng.uniform(-8.0, 8.0);

            // Gradient against central differences away from huber kinks.
            const double h = 1e-5 * (1.0 + std::abs(t1));
            bool near_kink = false;
            if (loss.kind == LossKind::huber) {
                const double rdist = std::abs(std::abs(t1 - y) - loss.delta);
                near_kink = rdist < 1e-4 + h;
            }
            if (!near_kink) {
                const double fd =
                    (loss_value(loss, y, t1 + h) - loss_value(loss, y, t1 - h)) /
                    (2.0 * h);
                const double an = loss_derivative(loss, y, t1);
                const double dev = std::abs(fd - an) / (1.0 + std::abs(an));
                worst_fd = std::max(worst_fd, dev - 1e-6);
            }

            // Midpoint convexity.
            const double mid = loss_value(loss, y, 0.5 * (t1 + t2));
            const double avg =
                0.5 * (loss_value(loss, y, t1) + loss_value(loss, y, t2));
            worst_convex = std::max(worst_convex, mid - avg - 1e-12);

            // Clipping monotonicity for the clippable part of the catalogue.
            if (is_clippable(loss)) {
                const double diff = loss_value(loss, y, clip_value(t1, M)) -
                                    loss_value(loss, y, t1);
                worst_clip = std::max(worst_clip, diff - 1e-12);
            }

            // Growth envelope.
            const double envelope =
                growth.B * (1.0 + std::pow(std::abs(t1), growth.q));
            worst_growth =
                std::max(worst_growth, loss_value(loss, y, t1) - envelope);

            // Derivative difference quotients against the smoothness constant.
            if (std::abs(t1 - t2) > 1e-9) {
                const double quot =
                    std::abs(loss_derivative(loss, y, t1) -
                             loss_derivative(loss, y, t2)) /
                    std::abs(t1 - t2);
                worst_smooth =
                    std::max(worst_smooth, quot - smooth * (1.0 + 1e-9));
            }
        }
        record_checked(r, tag + " gradient_fd", worst_fd, 0.0, -worst_fd, kTolLoss);
        record_checked(r, tag + " convexity", worst_convex, 0.0, -worst_convex, kTolLoss);
        record_checked(r, tag + " clipping", worst_clip, 0.0, -worst_clip, kTolLoss);
        record_checked(r, tag + " growth", worst_growth, 0.0, -worst_growth, kTolLoss);
        record_checked(r, tag + " smoothness", worst_smooth, 0.0, -worst_smooth,
                       kTolLoss);
    }

    // Clipped risk never above the raw risk, including a large overshoot.
    SyntheticProblem prob =
        generate_regression(25, 1, "sine", 0.1, derive_seed(params.seed, 81911));
    auto data = std::make_shared<const Dataset>(std::move(prob.data));
    const double clip = data->ys.cwiseAbs().maxCoeff();
    RkhsFunction overshoot;
    overshoot.support = std::shared_ptr<const Eigen::MatrixXd>(data, &data->xs);
    overshoot.kernel = KernelSpec::linear();
    overshoot.coeffs = Eigen::VectorXd::Zero(data->n());
    // f(x) = 10 x matches sign-of-target overshoot on linear targets.
    overshoot.coeffs(0) = 10.0 / std::max(1e-6, data->xs(0, 0) * data->xs(0, 0));
    const CheckResult clip_check = check_clipping_risk(
        LossSpec::least_squares(clip), *data, overshoot, clip, 1e-12);
    record_checked(r, "clipping_risk", clip_check.worst_slack, 0.0,
                   clip_check.worst_slack, kTolLoss);

    r.finish(kTolLoss);
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------

SuiteParams SuiteParams::acceptance() {
    SuiteParams p;
    p.seed = 20250810;
    p.gd_instances = 102;
    p.n_min = 10;
    p.n_max = 500;
    p.random_comparators = 50;
    p.raw_h1_comparators = 50;
    p.mirror_steps = 200;
    p.mirror_random_u = 100;
    p.mirror_dim = 10;
    p.algebra_cases = 10000;
    p.perturbations = 1000;
    p.rerm_grid_points = 20;
    p.match_targets = 12;
    p.cv_seeds = 20;
    p.cv_n = 256;
    p.cv_test_n = 512;
    return p;
}

std::vector<CheckResult> run_check_suite(const SuiteParams& params) {
    // GD sweep, parallel over instances with slot-ordered reduction.
    std::vector<GdSweepPartial> partials(static_cast<std::size_t>(params.gd_instances));
    parallel_for(partials.size(), [&](std::size_t i) {
        partials[i] = process_gd_instance(params, static_cast<int>(i));
    });
    auto collect = [&](auto member, const std::string& name, double tol) {
        std::vector<CheckResult> parts;
        parts.reserve(partials.size());
        for (auto& p : partials) parts.push_back(p.*member);
        return merge_parts(name, tol, std::move(parts));
    };

    std::vector<CheckResult> results;
    results.push_back(collect(&GdSweepPartial::selfreg, "gd_self_regularization_c2",
                              kTolSelfReg));
    results.push_back(collect(&GdSweepPartial::m17, "gd_risk_matching_17", kTol17));
    results.push_back(collect(&GdSweepPartial::norm4, "gd_norm_bound_4", kTolNorm4));
    results.push_back(
        collect(&GdSweepPartial::fejer_matched, "gd_fejer_matched", kTolFejer));
    results.push_back(
        collect(&GdSweepPartial::fejer_general, "gd_fejer_general", kTolFejer));
    results.push_back(
        collect(&GdSweepPartial::telescoping, "gd_telescoping", kTolFejer));
    results.push_back(
        collect(&GdSweepPartial::mono, "gd_risk_monotonicity", kTolRiskMono));

    // Mirror descent across p and objectives.
    const double ps[] = {1.5, 2.0, 3.0, 4.0};
    std::vector<MirrorSuitePartial> mirror_parts;
    for (double p : ps)
        for (bool logistic : {false, true})
            mirror_parts.push_back(process_mirror_instance(params, p, logistic));
    auto collect_mirror = [&](auto member, const std::string& name, double tol) {
        std::vector<CheckResult> parts;
        for (auto& p : mirror_parts) parts.push_back(p.*member);
        return merge_parts(name, tol, std::move(parts));
    };
    results.push_back(
        collect_mirror(&MirrorSuitePartial::loss_mono, "md_loss_monotonicity",
                       kTolMdMono));
    results.push_back(collect_mirror(&MirrorSuitePartial::recursion,
                                     "md_key_recursion", kTolMdRecursion));
    results.push_back(collect_mirror(&MirrorSuitePartial::contraction,
                                     "md_level_set_contraction", kTolMdContraction));
    results.push_back(collect_mirror(&MirrorSuitePartial::p2_match,
                                     "md_p2_equals_euclidean_gd", 0.0));

    CheckResult roundtrip, three_point, bregman;
    roundtrip.name = "lp_duality_roundtrip";
    three_point.name = "lp_three_point_identity";
    bregman.name = "lp_bregman_nonneg";
    algebra_checks(params, roundtrip, three_point, bregman);
    results.push_back(std::move(roundtrip));
    results.push_back(std::move(three_point));
    results.push_back(std::move(bregman));

    results.push_back(rerm_agreement_check(params));
    results.push_back(rerm_perturbation_check(params));
    results.push_back(rerm_path_check(params));
    results.push_back(risk_matching_check(params));
    results.push_back(grid_check());
    results.push_back(reg_trafo_check());

    const CvChecks cv = cv_checks(params);
    results.push_back(cv.realizable);
    results.push_back(cv.noise);
    results.push_back(cv.oracle_gap);

    results.push_back(determinism_check(params));
    results.push_back(loss_certificates_check(params));
    return results;
}

}  // namespace selfreg
