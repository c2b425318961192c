#include "selfreg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selfreg/common.hpp"
#include "selfreg/experiments.hpp"

namespace selfreg {

// ---------------------------------------------------------------------------
// CheckResult plumbing

void CheckResult::record(const std::string& id, double lhs_v, double rhs_v,
                         double slack) {
    ++instances;
    if (slack < worst_slack || details.empty()) {
        if (details.size() >= 5) details.pop_back();
        details.insert(details.begin(), {id, lhs_v, rhs_v});
    }
    worst_slack = instances == 1 ? slack : std::min(worst_slack, slack);
}

void CheckResult::finish(double tol) {
    tolerance = tol;
    if (instances == 0) {
        inconclusive = skipped.empty() ? inconclusive : true;
        passed = false;
        return;
    }
    passed = worst_slack >= -tol && !inconclusive;
}

namespace {

void count_violation(CheckResult& r, double slack, double tol) {
    if (slack < -tol) ++r.violations;
}

}  // namespace

// ---------------------------------------------------------------------------
// Trajectory cache

TrajectoryCache::TrajectoryCache(const GdTrajectory& t) : traj(&t) {
    const Eigen::MatrixXd& K = *t.gram;
    const long n = t.dataset->n();
    const int steps = t.config.max_steps;
    alphas.reserve(static_cast<std::size_t>(steps) + 1);
    norm_sq.reserve(static_cast<std::size_t>(steps) + 1);

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    auto base = t.snapshots.find(0);
    if (base != t.snapshots.end()) alpha = base->second;
    for (int k = 0; k <= steps; ++k) {
        const Eigen::VectorXd preds = K * alpha;
        alphas.push_back(alpha);
        norm_sq.push_back(std::max(0.0, alpha.dot(preds)));
        if (k == steps) break;
        Eigen::VectorXd g(n);
        for (long i = 0; i < n; ++i)
            g(i) = loss_derivative(t.loss, t.dataset->ys(i), preds(i)) / n;
        alpha -= t.config.step(k) * g;
    }
}

double TrajectoryCache::distance_sq(int k, const Eigen::VectorXd& gram_beta,
                                    double beta_norm_sq) const {
    const double d = norm_sq[static_cast<std::size_t>(k)] -
                     2.0 * alphas[static_cast<std::size_t>(k)].dot(gram_beta) +
                     beta_norm_sq;
    return std::max(0.0, d);
}

// ---------------------------------------------------------------------------
// GD inequality checks

CheckResult check_self_regularization_gd(const GdTrajectory& traj, RermSolver& solver,
                                         const std::vector<int>& times, double tol) {
    CheckResult r;
    r.name = "gd_self_regularization_c2";
    const double match_tol = 1e-9 * std::max(solver.risk_zero(), 1e-12);
    for (int m : times) {
        const double target = traj.risks.at(static_cast<std::size_t>(m));
        try {
            auto [lambda, g] = match_risk(solver, target, match_tol);
            if (g.at_boundary && m > 0) {
                r.skipped.push_back("t=" + std::to_string(m) +
                                    ": risk level at the matching boundary");
                continue;
            }
            const double fm_norm = rkhs_norm(traj.function_at(m), *traj.gram);
            const double slack = (2.0 * g.norm - fm_norm) / (1.0 + g.norm);
            r.record("t=" + std::to_string(m), fm_norm, 2.0 * g.norm, slack);
            count_violation(r, slack, tol);
        } catch (const risk_range_error& e) {
            r.skipped.push_back("t=" + std::to_string(m) + ": " + e.what());
        }
    }
    r.finish(tol);
    return r;
}

CheckResult check_norm_bound_telgarsky(const GdTrajectory& traj, RermSolver& solver,
                                       const std::vector<int>& times, double tol) {
    CheckResult r;
    r.name = "gd_norm_bound_4";
    for (int m : times) {
        if (m < 1) continue;
        const double lambda = risk_matching_psi(traj, m);
        const RermSolution g = solver.solve(lambda);
        const double fm_norm = rkhs_norm(traj.function_at(m), *traj.gram);
        const double slack = 4.0 * g.norm - fm_norm;
        r.record("t=" + std::to_string(m), fm_norm, 4.0 * g.norm, slack);
        count_violation(r, slack, tol);
    }
    r.finish(tol);
    return r;
}

CheckResult check_risk_matching_17(const GdTrajectory& traj, RermSolver& solver,
                                   const std::vector<int>& times, double tol) {
    CheckResult r;
    r.name = "gd_risk_matching_17";
    for (int m : times) {
        if (m < 1) continue;
        const double lambda = risk_matching_psi(traj, m);
        const RermSolution g = solver.solve(lambda);
        const RkhsFunction fm = traj.function_at(m);
        const double fm_norm = rkhs_norm(fm, *traj.gram);
        const double lhs = traj.risks.at(static_cast<std::size_t>(m)) +
                           lambda * fm_norm * fm_norm;
        const double rhs = g.risk + 17.0 * lambda * g.norm * g.norm;
        const double slack = (rhs - lhs) / (1.0 + std::abs(rhs));
        r.record("t=" + std::to_string(m), lhs, rhs, slack);
        count_violation(r, slack, tol);
    }
    r.finish(tol);
    return r;
}

CheckResult check_fejer(const GdTrajectory& traj, const RkhsFunction& h, int t0,
                        double tol, const TrajectoryCache* cache) {
    std::optional<TrajectoryCache> own;
    if (!cache) {
        own.emplace(traj);
        cache = &*own;
    }
    CheckResult r;
    r.name = "gd_fejer";
    const Eigen::VectorXd gram_beta = (*traj.gram) * h.coeffs;
    const double beta_norm_sq = std::max(0.0, h.coeffs.dot(gram_beta));
    const double risk_h =
        empirical_risk_predictions(traj.loss, traj.dataset->ys, gram_beta);
    const double risk_t0 = traj.risks.at(static_cast<std::size_t>(t0));
    // Monotonicity tolerates the level mismatch through the h1 correction
    // 2 eta_k (R(h) - R(f_{t0}))^+ per step.
    const double excess = std::max(0.0, risk_h - risk_t0);

    double prev = cache->distance_sq(0, gram_beta, beta_norm_sq);
    for (int k = 0; k < t0; ++k) {
        const double next = cache->distance_sq(k + 1, gram_beta, beta_norm_sq);
        const double eta = traj.config.step(k);

        const double raw_rhs = prev + 2.0 * eta * (risk_h - risk_t0);
        const double raw_slack = (raw_rhs - next) / (1.0 + std::abs(raw_rhs));
        r.record("h1 k=" + std::to_string(k), next, raw_rhs, raw_slack);
        count_violation(r, raw_slack, tol);

        const double mono_rhs = prev + 2.0 * eta * excess;
        const double mono_slack = (mono_rhs - next) / (1.0 + prev);
        r.record("mono k=" + std::to_string(k), next, mono_rhs, mono_slack);
        count_violation(r, mono_slack, tol);
        prev = next;
    }
    r.finish(tol);
    return r;
}

CheckResult check_telescoping(const GdTrajectory& traj, const RkhsFunction& h, int m,
                              double tol, const TrajectoryCache* cache) {
    std::optional<TrajectoryCache> own;
    if (!cache) {
        own.emplace(traj);
        cache = &*own;
    }
    CheckResult r;
    r.name = "gd_telescoping";
    const Eigen::VectorXd gram_beta = (*traj.gram) * h.coeffs;
    const double beta_norm_sq = std::max(0.0, h.coeffs.dot(gram_beta));
    const double risk_h =
        empirical_risk_predictions(traj.loss, traj.dataset->ys, gram_beta);
    const double s_m = cumulative_step_sum(traj, m);
    const double lhs = s_m * (traj.risks.at(static_cast<std::size_t>(m)) - risk_h);
    const double rhs = 0.5 * cache->distance_sq(0, gram_beta, beta_norm_sq);
    const double slack = (rhs - lhs) / (1.0 + std::abs(rhs));
    r.record("m=" + std::to_string(m), lhs, rhs, slack);
    count_violation(r, slack, tol);
    r.finish(tol);
    return r;
}

// ---------------------------------------------------------------------------
// Mirror descent checks

CheckResult check_bregman_contraction(const MirrorTrajectory& traj,
                                      const LpObjective& objective, const LpPoint& u,
                                      int t0, double tol, double level_mismatch) {
    if (t0 < 0 || t0 >= static_cast<int>(traj.iterates.size()))
        throw input_error("t0 outside the recorded trajectory");
    CheckResult r;
    r.name = "md_bregman_contraction";
    const double obj_u = objective.value(u);
    const double eta = traj.eta;

    std::vector<double> divs(static_cast<std::size_t>(t0) + 1);
    for (int t = 0; t <= t0; ++t)
        divs[static_cast<std::size_t>(t)] = bregman_divergence(u, traj.iterates[t]);

    for (int t = 0; t < t0; ++t) {
        const double d_t = divs[static_cast<std::size_t>(t)];
        const double d_next = divs[static_cast<std::size_t>(t) + 1];

        const double rec_rhs = d_t + eta * (obj_u - traj.losses[t + 1]);
        const double rec_slack =
            (rec_rhs - d_next) / (1.0 + d_t + std::abs(eta * (obj_u - traj.losses[t + 1])));
        r.record("rec t=" + std::to_string(t), d_next, rec_rhs, rec_slack);
        count_violation(r, rec_slack, tol);

        const double mono_rhs = d_t + eta * std::max(0.0, level_mismatch);
        const double mono_slack = (mono_rhs - d_next) / (1.0 + d_t);
        r.record("mono t=" + std::to_string(t), d_next, mono_rhs, mono_slack);
        count_violation(r, mono_slack, tol);
    }
    r.finish(tol);
    return r;
}

// ---------------------------------------------------------------------------
// Approximation error brute force

namespace {

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, Eigen::VectorXd& x, Eigen::VectorXd& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x(i) = -z;
        x(n - 1 - i) = z;
        w(i) = 2.0 / ((1.0 - z * z) * dp * dp);
        w(n - 1 - i) = w(i);
    }
}

}  // namespace

ApproxErrorGrid::ApproxErrorGrid(const ApproxErrorProblem& problem) {
    if (problem.support.cols() != 1)
        throw input_error("approximation-error brute force is one-dimensional");
    const int k = static_cast<int>(problem.support.rows());
    if (k < 1 || k > 3) throw input_error("coefficient slice supports 1 to 3 points");
    if (problem.grid_points_per_axis < 2) throw input_error("empty coefficient grid");

    const Eigen::MatrixXd K = gram_matrix(problem.kernel, problem.support);
    fstar_norm = std::sqrt(std::max(
        0.0, problem.fstar_coeffs.dot(K * problem.fstar_coeffs)));

    // Second-moment matrix G_jl = E[k(s_j, X) k(s_l, X)] under uniform X.
    Eigen::VectorXd qx, qw;
    gauss_legendre(problem.quadrature_nodes, qx, qw);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k, k);
    for (int q = 0; q < problem.quadrature_nodes; ++q) {
        Eigen::VectorXd kx(k);
        Eigen::VectorXd point(1);
        point(0) = qx(q);
        for (int j = 0; j < k; ++j)
            kx(j) = eval_kernel(problem.kernel, problem.support.row(j), point);
        G += 0.5 * qw(q) * kx * kx.transpose();
    }

    const int gp = problem.grid_points_per_axis;
    const double half = problem.box_scale * std::max(fstar_norm, 1e-12);
    std::vector<double> axis(static_cast<std::size_t>(gp));
    for (int i = 0; i < gp; ++i)
        axis[static_cast<std::size_t>(i)] = -half + 2.0 * half * i / (gp - 1);

    long total = 1;
    for (int a = 0; a < k; ++a) total *= gp;
    norm_sq.resize(static_cast<std::size_t>(total));
    excess.resize(static_cast<std::size_t>(total));

    Eigen::VectorXd alpha(k);
    for (long idx = 0; idx < total; ++idx) {
        long rest = idx;
        for (int a = 0; a < k; ++a) {
            alpha(a) = axis[static_cast<std::size_t>(rest % gp)];
            rest /= gp;
        }
        const Eigen::VectorXd diff = alpha - problem.fstar_coeffs;
        norm_sq[static_cast<std::size_t>(idx)] = std::max(0.0, alpha.dot(K * alpha));
        excess[static_cast<std::size_t>(idx)] = std::max(0.0, diff.dot(G * diff));
    }
    min_excess = *std::min_element(excess.begin(), excess.end());
}

double ApproxErrorGrid::a_hat(double p, double lambda) const {
    if (lambda < 0.0) throw input_error("lambda must be nonnegative");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < norm_sq.size(); ++i) {
        const double v = lambda * std::pow(norm_sq[i], 0.5 * p) + excess[i];
        best = std::min(best, v);
    }
    return best - min_excess;
}

std::vector<double> brute_force_approx_error(const ApproxErrorProblem& problem,
                                             double p,
                                             const std::vector<double>& lambdas) {
    if (lambdas.empty()) throw input_error("empty lambda grid");
    ApproxErrorGrid grid(problem);
    std::vector<double> out;
    out.reserve(lambdas.size());
    for (double l : lambdas) out.push_back(grid.a_hat(p, l));
    return out;
}

CheckResult check_reg_trafo(const ApproxErrorProblem& problem, double p, double r,
                            const std::vector<double>& lambdas,
                            const std::vector<double>& gammas, double tol) {
    ApproxErrorGrid grid(problem);
    CheckResult result;
    result.name = "reg_trafo";
    for (double lambda : lambdas) {
        const double ar = grid.a_hat(r, lambda);
        for (double gamma : gammas) {
            if (!(gamma > ar)) continue;  // precondition gamma > A_r(lambda)
            const double kappa = std::pow(lambda, p / r) * std::pow(gamma, 1.0 - p / r);
            const double ap = grid.a_hat(p, kappa);
            const double rhs = 2.0 * gamma;
            const double slack = (rhs - ap) / (1.0 + rhs);
            result.record("lambda=" + format_double(lambda) +
                              " gamma=" + format_double(gamma),
                          ap, rhs, slack);
            count_violation(result, slack, tol);
        }
    }
    if (result.instances == 0) result.inconclusive = true;
    result.finish(tol);
    return result;
}

CheckResult check_clipping_risk(const LossSpec& loss, const Dataset& data,
                                const RkhsFunction& f, double clip_level, double tol) {
    CheckResult r;
    r.name = "clipping_risk";
    if (!is_clippable(loss)) {
        r.skipped.push_back("loss " + loss.name() + " is not clippable");
        r.inconclusive = true;
        r.finish(tol);
        return r;
    }
    const Eigen::VectorXd preds = rkhs_eval_batch(f, data.xs);
    Eigen::VectorXd clipped = preds;
    for (long i = 0; i < clipped.size(); ++i)
        clipped(i) = clip_value(clipped(i), clip_level);
    const double risk_raw = empirical_risk_predictions(loss, data.ys, preds);
    const double risk_clip = empirical_risk_predictions(loss, data.ys, clipped);
    const double slack = (risk_raw - risk_clip) / (1.0 + risk_raw);
    r.record("clip", risk_clip, risk_raw, slack);
    count_violation(r, slack, tol);
    r.finish(tol);
    return r;
}

void write_checks_csv(const std::vector<CheckResult>& results,
                      const std::filesystem::path& path) {
    CsvWriter csv(path);
    csv.header({"name", "instances", "violations", "worst_slack", "tolerance",
                "passed"});
    for (const auto& r : results) {
        csv.field(r.name);
        csv.field(r.instances);
        csv.field(r.violations);
        csv.field(r.worst_slack);
        csv.field(r.tolerance);
        csv.field(static_cast<long>(r.passed ? 1 : 0));
        csv.end_row();
    }
}

}  // namespace selfreg
