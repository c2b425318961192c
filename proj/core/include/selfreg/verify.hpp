#ifndef SELFREG_VERIFY_HPP
#define SELFREG_VERIFY_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "selfreg/early_stopping.hpp"
#include "selfreg/mirror_lp.hpp"
#include "selfreg/rerm.hpp"
#include "selfreg/rkhs_gd.hpp"

namespace selfreg {

struct CheckDetail {
    std::string instance;
    double lhs;
    double rhs;
};

/// Outcome of one inequality check. Slacks are normalized so that the check
/// passes iff worst_slack >= -tolerance; worst_slack is the most negative
/// margin observed.
struct CheckResult {
    std::string name;
    bool passed = false;
    double worst_slack = 0.0;
    double tolerance = 0.0;
    long instances = 0;
    long violations = 0;
    bool inconclusive = false;  // every instance was filtered out
    std::vector<CheckDetail> details;      // worst offenders, capped
    std::vector<std::string> skipped;      // recorded skip reasons

    void record(const std::string& id, double lhs, double rhs, double slack);
    void finish(double tol);
};

/// Materialized coefficient path of a trajectory: every iterate and its
/// squared norm, so comparator sweeps cost O(n) per step instead of O(n^2).
struct TrajectoryCache {
    explicit TrajectoryCache(const GdTrajectory& traj);

    const GdTrajectory* traj;
    std::vector<Eigen::VectorXd> alphas;
    std::vector<double> norm_sq;  // alpha_k^T K alpha_k

    double distance_sq(int k, const Eigen::VectorXd& gram_beta,
                       double beta_norm_sq) const;
};

/// ||f_m|| <= 2 ||g_{lambda(m)}|| + tol (1 + ||g||) with lambda(m) found by
/// risk matching at R_D(f_m). Unmatchable times are skipped with a reason.
CheckResult check_self_regularization_gd(const GdTrajectory& traj, RermSolver& solver,
                                         const std::vector<int>& times, double tol);

/// ||f_m|| <= 4 ||g_{Psi(m)}|| + tol.
CheckResult check_norm_bound_telgarsky(const GdTrajectory& traj, RermSolver& solver,
                                       const std::vector<int>& times, double tol);

/// R_D(f_m) + Psi(m) ||f_m||^2 <= R_D(g) + 17 Psi(m) ||g||^2 with
/// g = g_{Psi(m)}; slack normalized by 1 + |rhs|.
CheckResult check_risk_matching_17(const GdTrajectory& traj, RermSolver& solver,
                                   const std::vector<int>& times, double tol);

/// Distance monotonicity ||f_{k+1} - h|| <= ||f_k - h|| for k < t0 when
/// R_D(h) <= R_D(f_{t0}), plus the raw inequality
/// ||f_{k+1}-h||^2 <= ||f_k-h||^2 + 2 eta_k (R_D(h) - R_D(f_{t0}))
/// for arbitrary h.
CheckResult check_fejer(const GdTrajectory& traj, const RkhsFunction& h, int t0,
                        double tol, const TrajectoryCache* cache = nullptr);

/// S_m (R_D(f_m) - R_D(h)) <= ||f_0 - h||^2 / 2.
CheckResult check_telescoping(const GdTrajectory& traj, const RkhsFunction& h, int m,
                              double tol, const TrajectoryCache* cache = nullptr);

/// Universal key recursion D(u, f_{t+1}) <= D(u, f_t) + eta (obj(u) - obj(f_{t+1}))
/// for every t < t0 and, when u sits on the level set of f_{t0} up to
/// level_mismatch, monotone D(u, f_t) for t <= t0.
CheckResult check_bregman_contraction(const MirrorTrajectory& traj,
                                      const LpObjective& objective, const LpPoint& u,
                                      int t0, double tol, double level_mismatch = 0.0);

/// A population least-squares problem over a fixed coefficient slice: support
/// points, a Bayes function in their span, and quadrature moments for the
/// uniform marginal on [-1, 1]^d.
struct ApproxErrorProblem {
    KernelSpec kernel;
    Eigen::MatrixXd support;
    Eigen::VectorXd fstar_coeffs;
    int grid_points_per_axis = 41;
    double box_scale = 3.0;  // box half-width = box_scale * ||f*||
    int quadrature_nodes = 64;
};

/// Grid state reused across A_p evaluations: per grid point the squared RKHS
/// norm and the excess population risk.
struct ApproxErrorGrid {
    explicit ApproxErrorGrid(const ApproxErrorProblem& problem);

    double a_hat(double p, double lambda) const;  // brute-force A_p estimate

    std::vector<double> norm_sq;
    std::vector<double> excess;
    double min_excess = 0.0;
    double fstar_norm = 0.0;
};

/// Brute-force estimates of A_p over the lambda list.
std::vector<double> brute_force_approx_error(const ApproxErrorProblem& problem,
                                             double p, const std::vector<double>& lambdas);

/// A_p(lambda^{p/r} gamma^{1-p/r}) <= 2 gamma for every tested pair with
/// gamma > A_r(lambda); pairs failing the precondition are filtered out.
CheckResult check_reg_trafo(const ApproxErrorProblem& problem, double p, double r,
                            const std::vector<double>& lambdas,
                            const std::vector<double>& gammas, double tol);

/// R_D(clip f) <= R_D(f) when every |y_i| <= M and the loss is clippable.
CheckResult check_clipping_risk(const LossSpec& loss, const Dataset& data,
                                const RkhsFunction& f, double clip_level, double tol);

// ---------------------------------------------------------------------------
// Assembled suites

struct SuiteParams {
    std::uint64_t seed = 1;
    int gd_instances = 12;
    long n_min = 10;
    long n_max = 120;
    int random_comparators = 10;
    int raw_h1_comparators = 10;
    int mirror_steps = 60;
    int mirror_random_u = 25;
    int mirror_dim = 8;
    int algebra_cases = 2000;
    int perturbations = 200;
    int rerm_grid_points = 20;
    int match_targets = 10;
    int cv_seeds = 5;
    long cv_n = 160;
    long cv_test_n = 400;

    static SuiteParams acceptance();
};

/// Every deterministic certification check at the given scale, in declaration
/// order. Each result is independent of worker count.
std::vector<CheckResult> run_check_suite(const SuiteParams& params);

/// One CSV row per check: name, instances, violations, worst_slack,
/// tolerance, passed.
void write_checks_csv(const std::vector<CheckResult>& results,
                      const std::filesystem::path& path);

}  // namespace selfreg

#endif
