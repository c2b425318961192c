#ifndef SELFREG_RERM_HPP
#define SELFREG_RERM_HPP

#include <filesystem>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "selfreg/kernels.hpp"
#include "selfreg/losses.hpp"

namespace selfreg {

struct RermSolution {
    RkhsFunction f;
    double lambda = 0.0;
    double risk = 0.0;                  // R_D(f)
    double norm = 0.0;                  // ||f||_H
    double achieved_objective = 0.0;    // R_D(f) + lambda ||f||^2
    double optimality_gap_bound = 0.0;  // certified objective suboptimality
    bool at_boundary = false;           // clamped to the lambda bracket
};

/// Solves g_{D,lambda} = argmin R_D(f) + lambda ||f||^2 over the span of the
/// data points. Least squares uses the eigendecomposition of the Gram matrix
/// (one O(n^3) factorization, O(n) per lambda); other smooth losses use damped
/// Newton with warm starts. The certificate is the function-space bound
/// ||grad obj||_H^2 / (4 lambda) from 2*lambda strong convexity.
class RermSolver {
  public:
    static constexpr double lambda_min = 1e-8;
    static constexpr double lambda_max = 1e8;

    RermSolver(const LossSpec& loss, std::shared_ptr<const Dataset> data,
               const KernelSpec& kernel, double eps_target = 1e-6);

    RermSolution solve(double lambda);

    /// R_D(g_lambda) only; O(n) for least squares.
    double risk_at(double lambda);

    double risk_zero() const { return risk_zero_; }

    /// Risk at lambda_min; the empirical stand-in for the best achievable
    /// risk. Cached after the first call.
    double min_achievable_risk();

    const Dataset& data() const { return *data_; }
    const Eigen::MatrixXd& gram() const { return gram_; }
    const LossSpec& loss() const { return loss_; }
    double eps_target() const { return eps_target_; }

  private:
    struct LsPath {
        Eigen::MatrixXd Q;
        Eigen::VectorXd eigs;  // clamped to >= 0
        Eigen::VectorXd z;     // Q^T y
    };

    RermSolution solve_ls(double lambda) const;
    RermSolution solve_smooth(double lambda);
    RermSolution finish(double lambda, Eigen::VectorXd alpha) const;
    std::pair<Eigen::VectorXd, double> newton_from(Eigen::VectorXd alpha,
                                                   double lambda) const;
    const Eigen::VectorXd& ladder_start(double lambda);

    LossSpec loss_;
    std::shared_ptr<const Dataset> data_;
    KernelSpec kernel_;
    double eps_target_;
    Eigen::MatrixXd gram_;
    double risk_zero_ = 0.0;
    double grad_floor_sq_ = 0.0;
    std::optional<LsPath> ls_;
    std::vector<Eigen::VectorXd> ladder_;  // solutions at lambda_max 2^{-j}
    std::optional<double> min_risk_;
};

/// Closed-form least-squares solution of (K + n lambda I) alpha = y on the
/// jittered Gram matrix.
RermSolution solve_rerm_ls(const Dataset& data, const KernelSpec& kernel,
                           double lambda);

/// eps-approximate minimizer for a smooth loss; throws convergence_error with
/// the best gap bound if the certificate lambda * eps_target is not reached.
RermSolution solve_rerm_smooth(const LossSpec& loss, const Dataset& data,
                               const KernelSpec& kernel, double lambda,
                               double eps_target = 1e-6);

struct RermPathEntry {
    double lambda;
    double risk;
    double norm;
    double objective;
    double gap_bound;
};

std::vector<RermPathEntry> rerm_risk_path(const LossSpec& loss, const Dataset& data,
                                          const KernelSpec& kernel,
                                          const std::vector<double>& lambdas);

void write_path_csv(const std::vector<RermPathEntry>& path,
                    const std::filesystem::path& file);

/// Solve R_D(g_lambda) = target_risk for lambda by bisection in log lambda,
/// using the monotonicity of the risk path. Targets at the achievable floor
/// return the lambda_min solution flagged at_boundary; targets at or above
/// the risk of the zero function return the lambda_max solution flagged
/// at_boundary. Targets outside [floor - tol, R_D(0)] raise risk_range_error.
std::pair<double, RermSolution> match_risk(RermSolver& solver, double target_risk,
                                           double tol);

std::pair<double, RermSolution> match_risk(const LossSpec& loss, const Dataset& data,
                                           const KernelSpec& kernel, double target_risk,
                                           double tol);

}  // namespace selfreg

#endif
