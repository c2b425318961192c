#ifndef SELFREG_RKHS_GD_HPP
#define SELFREG_RKHS_GD_HPP

#include <filesystem>
#include <map>
#include <memory>
#include <vector>

#include "selfreg/kernels.hpp"
#include "selfreg/losses.hpp"

namespace selfreg {

/// Smoothness constant of the empirical risk: M * kappa^2. With data_local
/// the kappa^2 is max_i k(x_i, x_i); otherwise the embedding bound over the
/// data's bounding ball is used.
double risk_smoothness(const LossSpec& loss, const KernelSpec& kernel,
                       const Dataset& data, bool data_local = true);

struct GdConfig {
    std::vector<double> step_sizes;  // one per step, all positive
    int max_steps = 0;
    std::vector<int> record_times;   // sorted subset of [0, max_steps]
    bool strict_cap = true;          // step sizes above 1/M' fail instead of warn

    static GdConfig constant(double eta, int max_steps,
                             std::vector<int> record_times = {});

    double step(int k) const { return step_sizes.at(static_cast<std::size_t>(k)); }
};

struct GdTrajectory {
    GdConfig config;
    std::map<int, Eigen::VectorXd> snapshots;  // recorded coefficient vectors
    std::vector<double> risks;                 // risks[k] = R_D(f_k), k = 0..max_steps
    std::vector<double> cum_steps;             // cum_steps[m] = sum_{k<m} eta_k
    bool cap_violated = false;

    std::shared_ptr<const Dataset> dataset;
    std::shared_ptr<const Eigen::MatrixXd> gram;
    KernelSpec kernel;
    LossSpec loss;

    /// Coefficients at step m, replayed from the nearest recorded snapshot if
    /// m itself was not recorded.
    Eigen::VectorXd coeffs_at(int m) const;

    RkhsFunction function_at(int m) const;
};

double empirical_risk(const LossSpec& loss, const Dataset& data, const RkhsFunction& f);

/// Same on precomputed predictions u_i = f(x_i).
double empirical_risk_predictions(const LossSpec& loss, const Eigen::VectorXd& ys,
                                  const Eigen::VectorXd& preds);

/// Coefficients of the risk gradient (1/n) sum_i L'(y_i, f(x_i)) k(x_i, .).
/// Requires f.support to be the dataset points in dataset order.
Eigen::VectorXd risk_gradient_coeffs(const LossSpec& loss, const Dataset& data,
                                     const RkhsFunction& f);

RkhsFunction gd_step(const RkhsFunction& f, const Eigen::VectorXd& grad_coeffs,
                     double eta);

GdTrajectory run_gd(const LossSpec& loss, std::shared_ptr<const Dataset> data,
                    const KernelSpec& kernel, const GdConfig& config);

/// Time-continuous interpolation: a shortened gradient step of size
/// (t - floor(t)) * eta_floor(t) from the floor(t) iterate.
RkhsFunction interpolate(const GdTrajectory& traj, double t);

/// S_m = sum_{k<m} eta_k for m >= 1.
double cumulative_step_sum(const GdTrajectory& traj, int m);

/// CSV columns: step, eta, cum_step, risk (eta of the final row is 0).
void write_trajectory_csv(const GdTrajectory& traj, const std::filesystem::path& path);

/// Snapshot file: one ASCII header line "n count idx0 idx1 ..." followed by
/// count blocks of n little-endian doubles in index order.
void write_snapshots(const GdTrajectory& traj, const std::filesystem::path& path);
std::map<int, Eigen::VectorXd> read_snapshots(const std::filesystem::path& path);

}  // namespace selfreg

#endif
