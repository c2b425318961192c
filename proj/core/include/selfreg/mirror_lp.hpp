#ifndef SELFREG_MIRROR_LP_HPP
#define SELFREG_MIRROR_LP_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <vector>

#include "selfreg/common.hpp"

namespace selfreg {

/// Finite-dimensional weighted lp: a probability vector w over the index set
/// and an exponent p. Dual pairing is <g, f> = sum_i w_i g_i f_i, matching
/// the discrete-measure Lp/Lq pair. Exponents below 1.2 are rejected so that
/// |f|^{p-2} stays representable near 0.
struct LpSpace {
    double p;
    Eigen::VectorXd weights;

    LpSpace(double p_, Eigen::VectorXd weights_);

    double q() const { return p / (p - 1.0); }
    long dim() const { return weights.size(); }
};

using LpSpacePtr = std::shared_ptr<const LpSpace>;

struct LpPoint {
    Eigen::VectorXd values;
    LpSpacePtr space;
};

LpPoint make_lp_point(Eigen::VectorXd values, LpSpacePtr space);

double pairing(const LpSpace& space, const Eigen::VectorXd& dual,
               const Eigen::VectorXd& primal);

/// psi(f) = (1/p) sum_i w_i |f_i|^p.
double mirror_map_value(const LpPoint& f);

/// J(f) = |f|^{p-2} f entrywise, represented in the weighted pairing.
Eigen::VectorXd duality_map(const LpPoint& f);

/// Entrywise |g|^{q-2} g with q = p/(p-1); inverse of J.
LpPoint duality_map_inverse(const Eigen::VectorXd& dual, LpSpacePtr space);

/// D_psi(u, f) = psi(u) - psi(f) - <J(f), u - f>.
double bregman_divergence(const LpPoint& u, const LpPoint& f);

/// |<J(x) - J(y), z - x> - (D(z,y) - D(z,x) - D(x,y))|.
double three_point_identity_check(const LpPoint& x, const LpPoint& y, const LpPoint& z);

double lp_norm(const LpPoint& f);

/// Convex differentiable objective on an LpSpace. gradient() returns the dual
/// representation in the weighted pairing.
class LpObjective {
  public:
    virtual ~LpObjective() = default;
    virtual double value(const LpPoint& f) const = 0;
    virtual Eigen::VectorXd gradient(const LpPoint& f) const = 0;
};

/// 0.5 (f - c)^T H (f - c) with symmetric PSD H in plain coordinates.
class QuadraticLpObjective : public LpObjective {
  public:
    QuadraticLpObjective(Eigen::MatrixXd hessian, Eigen::VectorXd center,
                         LpSpacePtr space);
    double value(const LpPoint& f) const override;
    Eigen::VectorXd gradient(const LpPoint& f) const override;
    const LpPoint& minimizer() const { return minimizer_; }

  private:
    Eigen::MatrixXd hessian_;
    LpPoint minimizer_;
};

/// (1/m) sum_j log(1 + exp(-y_j (Z f)_j)) for labels y_j in {-1, +1}.
class LogisticLpObjective : public LpObjective {
  public:
    LogisticLpObjective(Eigen::MatrixXd design, Eigen::VectorXd labels,
                        LpSpacePtr space);
    double value(const LpPoint& f) const override;
    Eigen::VectorXd gradient(const LpPoint& f) const override;

  private:
    Eigen::MatrixXd design_;
    Eigen::VectorXd labels_;
    LpSpacePtr space_;
};

/// Smallest sampled L with obj(g) <= obj(f) + <grad f, g - f> + L D(g, f),
/// over random pairs from the box [lo, hi], times a safety factor 2. Returns
/// at least the floor 1e-8.
double estimate_relative_smoothness(const LpObjective& objective, const LpPoint& lo,
                                    const LpPoint& hi, int samples, Rng& rng);

/// J^{-1}(J(f) - eta * grad).
LpPoint mirror_step(const LpPoint& f, const Eigen::VectorXd& grad, double eta);

struct MirrorTrajectory {
    std::vector<LpPoint> iterates;
    std::vector<Eigen::VectorXd> dual_iterates;
    std::vector<double> losses;
    double eta = 0.0;
    double relative_smoothness = 0.0;
};

MirrorTrajectory run_mirror_descent(const LpObjective& objective, const LpPoint& f0,
                                    double eta, int steps, double relative_smoothness,
                                    bool strict_cap = true);

struct ValidatedMirrorRun {
    MirrorTrajectory trajectory;
    double relative_smoothness = 0.0;
    int attempts = 0;
};

/// Run with eta = 1/L_s, doubling L_s until the relative-smoothness
/// inequality holds at every visited step pair. Relative smoothness is
/// region-local for p != 2, so this pins the hypothesis on the realized
/// trajectory instead of trusting a sampled estimate.
ValidatedMirrorRun run_mirror_descent_validated(const LpObjective& objective,
                                                const LpPoint& f0,
                                                double initial_smoothness, int steps,
                                                double tol = 1e-12);

/// Comparator on the level set of target_value: bisection on c in
/// base + c * direction, where obj(base) < target_value. Throws numeric_error
/// if the ray never reaches the level (direction of recession).
LpPoint level_set_comparator(const LpObjective& objective, const LpPoint& base,
                             const Eigen::VectorXd& direction, double target_value,
                             double tol);

/// CSV columns: step, loss[, bregman_to_reference].
void write_mirror_csv(const MirrorTrajectory& traj, const std::filesystem::path& path,
                      const LpPoint* reference = nullptr);

}  // namespace selfreg

#endif
