#include "selfreg/mirror_lp.hpp"

#include <Eigen/LU>
#include <cmath>

namespace selfreg {

namespace {

void check_same_space(const LpPoint& a, const LpPoint& b) {
    if (a.space == b.space) return;
    if (a.space && b.space && a.space->p == b.space->p &&
        a.space->weights == b.space->weights)
        return;
    throw input_error("lp points live in different spaces");
}

// sign(v) |v|^e, with the continuous extension 0 at v = 0.
Eigen::VectorXd signed_power(const Eigen::VectorXd& v, double e) {
    Eigen::VectorXd out(v.size());
    for (long i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        out(i) = a == 0.0 ? 0.0 : std::copysign(std::pow(a, e), v(i));
    }
    return out;
}

}  // namespace

LpSpace::LpSpace(double p_, Eigen::VectorXd weights_)
    : p(p_), weights(std::move(weights_)) {
    if (!(p >= 1.2) || !std::isfinite(p))
        throw input_error("lp exponent must lie in [1.2, infinity)");
    if (weights.size() == 0) throw input_error("lp space needs a nonempty index set");
    if ((weights.array() <= 0.0).any())
        throw input_error("lp weights must be strictly positive");
    if (std::abs(weights.sum() - 1.0) > 1e-12)
        throw input_error("lp weights must sum to 1");
}

LpPoint make_lp_point(Eigen::VectorXd values, LpSpacePtr space) {
    if (!space) throw input_error("null lp space");
    if (values.size() != space->dim()) throw input_error("lp point has wrong dimension");
    if (!values.allFinite()) throw input_error("lp point has non-finite entries");
    return LpPoint{std::move(values), std::move(space)};
}

double pairing(const LpSpace& space, const Eigen::VectorXd& dual,
               const Eigen::VectorXd& primal) {
    return (space.weights.array() * dual.array() * primal.array()).sum();
}

double mirror_map_value(const LpPoint& f) {
    const LpSpace& s = *f.space;
    return (s.weights.array() * f.values.array().abs().pow(s.p)).sum() / s.p;
}

Eigen::VectorXd duality_map(const LpPoint& f) {
    return signed_power(f.values, f.space->p - 1.0);
}

LpPoint duality_map_inverse(const Eigen::VectorXd& dual, LpSpacePtr space) {
    if (!space) throw input_error("null lp space");
    const double e = space->q() - 1.0;
    return make_lp_point(signed_power(dual, e), std::move(space));
}

double bregman_divergence(const LpPoint& u, const LpPoint& f) {
    check_same_space(u, f);
    const Eigen::VectorXd j = duality_map(f);
    return mirror_map_value(u) - mirror_map_value(f) -
           pairing(*f.space, j, u.values - f.values);
}

double three_point_identity_check(const LpPoint& x, const LpPoint& y,
                                  const LpPoint& z) {
    check_same_space(x, y);
    check_same_space(x, z);
    const double lhs = pairing(*x.space, duality_map(x) - duality_map(y),
                               z.values - x.values);
    const double rhs = bregman_divergence(z, y) - bregman_divergence(z, x) -
                       bregman_divergence(x, y);
    return std::abs(lhs - rhs);
}

double lp_norm(const LpPoint& f) {
    const LpSpace& s = *f.space;
    return std::pow((s.weights.array() * f.values.array().abs().pow(s.p)).sum(),
                    1.0 / s.p);
}

QuadraticLpObjective::QuadraticLpObjective(Eigen::MatrixXd hessian,
                                           Eigen::VectorXd center, LpSpacePtr space)
    : hessian_(std::move(hessian)),
      minimizer_(make_lp_point(std::move(center), std::move(space))) {
    if (hessian_.rows() != minimizer_.space->dim() ||
        hessian_.cols() != minimizer_.space->dim())
        throw input_error("quadratic hessian has wrong shape");
}

double QuadraticLpObjective::value(const LpPoint& f) const {
    check_same_space(f, minimizer_);
    const Eigen::VectorXd d = f.values - minimizer_.values;
    return 0.5 * d.dot(hessian_ * d);
}

Eigen::VectorXd QuadraticLpObjective::gradient(const LpPoint& f) const {
    check_same_space(f, minimizer_);
    const Eigen::VectorXd g = hessian_ * (f.values - minimizer_.values);
    return g.array() / f.space->weights.array();
}

LogisticLpObjective::LogisticLpObjective(Eigen::MatrixXd design,
                                         Eigen::VectorXd labels, LpSpacePtr space)
    : design_(std::move(design)), labels_(std::move(labels)), space_(std::move(space)) {
    if (!space_) throw input_error("null lp space");
    if (design_.cols() != space_->dim()) throw input_error("design has wrong width");
    if (design_.rows() != labels_.size()) throw input_error("label count mismatch");
}

double LogisticLpObjective::value(const LpPoint& f) const {
    const Eigen::VectorXd m = design_ * f.values;
    double s = 0.0;
    for (long j = 0; j < m.size(); ++j) {
        const double z = -labels_(j) * m(j);
        s += z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
    return s / design_.rows();
}

Eigen::VectorXd LogisticLpObjective::gradient(const LpPoint& f) const {
    const Eigen::VectorXd m = design_ * f.values;
    Eigen::VectorXd coeff(m.size());
    for (long j = 0; j < m.size(); ++j) {
        const double z = -labels_(j) * m(j);
        const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                    : std::exp(z) / (1.0 + std::exp(z));
        coeff(j) = -labels_(j) * sig / design_.rows();
    }
    const Eigen::VectorXd g = design_.transpose() * coeff;
    return g.array() / space_->weights.array();
}

double estimate_relative_smoothness(const LpObjective& objective, const LpPoint& lo,
                                    const LpPoint& hi, int samples, Rng& rng) {
    check_same_space(lo, hi);
    if (samples < 1) throw input_error("need at least one sample pair");
    const long d = lo.space->dim();
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd a(d), b(d);
        for (long i = 0; i < d; ++i) {
            a(i) = rng.uniform(lo.values(i), hi.values(i));
            b(i) = rng.uniform(lo.values(i), hi.values(i));
        }
        const LpPoint f = make_lp_point(std::move(a), lo.space);
        const LpPoint g = make_lp_point(std::move(b), lo.space);
        const double div = bregman_divergence(g, f);
        if (div <= 0.0) continue;
        const double gap = objective.value(g) - objective.value(f) -
                           pairing(*lo.space, objective.gradient(f),
                                   g.values - f.values);
        worst = std::max(worst, gap / div);
    }
    return std::max(2.0 * worst, 1e-8);
}

LpPoint mirror_step(const LpPoint& f, const Eigen::VectorXd& grad, double eta) {
    if (!(eta > 0.0)) throw input_error("step size must be positive");
    if (grad.size() != f.values.size()) throw input_error("gradient length mismatch");
    if (!grad.allFinite()) throw numeric_error("gradient contains non-finite values");
    return duality_map_inverse(duality_map(f) - eta * grad, f.space);
}

MirrorTrajectory run_mirror_descent(const LpObjective& objective, const LpPoint& f0,
                                    double eta, int steps, double relative_smoothness,
                                    bool strict_cap) {
    if (steps < 0) throw input_error("steps must be >= 0");
    if (strict_cap && eta > 1.0 / relative_smoothness * (1.0 + 1e-12))
        throw config_error("mirror step size exceeds 1/L_s in strict mode");
    MirrorTrajectory traj;
    traj.eta = eta;
    traj.relative_smoothness = relative_smoothness;
    traj.iterates.push_back(f0);
    traj.dual_iterates.push_back(duality_map(f0));
    traj.losses.push_back(objective.value(f0));
    for (int t = 0; t < steps; ++t) {
        const LpPoint& cur = traj.iterates.back();
        LpPoint next = mirror_step(cur, objective.gradient(cur), eta);
        traj.dual_iterates.push_back(duality_map(next));
        traj.losses.push_back(objective.value(next));
        traj.iterates.push_back(std::move(next));
    }
    return traj;
}

ValidatedMirrorRun run_mirror_descent_validated(const LpObjective& objective,
                                                const LpPoint& f0,
                                                double initial_smoothness, int steps,
                                                double tol) {
    double l_s = std::max(initial_smoothness, 1e-8);
    for (int attempt = 1; attempt <= 16; ++attempt) {
        MirrorTrajectory traj =
            run_mirror_descent(objective, f0, 1.0 / l_s, steps, l_s);
        bool ok = true;
        for (std::size_t t = 0; t + 1 < traj.iterates.size() && ok; ++t) {
            const LpPoint& f = traj.iterates[t];
            const LpPoint& g = traj.iterates[t + 1];
            const double gap =
                traj.losses[t + 1] - traj.losses[t] -
                pairing(*f.space, objective.gradient(f), g.values - f.values);
            if (gap > l_s * bregman_divergence(g, f) +
                          tol * (1.0 + std::abs(traj.losses[t])))
                ok = false;
        }
        if (ok) return {std::move(traj), l_s, attempt};
        l_s *= 2.0;
    }
    throw numeric_error(
        "relative smoothness could not be validated along the trajectory");
}

LpPoint level_set_comparator(const LpObjective& objective, const LpPoint& base,
                             const Eigen::VectorXd& direction, double target_value,
                             double tol) {
    if (!(tol > 0.0)) throw input_error("tolerance must be positive");
    const double at_base = objective.value(base);
    if (at_base > target_value)
        throw input_error("level-set comparator needs obj(base) <= target");
    auto at = [&](double c) {
        return objective.value(
            make_lp_point(base.values + c * direction, base.space));
    };
    double hi = 1.0;
    int doublings = 0;
    while (at(hi) < target_value) {
        hi *= 2.0;
        if (++doublings > 60)
            throw numeric_error("ray never reaches the requested level");
    }
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double v = at(mid);
        if (std::abs(v - target_value) <= tol)
            return make_lp_point(base.values + mid * direction, base.space);
        if (v > target_value)
            hi = mid;
        else
            lo = mid;
    }
    return make_lp_point(base.values + 0.5 * (lo + hi) * direction, base.space);
}

void write_mirror_csv(const MirrorTrajectory& traj, const std::filesystem::path& path,
                      const LpPoint* reference) {
    CsvWriter csv(path);
    if (reference)
        csv.header({"step", "loss", "bregman_to_reference"});
    else
        csv.header({"step", "loss"});
    for (std::size_t t = 0; t < traj.iterates.size(); ++t) {
        csv.field(static_cast<long>(t));
        csv.field(traj.losses[t]);
        if (reference) csv.field(bregman_divergence(*reference, traj.iterates[t]));
        csv.end_row();
    }
}

}  // namespace selfreg
