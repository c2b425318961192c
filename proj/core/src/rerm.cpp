#include "selfreg/rerm.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>

#include "selfreg/common.hpp"
#include "selfreg/rkhs_gd.hpp"

namespace selfreg {

namespace {

RkhsFunction span_function(const std::shared_ptr<const Dataset>& data,
                           const KernelSpec& kernel, Eigen::VectorXd alpha) {
    RkhsFunction f;
    f.support = std::shared_ptr<const Eigen::MatrixXd>(data, &data->xs);
    f.coeffs = std::move(alpha);
    f.kernel = kernel;
    return f;
}

}  // namespace

RermSolver::RermSolver(const LossSpec& loss, std::shared_ptr<const Dataset> data,
                       const KernelSpec& kernel, double eps_target)
    : loss_(loss), data_(std::move(data)), kernel_(kernel), eps_target_(eps_target) {
    if (!data_ || data_->n() == 0) throw input_error("RermSolver: empty dataset");
    if (!(eps_target_ > 0.0)) throw input_error("eps_target must be positive");
    gram_ = gram_matrix(kernel_, data_->xs);
    risk_zero_ = empirical_risk_predictions(loss_, data_->ys,
                                            Eigen::VectorXd::Zero(data_->n()));
    // Newton runs to a machine-level gradient floor, far past the certified
    // contract, so the risk path seen by bisection has no solver hysteresis.
    grad_floor_sq_ = std::pow(1e-13 * (1.0 + risk_zero_), 2);
    if (loss_.kind == LossKind::least_squares) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_);
        if (es.info() != Eigen::Success)
            throw numeric_error("Gram eigendecomposition failed");
        LsPath p;
        p.Q = es.eigenvectors();
        p.eigs = es.eigenvalues().cwiseMax(0.0);
        p.z = p.Q.transpose() * data_->ys;
        ls_ = std::move(p);
    }
}

RermSolution RermSolver::finish(double lambda, Eigen::VectorXd alpha) const {
    RermSolution s;
    const Eigen::VectorXd u = gram_ * alpha;
    s.risk = empirical_risk_predictions(loss_, data_->ys, u);
    s.norm = std::sqrt(std::max(0.0, alpha.dot(u)));
    s.lambda = lambda;
    s.achieved_objective = s.risk + lambda * s.norm * s.norm;

    const long n = data_->n();
    Eigen::VectorXd c(n);
    for (long i = 0; i < n; ++i)
        c(i) = loss_derivative(loss_, data_->ys(i), u(i)) / n;
    c += 2.0 * lambda * alpha;
    s.optimality_gap_bound = std::max(0.0, c.dot(gram_ * c)) / (4.0 * lambda);
    s.f = span_function(data_, kernel_, std::move(alpha));
    return s;
}

RermSolution RermSolver::solve_ls(double lambda) const {
    const LsPath& p = *ls_;
    const double nl = static_cast<double>(data_->n()) * lambda;
    const Eigen::VectorXd w = p.z.array() / (p.eigs.array() + nl);
    return finish(lambda, p.Q * w);
}

std::pair<Eigen::VectorXd, double> RermSolver::newton_from(Eigen::VectorXd alpha,
                                                           double lambda) const {
    const long n = data_->n();
    auto objective = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& u) {
        return empirical_risk_predictions(loss_, data_->ys, u) + lambda * a.dot(u);
    };

    Eigen::VectorXd u = gram_ * alpha;
    double obj = objective(alpha, u);
    double grad_norm_sq = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd c(n);
        for (long i = 0; i < n; ++i)
            c(i) = loss_derivative(loss_, data_->ys(i), u(i)) / n;
        c += 2.0 * lambda * alpha;
        const Eigen::VectorXd Kc = gram_ * c;
        grad_norm_sq = std::max(0.0, c.dot(Kc));
        if (grad_norm_sq <= grad_floor_sq_) break;

        Eigen::MatrixXd A = gram_;
        for (long i = 0; i < n; ++i)
            A.row(i) *= loss_second_derivative(loss_, data_->ys(i), u(i)) / n;
        A.diagonal().array() += 2.0 * lambda;
        Eigen::VectorXd dir = A.partialPivLu().solve(-c);
        double dd = Kc.dot(dir);
        if (!dir.allFinite() || dd >= 0.0) {
            dir = -c;  // fall back to the H-metric gradient direction
            dd = -Kc.dot(c);
        }

        bool accepted = false;
        for (double step = 1.0; step > 1e-13; step *= 0.5) {
            const Eigen::VectorXd trial = alpha + step * dir;
            const Eigen::VectorXd ut = gram_ * trial;
            const double ot = objective(trial, ut);
            if (ot <= obj + 1e-4 * step * dd + 1e-15 * (1.0 + std::abs(obj))) {
                alpha = trial;
                u = ut;
                obj = ot;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;  // no measurable progress left
    }
    return {std::move(alpha), grad_norm_sq};
}

const Eigen::VectorXd& RermSolver::ladder_start(double lambda) {
    // Continuation ladder at lambda_max 2^{-j}: each rung warm-starts from
    // the one above, so every solve is a function of lambda alone and the
    // warm start is always an adjacent regularization level.
    int target = 0;
    double rung = lambda_max;
    while (rung > lambda && target < 60) {
        rung *= 0.5;
        ++target;
    }
    if (target > 0) --target;  // largest rung still >= lambda
    if (ladder_.empty())
        ladder_.push_back(
            newton_from(Eigen::VectorXd::Zero(data_->n()), lambda_max).first);
    while (static_cast<int>(ladder_.size()) <= target) {
        const double next = lambda_max * std::pow(0.5, ladder_.size());
        ladder_.push_back(newton_from(ladder_.back(), next).first);
    }
    return ladder_[static_cast<std::size_t>(target)];
}

RermSolution RermSolver::solve_smooth(double lambda) {
    Eigen::VectorXd alpha = newton_from(ladder_start(lambda), lambda).first;
    return finish(lambda, std::move(alpha));
}

RermSolution RermSolver::solve(double lambda) {
    if (!(lambda > 0.0)) throw input_error("lambda must be positive");
    if (ls_) return solve_ls(lambda);
    return solve_smooth(lambda);
}

double RermSolver::risk_at(double lambda) {
    if (!(lambda > 0.0)) throw input_error("lambda must be positive");
    if (ls_) {
        // Residual in eigencoordinates: y - K alpha = Q diag(nl/(eig+nl)) z.
        const LsPath& p = *ls_;
        const double nl = static_cast<double>(data_->n()) * lambda;
        const Eigen::VectorXd resid =
            p.Q * (p.z.array() * nl / (p.eigs.array() + nl)).matrix();
        double s = 0.0;
        for (long i = 0; i < data_->n(); ++i) {
            const double r = resid(i);
            s += r * r;
        }
        return s / data_->n();
    }
    return solve_smooth(lambda).risk;
}

double RermSolver::min_achievable_risk() {
    if (!min_risk_) min_risk_ = risk_at(lambda_min);
    return *min_risk_;
}

RermSolution solve_rerm_ls(const Dataset& data, const KernelSpec& kernel,
                           double lambda) {
    if (!(lambda > 0.0)) throw input_error("lambda must be positive");
    if (data.n() == 0) throw input_error("solve_rerm_ls: empty dataset");
    auto shared = std::make_shared<const Dataset>(data);
    const long n = shared->n();
    Eigen::MatrixXd K = gram_matrix(kernel, shared->xs);
    Eigen::MatrixXd system = K;
    add_gram_jitter(system);
    system.diagonal().array() += static_cast<double>(n) * lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    if (ldlt.info() != Eigen::Success)
        throw numeric_error("least-squares system not factorizable after jitter");
    const Eigen::VectorXd alpha = ldlt.solve(shared->ys);
    if (!alpha.allFinite())
        throw numeric_error("least-squares solve produced non-finite coefficients");

    const LossSpec loss = LossSpec::least_squares(
        std::max(1.0, shared->ys.cwiseAbs().maxCoeff()));
    RermSolution s;
    const Eigen::VectorXd u = K * alpha;
    s.risk = empirical_risk_predictions(loss, shared->ys, u);
    s.norm = std::sqrt(std::max(0.0, alpha.dot(u)));
    s.lambda = lambda;
    s.achieved_objective = s.risk + lambda * s.norm * s.norm;
    Eigen::VectorXd c = (2.0 / n) * (u - shared->ys) + 2.0 * lambda * alpha;
    s.optimality_gap_bound = std::max(0.0, c.dot(K * c)) / (4.0 * lambda);
    s.f = span_function(shared, kernel, alpha);
    return s;
}

RermSolution solve_rerm_smooth(const LossSpec& loss, const Dataset& data,
                               const KernelSpec& kernel, double lambda,
                               double eps_target) {
    RermSolver solver(loss, std::make_shared<const Dataset>(data), kernel, eps_target);
    RermSolution s = solver.solve(lambda);
    if (s.optimality_gap_bound > lambda * eps_target)
        throw convergence_error("rerm solver missed its optimality certificate",
                                s.optimality_gap_bound);
    return s;
}

std::vector<RermPathEntry> rerm_risk_path(const LossSpec& loss, const Dataset& data,
                                          const KernelSpec& kernel,
                                          const std::vector<double>& lambdas) {
    for (std::size_t i = 0; i + 1 < lambdas.size(); ++i)
        if (!(lambdas[i] < lambdas[i + 1]))
            throw input_error("lambda grid must be strictly increasing");
    RermSolver solver(loss, std::make_shared<const Dataset>(data), kernel);
    std::vector<RermPathEntry> out;
    out.reserve(lambdas.size());
    for (double l : lambdas) {
        const RermSolution s = solver.solve(l);
        out.push_back({l, s.risk, s.norm, s.achieved_objective, s.optimality_gap_bound});
    }
    return out;
}

void write_path_csv(const std::vector<RermPathEntry>& path,
                    const std::filesystem::path& file) {
    CsvWriter csv(file);
    csv.header({"lambda", "risk", "norm", "objective", "gap_bound"});
    for (const auto& e : path) {
        csv.field(e.lambda);
        csv.field(e.risk);
        csv.field(e.norm);
        csv.field(e.objective);
        csv.field(e.gap_bound);
        csv.end_row();
    }
}

std::pair<double, RermSolution> match_risk(RermSolver& solver, double target_risk,
                                           double tol) {
    if (!(tol > 0.0)) throw input_error("match tolerance must be positive");
    const double r0 = solver.risk_zero();
    if (target_risk > r0 * (1.0 + 1e-12) + 1e-300)
        throw risk_range_error("target risk above the risk of the zero function",
                               solver.min_achievable_risk(), r0);

    const double r_hi = solver.risk_at(RermSolver::lambda_max);
    if (target_risk >= r_hi) {
        RermSolution s = solver.solve(RermSolver::lambda_max);
        s.at_boundary = true;
        return {RermSolver::lambda_max, s};
    }

    const double r_lo = solver.min_achievable_risk();
    if (target_risk <= r_lo + tol) {
        if (target_risk < r_lo - tol)
            throw risk_range_error("target risk below the achievable range", r_lo, r0);
        RermSolution s = solver.solve(RermSolver::lambda_min);
        s.at_boundary = true;
        return {RermSolver::lambda_min, s};
    }

    double lo = std::log(RermSolver::lambda_min);
    double hi = std::log(RermSolver::lambda_max);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double lambda = std::exp(mid);
        const double r = solver.risk_at(lambda);
        if (std::abs(r - target_risk) <= tol) return {lambda, solver.solve(lambda)};
        if (r >= target_risk)
            hi = mid;
        else
            lo = mid;
    }
    throw convergence_error("risk matching bisection hit its iteration cap", tol);
}

std::pair<double, RermSolution> match_risk(const LossSpec& loss, const Dataset& data,
                                           const KernelSpec& kernel, double target_risk,
                                           double tol) {
    RermSolver solver(loss, std::make_shared<const Dataset>(data), kernel);
    return match_risk(solver, target_risk, tol);
}

}  // namespace selfreg
