#include "selfreg/rkhs_gd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "selfreg/common.hpp"

namespace selfreg {

namespace {

void check_support_matches(const Dataset& data, const RkhsFunction& f) {
    const bool same_object = f.support.get() == &data.xs;
    if (!same_object && (f.support->rows() != data.xs.rows() || *f.support != data.xs))
        throw std::logic_error("function support does not match the dataset points");
}

Eigen::VectorXd gradient_from_predictions(const LossSpec& loss, const Eigen::VectorXd& ys,
                                          const Eigen::VectorXd& preds) {
    const long n = ys.size();
    Eigen::VectorXd g(n);
    for (long i = 0; i < n; ++i) g(i) = loss_derivative(loss, ys(i), preds(i)) / n;
    return g;
}

}  // namespace

double risk_smoothness(const LossSpec& loss, const KernelSpec& kernel,
                       const Dataset& data, bool data_local) {
    double kappa_sq;
    if (data_local) {
        kappa_sq = data_local_kappa_sq(kernel, data.xs);
    } else {
        const double R = data.xs.rows() ? data.xs.rowwise().norm().maxCoeff() : 0.0;
        const double kappa = sup_embedding_bound(kernel, R);
        kappa_sq = kappa * kappa;
    }
    return smoothness_constant(loss) * kappa_sq;
}

GdConfig GdConfig::constant(double eta, int max_steps, std::vector<int> record_times) {
    if (!(eta > 0.0)) throw config_error("step size must be positive");
    if (max_steps < 0) throw config_error("max_steps must be >= 0");
    GdConfig c;
    c.step_sizes.assign(static_cast<std::size_t>(max_steps), eta);
    c.max_steps = max_steps;
    c.record_times = std::move(record_times);
    return c;
}

Eigen::VectorXd GdTrajectory::coeffs_at(int m) const {
    if (m < 0 || m > config.max_steps)
        throw input_error("step index out of range");
    auto it = snapshots.find(m);
    if (it != snapshots.end()) return it->second;

    // Replay from the last recorded snapshot before m.
    auto base = snapshots.upper_bound(m);
    if (base == snapshots.begin())
        throw std::logic_error("trajectory has no snapshot at or before requested step");
    --base;
    Eigen::VectorXd alpha = base->second;
    const Eigen::MatrixXd& K = *gram;
    for (int k = base->first; k < m; ++k) {
        const Eigen::VectorXd preds = K * alpha;
        const Eigen::VectorXd g = gradient_from_predictions(loss, dataset->ys, preds);
        alpha -= config.step(k) * g;
    }
    return alpha;
}

RkhsFunction GdTrajectory::function_at(int m) const {
    RkhsFunction f;
    f.support = std::shared_ptr<const Eigen::MatrixXd>(dataset, &dataset->xs);
    f.coeffs = coeffs_at(m);
    f.kernel = kernel;
    return f;
}

double empirical_risk(const LossSpec& loss, const Dataset& data, const RkhsFunction& f) {
    if (data.n() == 0) throw input_error("empirical_risk: empty dataset");
    return empirical_risk_predictions(loss, data.ys, rkhs_eval_batch(f, data.xs));
}

double empirical_risk_predictions(const LossSpec& loss, const Eigen::VectorXd& ys,
                                  const Eigen::VectorXd& preds) {
    const long n = ys.size();
    if (n == 0) throw input_error("empirical_risk: empty dataset");
    if (preds.size() != n) throw input_error("prediction length mismatch");
    double s = 0.0;
    for (long i = 0; i < n; ++i) s += loss_value(loss, ys(i), preds(i));
    return s / n;
}

Eigen::VectorXd risk_gradient_coeffs(const LossSpec& loss, const Dataset& data,
                                     const RkhsFunction& f) {
    check_support_matches(data, f);
    const Eigen::VectorXd preds = rkhs_eval_batch(f, data.xs);
    return gradient_from_predictions(loss, data.ys, preds);
}

RkhsFunction gd_step(const RkhsFunction& f, const Eigen::VectorXd& grad_coeffs,
                     double eta) {
    if (!(eta > 0.0)) throw input_error("step size must be positive");
    if (grad_coeffs.size() != f.coeffs.size())
        throw input_error("gradient length mismatch");
    if (!grad_coeffs.allFinite()) throw numeric_error("gradient contains non-finite values");
    RkhsFunction out = f;
    out.coeffs = f.coeffs - eta * grad_coeffs;
    return out;
}

GdTrajectory run_gd(const LossSpec& loss, std::shared_ptr<const Dataset> data,
                    const KernelSpec& kernel, const GdConfig& config) {
    if (!data || data->n() == 0) throw input_error("run_gd: empty dataset");
    if (static_cast<int>(config.step_sizes.size()) != config.max_steps)
        throw config_error("step_sizes length must equal max_steps");
    for (double eta : config.step_sizes)
        if (!(eta > 0.0)) throw config_error("step sizes must be positive");
    for (int t : config.record_times)
        if (t < 0 || t > config.max_steps)
            throw config_error("record time outside [0, max_steps]");

    GdTrajectory traj;
    traj.config = config;
    traj.dataset = data;
    traj.kernel = kernel;
    traj.loss = loss;

    const double cap = 1.0 / risk_smoothness(loss, kernel, *data);
    for (double eta : config.step_sizes) {
        if (eta > cap * (1.0 + 1e-12)) {
            if (config.strict_cap)
                throw config_error("step size exceeds 1/M' in strict mode");
            traj.cap_violated = true;
        }
    }

    Eigen::MatrixXd K = gram_matrix(kernel, data->xs);
    traj.gram = std::make_shared<const Eigen::MatrixXd>(std::move(K));

    std::vector<bool> record(static_cast<std::size_t>(config.max_steps) + 1, false);
    record.front() = true;
    record.back() = true;
    for (int t : config.record_times) record[static_cast<std::size_t>(t)] = true;

    const long n = data->n();
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    traj.risks.reserve(static_cast<std::size_t>(config.max_steps) + 1);
    traj.cum_steps.reserve(static_cast<std::size_t>(config.max_steps) + 1);
    traj.cum_steps.push_back(0.0);

    double cum = 0.0;
    for (int k = 0; k <= config.max_steps; ++k) {
        const Eigen::VectorXd preds = (*traj.gram) * alpha;
        traj.risks.push_back(empirical_risk_predictions(loss, data->ys, preds));
        if (record[static_cast<std::size_t>(k)]) traj.snapshots.emplace(k, alpha);
        if (k == config.max_steps) break;

        const Eigen::VectorXd g = gradient_from_predictions(loss, data->ys, preds);
        if (!g.allFinite()) throw numeric_error("risk gradient became non-finite");
        alpha -= config.step(k) * g;
        cum += config.step(k);
        traj.cum_steps.push_back(cum);
    }
    return traj;
}

RkhsFunction interpolate(const GdTrajectory& traj, double t) {
    if (t < 0.0 || t > static_cast<double>(traj.config.max_steps))
        throw input_error("interpolation time out of range");
    const int lo = static_cast<int>(std::floor(t));
    const double frac = t - lo;
    RkhsFunction f = traj.function_at(lo);
    if (frac == 0.0) return f;
    const Eigen::VectorXd g = risk_gradient_coeffs(traj.loss, *traj.dataset, f);
    return gd_step(f, g, frac * traj.config.step(lo));
}

double cumulative_step_sum(const GdTrajectory& traj, int m) {
    if (m == 0) throw std::domain_error("cumulative step sum requires m >= 1");
    if (m < 0 || m > traj.config.max_steps) throw input_error("step index out of range");
    return traj.cum_steps.at(static_cast<std::size_t>(m));
}

void write_trajectory_csv(const GdTrajectory& traj, const std::filesystem::path& path) {
    CsvWriter csv(path);
    csv.header({"step", "eta", "cum_step", "risk"});
    for (int k = 0; k <= traj.config.max_steps; ++k) {
        csv.field(static_cast<long>(k));
        csv.field(k < traj.config.max_steps ? traj.config.step(k) : 0.0);
        csv.field(traj.cum_steps.at(static_cast<std::size_t>(k)));
        csv.field(traj.risks.at(static_cast<std::size_t>(k)));
        csv.end_row();
    }
}

void write_snapshots(const GdTrajectory& traj, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open snapshot file: " + path.string());
    const long n = traj.dataset->n();
    out << n << ' ' << traj.snapshots.size();
    for (const auto& [idx, _] : traj.snapshots) out << ' ' << idx;
    out << '\n';
    for (const auto& [_, alpha] : traj.snapshots)
        out.write(reinterpret_cast<const char*>(alpha.data()),
                  static_cast<std::streamsize>(sizeof(double)) * n);
}

std::map<int, Eigen::VectorXd> read_snapshots(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open snapshot file: " + path.string());
    long n = 0;
    std::size_t count = 0;
    in >> n >> count;
    std::vector<int> indices(count);
    for (auto& idx : indices) in >> idx;
    in.ignore(2, '\n');
    std::map<int, Eigen::VectorXd> out;
    for (std::size_t i = 0; i < count; ++i) {
        Eigen::VectorXd alpha(n);
        in.read(reinterpret_cast<char*>(alpha.data()),
                static_cast<std::streamsize>(sizeof(double)) * n);
        if (!in) throw config_error("snapshot file truncated: " + path.string());
        out.emplace(indices[i], std::move(alpha));
    }
    return out;
}

}  // namespace selfreg
