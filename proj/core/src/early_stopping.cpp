#include "selfreg/early_stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "selfreg/common.hpp"

namespace selfreg {

std::vector<int> build_geometric_time_grid(long n, double eta) {
    if (n < 2) throw input_error("time grid needs n >= 2");
    if (!(eta > 0.0) || eta > 1.0) throw input_error("eta must lie in (0, 1]");
    const double ratio = static_cast<double>(n) / eta;
    int m = 0;
    double pow2 = 1.0;
    while (pow2 < ratio) {
        pow2 *= 2.0;
        ++m;
        if (m > 60) throw input_error("time grid overflow");
    }
    std::vector<int> times(static_cast<std::size_t>(m) + 1);
    for (int i = 0; i <= m; ++i) times[static_cast<std::size_t>(i)] = 1 << i;
    return times;
}

double risk_matching_psi(const GdTrajectory& traj, int m) {
    return 1.0 / cumulative_step_sum(traj, m);
}

StoppingGrid comparator_grid(const GdTrajectory& traj, const std::vector<int>& times) {
    if (times.empty()) throw input_error("comparator grid needs at least one time");
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        if (!(times[i] < times[i + 1]))
            throw input_error("stopping times must be strictly increasing");
    if (times.front() < 1 || times.back() > traj.config.max_steps)
        throw input_error("stopping times outside the trajectory range");
    if (cumulative_step_sum(traj, times.front()) > 1.0 + 1e-12)
        throw config_error("first stopping time has cumulative step sum > 1, "
                           "largest lambda would fall below 1");

    StoppingGrid grid;
    grid.times = times;
    grid.psi_values.reserve(times.size());
    for (auto it = times.rbegin(); it != times.rend(); ++it)
        grid.psi_values.push_back(risk_matching_psi(traj, *it));
    grid.expansion_factor = 1.0;
    for (std::size_t i = 0; i + 1 < grid.psi_values.size(); ++i)
        grid.expansion_factor = std::max(grid.expansion_factor,
                                         grid.psi_values[i + 1] / grid.psi_values[i]);
    return grid;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, long n1, long n2,
                                          std::uint64_t seed) {
    if (n1 < 1 || n2 < 1) throw input_error("both split halves need at least one point");
    if (n1 + n2 != data.n()) throw input_error("split sizes must add up to the dataset");
    std::vector<long> idx(static_cast<std::size_t>(data.n()));
    std::iota(idx.begin(), idx.end(), 0L);
    Rng rng(seed);
    rng.shuffle(idx);

    Dataset d1, d2;
    d1.xs.resize(n1, data.dim());
    d1.ys.resize(n1);
    d2.xs.resize(n2, data.dim());
    d2.ys.resize(n2);
    for (long i = 0; i < n1; ++i) {
        d1.xs.row(i) = data.xs.row(idx[static_cast<std::size_t>(i)]);
        d1.ys(i) = data.ys(idx[static_cast<std::size_t>(i)]);
    }
    for (long i = 0; i < n2; ++i) {
        d2.xs.row(i) = data.xs.row(idx[static_cast<std::size_t>(n1 + i)]);
        d2.ys(i) = data.ys(idx[static_cast<std::size_t>(n1 + i)]);
    }
    return {std::move(d1), std::move(d2)};
}

namespace {

double clipped_risk(const LossSpec& loss, const Dataset& data,
                    const Eigen::MatrixXd& cross, const Eigen::VectorXd& alpha,
                    double clip_level) {
    Eigen::VectorXd preds = cross * alpha;
    for (long i = 0; i < preds.size(); ++i) preds(i) = clip_value(preds(i), clip_level);
    return empirical_risk_predictions(loss, data.ys, preds);
}

}  // namespace

CvReport select_stopping_time(const GdTrajectory& traj, const std::vector<int>& times,
                              const Dataset& d2, double clip_level,
                              const Dataset* test) {
    if (times.empty()) throw input_error("selection needs at least one candidate time");
    for (int t : times)
        if (!traj.snapshots.count(t))
            throw input_error("missing snapshot at stopping time " + std::to_string(t));

    CvReport report;
    report.grid = comparator_grid(traj, times);

    const Eigen::MatrixXd cross_val = kernel_cross(traj.kernel, d2.xs, traj.dataset->xs);
    Eigen::MatrixXd cross_test;
    if (test) cross_test = kernel_cross(traj.kernel, test->xs, traj.dataset->xs);

    std::vector<double> val(times.size()), tst(times.size());
    parallel_for(times.size(), [&](std::size_t i) {
        const Eigen::VectorXd& alpha = traj.snapshots.at(times[i]);
        val[i] = clipped_risk(traj.loss, d2, cross_val, alpha, clip_level);
        if (test) tst[i] = clipped_risk(traj.loss, *test, cross_test, alpha, clip_level);
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < times.size(); ++i)
        if (val[i] < val[best]) best = i;  // ties keep the smaller time

    for (std::size_t i = 0; i < times.size(); ++i) {
        report.validation_risks[times[i]] = val[i];
        if (test) report.test_risks[times[i]] = tst[i];
    }
    report.selected_time = times[best];
    report.selected_test_risk = test ? tst[best] : 0.0;
    return report;
}

double learning_rate_exponent(double beta, double gamma, double theta, double q) {
    if (!(beta > 0.0) || beta > 1.0) throw input_error("beta must lie in (0, 1]");
    if (!(gamma > 0.0) || !(gamma < 1.0)) throw input_error("gamma must lie in (0, 1)");
    if (theta < 0.0 || theta > 1.0) throw input_error("theta must lie in [0, 1]");
    if (q < 1.0) throw input_error("q must be >= 1");
    const double first = 2.0 * beta / (beta * (2.0 - q) + q);
    const double second =
        beta / (gamma + beta * (2.0 - gamma - theta + theta * gamma));
    return std::min(first, second);
}

CvOutcome cv_pipeline(const Dataset& full, const CvPipelineSpec& spec,
                      const Dataset* test) {
    auto [d1, d2] = split_dataset(full, spec.n1, spec.n2, spec.seed);
    auto d1_shared = std::make_shared<const Dataset>(std::move(d1));

    double eta = spec.eta;
    if (eta == 0.0)
        eta = std::min(1.0, 1.0 / risk_smoothness(spec.loss, spec.kernel, *d1_shared));
    if (!(eta > 0.0) || eta > 1.0)
        throw config_error("cv pipeline requires eta in (0, 1]");

    std::vector<int> times = spec.explicit_times.empty()
                                 ? build_geometric_time_grid(spec.n1, eta)
                                 : spec.explicit_times;

    GdConfig config = GdConfig::constant(eta, times.back(), times);
    GdTrajectory traj = run_gd(spec.loss, d1_shared, spec.kernel, config);

    double clip_level = 1.0;
    if (spec.loss.kind != LossKind::logistic_classification)
        clip_level = std::max(d1_shared->ys.cwiseAbs().maxCoeff(), 1e-8);

    CvOutcome out;
    out.report = select_stopping_time(traj, times, d2, clip_level, test);
    out.predictor = traj.function_at(out.report.selected_time);
    out.trajectory = std::move(traj);
    out.clip_level = clip_level;
    out.eta = eta;
    return out;
}

void write_cv_csv(const CvReport& report, const std::filesystem::path& path) {
    CsvWriter csv(path);
    const bool with_test = !report.test_risks.empty();
    if (with_test)
        csv.header({"t", "psi", "lambda", "val_risk", "test_risk", "selected"});
    else
        csv.header({"t", "psi", "lambda", "val_risk", "selected"});
    const auto& times = report.grid.times;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double lambda = report.grid.psi_values[times.size() - 1 - i];
        csv.field(static_cast<long>(times[i]));
        csv.field(lambda);
        csv.field(lambda);
        csv.field(report.validation_risks.at(times[i]));
        if (with_test) csv.field(report.test_risks.at(times[i]));
        csv.field(static_cast<long>(times[i] == report.selected_time ? 1 : 0));
        csv.end_row();
    }
}

}  // namespace selfreg
