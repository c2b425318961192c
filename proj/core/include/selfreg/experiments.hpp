#ifndef SELFREG_EXPERIMENTS_HPP
#define SELFREG_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "selfreg/early_stopping.hpp"
#include "selfreg/kernels.hpp"
#include "selfreg/losses.hpp"

namespace selfreg {

struct SyntheticProblem {
    Dataset data;
    std::function<double(const Eigen::VectorXd&)> bayes_fn;
    double bayes_risk = 0.0;
    bool bayes_risk_analytic = false;
    double domain_bound = 1.0;
};

/// xs uniform on [-1,1]^d, y = f*(x) plus gaussian noise truncated at six
/// sigma. Targets: sine, poly, linear, zero, const_one.
SyntheticProblem generate_regression(long n, int d, const std::string& target_id,
                                     double noise_sigma, std::uint64_t seed);

/// Labels +-1 with P(y = 1 | x) = sigmoid(s f*(x)); profiles easy, noisy,
/// hard (hard labels y = sign f*).
SyntheticProblem generate_classification(long n, int d, const std::string& profile,
                                         std::uint64_t seed);

/// Variance of a N(0, sigma^2) variable conditioned on |Z| <= cut * sigma.
double truncated_gaussian_variance(double sigma, double cut = 6.0);

enum class RunMode { train, cv, verify, rates };

struct RatesRow {
    double beta;
    double gamma;
    double theta;
    double q;
};

struct ExperimentConfig {
    RunMode mode = RunMode::train;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = ".";

    // dataset
    std::string dataset_kind = "regression";
    long dataset_n = 64;
    int dataset_d = 1;
    std::string dataset_target = "sine";
    double noise_sigma = 0.0;
    std::string margin_profile = "noisy";
    std::uint64_t dataset_seed = 0;  // 0 = derive from seed

    // kernel / loss
    KernelSpec kernel = KernelSpec::gaussian(1.0);
    std::string loss_kind;  // empty = least_squares / logistic by dataset kind
    double huber_delta = 1.0;
    double clip_level = 0.0;  // 0 = automatic

    // gd
    double gd_eta = 0.0;  // 0 = min(1, 1/M')
    int gd_max_steps = 0; // 0 = largest dyadic time
    bool gd_strict = true;
    std::string gd_snapshots_out;  // optional binary snapshot file name

    // cv
    long cv_n1 = 0;  // 0 = n - n/2
    long cv_n2 = 0;  // 0 = n/2
    std::string cv_grid = "dyadic";  // or "explicit:1,2,4"
    std::uint64_t cv_seed = 0;       // 0 = derive from seed
    long cv_test_n = 0;

    // rates
    std::vector<RatesRow> rates_table;
    bool rates_diagnostic = false;
    std::vector<long> rates_diagnostic_n = {64, 128, 256, 512, 1024};

    // verify
    bool verify_full = false;
};

/// Parse the flat key = value format with dotted section keys; '#' starts a
/// comment. Unknown keys raise config_error naming the key.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Resolve the configured loss with its automatic clip level for the data.
LossSpec resolve_loss(const ExperimentConfig& config, const Dataset& data);

struct RateDiagnostic {
    std::vector<long> ns;
    std::vector<double> excess_risks;
    double fitted_slope = 0.0;
    double reference_alpha = 0.0;
};

/// Excess clipped test risk of CV-selected predictors against n, with the
/// log-log slope alongside the formula exponent. Reported, never asserted.
RateDiagnostic rate_diagnostic(const std::vector<long>& ns, std::uint64_t seed);

/// Execute one configured run; writes artifacts under config.out_dir.
/// Exit code 0 on success, 1 if any verify check failed.
int run(const ExperimentConfig& config);

}  // namespace selfreg

#endif
