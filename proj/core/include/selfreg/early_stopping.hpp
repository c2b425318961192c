#ifndef SELFREG_EARLY_STOPPING_HPP
#define SELFREG_EARLY_STOPPING_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "selfreg/rkhs_gd.hpp"

namespace selfreg {

/// Candidate stopping times with their matched regularization grid
/// Lambda = Psi(times), sorted ascending, and the largest adjacent ratio.
struct StoppingGrid {
    std::vector<int> times;          // strictly increasing
    std::vector<double> psi_values;  // ascending lambda (reverse time order)
    double expansion_factor = 1.0;   // C_grid
};

/// Dyadic candidate set {1, 2, 4, ..., 2^m} with m the smallest integer such
/// that 2^m >= n / eta; requires n >= 2 and eta in (0, 1].
std::vector<int> build_geometric_time_grid(long n, double eta);

/// Psi(m) = 1 / sum_{k<m} eta_k for m >= 1.
double risk_matching_psi(const GdTrajectory& traj, int m);

/// Matched grid for the given stopping times. The smallest time t0 must have
/// cumulative step sum <= 1 so that the largest lambda is >= 1.
StoppingGrid comparator_grid(const GdTrajectory& traj, const std::vector<int>& times);

/// Disjoint, exhaustive split via a seeded uniform permutation prefix.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, long n1, long n2,
                                          std::uint64_t seed);

struct CvReport {
    int selected_time = 0;
    std::map<int, double> validation_risks;  // clipped risks on D2
    std::map<int, double> test_risks;        // empty when no test set supplied
    double selected_test_risk = 0.0;
    StoppingGrid grid;
};

/// argmin over the grid of the clipped validation risk; ties go to the
/// smallest stopping time. Snapshots must exist at every requested time.
CvReport select_stopping_time(const GdTrajectory& traj, const std::vector<int>& times,
                              const Dataset& d2, double clip_level,
                              const Dataset* test = nullptr);

/// alpha = min{ 2 beta / (beta (2 - q) + q),
///              beta / (gamma + beta (2 - gamma - theta + theta gamma)) }.
double learning_rate_exponent(double beta, double gamma, double theta, double q);

struct CvPipelineSpec {
    LossSpec loss;
    KernelSpec kernel;
    double eta = 0.0;  // 0 = automatic min(1, 1/M') from the training half
    long n1 = 0;
    long n2 = 0;
    std::uint64_t seed = 0;
    std::vector<int> explicit_times;  // empty = dyadic grid from (n1, eta)
};

struct CvOutcome {
    CvReport report;
    GdTrajectory trajectory;
    RkhsFunction predictor;
    double clip_level = 0.0;
    double eta = 0.0;
};

/// Split, train one GD pass on D1 with snapshots at the grid, select on D2.
CvOutcome cv_pipeline(const Dataset& full, const CvPipelineSpec& spec,
                      const Dataset* test = nullptr);

/// CSV columns: t, psi, lambda, val_risk, test_risk (optional), selected.
void write_cv_csv(const CvReport& report, const std::filesystem::path& path);

}  // namespace selfreg

#endif
