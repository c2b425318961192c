#ifndef SELFREG_COMMON_HPP
#define SELFREG_COMMON_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfreg {

// ---------------------------------------------------------------------------
// Error types

/// Bad values passed to an operation (non-finite inputs, dimension mismatch).
struct input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Invalid configuration (file contents, CLI arguments, step-size caps).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure (singular systems, NaN propagation).
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Iterative solver hit its cap; carries the best certified gap bound.
struct convergence_error : numeric_error {
    convergence_error(const std::string& what, double best_gap_bound)
        : numeric_error(what), best_gap(best_gap_bound) {}
    double best_gap;
};

/// A requested risk level is outside the solver's achievable range.
struct risk_range_error : std::runtime_error {
    risk_range_error(const std::string& what, double lo, double hi)
        : std::runtime_error(what), range_lo(lo), range_hi(hi) {}
    double range_lo;
    double range_hi;
};

// ---------------------------------------------------------------------------
// Deterministic random numbers
//
// mt19937_64 has a fully specified sequence; all transforms below are written
// out explicitly so that streams are reproducible across platforms and
// standard-library implementations.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive an independent stream seed from a base seed and an index.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base ^ splitmix64(index + 0x51'7c'c1'b7'27'22'0a'95ULL));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Standard normal via Box-Muller (no cached spare, keeps streams simple).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    /// Normal truncated to [-bound, bound] by rejection.
    double truncated_normal(double sigma, double bound) {
        if (sigma == 0.0) return 0.0;
        for (;;) {
            const double z = sigma * normal();
            if (std::abs(z) <= bound) return z;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Worker pool

/// Number of workers: hardware concurrency capped by SELFREG_THREADS.
unsigned worker_count();

/// Static partition of [0, n); each chunk runs on its own thread. Results must
/// be written to preallocated slots so the outcome is independent of
/// scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// ---------------------------------------------------------------------------
// CSV output (comma separated, '.' decimal, 17 significant digits, LF)

std::string format_double(double v);

class CsvWriter {
  public:
    explicit CsvWriter(const std::filesystem::path& path);

    void header(const std::vector<std::string>& columns);
    void field(const std::string& v);
    void field(double v);
    void field(long v);
    void end_row();
    void close();

  private:
    std::ofstream out_;
    bool row_started_ = false;
};

}  // namespace selfreg

#endif
