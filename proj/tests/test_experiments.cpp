#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "selfreg/common.hpp"
#include "selfreg/experiments.hpp"
#include "selfreg/rkhs_gd.hpp"

using namespace selfreg;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("regression generator") {
    SUBCASE("noiseless data lies exactly on the target") {
        const SyntheticProblem p = generate_regression(50, 2, "poly", 0.0, 99);
        for (long i = 0; i < 50; ++i)
            CHECK(p.data.ys(i) == doctest::Approx(p.bayes_fn(p.data.xs.row(i))));
        CHECK(p.bayes_risk == 0.0);
    }

    SUBCASE("seed determinism") {
        const SyntheticProblem a = generate_regression(30, 1, "sine", 0.3, 7);
        const SyntheticProblem b = generate_regression(30, 1, "sine", 0.3, 7);
        CHECK(a.data.xs == b.data.xs);
        CHECK(a.data.ys == b.data.ys);
        const SyntheticProblem c = generate_regression(30, 1, "sine", 0.3, 8);
        CHECK(a.data.ys != c.data.ys);
    }

    SUBCASE("empirical risk of the Bayes function matches the truncated variance") {
        const double sigma = 0.1;
        const SyntheticProblem p = generate_regression(10000, 1, "sine", sigma, 11);
        double acc = 0.0;
        for (long i = 0; i < p.data.n(); ++i) {
            const double r = p.data.ys(i) - p.bayes_fn(p.data.xs.row(i));
            acc += r * r;
        }
        const double empirical = acc / p.data.n();
        const double expected = truncated_gaussian_variance(sigma);
        // Monte-Carlo band: Var[(truncated noise)^2] <= E[Z^4] sigma^4 = 3 sigma^4.
        const double band = 3.0 * std::sqrt(3.0) * sigma * sigma / std::sqrt(10000.0);
        CHECK(std::abs(empirical - expected) <= band);
        CHECK(expected < sigma * sigma);
        CHECK(expected > 0.9999 * sigma * sigma);
    }

    SUBCASE("labels stay within the six-sigma truncation") {
        const SyntheticProblem p = generate_regression(2000, 1, "zero", 0.5, 13);
        CHECK(p.data.ys.cwiseAbs().maxCoeff() <= 3.0);
    }

    SUBCASE("unknown target id") {
        CHECK_THROWS_AS(generate_regression(10, 1, "mystery", 0.0, 1), input_error);
    }
}

TEST_CASE("classification generator") {
    SUBCASE("hard labels match the plug-in Bayes value on fresh samples") {
        const SyntheticProblem p = generate_classification(20000, 1, "hard", 17);
        // Empirical logistic risk of the Bayes function against the analytic
        // plug-in value.
        double acc = 0.0;
        for (long i = 0; i < p.data.n(); ++i) {
            const double t = p.bayes_fn(p.data.xs.row(i));
            const double z = -p.data.ys(i) * t;
            acc += z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        }
        const double empirical = acc / p.data.n();
        CHECK(std::abs(empirical - p.bayes_risk) <= 3.0 / std::sqrt(20000.0));
    }

    SUBCASE("symmetric profile keeps classes balanced within a binomial band") {
        const SyntheticProblem p = generate_classification(20000, 1, "noisy", 19);
        double positives = 0.0;
        for (long i = 0; i < p.data.n(); ++i)
            if (p.data.ys(i) > 0) positives += 1.0;
        const double frac = positives / p.data.n();
        CHECK(std::abs(frac - 0.5) <= 3.0 * 0.5 / std::sqrt(20000.0));
    }

    SUBCASE("determinism and profile validation") {
        const SyntheticProblem a = generate_classification(40, 2, "easy", 3);
        const SyntheticProblem b = generate_classification(40, 2, "easy", 3);
        CHECK(a.data.ys == b.data.ys);
        CHECK_THROWS_AS(generate_classification(10, 1, "unknown", 1), input_error);
    }
}

TEST_CASE("config parsing") {
    SUBCASE("defaults and dotted keys") {
        const ExperimentConfig c = parse_config_text(
            "mode = cv\n"
            "seed = 42\n"
            "dataset.n = 128   # samples\n"
            "kernel.kind = polynomial\n"
            "kernel.degree = 3\n"
            "kernel.offset = 0.5\n"
            "cv.n1 = 64\n"
            "cv.n2 = 64\n");
        CHECK(c.mode == RunMode::cv);
        CHECK(c.seed == 42);
        CHECK(c.dataset_n == 128);
        CHECK(c.kernel.kind == KernelKind::polynomial);
        CHECK(c.kernel.degree == 3);
        CHECK(c.cv_n1 == 64);
    }

    SUBCASE("unknown keys are named in the error") {
        try {
            parse_config_text("mode = train\ndataset.size = 10\n");
            FAIL("expected config_error");
        } catch (const config_error& e) {
            CHECK(std::string(e.what()).find("dataset.size") != std::string::npos);
        }
    }

    SUBCASE("malformed lines and duplicate keys") {
        CHECK_THROWS_AS(parse_config_text("mode train\n"), config_error);
        CHECK_THROWS_AS(parse_config_text("seed = 1\nseed = 2\n"), config_error);
        CHECK_THROWS_AS(parse_config_text("mode = warp\n"), config_error);
        CHECK_THROWS_AS(parse_config_text("dataset.n = many\n"), config_error);
    }

    SUBCASE("rates table") {
        const ExperimentConfig c =
            parse_config_text("mode = rates\nrates.table = 1,0.5,1,2; 0.5,0.25,0,1\n");
        REQUIRE(c.rates_table.size() == 2);
        CHECK(c.rates_table[0].beta == 1.0);
        CHECK(c.rates_table[1].q == 1.0);
        CHECK_THROWS_AS(parse_config_text("mode = rates\nrates.table = 1,2\n"),
                        config_error);
    }
}

TEST_CASE("train mode writes the anchor trajectory") {
    // One-point instance: gaussian kernel gives K = [[1]], constant target 1,
    // eta = 1/M' = 0.5 reaches zero risk in one step.
    TempDir dir("selfreg_train_test");
    ExperimentConfig c = parse_config_text(
        "mode = train\n"
        "seed = 1\n"
        "dataset.n = 1\n"
        "dataset.target = const_one\n"
        "dataset.noise_sigma = 0\n"
        "gd.max_steps = 1\n");
    c.out_dir = dir.path;
    CHECK(run(c) == 0);
    const std::string csv = slurp(dir.path / "trajectory.csv");
    CHECK(csv == "step,eta,cum_step,risk\n0,0.5,0,1\n1,0,0.5,0\n");
}

TEST_CASE("cv mode writes a report with the documented columns") {
    TempDir dir("selfreg_cv_test");
    ExperimentConfig c = parse_config_text(
        "mode = cv\n"
        "seed = 5\n"
        "dataset.n = 48\n"
        "dataset.noise_sigma = 0.2\n"
        "cv.test_n = 32\n");
    c.out_dir = dir.path;
    CHECK(run(c) == 0);
    const std::string csv = slurp(dir.path / "cv_report.csv");
    CHECK(csv.rfind("t,psi,lambda,val_risk,test_risk,selected\n", 0) == 0);
    // Exactly one selected row.
    std::size_t selected = 0, pos = 0;
    while ((pos = csv.find(",1\n", pos)) != std::string::npos) {
        ++selected;
        pos += 3;
    }
    CHECK(selected == 1);
}

TEST_CASE("byte-identical reruns under a fixed seed") {
    for (const char* text :
         {"mode = train\nseed = 31\ndataset.n = 20\ndataset.noise_sigma = 0.1\n",
          "mode = cv\nseed = 33\ndataset.n = 32\ndataset.noise_sigma = 0.3\n"
          "cv.test_n = 16\n"}) {
        TempDir a("selfreg_det_a");
        TempDir b("selfreg_det_b");
        ExperimentConfig c = parse_config_text(text);
        c.out_dir = a.path;
        REQUIRE(run(c) == 0);
        c.out_dir = b.path;
        REQUIRE(run(c) == 0);
        for (const auto& entry : std::filesystem::directory_iterator(a.path)) {
            const auto name = entry.path().filename();
            CHECK(slurp(a.path / name) == slurp(b.path / name));
        }
    }
}

TEST_CASE("rates mode evaluates the exponent table") {
    TempDir dir("selfreg_rates_test");
    ExperimentConfig c = parse_config_text(
        "mode = rates\n"
        "rates.table = 1,0.5,1,2; 0.5,0.25,0,1\n");
    c.out_dir = dir.path;
    CHECK(run(c) == 0);
    const std::string csv = slurp(dir.path / "rates.csv");
    CHECK(csv.rfind("beta,gamma,theta,q,alpha\n", 0) == 0);
    CHECK(csv.find("0.66666666666666") != std::string::npos);
}

TEST_CASE("snapshot export round trip through the runner") {
    TempDir dir("selfreg_snap_test");
    ExperimentConfig c = parse_config_text(
        "mode = train\n"
        "seed = 2\n"
        "dataset.n = 12\n"
        "dataset.noise_sigma = 0.1\n"
        "gd.snapshots_out = snaps.bin\n");
    c.out_dir = dir.path;
    REQUIRE(run(c) == 0);
    const auto snaps = read_snapshots(dir.path / "snaps.bin");
    CHECK(snaps.size() >= 2);
    CHECK(snaps.count(0) == 1);
    CHECK(snaps.at(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rate diagnostic reports a slope") {
    const RateDiagnostic diag = rate_diagnostic({64, 128}, 3);
    CHECK(diag.ns.size() == 2);
    CHECK(diag.excess_risks[0] > 0.0);
    CHECK(diag.reference_alpha == doctest::Approx(2.0 / 3.0));
    CHECK(std::isfinite(diag.fitted_slope));
}
