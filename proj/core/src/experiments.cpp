#include "selfreg/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "selfreg/common.hpp"
#include "selfreg/rerm.hpp"
#include "selfreg/verify.hpp"

namespace selfreg {

namespace {

double target_value(const std::string& id, const Eigen::VectorXd& x) {
    if (id == "sine") return std::sin(3.14159265358979323846 * x(0));
    if (id == "poly") {
        double v = x(0) * x(0) - 0.5 * x(0);
        if (x.size() > 1) v += 0.3 * x(1);
        return v;
    }
    if (id == "linear") return x(0);
    if (id == "zero") return 0.0;
    if (id == "const_one") return 1.0;
    throw input_error("unknown target id: " + id);
}

double logistic_plugin_risk(double t, double p) {
    auto l = [](double z) {
        return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    };
    return p * l(-t) + (1.0 - p) * l(t);
}

}  // namespace

double truncated_gaussian_variance(double sigma, double cut) {
    if (sigma == 0.0) return 0.0;
    // Var[Z | |Z| <= c] = 1 - 2 c phi(c) / (2 Phi(c) - 1) for standard Z.
    const double phi = std::exp(-0.5 * cut * cut) / std::sqrt(2.0 * 3.14159265358979323846);
    const double mass = std::erf(cut / std::sqrt(2.0));
    return sigma * sigma * (1.0 - 2.0 * cut * phi / mass);
}

SyntheticProblem generate_regression(long n, int d, const std::string& target_id,
                                     double noise_sigma, std::uint64_t seed) {
    if (n < 1) throw input_error("need at least one sample");
    if (d < 1) throw input_error("dimension must be >= 1");
    if (noise_sigma < 0.0) throw input_error("noise sigma must be >= 0");

    Rng rng(seed);
    SyntheticProblem out;
    out.data.xs.resize(n, d);
    out.data.ys.resize(n);
    for (long i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) out.data.xs(i, j) = rng.uniform(-1.0, 1.0);
        const double f = target_value(target_id, out.data.xs.row(i));
        out.data.ys(i) = f + rng.truncated_normal(noise_sigma, 6.0 * noise_sigma);
    }
    out.bayes_fn = [target_id](const Eigen::VectorXd& x) {
        return target_value(target_id, x);
    };
    out.bayes_risk = truncated_gaussian_variance(noise_sigma);
    out.bayes_risk_analytic = true;  // least-squares risk of f*
    out.domain_bound = std::sqrt(static_cast<double>(d));
    return out;
}

SyntheticProblem generate_classification(long n, int d, const std::string& profile,
                                         std::uint64_t seed) {
    if (n < 1) throw input_error("need at least one sample");
    if (d < 1) throw input_error("dimension must be >= 1");

    double scale;
    bool hard = false;
    if (profile == "easy")
        scale = 6.0;
    else if (profile == "noisy")
        scale = 1.5;
    else if (profile == "hard") {
        scale = 25.0;
        hard = true;
    } else
        throw input_error("unknown margin profile: " + profile);

    Rng rng(seed);
    SyntheticProblem out;
    out.data.xs.resize(n, d);
    out.data.ys.resize(n);
    for (long i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) out.data.xs(i, j) = rng.uniform(-1.0, 1.0);
        const double f = target_value("sine", out.data.xs.row(i));
        double p;
        if (hard)
            p = f > 0.0 ? 1.0 : 0.0;
        else
            p = 1.0 / (1.0 + std::exp(-scale * f));
        out.data.ys(i) = rng.uniform() < p ? 1.0 : -1.0;
    }
    out.bayes_fn = [scale, hard](const Eigen::VectorXd& x) {
        const double f = target_value("sine", x);
        if (hard) return scale * (f > 0.0 ? 1.0 : -1.0);
        return scale * f;  // log odds
    };
    if (d == 1) {
        // Plug-in logistic risk by x-quadrature under the uniform marginal.
        const int qn = 20001;
        double acc = 0.0;
        for (int q = 0; q < qn; ++q) {
            const double x = -1.0 + 2.0 * (q + 0.5) / qn;
            const double f = std::sin(3.14159265358979323846 * x);
            const double p = hard ? (f > 0.0 ? 1.0 : 0.0)
                                  : 1.0 / (1.0 + std::exp(-scale * f));
            const double t = hard ? scale * (f > 0.0 ? 1.0 : -1.0) : scale * f;
            acc += logistic_plugin_risk(t, p);
        }
        out.bayes_risk = acc / qn;
        out.bayes_risk_analytic = true;
    }
    out.domain_bound = std::sqrt(static_cast<double>(d));
    return out;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

struct RawConfig {
    std::map<std::string, std::string> kv;
    std::vector<std::string> order;
};

RawConfig tokenize(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) +
                               " is not key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw config_error("config line " + std::to_string(lineno) +
                                            " has an empty key");
        if (raw.kv.count(key)) throw config_error("duplicate config key: " + key);
        raw.kv[key] = value;
        raw.order.push_back(key);
    }
    return raw;
}

class ConfigReader {
  public:
    explicit ConfigReader(RawConfig raw) : raw_(std::move(raw)) {}

    bool has(const std::string& key) {
        used_.insert(key);
        return raw_.kv.count(key) > 0;
    }
    std::string str(const std::string& key, const std::string& dflt) {
        used_.insert(key);
        auto it = raw_.kv.find(key);
        return it == raw_.kv.end() ? dflt : it->second;
    }
    double num(const std::string& key, double dflt) {
        used_.insert(key);
        auto it = raw_.kv.find(key);
        if (it == raw_.kv.end()) return dflt;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw config_error("config key " + key + " is not a number: " + it->second);
        }
    }
    long integer(const std::string& key, long dflt) {
        const double v = num(key, static_cast<double>(dflt));
        if (v != std::floor(v))
            throw config_error("config key " + key + " must be an integer");
        return static_cast<long>(v);
    }
    bool boolean(const std::string& key, bool dflt) {
        const std::string v = str(key, dflt ? "true" : "false");
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw config_error("config key " + key + " must be true or false");
    }
    void reject_unknown() const {
        for (const auto& key : raw_.order)
            if (!used_.count(key)) throw config_error("unknown config key: " + key);
    }

  private:
    RawConfig raw_;
    std::set<std::string> used_;
};

std::vector<double> parse_number_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (...) {
            throw config_error("config key " + key + " has a bad number: " + tok);
        }
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ConfigReader cfg(tokenize(text));
    ExperimentConfig out;

    const std::string mode = cfg.str("mode", "train");
    if (mode == "train")
        out.mode = RunMode::train;
    else if (mode == "cv")
        out.mode = RunMode::cv;
    else if (mode == "verify")
        out.mode = RunMode::verify;
    else if (mode == "rates")
        out.mode = RunMode::rates;
    else
        throw config_error("unknown mode: " + mode);

    out.seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));
    out.out_dir = cfg.str("out", ".");

    out.dataset_kind = cfg.str("dataset.kind", "regression");
    if (out.dataset_kind != "regression" && out.dataset_kind != "classification")
        throw config_error("dataset.kind must be regression or classification");
    out.dataset_n = cfg.integer("dataset.n", 64);
    out.dataset_d = static_cast<int>(cfg.integer("dataset.d", 1));
    out.dataset_target = cfg.str("dataset.target", "sine");
    out.noise_sigma = cfg.num("dataset.noise_sigma", 0.0);
    out.margin_profile = cfg.str("dataset.profile", "noisy");
    out.dataset_seed = static_cast<std::uint64_t>(cfg.integer("dataset.seed", 0));

    const std::string kk = cfg.str("kernel.kind", "gaussian");
    if (kk == "gaussian")
        out.kernel = KernelSpec::gaussian(cfg.num("kernel.sigma", 1.0));
    else if (kk == "linear") {
        out.kernel = KernelSpec::linear();
        cfg.num("kernel.sigma", 1.0);
    } else if (kk == "polynomial")
        out.kernel = KernelSpec::polynomial(
            static_cast<int>(cfg.integer("kernel.degree", 2)),
            cfg.num("kernel.offset", 0.0));
    else
        throw config_error("unknown kernel.kind: " + kk);

    out.loss_kind = cfg.str("loss.kind", "");
    if (!out.loss_kind.empty() && out.loss_kind != "least_squares" &&
        out.loss_kind != "logistic" && out.loss_kind != "huber")
        throw config_error("unknown loss.kind: " + out.loss_kind);
    out.huber_delta = cfg.num("loss.delta", 1.0);
    out.clip_level = cfg.num("loss.clip_level", 0.0);

    out.gd_eta = cfg.num("gd.eta", 0.0);
    out.gd_max_steps = static_cast<int>(cfg.integer("gd.max_steps", 0));
    out.gd_strict = cfg.boolean("gd.strict", true);
    out.gd_snapshots_out = cfg.str("gd.snapshots_out", "");

    out.cv_n1 = cfg.integer("cv.n1", 0);
    out.cv_n2 = cfg.integer("cv.n2", 0);
    out.cv_grid = cfg.str("cv.grid", "dyadic");
    out.cv_seed = static_cast<std::uint64_t>(cfg.integer("cv.seed", 0));
    out.cv_test_n = cfg.integer("cv.test_n", 0);

    if (cfg.has("rates.table")) {
        const std::string table = cfg.str("rates.table", "");
        std::istringstream rows(table);
        std::string row;
        while (std::getline(rows, row, ';')) {
            if (row.find_first_not_of(" \t") == std::string::npos) continue;
            const auto vals = parse_number_list(row, "rates.table");
            if (vals.size() != 4)
                throw config_error("rates.table rows need beta,gamma,theta,q");
            out.rates_table.push_back({vals[0], vals[1], vals[2], vals[3]});
        }
    }
    out.rates_diagnostic = cfg.boolean("rates.diagnostic", false);
    if (cfg.has("rates.diagnostic_n")) {
        out.rates_diagnostic_n.clear();
        for (double v :
             parse_number_list(cfg.str("rates.diagnostic_n", ""), "rates.diagnostic_n"))
            out.rates_diagnostic_n.push_back(static_cast<long>(v));
    }

    out.verify_full = cfg.boolean("verify.full", false);

    cfg.reject_unknown();
    return out;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

LossSpec resolve_loss(const ExperimentConfig& config, const Dataset& data) {
    std::string kind = config.loss_kind;
    if (kind.empty())
        kind = config.dataset_kind == "classification" ? "logistic" : "least_squares";

    double clip = config.clip_level;
    if (clip <= 0.0) {
        if (kind == "logistic")
            clip = 1.0;
        else
            clip = std::max(data.ys.cwiseAbs().maxCoeff(), 1e-8);
    }
    if (kind == "least_squares") return LossSpec::least_squares(clip);
    if (kind == "logistic") return LossSpec::logistic(clip);
    return LossSpec::huber(config.huber_delta, clip);
}

// ---------------------------------------------------------------------------
// Runner

namespace {

SyntheticProblem generate_problem(const ExperimentConfig& config,
                                  std::uint64_t seed_override = 0) {
    const std::uint64_t seed = seed_override ? seed_override
                               : config.dataset_seed ? config.dataset_seed
                                                     : derive_seed(config.seed, 101);
    if (config.dataset_kind == "classification")
        return generate_classification(config.dataset_n, config.dataset_d,
                                       config.margin_profile, seed);
    return generate_regression(config.dataset_n, config.dataset_d,
                               config.dataset_target, config.noise_sigma, seed);
}

std::vector<int> parse_explicit_times(const std::string& spec) {
    const std::string prefix = "explicit:";
    if (spec.rfind(prefix, 0) != 0)
        throw config_error("cv.grid must be dyadic or explicit:<times>");
    std::vector<int> times;
    for (double v : parse_number_list(spec.substr(prefix.size()), "cv.grid")) {
        if (v < 1 || v != std::floor(v))
            throw config_error("cv.grid explicit times must be positive integers");
        times.push_back(static_cast<int>(v));
    }
    if (times.empty()) throw config_error("cv.grid explicit list is empty");
    return times;
}

int run_train(const ExperimentConfig& config) {
    SyntheticProblem prob = generate_problem(config);
    auto data = std::make_shared<const Dataset>(std::move(prob.data));
    const LossSpec loss = resolve_loss(config, *data);

    double eta = config.gd_eta;
    if (eta == 0.0)
        eta = std::min(1.0, 1.0 / risk_smoothness(loss, config.kernel, *data));

    std::vector<int> record;
    int max_steps = config.gd_max_steps;
    if (max_steps == 0) {
        record = build_geometric_time_grid(std::max<long>(data->n(), 2),
                                           std::min(eta, 1.0));
        max_steps = record.back();
    } else {
        for (int t = 1; t <= max_steps; t *= 2) record.push_back(t);
        if (record.empty() || record.back() != max_steps) record.push_back(max_steps);
    }

    GdConfig gd = GdConfig::constant(eta, max_steps, record);
    gd.strict_cap = config.gd_strict;
    GdTrajectory traj = run_gd(loss, data, config.kernel, gd);

    std::filesystem::create_directories(config.out_dir);
    write_trajectory_csv(traj, config.out_dir / "trajectory.csv");
    if (!config.gd_snapshots_out.empty())
        write_snapshots(traj, config.out_dir / config.gd_snapshots_out);
    return 0;
}

int run_cv(const ExperimentConfig& config) {
    SyntheticProblem prob = generate_problem(config);
    const long n = prob.data.n();
    long n2 = config.cv_n2 > 0 ? config.cv_n2 : n / 2;
    long n1 = config.cv_n1 > 0 ? config.cv_n1 : n - n2;
    if (n1 + n2 != n)
        throw config_error("cv.n1 + cv.n2 must equal dataset.n");

    CvPipelineSpec spec;
    spec.loss = resolve_loss(config, prob.data);
    spec.kernel = config.kernel;
    spec.eta = config.gd_eta;
    spec.n1 = n1;
    spec.n2 = n2;
    spec.seed = config.cv_seed ? config.cv_seed : derive_seed(config.seed, 202);
    if (config.cv_grid != "dyadic")
        spec.explicit_times = parse_explicit_times(config.cv_grid);

    std::optional<SyntheticProblem> test;
    if (config.cv_test_n > 0) {
        ExperimentConfig tc = config;
        tc.dataset_n = config.cv_test_n;
        test = generate_problem(tc, derive_seed(config.seed, 303));
    }

    CvOutcome outcome = cv_pipeline(prob.data, spec, test ? &test->data : nullptr);
    std::filesystem::create_directories(config.out_dir);
    write_cv_csv(outcome.report, config.out_dir / "cv_report.csv");
    return 0;
}

int run_verify(const ExperimentConfig& config) {
    SuiteParams params;
    if (config.verify_full) params = SuiteParams::acceptance();
    params.seed = config.seed;
    const std::vector<CheckResult> results = run_check_suite(params);
    std::filesystem::create_directories(config.out_dir);
    write_checks_csv(results, config.out_dir / "checks.csv");
    for (const auto& r : results)
        if (!r.passed) return 1;
    return 0;
}

int run_rates(const ExperimentConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    CsvWriter csv(config.out_dir / "rates.csv");
    csv.header({"beta", "gamma", "theta", "q", "alpha"});
    for (const auto& row : config.rates_table) {
        csv.field(row.beta);
        csv.field(row.gamma);
        csv.field(row.theta);
        csv.field(row.q);
        csv.field(learning_rate_exponent(row.beta, row.gamma, row.theta, row.q));
        csv.end_row();
    }
    csv.close();

    if (config.rates_diagnostic) {
        const RateDiagnostic diag =
            rate_diagnostic(config.rates_diagnostic_n, config.seed);
        CsvWriter dcsv(config.out_dir / "rate_diagnostic.csv");
        dcsv.header({"n", "excess_clipped_test_risk"});
        for (std::size_t i = 0; i < diag.ns.size(); ++i) {
            dcsv.field(diag.ns[i]);
            dcsv.field(diag.excess_risks[i]);
            dcsv.end_row();
        }
        dcsv.close();
        CsvWriter scsv(config.out_dir / "rate_summary.csv");
        scsv.header({"fitted_slope", "reference_alpha"});
        scsv.field(diag.fitted_slope);
        scsv.field(diag.reference_alpha);
        scsv.end_row();
    }
    return 0;
}

}  // namespace

RateDiagnostic rate_diagnostic(const std::vector<long>& ns, std::uint64_t seed) {
    RateDiagnostic diag;
    diag.reference_alpha = learning_rate_exponent(1.0, 0.5, 1.0, 2.0);
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const long n = ns[i];
        SyntheticProblem prob =
            generate_regression(n, 1, "sine", 0.2, derive_seed(seed, 5000 + i));
        SyntheticProblem test =
            generate_regression(2048, 1, "sine", 0.2, derive_seed(seed, 6000 + i));
        CvPipelineSpec spec;
        spec.loss = LossSpec::least_squares(
            std::max(prob.data.ys.cwiseAbs().maxCoeff(), 1e-8));
        spec.kernel = KernelSpec::gaussian(0.75);
        spec.n1 = n - n / 2;
        spec.n2 = n / 2;
        spec.seed = derive_seed(seed, 7000 + i);
        const CvOutcome outcome = cv_pipeline(prob.data, spec, &test.data);
        const double excess =
            std::max(outcome.report.selected_test_risk - prob.bayes_risk, 1e-12);
        diag.ns.push_back(n);
        diag.excess_risks.push_back(excess);
    }
    // Least-squares slope of log(excess) against log(n).
    const std::size_t m = diag.ns.size();
    if (m >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const double x = std::log(static_cast<double>(diag.ns[i]));
            const double y = std::log(diag.excess_risks[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        diag.fitted_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    return diag;
}

int run(const ExperimentConfig& config) {
    switch (config.mode) {
        case RunMode::train: return run_train(config);
        case RunMode::cv: return run_cv(config);
        case RunMode::verify: return run_verify(config);
        case RunMode::rates: return run_rates(config);
    }
    return 2;
}

}  // namespace selfreg
