#include <CLI11.hpp>
#include <iostream>

#include "selfreg/common.hpp"
#include "selfreg/experiments.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    long seed = -1;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
    auto* opt = cmd->add_option("--config", args.config_path, "configuration file");
    if (config_required) opt->required();
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--out", args.out_dir, "override the output directory");
}

int execute(selfreg::RunMode mode, const CommonArgs& args) {
    selfreg::ExperimentConfig config;
    if (!args.config_path.empty())
        config = selfreg::parse_config(args.config_path);
    config.mode = mode;
    if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
    if (!args.out_dir.empty()) config.out_dir = args.out_dir;
    return selfreg::run(config);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-regularized learning: gradient descent, RERM, mirror descent, "
                 "early stopping"};
    app.require_subcommand(1);

    CommonArgs train_args, cv_args, verify_args, rates_args;
    CLI::App* train = app.add_subcommand("train", "run gradient descent, write the "
                                                  "trajectory CSV");
    add_common(train, train_args, true);
    CLI::App* cv = app.add_subcommand("cv", "train/validation split with early "
                                            "stopping selection");
    add_common(cv, cv_args, true);
    CLI::App* verify = app.add_subcommand("verify", "run the certification checks");
    add_common(verify, verify_args, false);
    CLI::App* rates = app.add_subcommand("rates", "evaluate learning-rate exponents");
    add_common(rates, rates_args, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train->parsed()) return execute(selfreg::RunMode::train, train_args);
        if (cv->parsed()) return execute(selfreg::RunMode::cv, cv_args);
        if (verify->parsed()) return execute(selfreg::RunMode::verify, verify_args);
        if (rates->parsed()) return execute(selfreg::RunMode::rates, rates_args);
    } catch (const selfreg::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const selfreg::input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
