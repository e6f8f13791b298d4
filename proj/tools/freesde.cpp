// freesde: spectral distributions of free SDEs from the command line.

#include "freesde/cli/commands.hpp"
#include "freesde/selftest.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace freesde;

int main(int argc, char** argv) {
    CLI::App app{"Spectral distributions of free stochastic differential equations"};
    app.require_subcommand(1);

    std::string config_path;
    cli::Overrides flags;
    std::string model, times;
    double theta = 0, sigma = 0, k = 0, a = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration");
        sub->add_option("--model", model, "ou | gbm1 | gbm2 | explosive");
        sub->add_option("--theta", theta, "drift parameter theta");
        sub->add_option("--sigma", sigma, "OU noise scale");
        sub->add_option("--k", k, "explosive noise scale");
        sub->add_option("--a", a, "explosive initial value");
        sub->add_option("--times", times, "comma-separated times");
        sub->add_option("--out", flags.out, "output directory");
        sub->add_flag("--svg", flags.svg, "also write an SVG plot");
    };
    auto* density = app.add_subcommand("density", "inverted densities, one CSV per time");
    auto* support = app.add_subcommand("support", "support endpoints as CSV t,lo,hi");
    auto* moments = app.add_subcommand("moments", "model moments as CSV");
    auto* compare = app.add_subcommand("compare", "random-matrix Monte Carlo against the analytic law");
    auto* selftest = app.add_subcommand("selftest", "run the built-in invariant checks");
    for (auto* sub : {density, support, moments, compare}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::exit_config;
    }

    if (selftest->parsed()) return run_selftest(std::cout) ? cli::exit_ok : cli::exit_numerical;

    try {
        auto* sub = app.get_subcommands().front();
        if (sub->count("--model")) flags.model = model;
        if (sub->count("--theta")) flags.theta = theta;
        if (sub->count("--sigma")) flags.sigma = sigma;
        if (sub->count("--k")) flags.k = k;
        if (sub->count("--a")) flags.a = a;
        if (sub->count("--times")) flags.times = cli::parse_real_list(times);
        const nlohmann::json file = config_path.empty() ? nlohmann::json() : cli::read_json_file(config_path);
        const cli::RunConfig cfg = cli::make_run_config(file, flags);

        cli::CommandResult result;
        if (density->parsed())
            result = cli::cmd_density(cfg, std::cout);
        else if (support->parsed())
            result = cli::cmd_support(cfg, std::cout);
        else if (moments->parsed())
            result = cli::cmd_moments(cfg, std::cout);
        else
            result = cli::cmd_compare(cfg, std::cout);
        return result.exit_code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::exit_numerical;
    }
}
