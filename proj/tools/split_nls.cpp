#include "CLI11.hpp"
#include "splitnls/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Pseudospectral splitting solver for the periodic nonlinear Schrodinger "
                 "equation: simulation, convergence ladders, space-time stability sweeps, "
                 "free-evolution probes and Duhamel defect measurements."};
    app.require_subcommand(1);

    splitnls::RunOptions opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "experiment config (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", opts.out_dir,
                        "output directory (default: the config's output.directory)");
        sub->add_option("--jobs", opts.jobs, "worker threads for ladder rows")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--verbose", opts.verbose, "per-row progress on stderr");
    };
    add_common(app.add_subcommand("simulate", "single run at a fixed step size"));
    add_common(app.add_subcommand("converge", "error-vs-step-size ladder against a reference"));
    add_common(app.add_subcommand("stability", "discrete space-time norm sweep of the scheme"));
    add_common(app.add_subcommand("probe", "space-time norm sweep of the cutoff free evolution"));
    add_common(app.add_subcommand("defect", "stepped-vs-continuous Duhamel distance ladder"));

    CLI11_PARSE(app, argc, argv);

    opts.expect_kind = app.get_subcommands().at(0)->get_name();
    return splitnls::run_experiment(opts);
}
