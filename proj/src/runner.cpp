#include "splitnls/runner.hpp"

#include <cstdio>
#include <filesystem>

#include "splitnls/report_io.hpp"

namespace splitnls {

namespace {

namespace fs = std::filesystem;

void write_artifacts(const ExperimentReport& rep, const ExperimentConfig& cfg,
                     const fs::path& dir, bool with_svg) {
    fs::create_directories(dir);
    write_text_file((dir / "report.json").string(), report_json(rep, cfg));
    write_text_file((dir / "rows.csv").string(), report_csv(rep));
    if (with_svg) write_text_file((dir / "plot.svg").string(), report_svg(rep));
}

ExperimentSetup make_setup(const ExperimentConfig& cfg, const RunOptions& opts) {
    ExperimentSetup setup;
    setup.equation = cfg.equation;
    setup.grid = make_grid(cfg.grid_points, cfg.box_length);
    setup.data = cfg.data;
    setup.scheme = cfg.scheme;
    setup.profile = cfg.profile;
    setup.horizon_T = cfg.horizon_T;
    setup.ladder = cfg.ladder;
    setup.jobs = opts.jobs;
    setup.verbose = opts.verbose;
    return setup;
}

}  // namespace

int run_experiment(const RunOptions& opts) {
    ExperimentConfig cfg;
    try {
        cfg = load_config(opts.config_path);
        if (!opts.expect_kind.empty() && cfg.kind != opts.expect_kind)
            throw ConfigError(ConfigError::Kind::invariant,
                              "experiment.kind: config says '" + cfg.kind +
                                  "' but the subcommand is '" + opts.expect_kind + "'");
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        switch (e.kind) {
            case ConfigError::Kind::parse: return 3;
            case ConfigError::Kind::schema: return 4;
            case ConfigError::Kind::invariant: return 5;
        }
        return 5;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 3;
    }

    const fs::path dir = opts.out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(opts.out_dir);

    ExperimentReport rep;
    try {
        const ExperimentSetup setup = make_setup(cfg, opts);
        if (cfg.kind == "simulate") {
            Trajectory traj;
            rep = simulate_run(setup, cfg.tau, cfg.record_every,
                               cfg.dump_trajectory ? &traj : nullptr);
            write_artifacts(rep, cfg, dir, false);
            if (cfg.dump_trajectory && !traj.states.empty())
                write_trajectory(traj, (dir / "trajectory.bin").string());
        } else if (cfg.kind == "converge") {
            ConvergeKnobs knobs;
            knobs.reference = cfg.reference;
            knobs.tau_ref = cfg.tau_ref;
            knobs.divider = cfg.divider;
            knobs.tol_ref = cfg.tol_ref;
            if (cfg.has_slope_band)
                knobs.slope_band = std::array<double, 2>{cfg.slope_band_lo, cfg.slope_band_hi};
            if (cfg.has_envelope)
                knobs.envelope = std::array<double, 2>{cfg.envelope_exponent, cfg.envelope_factor};
            knobs.exact_floor = cfg.exact_floor;
            knobs.error_norm = cfg.error_norm;
            knobs.compare_projected = cfg.compare_projected;
            rep = convergence_ladder(setup, knobs);
            write_artifacts(rep, cfg, dir, true);
        } else if (cfg.kind == "stability") {
            rep = stability_sweep(setup, resolve_pairs(cfg), cfg.bound);
            write_artifacts(rep, cfg, dir, true);
        } else if (cfg.kind == "probe") {
            rep = strichartz_probe(setup, resolve_pairs(cfg), cfg.bound);
            write_artifacts(rep, cfg, dir, true);
        } else if (cfg.kind == "defect") {
            rep = duhamel_defect(setup, cfg.tau_ref, cfg.bound);
            write_artifacts(rep, cfg, dir, true);
        } else {
            std::fprintf(stderr, "unsupported experiment kind '%s'\n", cfg.kind.c_str());
            return 5;
        }
    } catch (const BlowupError& e) {
        rep.experiment = cfg.kind;
        rep.complete = false;
        rep.pass = false;
        rep.warnings.push_back(e.what());
        try {
            write_artifacts(rep, cfg, dir, false);
        } catch (const std::exception&) {
        }
        std::fprintf(stderr, "%s: %s\n", cfg.kind.c_str(), e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid setup: %s\n", e.what());
        return 5;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "invalid setup: %s\n", e.what());
        return 5;
    } catch (const std::exception& e) {
        rep.experiment = cfg.kind;
        rep.complete = false;
        rep.pass = false;
        rep.warnings.push_back(e.what());
        try {
            write_artifacts(rep, cfg, dir, false);
        } catch (const std::exception&) {
        }
        std::fprintf(stderr, "%s failed: %s\n", cfg.kind.c_str(), e.what());
        return 1;
    }

    std::fprintf(stdout, "%s: %s (%zu rows) -> %s\n", cfg.kind.c_str(),
                 rep.pass ? "pass" : "FAIL", rep.rows.size(),
                 (dir / "report.json").string().c_str());
    const auto blow = rep.flags.find("blowup");
    if (blow != rep.flags.end() && blow->second) return 1;
    return rep.pass ? 0 : 2;
}

}  // namespace splitnls
