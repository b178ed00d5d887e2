#include "splitnls/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <mutex>
#include <thread>

namespace splitnls {

bool pair_is_admissible(const AdmissiblePair& pair, int d, double tol) {
    const double q = pair.q, r = pair.r;
    if (!(q >= 2.0) || !(r >= 2.0)) return false;
    if (d == 2 && q == 2.0 && std::isinf(r)) return false;
    const double lhs = (std::isinf(q) ? 0.0 : 2.0 / q) + (std::isinf(r) ? 0.0 : d / r);
    return std::abs(lhs - 0.5 * d) <= tol;
}

AdmissiblePair admissible_q0r0(const EquationParams& eq) {
    validate(eq);
    AdmissiblePair pair;
    pair.q = 4.0 * (eq.p + 2.0) / (eq.d * eq.p);
    pair.r = eq.p + 2.0;
    if (eq.p == std::floor(eq.p)) {
        // Exact check over the integers: with q = 4(p+2)/(dp) and r = p+2,
        // 2/q + d/r reduces to (2dp + 4d) / (4(p+2)) against d/2 = 2d(p+2)/(4(p+2)).
        const long p = static_cast<long>(eq.p);
        const long d = eq.d;
        if (2 * d * p + 4 * d != 2 * d * (p + 2))
            throw std::logic_error("admissible_q0r0: scaling identity violated");
    } else if (!pair_is_admissible(pair, eq.d)) {
        throw std::logic_error("admissible_q0r0: scaling identity violated");
    }
    return pair;
}

std::vector<double> ladder_taus(const LadderSpec& spec) {
    if (!(spec.tau0 > 0.0) || !std::isfinite(spec.tau0))
        throw std::invalid_argument("ladder.tau0: must be positive and finite");
    if (spec.levels < 1 || spec.levels > 24)
        throw std::invalid_argument("ladder.levels: must be in [1, 24]");
    std::vector<double> taus(spec.levels);
    double t = spec.tau0;
    for (int j = 0; j < spec.levels; ++j, t *= 0.5) taus[j] = t;
    return taus;
}

RateFit rate_fit(const std::vector<double>& taus, const std::vector<double>& errors) {
    if (taus.size() != errors.size())
        throw std::invalid_argument("rate_fit: taus and errors must have equal length");
    RateFit fit;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(errors[i] > 0.0) || !std::isfinite(errors[i]) || !(taus[i] > 0.0)) {
            fit.excluded.push_back(static_cast<int>(i));
            continue;
        }
        lx.push_back(std::log(taus[i]));
        ly.push_back(std::log(errors[i]));
    }
    const std::size_t n = lx.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
        fit.pairwise.push_back((ly[i + 1] - ly[i]) / (lx[i + 1] - lx[i]));
    if (n < 3) return fit;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.valid = true;
    return fit;
}

double discrete_strichartz_norm(const Trajectory& traj, const AdmissiblePair& pair,
                                NormWeight weight) {
    if (traj.states.empty())
        throw std::invalid_argument("discrete_strichartz_norm: empty trajectory");
    if (!(pair.q >= 1.0) || !(pair.r >= 1.0))
        throw std::domain_error("discrete_strichartz_norm: q and r must be >= 1");
    const double dt = traj.config.tau * traj.config.record_every;
    double acc = 0.0;
    for (const auto& st : traj.states) {
        const double v =
            (weight == NormWeight::lr) ? lp_norm(st, pair.r) : w1r_norm(st, pair.r);
        if (std::isinf(pair.q))
            acc = std::max(acc, v);
        else
            acc += std::pow(v, pair.q);
    }
    return std::isinf(pair.q) ? acc : std::pow(dt * acc, 1.0 / pair.q);
}

const char* reference_name(ReferenceKind k) {
    switch (k) {
        case ReferenceKind::analytic: return "analytic";
        case ReferenceKind::fine_strang: return "fine_strang";
        case ReferenceKind::self_scheme: return "self_scheme";
    }
    return "?";
}

namespace {

constexpr double kMonotoneSlack = 1.05;

std::string pair_metric_name(const char* prefix, const AdmissiblePair& p) {
    char buf[64];
    if (std::isinf(p.q))
        std::snprintf(buf, sizeof buf, "%s_qinf_r%g", prefix, p.r);
    else
        std::snprintf(buf, sizeof buf, "%s_q%g_r%g", prefix, p.q, p.r);
    return buf;
}

std::string format_msg(const char* fmt, ...) {
    char buf[256];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

void parallel_rows(int jobs, int count, const std::function<void(int)>& body) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mu;
    std::exception_ptr err;
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::scoped_lock lock(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

std::mutex& log_mutex() {
    static std::mutex mu;
    return mu;
}

void row_log(bool verbose, const char* experiment, const ReportRow& row) {
    if (!verbose) return;
    std::scoped_lock lock(log_mutex());
    std::fprintf(stderr, "[%s] tau=%.6g %s", experiment, row.tau,
                 row.valid ? "" : "INVALID ");
    for (double m : row.metrics) std::fprintf(stderr, "%.6e ", m);
    std::fprintf(stderr, "(%.0f ms)\n", row.wall_ms);
}

void finish_stats(ReportRow& row, const RunStats& stats) {
    row.l2_max_step_increase =
        std::isfinite(stats.l2_max_step_increase) ? stats.l2_max_step_increase : 0.0;
    row.l2_max_rel_drift = stats.l2_max_rel_drift;
}

// Tracks L2 bookkeeping for state sequences built outside SchemeMachine.
struct StatTracker {
    bool first = true;
    double l0 = 0.0, prev = 0.0;
    double max_inc = 0.0, max_drift = 0.0;
    bool have_inc = false;
    void feed(double l2) {
        if (first) {
            l0 = prev = l2;
            first = false;
            return;
        }
        max_inc = have_inc ? std::max(max_inc, l2 - prev) : l2 - prev;
        have_inc = true;
        if (l0 > 0.0) max_drift = std::max(max_drift, std::abs(l2 - l0) / l0);
        prev = l2;
    }
    void finish(ReportRow& row) const {
        row.l2_max_step_increase = have_inc ? max_inc : 0.0;
        row.l2_max_rel_drift = max_drift;
    }
};

SchemeConfig base_config(const ExperimentSetup& setup, double tau) {
    SchemeConfig cfg;
    cfg.params = setup.equation;
    cfg.scheme = setup.scheme;
    cfg.tau = tau;
    cfg.horizon_T = setup.horizon_T;
    cfg.profile = setup.profile;
    return cfg;
}

// max/min over valid rows of metrics[idx]; returns false when fewer than two
// valid rows or a nonpositive value makes the ratio meaningless.
bool metric_ratio(const std::vector<ReportRow>& rows, std::size_t idx, double* ratio) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    int used = 0;
    for (const auto& row : rows) {
        if (!row.valid) continue;
        const double v = row.metrics[idx];
        if (!(v > 0.0) || !std::isfinite(v)) return false;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        ++used;
    }
    if (used < 2) return false;
    *ratio = hi / lo;
    return true;
}

}  // namespace

ExperimentReport convergence_ladder(const ExperimentSetup& setup, const ConvergeKnobs& knobs) {
    const auto taus = ladder_taus(setup.ladder);
    if (knobs.error_norm != "max_l2" && knobs.error_norm != "final_l2")
        throw std::invalid_argument("experiment.error_norm: must be max_l2 or final_l2");
    if (knobs.reference == ReferenceKind::analytic && !has_analytic_solution(setup.data))
        throw std::invalid_argument(
            "reference.kind: datum has no closed-form solution; use fine_strang or self_scheme");
    if (knobs.reference == ReferenceKind::self_scheme && knobs.divider < 2)
        throw std::invalid_argument("reference.divider: must be >= 2");

    ExperimentReport rep;
    rep.experiment = "converge";
    rep.metric_names = {"error"};
    rep.rows.resize(taus.size());
    rep.reference_uncertainty.assign(taus.size(), 0.0);
    rep.scalars["reference_l2_max_step_increase"] = 0.0;
    rep.scalars["reference_l2_max_rel_drift"] = 0.0;

    const Field phi = make_initial_data(setup.data, setup.grid, setup.equation);
    SchemeConfig c0 = base_config(setup, taus.front());
    validate(c0);  // also rejects tau0 > horizon_T
    const long sub_count = step_count(c0) + 1;  // shared coarse submesh, spacing tau0

    // Shared fine reference (one Strang run sampled on the finest row's mesh).
    const double tau_min = taus.back();
    Trajectory shared_ref;
    std::vector<long> stride(taus.size(), 0);
    double fine_unc = -1.0;
    double tau_ref = knobs.tau_ref;
    if (knobs.reference == ReferenceKind::fine_strang) {
        if (tau_ref <= 0.0) tau_ref = tau_min / 32.0;
        for (double t : taus) {
            const double ratio = t / tau_ref;
            if (std::abs(ratio - std::llround(ratio)) > 1e-9 || std::llround(ratio) < 2)
                throw std::invalid_argument(
                    "reference.tau_ref: must divide every ladder step at least twice");
        }
        SchemeConfig cmin = base_config(setup, tau_min);
        const long n_min = step_count(cmin);
        std::vector<double> mesh(n_min + 1);
        for (long i = 0; i <= n_min; ++i) mesh[i] = i * tau_min;
        ReferenceConfig rc{tau_ref, mesh, knobs.tol_ref};
        shared_ref = reference_solve(phi, setup.horizon_T, rc, setup.equation);
        for (std::size_t j = 0; j < taus.size(); ++j) stride[j] = std::llround(taus[j] / tau_min);
        rep.scalars["reference_l2_max_rel_drift"] = shared_ref.stats.l2_max_rel_drift;
        rep.scalars["reference_l2_max_step_increase"] =
            std::isfinite(shared_ref.stats.l2_max_step_increase)
                ? shared_ref.stats.l2_max_step_increase
                : 0.0;

        // Step-doubled rerun on the coarse submesh estimates the reference error.
        const double r2 = tau_min / (2.0 * tau_ref);
        if (std::abs(r2 - std::llround(r2)) < 1e-9 && std::llround(r2) >= 1) {
            std::vector<double> sub(sub_count);
            for (long i = 0; i < sub_count; ++i) sub[i] = i * taus.front();
            ReferenceConfig rc2{2.0 * tau_ref, sub, knobs.tol_ref};
            Trajectory ref2 = reference_solve(phi, setup.horizon_T, rc2, setup.equation);
            const long sub_stride0 = std::llround(taus.front() / tau_min);
            fine_unc = 0.0;
            for (long i = 0; i < sub_count; ++i)
                fine_unc = std::max(
                    fine_unc, l2_distance(shared_ref.states.at(i * sub_stride0), ref2.states.at(i)));
            if (fine_unc > knobs.tol_ref)
                rep.warnings.push_back(format_msg(
                    "reference self-consistency %.3e exceeds tol_ref %.3e", fine_unc,
                    knobs.tol_ref));
        } else {
            rep.warnings.push_back(
                "reference uncertainty estimate skipped: 2*tau_ref does not divide the mesh");
        }
    }

    std::vector<std::vector<Field>> sub_states(taus.size());
    std::vector<RunStats> ref_stats(taus.size());

    parallel_rows(setup.jobs, static_cast<int>(taus.size()), [&](int j) {
        const auto t0 = std::chrono::steady_clock::now();
        ReportRow& row = rep.rows[j];
        row.tau = taus[j];
        row.metrics = {0.0};
        try {
            SchemeConfig cfg = base_config(setup, taus[j]);
            const long n_max = step_count(cfg);
            const long sub_stride = std::llround(taus.front() / taus[j]);
            row.cutoff_inactive = cutoff_inactive(*setup.grid, cfg.tau);

            SchemeMachine coarse(phi, cfg);
            std::optional<SchemeMachine> refm;
            if (knobs.reference == ReferenceKind::self_scheme) {
                SchemeConfig rcfg = cfg;
                rcfg.tau = cfg.tau / static_cast<double>(knobs.divider);
                refm.emplace(phi, rcfg);
                sub_states[j].reserve(sub_count);
            }

            double err = 0.0;
            for (long n = 0;; ++n) {
                const double t = n * cfg.tau;
                Field holder;
                const Field* ref = nullptr;
                switch (knobs.reference) {
                    case ReferenceKind::analytic:
                        holder = analytic_solution(setup.data, t, setup.grid, setup.equation);
                        ref = &holder;
                        break;
                    case ReferenceKind::fine_strang:
                        ref = &shared_ref.states.at(static_cast<std::size_t>(n * stride[j]));
                        break;
                    case ReferenceKind::self_scheme:
                        ref = &refm->state();
                        break;
                }
                if (knobs.reference == ReferenceKind::self_scheme && n % sub_stride == 0)
                    sub_states[j].push_back(*ref);
                Field projected;
                if (knobs.compare_projected) {
                    projected = projector(*ref, cfg.tau, setup.profile);
                    ref = &projected;
                }
                const double dist = l2_distance(coarse.state(), *ref);
                err = (knobs.error_norm == "max_l2") ? std::max(err, dist) : dist;
                if (n == n_max) break;
                coarse.advance();
                if (refm)
                    for (long s = 0; s < knobs.divider; ++s) refm->advance();
            }
            row.metrics[0] = err;
            finish_stats(row, coarse.stats());
            if (refm) ref_stats[j] = refm->stats();
        } catch (const BlowupError& e) {
            row.valid = false;
            row.invalid_reason = e.what();
            row.metrics = {0.0};
        }
        row.wall_ms = ms_since(t0);
        row_log(setup.verbose, "converge", row);
    });

    // Reference uncertainty per row.
    if (knobs.reference == ReferenceKind::analytic) {
        rep.reference_uncertainty.clear();
    } else if (knobs.reference == ReferenceKind::fine_strang) {
        if (fine_unc >= 0.0)
            rep.reference_uncertainty.assign(taus.size(), fine_unc);
        else
            rep.reference_uncertainty.clear();
    } else {
        for (std::size_t j = 0; j + 1 < taus.size(); ++j) {
            if (!rep.rows[j].valid || !rep.rows[j + 1].valid ||
                sub_states[j].size() != sub_states[j + 1].size()) {
                rep.reference_uncertainty[j] = -1.0;
                continue;
            }
            double u = 0.0;
            for (std::size_t i = 0; i < sub_states[j].size(); ++i)
                u = std::max(u, l2_distance(sub_states[j][i], sub_states[j + 1][i]));
            rep.reference_uncertainty[j] = u;
        }
        // The finest reference has no finer neighbor; reuse the previous
        // estimate as a conservative stand-in.
        if (taus.size() >= 2) {
            rep.reference_uncertainty.back() = rep.reference_uncertainty[taus.size() - 2];
            rep.flags["uncertainty_last_reused"] = true;
        }
        double inc = 0.0, drift = 0.0;
        for (std::size_t j = 0; j < taus.size(); ++j) {
            if (!rep.rows[j].valid) continue;
            if (std::isfinite(ref_stats[j].l2_max_step_increase))
                inc = std::max(inc, ref_stats[j].l2_max_step_increase);
            drift = std::max(drift, ref_stats[j].l2_max_rel_drift);
        }
        rep.scalars["reference_l2_max_step_increase"] = inc;
        rep.scalars["reference_l2_max_rel_drift"] = drift;
    }

    // Fit, monotonicity, envelope, verdict.
    std::vector<double> errs(taus.size(), -1.0);
    int valid_rows = 0;
    for (std::size_t j = 0; j < taus.size(); ++j)
        if (rep.rows[j].valid) {
            errs[j] = rep.rows[j].metrics[0];
            ++valid_rows;
        }
    if (valid_rows < static_cast<int>(taus.size()))
        rep.warnings.push_back(format_msg("%d of %zu rows invalid",
                                          static_cast<int>(taus.size()) - valid_rows,
                                          taus.size()));

    bool exact = valid_rows > 0;
    for (std::size_t j = 0; j < taus.size(); ++j)
        if (rep.rows[j].valid && errs[j] > knobs.exact_floor) exact = false;
    rep.flags["exact_regime"] = exact;

    bool monotone = true;
    double prev = -1.0;
    for (std::size_t j = 0; j < taus.size(); ++j) {
        if (!rep.rows[j].valid) continue;
        if (prev >= 0.0 && errs[j] > prev * kMonotoneSlack) monotone = false;
        prev = errs[j];
    }
    rep.flags["monotone_decay"] = monotone;
    if (!monotone) rep.warnings.push_back("errors do not decay monotonically (5% slack)");

    RateFit fit = rate_fit(taus, errs);
    if (!exact) rep.rates["error"] = fit;

    bool band_ok = true;
    if (knobs.slope_band) {
        band_ok = fit.valid && fit.slope >= (*knobs.slope_band)[0] &&
                  fit.slope <= (*knobs.slope_band)[1];
        rep.flags["slope_in_band"] = band_ok;
    }
    bool env_ok = true;
    if (knobs.envelope) {
        const double expo = (*knobs.envelope)[0], factor = (*knobs.envelope)[1];
        double mean = 0.0;
        int used = 0;
        for (std::size_t j = 0; j < taus.size(); ++j)
            if (rep.rows[j].valid && errs[j] > 0.0) {
                mean += std::log(errs[j]) - expo * std::log(taus[j]);
                ++used;
            }
        if (used > 0) {
            const double c = std::exp(mean / used);
            rep.scalars["envelope_C"] = c;
            for (std::size_t j = 0; j < taus.size(); ++j)
                if (rep.rows[j].valid && errs[j] > 0.0 &&
                    errs[j] > factor * c * std::pow(taus[j], expo) * (1.0 + 1e-12))
                    env_ok = false;
        } else {
            env_ok = false;
        }
        rep.flags["envelope_ok"] = env_ok;
    }

    if (exact)
        rep.pass = true;
    else if (!fit.valid && !knobs.slope_band && !knobs.envelope)
        rep.pass = false;
    else
        rep.pass = monotone && (knobs.slope_band ? band_ok : fit.valid) && env_ok;
    if (!exact && !fit.valid)
        rep.warnings.push_back("rate fit needs at least 3 valid rows with positive error");
    return rep;
}

ExperimentReport stability_sweep(const ExperimentSetup& setup,
                                 const std::vector<AdmissiblePair>& pairs, double bound) {
    if (setup.scheme != SchemeKind::modified_lie)
        throw std::invalid_argument("experiment.kind: stability requires scheme = modified_lie");
    if (pairs.empty()) throw std::invalid_argument("experiment.pairs: must be nonempty");
    const auto taus = ladder_taus(setup.ladder);

    ExperimentReport rep;
    rep.experiment = "stability";
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        rep.metric_names.push_back(pair_metric_name("w1r", pairs[i]));
        if (!pair_is_admissible(pairs[i], setup.equation.d))
            rep.warnings.push_back(format_msg(
                "pairs[%zu] (q=%g, r=%g) is not scaling-admissible; computed anyway", i,
                pairs[i].q, pairs[i].r));
    }
    rep.rows.resize(taus.size());

    const Field phi = make_initial_data(setup.data, setup.grid, setup.equation);

    parallel_rows(setup.jobs, static_cast<int>(taus.size()), [&](int j) {
        const auto t0 = std::chrono::steady_clock::now();
        ReportRow& row = rep.rows[j];
        row.tau = taus[j];
        row.metrics.assign(pairs.size(), 0.0);
        try {
            SchemeConfig cfg = base_config(setup, taus[j]);
            const long n_max = step_count(cfg);
            row.cutoff_inactive = cutoff_inactive(*setup.grid, cfg.tau);
            SchemeMachine m(phi, cfg);
            std::vector<double> acc(pairs.size(), 0.0);
            for (long n = 0;; ++n) {
                for (std::size_t i = 0; i < pairs.size(); ++i) {
                    const double v = w1r_norm(m.state(), pairs[i].r);
                    if (std::isinf(pairs[i].q))
                        acc[i] = std::max(acc[i], v);
                    else
                        acc[i] += std::pow(v, pairs[i].q);
                }
                if (n == n_max) break;
                m.advance();
            }
            for (std::size_t i = 0; i < pairs.size(); ++i)
                row.metrics[i] = std::isinf(pairs[i].q)
                                     ? acc[i]
                                     : std::pow(cfg.tau * acc[i], 1.0 / pairs[i].q);
            finish_stats(row, m.stats());
        } catch (const BlowupError& e) {
            row.valid = false;
            row.invalid_reason = e.what();
            row.metrics.assign(pairs.size(), 0.0);
        }
        row.wall_ms = ms_since(t0);
        row_log(setup.verbose, "stability", row);
    });

    bool pass = true;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        double ratio = 0.0;
        if (metric_ratio(rep.rows, i, &ratio)) {
            rep.scalars["ratio_" + rep.metric_names[i]] = ratio;
            if (ratio > bound) pass = false;
        } else {
            pass = false;
            rep.warnings.push_back(
                format_msg("no usable ratio for %s", rep.metric_names[i].c_str()));
        }
    }
    rep.scalars["bound"] = bound;
    rep.pass = pass;
    return rep;
}

ExperimentReport strichartz_probe(const ExperimentSetup& setup,
                                  const std::vector<AdmissiblePair>& pairs, double bound) {
    if (pairs.empty()) throw std::invalid_argument("experiment.pairs: must be nonempty");
    for (std::size_t i = 0; i < pairs.size(); ++i)
        if (!pair_is_admissible(pairs[i], setup.equation.d))
            throw std::invalid_argument(
                format_msg("experiment.pairs: pairs[%zu] is not scaling-admissible", i));
    const auto taus = ladder_taus(setup.ladder);

    ExperimentReport rep;
    rep.experiment = "probe";
    for (const auto& p : pairs) rep.metric_names.push_back(pair_metric_name("lr", p));
    rep.rows.resize(taus.size());

    const Field phi = make_initial_data(setup.data, setup.grid, setup.equation);
    const Field phihat = forward_dft(phi);
    const double l2phi = lp_norm(phi, 2.0);
    if (!(l2phi > 0.0)) throw std::invalid_argument("data: datum must be nonzero");

    const Grid& g = *setup.grid;
    std::vector<double> k2(g.total_points());
    for_each_mode(g, [&](std::size_t i, const std::array<double, 3>& k) {
        k2[i] = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    });

    parallel_rows(setup.jobs, static_cast<int>(taus.size()), [&](int j) {
        const auto t0 = std::chrono::steady_clock::now();
        ReportRow& row = rep.rows[j];
        const double tau = taus[j];
        row.tau = tau;
        row.metrics.assign(pairs.size(), 0.0);
        SchemeConfig cfg = base_config(setup, tau);
        validate(cfg);
        const long n_max = step_count(cfg);
        row.cutoff_inactive = cutoff_inactive(g, tau);

        Field proj = phihat;  // one cutoff application, shared by all samples
        const double root = std::sqrt(tau);
        for (std::size_t i = 0; i < proj.values.size(); ++i)
            proj.values[i] *= cutoff_eval(setup.profile, root * std::sqrt(k2[i]));

        StatTracker stats;
        std::vector<double> acc(pairs.size(), 0.0);
        Field hat = make_field(setup.grid, Space::spectral);
        for (long n = 0; n <= n_max; ++n) {
            const double t = n * tau;  // phase built fresh per sample, no drift
            for (std::size_t i = 0; i < hat.values.size(); ++i)
                hat.values[i] = proj.values[i] * std::polar(1.0, -t * k2[i]);
            const Field u = inverse_dft(hat);
            stats.feed(lp_norm(u, 2.0));
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                const double v = lp_norm(u, pairs[i].r);
                if (std::isinf(pairs[i].q))
                    acc[i] = std::max(acc[i], v);
                else
                    acc[i] += std::pow(v, pairs[i].q);
            }
        }
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const double norm = std::isinf(pairs[i].q)
                                    ? acc[i]
                                    : std::pow(tau * acc[i], 1.0 / pairs[i].q);
            row.metrics[i] = norm / l2phi;
        }
        stats.finish(row);
        row.wall_ms = ms_since(t0);
        row_log(setup.verbose, "probe", row);
    });

    bool pass = true;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        double ratio = 0.0;
        if (metric_ratio(rep.rows, i, &ratio)) {
            rep.scalars["ratio_" + rep.metric_names[i]] = ratio;
            if (ratio > bound) pass = false;
        } else {
            pass = false;
            rep.warnings.push_back(
                format_msg("no usable ratio for %s", rep.metric_names[i].c_str()));
        }
    }
    rep.scalars["bound"] = bound;
    rep.pass = pass;
    return rep;
}

namespace {

// One ladder row of the interaction-term comparison: the stepped scheme's
// summed source applied to the exact solution against the midpoint-quadrature
// continuous integral, both propagated by the cutoff free flow, maximized over
// step boundaries. u is supplied by a Strang run at half the quadrature step so
// cell midpoints fall on its mesh.
double defect_single(const Field& phi, const ExperimentSetup& setup, double tau,
                     double tau_ref, RunStats* fine_stats) {
    const Grid& g = *setup.grid;
    const double h = 0.5 * tau_ref;
    const double lam = static_cast<double>(setup.equation.lambda);
    const double p = setup.equation.p;

    SchemeConfig fine = base_config(setup, h);
    fine.scheme = SchemeKind::strang;
    SchemeMachine m(phi, fine);

    SchemeConfig coarse = base_config(setup, tau);
    const long n_max = step_count(coarse);
    const long cells = std::llround(tau / tau_ref);  // quadrature cells per step

    const std::size_t N = g.total_points();
    std::vector<double> chi(N), k2(N);
    std::vector<std::complex<double>> phase(N);
    const double root = std::sqrt(tau);
    for_each_mode(g, [&](std::size_t i, const std::array<double, 3>& k) {
        const double kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        k2[i] = kk;
        chi[i] = cutoff_eval(setup.profile, root * std::sqrt(kk));
        phase[i] = std::polar(1.0, -h * kk);
    });

    std::vector<std::complex<double>> A(N, 0.0), B(N, 0.0);
    const double cv = g.cell_volume();
    auto dist = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i) s += std::norm(A[i] - B[i]);
        return std::sqrt(cv * s);
    };

    double D = 0.0;
    for (long n = 0; n < n_max; ++n) {
        if (n > 0) D = std::max(D, dist());

        // Stepped source at the boundary: (N(tau) - I)/tau of the cutoff
        // exact solution, emitted once and phase-advanced from here on.
        Field src = projector(m.state(), tau, setup.profile);
        for (auto& v : src.values) {
            const double a = std::abs(v);
            const std::complex<double> rot =
                (a > 0.0) ? std::polar(1.0, tau * lam * std::pow(a, p))
                          : std::complex<double>(1.0, 0.0);
            v *= (rot - 1.0) / tau;
        }
        const Field srchat = forward_dft(src);
        for (std::size_t i = 0; i < N; ++i) A[i] += tau * chi[i] * srchat.values[i];

        for (long f = 0; f < 2 * cells; ++f) {
            m.advance();
            for (std::size_t i = 0; i < N; ++i) {
                A[i] *= phase[i];
                B[i] *= phase[i];
            }
            if (f % 2 == 0) {
                // Odd half-step: midpoint of a quadrature cell. Add the
                // continuous source i lam |u|^p u there.
                Field w = m.state();
                for (auto& v : w.values) {
                    const double a = std::abs(v);
                    v *= std::complex<double>(0.0, lam * std::pow(a, p));
                }
                const Field what = forward_dft(w);
                for (std::size_t i = 0; i < N; ++i)
                    B[i] += tau_ref * chi[i] * what.values[i];
            }
        }
    }
    D = std::max(D, dist());
    if (fine_stats) *fine_stats = m.stats();
    return D;
}

}  // namespace

ExperimentReport duhamel_defect(const ExperimentSetup& setup, double tau_ref_in, double bound) {
    if (setup.data.kind == DataKind::rough)
        throw std::invalid_argument(
            "experiment.kind: defect requires a smooth datum (gaussian, soliton or plane_wave)");
    const auto taus = ladder_taus(setup.ladder);
    const double tau_min = taus.back();
    double tau_ref = tau_ref_in > 0.0 ? tau_ref_in : tau_min / 32.0;
    if (tau_ref > tau_min / 32.0 * (1.0 + 1e-12))
        throw std::invalid_argument("reference.tau_ref: must be <= min(tau)/32");
    for (double t : taus) {
        const double ratio = t / tau_ref;
        if (std::abs(ratio - std::llround(ratio)) > 1e-9)
            throw std::invalid_argument("reference.tau_ref: must divide every ladder step");
    }

    ExperimentReport rep;
    rep.experiment = "defect";
    rep.metric_names = {"defect", "defect_over_sqrt_tau"};
    rep.rows.resize(taus.size());
    rep.reference_uncertainty.assign(taus.size(), 0.0);

    const Field phi = make_initial_data(setup.data, setup.grid, setup.equation);

    std::vector<std::string> row_warnings(taus.size());
    parallel_rows(setup.jobs, static_cast<int>(taus.size()), [&](int j) {
        const auto t0 = std::chrono::steady_clock::now();
        ReportRow& row = rep.rows[j];
        row.tau = taus[j];
        row.metrics = {0.0, 0.0};
        try {
            RunStats fine_stats;
            const double d1 = defect_single(phi, setup, taus[j], tau_ref, &fine_stats);
            const double d2 = defect_single(phi, setup, taus[j], 0.5 * tau_ref, nullptr);
            row.metrics[0] = d1;
            row.metrics[1] = d1 / std::sqrt(taus[j]);
            row.cutoff_inactive = cutoff_inactive(*setup.grid, taus[j]);
            finish_stats(row, fine_stats);
            const double rel = std::abs(d2 - d1) / std::max(d1, 1e-300);
            rep.reference_uncertainty[j] = rel;
            if (rel > 0.05)
                row_warnings[j] = format_msg(
                    "quadrature resolution: halving tau_ref moves D(tau=%.6g) by %.1f%%",
                    taus[j], 100.0 * rel);
        } catch (const BlowupError& e) {
            row.valid = false;
            row.invalid_reason = e.what();
        }
        row.wall_ms = ms_since(t0);
        row_log(setup.verbose, "defect", row);
    });
    for (auto& w : row_warnings)
        if (!w.empty()) rep.warnings.push_back(w);

    double rich_max = 0.0;
    for (std::size_t j = 0; j < taus.size(); ++j)
        if (rep.rows[j].valid) rich_max = std::max(rich_max, rep.reference_uncertainty[j]);
    rep.scalars["richardson_rel_max"] = rich_max;
    rep.flags["quadrature_resolved"] = rich_max <= 0.05;

    std::vector<double> ds(taus.size(), -1.0);
    for (std::size_t j = 0; j < taus.size(); ++j)
        if (rep.rows[j].valid) ds[j] = rep.rows[j].metrics[0];
    rep.rates["defect"] = rate_fit(taus, ds);

    double ratio = 0.0;
    if (metric_ratio(rep.rows, 1, &ratio)) {
        rep.scalars["ratio_defect_over_sqrt_tau"] = ratio;
        rep.pass = ratio <= bound;
    } else {
        rep.pass = false;
        rep.warnings.push_back("no usable defect ratio");
    }
    rep.scalars["bound"] = bound;
    return rep;
}

ExperimentReport simulate_run(const ExperimentSetup& setup, double tau, long record_every,
                              Trajectory* keep) {
    ExperimentReport rep;
    rep.experiment = "simulate";
    rep.metric_names = {"l2_final"};
    rep.rows.resize(1);
    ReportRow& row = rep.rows[0];
    row.tau = tau;
    row.metrics = {0.0};

    const auto t0 = std::chrono::steady_clock::now();
    const Field phi = make_initial_data(setup.data, setup.grid, setup.equation);
    SchemeConfig cfg = base_config(setup, tau);
    cfg.record_every = record_every;
    validate(cfg);
    row.cutoff_inactive = cutoff_inactive(*setup.grid, tau);

    rep.scalars["mass_initial"] = mass(phi);
    rep.scalars["energy_initial"] = energy(phi, setup.equation);
    try {
        Trajectory traj = run_scheme(phi, cfg);
        row.metrics[0] = traj.stats.l2_final;
        finish_stats(row, traj.stats);
        rep.scalars["mass_final"] = mass(traj.states.back());
        rep.scalars["energy_final"] = energy(traj.states.back(), setup.equation);
        rep.scalars["l2_initial"] = traj.stats.l2_initial;
        rep.flags["blowup"] = false;
        if (keep) *keep = std::move(traj);
    } catch (const BlowupError& e) {
        row.valid = false;
        row.invalid_reason = e.what();
        rep.flags["blowup"] = true;
        rep.scalars["last_finite_time"] = e.last_finite_time;
        rep.warnings.push_back(e.what());
    }
    row.wall_ms = ms_since(t0);
    row_log(setup.verbose, "simulate", row);

    if (row.valid) {
        if (setup.scheme == SchemeKind::modified_lie) {
            const bool ok = row.l2_max_step_increase <= 1e-12;
            rep.flags["l2_monotone"] = ok;
            rep.pass = ok;
        } else {
            const bool ok = row.l2_max_rel_drift <= 1e-11;
            rep.flags["l2_conserved"] = ok;
            rep.pass = ok;
        }
    } else {
        rep.pass = false;
    }
    return rep;
}

}  // namespace splitnls
