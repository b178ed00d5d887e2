#include "splitnls/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace splitnls {

const char* scheme_name(SchemeKind k) {
    switch (k) {
        case SchemeKind::modified_lie: return "modified_lie";
        case SchemeKind::lie: return "lie";
        case SchemeKind::strang: return "strang";
    }
    return "?";
}

void validate(const SchemeConfig& config) {
    validate(config.params);
    if (!(config.tau > 0.0) || !std::isfinite(config.tau))
        throw std::invalid_argument("scheme.tau: must be positive and finite");
    if (!(config.horizon_T > 0.0) || !std::isfinite(config.horizon_T))
        throw std::invalid_argument("scheme.horizon_T: must be positive and finite");
    if (config.tau > config.horizon_T * (1.0 + 1e-12))
        throw std::invalid_argument("scheme.tau: must not exceed horizon_T");
    if (config.record_every < 1)
        throw std::invalid_argument("scheme.record_every: must be >= 1");
}

long step_count(const SchemeConfig& config) {
    return static_cast<long>(std::floor(config.horizon_T / config.tau * (1.0 + 1e-12)));
}

Field scheme_step(const Field& state, const SchemeConfig& config) {
    switch (config.scheme) {
        case SchemeKind::modified_lie: {
            Field v = nonlinear_flow(state, config.tau, config.params);
            Field vhat = forward_dft(v);
            vhat = projector(vhat, config.tau, config.profile);
            vhat = linear_flow(vhat, config.tau);
            return inverse_dft(vhat);
        }
        case SchemeKind::lie: {
            Field v = nonlinear_flow(state, config.tau, config.params);
            Field vhat = forward_dft(v);
            vhat = linear_flow(vhat, config.tau);
            return inverse_dft(vhat);
        }
        case SchemeKind::strang: {
            Field v = linear_flow(state, 0.5 * config.tau);
            v = nonlinear_flow(v, config.tau, config.params);
            return linear_flow(v, 0.5 * config.tau);
        }
    }
    throw std::logic_error("scheme_step: unknown scheme");
}

SchemeMachine::SchemeMachine(const Field& phi, const SchemeConfig& config) : config_(config) {
    validate(config_);
    if (phi.space != Space::physical)
        throw std::invalid_argument("SchemeMachine: initial datum must be tagged physical");
    if (phi.grid->dim != config_.params.d)
        throw std::invalid_argument("SchemeMachine: grid dimension does not match equation.d");
    state_ = (config_.scheme == SchemeKind::modified_lie)
                 ? projector(phi, config_.tau, config_.profile)
                 : phi;
    if (!all_finite(state_)) throw BlowupError(-1.0, 0);
    stats_.l2_initial = lp_norm(state_, 2.0);
    stats_.l2_final = stats_.l2_initial;
    stats_.l2_max_step_increase = -std::numeric_limits<double>::infinity();
    l2_prev_ = stats_.l2_initial;
}

void SchemeMachine::advance() {
    state_ = scheme_step(state_, config_);
    ++stats_.steps;
    if (!all_finite(state_))
        throw BlowupError((stats_.steps - 1) * config_.tau, stats_.steps);
    const double l2 = lp_norm(state_, 2.0);
    stats_.l2_final = l2;
    stats_.l2_max_step_increase = std::max(stats_.l2_max_step_increase, l2 - l2_prev_);
    if (stats_.l2_initial > 0.0)
        stats_.l2_max_rel_drift = std::max(stats_.l2_max_rel_drift,
                                           std::abs(l2 - stats_.l2_initial) / stats_.l2_initial);
    l2_prev_ = l2;
}

void run_scheme_stream(const Field& phi, const SchemeConfig& config,
                       const std::function<void(long, double, const Field&)>& visit,
                       RunStats* stats) {
    SchemeMachine m(phi, config);
    const long n_max = step_count(config);
    visit(0, 0.0, m.state());
    for (long n = 1; n <= n_max; ++n) {
        m.advance();
        visit(n, n * config.tau, m.state());
    }
    if (stats) {
        *stats = m.stats();
        if (!std::isfinite(stats->l2_max_step_increase)) stats->l2_max_step_increase = 0.0;
    }
}

Trajectory run_scheme(const Field& phi, const SchemeConfig& config) {
    Trajectory traj;
    traj.config = config;
    const long n_max = step_count(config);
    run_scheme_stream(
        phi, config,
        [&](long n, double t, const Field& state) {
            if (n % config.record_every == 0 || n == n_max) {
                traj.times.push_back(t);
                traj.states.push_back(state);
            }
        },
        &traj.stats);
    return traj;
}

DuhamelForm duhamel_form(const Field& phi, long n, const SchemeConfig& config) {
    if (config.scheme != SchemeKind::modified_lie)
        throw std::invalid_argument("duhamel_form: defined for the modified_lie scheme only");
    validate(config);
    if (n < 0) throw std::invalid_argument("duhamel_form: n must be >= 0");
    if (phi.space != Space::physical)
        throw std::invalid_argument("duhamel_form: datum must be tagged physical");
    if (n == 0) return {projector(phi, config.tau, config.profile), 0.0};

    const Grid& g = *phi.grid;
    const double tau = config.tau;
    const double root = std::sqrt(tau);
    const std::size_t N = g.total_points();

    // Per-mode tables: cutoff multiplier and |k|^2.
    std::vector<double> chi(N), k2(N);
    for_each_mode(g, [&](std::size_t i, const std::array<double, 3>& k) {
        const double kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        k2[i] = kk;
        chi[i] = cutoff_eval(config.profile, root * std::sqrt(kk));
    });

    SchemeConfig run_cfg = config;
    run_cfg.horizon_T = n * tau;  // exactly n steps

    // acc accumulates tau * sum_k e^{-i (n-k) tau |.|^2} chi * Fhat_k spectrally:
    // add the source at its emission time, then advance everything one step at
    // each subsequent visit.
    Field acc = make_field(phi.grid, Space::spectral);
    Field zn;  // stepped product form at n tau
    const double lam = static_cast<double>(config.params.lambda);

    run_scheme_stream(phi, run_cfg, [&](long step, double, const Field& state) {
        if (step > 0) {
            for (std::size_t i = 0; i < acc.values.size(); ++i)
                acc.values[i] *= std::polar(1.0, -tau * k2[i]);
        }
        if (step == n) {
            zn = state;
            return;
        }
        // F = (N(tau) - I)/tau applied to the current iterate.
        Field fterm = state;
        for (auto& v : fterm.values) {
            const double a = std::abs(v);
            const std::complex<double> rot =
                (a > 0.0) ? std::polar(1.0, tau * lam * std::pow(a, config.params.p))
                          : std::complex<double>(1.0, 0.0);
            v *= (rot - 1.0) / tau;
        }
        Field fhat = forward_dft(fterm);
        for (std::size_t i = 0; i < acc.values.size(); ++i)
            acc.values[i] += tau * chi[i] * fhat.values[i];
    });

    // Free term S_tau(n tau) phi plus the accumulated sum.
    Field phihat = forward_dft(phi);
    for (std::size_t i = 0; i < acc.values.size(); ++i)
        acc.values[i] += std::polar(1.0, -(static_cast<double>(n) * tau) * k2[i]) * chi[i] *
                         phihat.values[i];

    DuhamelForm out;
    out.field = inverse_dft(acc);
    const double ref = lp_norm(zn, 2.0);
    const double dist = l2_distance(out.field, zn);
    out.rel_l2_deviation = (ref > 0.0) ? dist / ref : dist;
    return out;
}

namespace {

void put_u32(std::FILE* fp, std::uint32_t v) { std::fwrite(&v, sizeof v, 1, fp); }
void put_u64(std::FILE* fp, std::uint64_t v) { std::fwrite(&v, sizeof v, 1, fp); }
void put_f64(std::FILE* fp, double v) { std::fwrite(&v, sizeof v, 1, fp); }

template <typename T>
T get_raw(std::FILE* fp) {
    T v{};
    if (std::fread(&v, sizeof v, 1, fp) != 1)
        throw std::runtime_error("read_trajectory: truncated file");
    return v;
}

}  // namespace

void write_trajectory(const Trajectory& traj, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("write_trajectory: cannot open " + path);
    const Grid& g = *traj.states.at(0).grid;
    put_u32(fp, static_cast<std::uint32_t>(g.dim));
    for (int a = 0; a < g.dim; ++a) put_u32(fp, static_cast<std::uint32_t>(g.points[a]));
    for (int a = 0; a < g.dim; ++a) put_f64(fp, g.box_length[a]);
    put_f64(fp, traj.config.tau * traj.config.record_every);
    put_u64(fp, static_cast<std::uint64_t>(traj.states.size()));
    for (const auto& st : traj.states) {
        static_assert(sizeof(std::complex<double>) == 2 * sizeof(double));
        std::fwrite(st.values.data(), sizeof(std::complex<double>), st.values.size(), fp);
    }
    if (std::fclose(fp) != 0) throw std::runtime_error("write_trajectory: close failed");
}

TrajectoryDump read_trajectory(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("read_trajectory: cannot open " + path);
    TrajectoryDump dump;
    try {
        const auto dim = get_raw<std::uint32_t>(fp);
        if (dim < 1 || dim > 3) throw std::runtime_error("read_trajectory: bad dimension");
        std::vector<int> pts(dim);
        std::vector<double> box(dim);
        for (auto& v : pts) v = static_cast<int>(get_raw<std::uint32_t>(fp));
        for (auto& v : box) v = get_raw<double>(fp);
        dump.grid = make_grid(pts, box);
        dump.sample_dt = get_raw<double>(fp);
        const auto count = get_raw<std::uint64_t>(fp);
        dump.states.reserve(count);
        for (std::uint64_t s = 0; s < count; ++s) {
            Field f = make_field(dump.grid, Space::physical);
            if (std::fread(f.values.data(), sizeof(std::complex<double>), f.values.size(), fp) !=
                f.values.size())
                throw std::runtime_error("read_trajectory: truncated payload");
            dump.states.push_back(std::move(f));
        }
    } catch (...) {
        std::fclose(fp);
        throw;
    }
    std::fclose(fp);
    return dump;
}

}  // namespace splitnls
