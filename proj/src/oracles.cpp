#include "splitnls/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace splitnls {

const char* data_name(DataKind k) {
    switch (k) {
        case DataKind::gaussian: return "gaussian";
        case DataKind::plane_wave: return "plane_wave";
        case DataKind::soliton: return "soliton";
        case DataKind::rough: return "rough";
    }
    return "?";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

double rough_phase(std::uint64_t seed, const std::array<int, 3>& mode) {
    std::uint64_t h = splitmix64(seed);
    for (int a = 0; a < 3; ++a)
        h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(mode[a])));
    // 53 uniform bits into [0, 1), scaled to an angle.
    return 2.0 * M_PI * static_cast<double>(h >> 11) * 0x1.0p-53;
}

bool has_analytic_solution(const InitialDataSpec& spec) {
    return spec.kind == DataKind::plane_wave || spec.kind == DataKind::soliton;
}

namespace {

void check_soliton(const GridPtr& grid, const EquationParams& eq) {
    if (grid->dim != 1 || eq.d != 1 || eq.p != 2.0 || eq.lambda != 1)
        throw std::invalid_argument(
            "data.kind: soliton requires d = 1, p = 2, lambda = +1");
}

void check_plane_wave(const InitialDataSpec& spec, const GridPtr& grid) {
    for (int a = 0; a < grid->dim; ++a) {
        const int half = grid->points[a] / 2;
        if (spec.mode[a] < -half || spec.mode[a] >= half)
            throw std::invalid_argument("data.mode: component " + std::to_string(a) +
                                        " not representable on the grid");
    }
    for (int a = grid->dim; a < 3; ++a)
        if (spec.mode[a] != 0)
            throw std::invalid_argument("data.mode: components above d must be zero");
}

}  // namespace

Field make_initial_data(const InitialDataSpec& spec, GridPtr grid, const EquationParams& eq) {
    validate(eq);
    if (grid->dim != eq.d)
        throw std::invalid_argument("grid dimension does not match equation.d");
    Field f = make_field(grid, Space::physical);

    switch (spec.kind) {
        case DataKind::gaussian: {
            const double w2 = spec.width * spec.width;
            if (!(w2 > 0.0)) throw std::invalid_argument("data.width: must be positive");
            for_each_node(*grid, [&](std::size_t i, const std::array<double, 3>& x) {
                const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                f.values[i] = spec.amplitude * std::exp(-r2 / w2);
            });
            return f;
        }
        case DataKind::plane_wave: {
            check_plane_wave(spec, grid);
            for_each_node(*grid, [&](std::size_t i, const std::array<double, 3>& x) {
                double phase = 0.0;
                for (int a = 0; a < grid->dim; ++a)
                    phase += 2.0 * M_PI * spec.mode[a] / grid->box_length[a] * x[a];
                f.values[i] = spec.amplitude * std::polar(1.0, phase);
            });
            return f;
        }
        case DataKind::soliton: {
            check_soliton(grid, eq);
            const double a = spec.amplitude;
            if (!(a > 0.0)) throw std::invalid_argument("data.amplitude: soliton needs a > 0");
            for_each_node(*grid, [&](std::size_t i, const std::array<double, 3>& x) {
                f.values[i] = a * std::sqrt(2.0) / std::cosh(a * x[0]);
            });
            return f;
        }
        case DataKind::rough: {
            const double alpha = spec.decay_exponent;
            if (!(alpha > 0.5 * grid->dim))
                throw std::invalid_argument("data.decay_exponent: must exceed d/2");
            Field hat = make_field(grid, Space::spectral);
            const double rootN = std::sqrt(static_cast<double>(grid->total_points()));
            for_each_mode(*grid, [&](std::size_t i, const std::array<double, 3>& k) {
                std::array<int, 3> m{0, 0, 0};
                for (int a = 0; a < grid->dim; ++a)
                    m[a] = static_cast<int>(std::lround(k[a] * grid->box_length[a] /
                                                        (2.0 * M_PI)));
                const double kn = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
                const double mag = rootN * std::pow(1.0 + kn, -alpha);
                hat.values[i] = std::polar(mag, rough_phase(spec.seed, m));
            });
            Field phys = inverse_dft(hat);
            const double h1 = sobolev_norm(phys, 1.0);
            const double scale = spec.amplitude / h1;
            for (auto& v : phys.values) v *= scale;
            return phys;
        }
    }
    throw std::logic_error("make_initial_data: unknown kind");
}

Field analytic_solution(const InitialDataSpec& spec, double t, GridPtr grid,
                        const EquationParams& eq) {
    validate(eq);
    if (grid->dim != eq.d)
        throw std::invalid_argument("grid dimension does not match equation.d");
    Field f = make_field(grid, Space::physical);
    switch (spec.kind) {
        case DataKind::plane_wave: {
            check_plane_wave(spec, grid);
            double k2 = 0.0;
            for (int a = 0; a < grid->dim; ++a) {
                const double ka = 2.0 * M_PI * spec.mode[a] / grid->box_length[a];
                k2 += ka * ka;
            }
            const double drift =
                t * (eq.lambda * std::pow(std::abs(spec.amplitude), eq.p) - k2);
            for_each_node(*grid, [&](std::size_t i, const std::array<double, 3>& x) {
                double phase = drift;
                for (int a = 0; a < grid->dim; ++a)
                    phase += 2.0 * M_PI * spec.mode[a] / grid->box_length[a] * x[a];
                f.values[i] = spec.amplitude * std::polar(1.0, phase);
            });
            return f;
        }
        case DataKind::soliton: {
            check_soliton(grid, eq);
            const double a = spec.amplitude;
            const std::complex<double> rot = std::polar(1.0, a * a * t);
            for_each_node(*grid, [&](std::size_t i, const std::array<double, 3>& x) {
                f.values[i] = rot * (a * std::sqrt(2.0) / std::cosh(a * x[0]));
            });
            return f;
        }
        default:
            throw std::invalid_argument("analytic_solution: no closed form for " +
                                        std::string(data_name(spec.kind)));
    }
}

Trajectory reference_solve(const Field& phi, double T, const ReferenceConfig& ref,
                           const EquationParams& eq) {
    if (!(ref.tau_ref > 0.0)) throw std::invalid_argument("reference.tau_ref: must be positive");
    if (!(T > 0.0)) throw std::invalid_argument("reference horizon must be positive");

    SchemeConfig cfg;
    cfg.params = eq;
    cfg.scheme = SchemeKind::strang;
    cfg.tau = ref.tau_ref;
    cfg.horizon_T = T;
    validate(cfg);
    const long n_max = step_count(cfg);

    // Map each requested sample time to its step index up front.
    std::vector<long> sample_steps;
    for (double t : ref.sample_times) {
        const double ratio = t / ref.tau_ref;
        const long s = static_cast<long>(std::llround(ratio));
        if (std::abs(s * ref.tau_ref - t) > 1e-9 * std::max(1.0, std::abs(t)))
            throw std::invalid_argument(
                "reference.sample_times: not an integer multiple of tau_ref");
        if (s < 0 || s > n_max)
            throw std::invalid_argument("reference.sample_times: outside [0, T]");
        if (!sample_steps.empty() && s < sample_steps.back())
            throw std::invalid_argument("reference.sample_times: must be sorted ascending");
        sample_steps.push_back(s);
    }

    Trajectory traj;
    traj.config = cfg;
    std::size_t next = 0;
    run_scheme_stream(
        phi, cfg,
        [&](long n, double t, const Field& state) {
            if (ref.sample_times.empty()) {
                traj.times.push_back(t);
                traj.states.push_back(state);
                return;
            }
            while (next < sample_steps.size() && sample_steps[next] == n) {
                traj.times.push_back(ref.sample_times[next]);
                traj.states.push_back(state);
                ++next;
            }
        },
        &traj.stats);
    if (!ref.sample_times.empty() && next != sample_steps.size())
        throw std::logic_error("reference_solve: sample bookkeeping out of sync");
    return traj;
}

double mass(const Field& f) {
    const double n = lp_norm(f, 2.0);
    return n * n;
}

double energy(const Field& f, const EquationParams& eq) {
    validate(eq);
    if (f.space != Space::physical)
        throw std::invalid_argument("energy: input must be tagged physical");
    double kinetic = 0.0;
    for (const auto& comp : gradient(f)) {
        const double n = lp_norm(comp, 2.0);
        kinetic += n * n;
    }
    const double r = eq.p + 2.0;
    const double pot = std::pow(lp_norm(f, r), r);
    return 0.5 * kinetic - (static_cast<double>(eq.lambda) / r) * pot;
}

}  // namespace splitnls
