#include <cmath>
#include <complex>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "splitnls/oracles.hpp"
#include "splitnls/schemes.hpp"

using namespace splitnls;
using cplx = std::complex<double>;

namespace {

const double pi = std::acos(-1.0);

Field band_limited_random(GridPtr g, std::uint32_t seed, double kcut) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Field fh = make_field(g, Space::spectral);
    for_each_mode(*g, [&](std::size_t i, const std::array<double, 3>& k) {
        const double kk = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        if (kk <= kcut) fh.values[i] = cplx(gauss(rng), gauss(rng));
    });
    return inverse_dft(fh);
}

SchemeConfig basic_config(SchemeKind kind, double tau, double T) {
    SchemeConfig c;
    c.params = EquationParams{1, 2.0, 1};
    c.scheme = kind;
    c.tau = tau;
    c.horizon_T = T;
    return c;
}

}  // namespace

TEST_SUITE("schemes") {
    TEST_CASE("config validation and step counting") {
        SchemeConfig c = basic_config(SchemeKind::lie, 0.1, 1.0);
        CHECK_NOTHROW(validate(c));
        CHECK(step_count(c) == 10);
        c.tau = 0.001;
        CHECK(step_count(c) == 1000);
        c.tau = 0.3;
        CHECK(step_count(c) == 3);  // floor: partial tail step is not taken
        c.tau = 1.0;
        CHECK(step_count(c) == 1);
        c.tau = 1.5;
        CHECK_THROWS_AS(validate(c), std::invalid_argument);
        c.tau = -0.1;
        CHECK_THROWS_AS(validate(c), std::invalid_argument);
        c.tau = 0.1;
        c.record_every = 0;
        CHECK_THROWS_AS(validate(c), std::invalid_argument);
    }

    TEST_CASE("one modified-Lie step equals the literal factor composition") {
        auto g = make_grid({64}, {7.0});
        Field phi = band_limited_random(g, 5, 1e9);
        SchemeConfig c = basic_config(SchemeKind::modified_lie, 0.05, 1.0);
        Field manual = inverse_dft(
            linear_flow(projector(forward_dft(nonlinear_flow(projector(phi, c.tau, c.profile),
                                                             c.tau, c.params)),
                                  c.tau, c.profile),
                        c.tau));
        SchemeMachine m(phi, c);
        m.advance();
        CHECK(l2_distance(m.state(), manual) <= 1e-13 * lp_norm(phi, 2.0));

        // Strang: half linear, nonlinear, half linear.
        SchemeConfig cs = basic_config(SchemeKind::strang, 0.05, 1.0);
        Field smanual = linear_flow(
            nonlinear_flow(linear_flow(phi, cs.tau / 2.0), cs.tau, cs.params), cs.tau / 2.0);
        CHECK(l2_distance(scheme_step(phi, cs), smanual) <= 1e-13 * lp_norm(phi, 2.0));

        // Lie: no projector anywhere.
        SchemeConfig cl = basic_config(SchemeKind::lie, 0.05, 1.0);
        Field lmanual = linear_flow(nonlinear_flow(phi, cl.tau, cl.params), cl.tau);
        CHECK(l2_distance(scheme_step(phi, cl), lmanual) <= 1e-13 * lp_norm(phi, 2.0));
    }

    TEST_CASE("plane wave is propagated exactly by every scheme") {
        auto g = make_grid({64}, {2.0 * pi});
        EquationParams eq{1, 2.0, -1};
        InitialDataSpec spec;
        spec.kind = DataKind::plane_wave;
        spec.amplitude = 1.3;
        spec.mode = {3, 0, 0};
        Field phi = make_initial_data(spec, g, eq);
        for (auto kind : {SchemeKind::modified_lie, SchemeKind::lie, SchemeKind::strang}) {
            SchemeConfig c = basic_config(kind, 0.01, 1.0);
            c.params = eq;
            double worst = 0.0;
            run_scheme_stream(phi, c, [&](long, double t, const Field& u) {
                Field exact = analytic_solution(spec, t, g, eq);
                worst = std::max(worst, l2_distance(u, exact));
            });
            CHECK(worst <= 1e-10 * lp_norm(phi, 2.0));
        }
    }

    TEST_CASE("soliton error of Strang at tau = 1e-3 stays under 1e-5") {
        auto g = make_grid({1024}, {60.0});
        EquationParams eq{1, 2.0, 1};
        InitialDataSpec spec;
        spec.kind = DataKind::soliton;
        Field phi = make_initial_data(spec, g, eq);
        SchemeConfig c = basic_config(SchemeKind::strang, 1e-3, 1.0);
        Trajectory traj = run_scheme(phi, c);
        Field exact = analytic_solution(spec, 1.0, g, eq);
        CHECK(l2_distance(traj.states.back(), exact) < 1e-5);
    }

    TEST_CASE("modified Lie never increases the L2 norm") {
        auto g = make_grid({512}, {30.0});
        EquationParams eq{1, 3.0, 1};
        InitialDataSpec spec;
        spec.kind = DataKind::rough;
        spec.decay_exponent = 1.55;
        spec.seed = 9;
        Field phi = make_initial_data(spec, g, eq);
        SchemeConfig c = basic_config(SchemeKind::modified_lie, 1e-2, 2.0);
        c.params = eq;
        RunStats stats;
        run_scheme_stream(phi, c, [](long, double, const Field&) {}, &stats);
        CHECK(stats.steps == 200);
        CHECK(stats.l2_max_step_increase <= 1e-12);
        CHECK(stats.l2_final <= stats.l2_initial * (1.0 + 1e-12));
    }

    TEST_CASE("Lie and Strang conserve the L2 norm over a thousand steps") {
        auto g = make_grid({256}, {20.0});
        EquationParams eq{1, 2.0, -1};
        InitialDataSpec spec;
        spec.kind = DataKind::gaussian;
        Field phi = make_initial_data(spec, g, eq);
        for (auto kind : {SchemeKind::lie, SchemeKind::strang}) {
            SchemeConfig c = basic_config(kind, 1e-3, 1.0);
            c.params = eq;
            RunStats stats;
            run_scheme_stream(phi, c, [](long, double, const Field&) {}, &stats);
            CHECK(stats.steps == 1000);
            CHECK(stats.l2_max_rel_drift <= 1e-11);
        }
    }

    TEST_CASE("recording: stride, endpoints, tau equal to horizon") {
        auto g = make_grid({32}, {5.0});
        Field phi = band_limited_random(g, 3, 1e9);
        SchemeConfig c = basic_config(SchemeKind::lie, 0.25, 1.0);
        c.record_every = 3;
        Trajectory traj = run_scheme(phi, c);
        // Steps 0..4; kept: 0, 3, plus the final step 4.
        REQUIRE(traj.times.size() == 3);
        CHECK(traj.times[0] == doctest::Approx(0.0));
        CHECK(traj.times[1] == doctest::Approx(0.75));
        CHECK(traj.times[2] == doctest::Approx(1.0));
        CHECK(traj.states.size() == 3);

        SchemeConfig c1 = basic_config(SchemeKind::lie, 1.0, 1.0);
        Trajectory t1 = run_scheme(phi, c1);
        REQUIRE(t1.times.size() == 2);
        CHECK(t1.times[0] == 0.0);
        CHECK(t1.times[1] == doctest::Approx(1.0));
    }

    TEST_CASE("blowup is reported, never damped") {
        auto g = make_grid({32}, {4.0});
        EquationParams eq{1, 2.0, 1};
        Field phi = make_field(g);
        // Large enough that |phi|^2 overflows to inf inside the phase rotation.
        for (auto& v : phi.values) v = cplx(1e200, 0.0);
        SchemeConfig c = basic_config(SchemeKind::modified_lie, 0.1, 1.0);
        c.params = eq;
        try {
            run_scheme(phi, c);
            FAIL("expected BlowupError");
        } catch (const BlowupError& e) {
            CHECK(e.step == 1);
            CHECK(e.last_finite_time == 0.0);
        }

        Field bad = make_field(g);
        bad.values[0] = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
        try {
            run_scheme(bad, c);
            FAIL("expected BlowupError");
        } catch (const BlowupError& e) {
            CHECK(e.last_finite_time == -1.0);
        }
    }

    TEST_CASE("discrete Duhamel identity is exact for the sharp cutoff") {
        auto g = make_grid({128}, {10.0});
        SchemeConfig c = basic_config(SchemeKind::modified_lie, 0.02, 1.0);
        c.profile = CutoffProfile::sharp;
        Field phi = band_limited_random(g, 21, 1e9);
        DuhamelForm one = duhamel_form(phi, 1, c);
        CHECK(one.rel_l2_deviation <= 1e-12);
        DuhamelForm eight = duhamel_form(phi, 8, c);
        CHECK(eight.rel_l2_deviation <= 1e-10);

        DuhamelForm zero = duhamel_form(phi, 0, c);
        CHECK(l2_distance(zero.field, projector(phi, c.tau, c.profile)) <=
              1e-14 * lp_norm(phi, 2.0));
        CHECK(zero.rel_l2_deviation == 0.0);
    }

    TEST_CASE("smooth cutoff breaks the identity by a measurable amount") {
        auto g = make_grid({256}, {10.0});
        SchemeConfig c = basic_config(SchemeKind::modified_lie, 0.05, 1.0);
        c.profile = CutoffProfile::smooth;
        // Random data with energy in the transition band of the cutoff.
        Field phi = band_limited_random(g, 22, 1e9);
        // The summation applies the cutoff once to the free term where the
        // product form has applied it n times; transition-band content makes
        // the two differ at order one of its mass, never catastrophically.
        DuhamelForm dev = duhamel_form(phi, 8, c);
        CHECK(dev.rel_l2_deviation > 1e-6);
        CHECK(dev.rel_l2_deviation < 1.0);
    }

    TEST_CASE("trajectory dump round trip") {
        auto g = make_grid({16, 8}, {3.0, 3.0});
        Field phi = band_limited_random(g, 13, 1e9);
        SchemeConfig c = basic_config(SchemeKind::strang, 0.125, 1.0);
        c.params.d = 2;
        c.record_every = 2;
        Trajectory traj = run_scheme(phi, c);
        const std::string path = "traj_roundtrip_test.bin";
        write_trajectory(traj, path);
        TrajectoryDump dump = read_trajectory(path);
        std::remove(path.c_str());
        CHECK(dump.grid->dim == 2);
        CHECK(dump.grid->points[0] == 16);
        CHECK(dump.grid->points[1] == 8);
        CHECK(dump.grid->box_length[0] == 3.0);
        CHECK(dump.sample_dt == doctest::Approx(0.25));
        REQUIRE(dump.states.size() == traj.states.size());
        for (std::size_t s = 0; s < dump.states.size(); ++s)
            for (std::size_t i = 0; i < traj.states[s].values.size(); ++i)
                CHECK(dump.states[s].values[i] == traj.states[s].values[i]);
    }

    TEST_CASE("identical runs are bitwise identical") {
        auto g = make_grid({128}, {10.0});
        Field phi = band_limited_random(g, 31, 1e9);
        SchemeConfig c = basic_config(SchemeKind::modified_lie, 0.01, 0.5);
        Trajectory a = run_scheme(phi, c);
        Trajectory b = run_scheme(phi, c);
        REQUIRE(a.states.size() == b.states.size());
        for (std::size_t s = 0; s < a.states.size(); ++s)
            for (std::size_t i = 0; i < a.states[s].values.size(); ++i)
                REQUIRE(a.states[s].values[i] == b.states[s].values[i]);
    }
}
