#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "splitnls/flows.hpp"

using namespace splitnls;
using cplx = std::complex<double>;

namespace {

Field random_field(GridPtr g, std::uint32_t seed, double scale = 1.0) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, scale);
    Field f = make_field(g);
    for (auto& v : f.values) v = cplx(gauss(rng), gauss(rng));
    return f;
}

}  // namespace

TEST_SUITE("flows") {
    TEST_CASE("equation validation diagnostics") {
        EquationParams eq;
        eq.d = 4;
        CHECK_THROWS_WITH_AS(validate(eq), "equation.d: must be 1, 2 or 3",
                             std::invalid_argument);
        eq.d = 1;
        eq.p = 0.0;
        CHECK_THROWS_WITH_AS(validate(eq), "equation.p: must satisfy p > 0",
                             std::invalid_argument);
        eq.d = 3;
        eq.p = 5.0;
        CHECK_THROWS_WITH_AS(validate(eq), "equation.p: must satisfy p < 4 when d = 3",
                             std::invalid_argument);
        eq.p = 4.0;
        CHECK_THROWS_WITH_AS(validate(eq), "equation.p: must satisfy p < 4 when d = 3",
                             std::invalid_argument);
        eq.p = 2.0;
        eq.lambda = 0;
        CHECK_THROWS_WITH_AS(validate(eq), "equation.lambda: must be -1 or +1",
                             std::invalid_argument);
        eq.lambda = 1;
        CHECK_NOTHROW(validate(eq));
        // d = 1, 2 admit any positive power.
        eq.d = 2;
        eq.p = 7.5;
        CHECK_NOTHROW(validate(eq));
        CHECK(critical_exponent(3) == 4.0);
        CHECK(std::isinf(critical_exponent(1)));
    }

    TEST_CASE("cutoff profiles: plateau, support, smooth interpolation") {
        for (auto prof : {CutoffProfile::smooth, CutoffProfile::sharp}) {
            CHECK(cutoff_eval(prof, 0.0) == 1.0);
            CHECK(cutoff_eval(prof, 0.7) == 1.0);
            CHECK(cutoff_eval(prof, 1.0) == 1.0);
            CHECK(cutoff_eval(prof, 2.0) == 0.0);
            CHECK(cutoff_eval(prof, 3.1) == 0.0);
        }
        CHECK(cutoff_eval(CutoffProfile::sharp, 1.0000001) == 0.0);
        const double mid = cutoff_eval(CutoffProfile::smooth, 1.5);
        CHECK(mid == doctest::Approx(0.5).epsilon(1e-12));
        double prev = 1.0;
        for (double rho = 1.0; rho <= 2.0; rho += 0.01) {
            const double c = cutoff_eval(CutoffProfile::smooth, rho);
            CHECK(c <= prev + 1e-15);
            prev = c;
        }
    }

    TEST_CASE("nonlinear flow: pointwise golden and modulus preservation") {
        auto g = make_grid({8}, {1.0});
        EquationParams eq{1, 2.0, 1};
        Field f = make_field(g);
        for (auto& v : f.values) v = cplx(2.0, 0.0);
        Field out = nonlinear_flow(f, 0.5, eq);
        // exp(i*0.5*1*4)*2 = 2 e^{2i}
        CHECK(out.values[0].real() == doctest::Approx(-0.8322936730942848).epsilon(1e-12));
        CHECK(out.values[0].imag() == doctest::Approx(1.8185948536513634).epsilon(1e-12));

        auto big = make_grid({4096}, {10.0});
        for (double p : {0.5, 1.0, 2.0, 3.0}) {
            EquationParams ep{1, p, -1};
            for (double t : {1e-3, 1e-1, 1.0}) {
                Field in = random_field(big, 17);
                Field o = nonlinear_flow(in, t, ep);
                for (std::size_t i = 0; i < in.values.size(); ++i) {
                    const double a = std::abs(in.values[i]), b = std::abs(o.values[i]);
                    REQUIRE(std::abs(a - b) <= 1e-15 * std::max(1.0, a));
                }
                for (double r : {2.0, 4.0})
                    CHECK(lp_norm(o, r) == doctest::Approx(lp_norm(in, r)).epsilon(1e-13));
            }
        }
    }

    TEST_CASE("nonlinear flow conjugation: N(t) conj = conj N(-t)") {
        auto g = make_grid({64}, {3.0});
        EquationParams eq{1, 1.5, 1};
        Field f = random_field(g, 23);
        Field fbar = f;
        for (auto& v : fbar.values) v = std::conj(v);
        Field a = nonlinear_flow(fbar, 0.4, eq);
        Field b = nonlinear_flow(f, -0.4, eq);
        for (std::size_t i = 0; i < f.values.size(); ++i)
            CHECK(std::abs(a.values[i] - std::conj(b.values[i])) < 1e-14);
    }

    TEST_CASE("linear flow: semigroup, unitarity, zero time") {
        auto g = make_grid({128}, {5.0});
        Field f = random_field(g, 5);
        Field two = linear_flow(linear_flow(f, 0.3), 0.7);
        Field one = linear_flow(f, 1.0);
        // Phase arguments reach t * kmax^2, so rounding grows with the grid.
        const double kmax = g->max_wavenumber();
        CHECK(l2_distance(two, one) <= 1e-15 * kmax * kmax * lp_norm(f, 2.0));
        CHECK(lp_norm(linear_flow(f, 2.7), 2.0) == doctest::Approx(lp_norm(f, 2.0)).epsilon(1e-13));
        CHECK(l2_distance(linear_flow(f, 0.0), f) <= 1e-14 * lp_norm(f, 2.0));
        // Same multiplier whether applied in physical or spectral form.
        Field via_spec = inverse_dft(linear_flow(forward_dft(f), 0.9));
        CHECK(l2_distance(via_spec, linear_flow(f, 0.9)) <= 1e-13 * lp_norm(f, 2.0));
    }

    TEST_CASE("projector: contraction, idempotence, composition") {
        auto g = make_grid({256}, {10.0});
        Field f = random_field(g, 31);
        for (auto prof : {CutoffProfile::smooth, CutoffProfile::sharp}) {
            for (double tau : {1e-2, 1e-1, 1.0}) {
                Field pf = projector(f, tau, prof);
                CHECK(lp_norm(pf, 2.0) <= lp_norm(f, 2.0) * (1.0 + 1e-13));
                Field loc = localized_flow(f, 0.8, tau, prof);
                Field comp = linear_flow(projector(f, tau, prof), 0.8);
                CHECK(l2_distance(loc, comp) <= 1e-14 * lp_norm(f, 2.0));
            }
        }
        // Multiplier values in {0,1} make the sharp projector exactly
        // idempotent; check on spectral data to avoid transform round-off.
        Field fh = forward_dft(f);
        Field once = projector(fh, 0.3, CutoffProfile::sharp);
        Field twice = projector(once, 0.3, CutoffProfile::sharp);
        for (std::size_t i = 0; i < once.values.size(); ++i)
            CHECK(once.values[i] == twice.values[i]);
        CHECK_THROWS_AS(projector(f, 0.0, CutoffProfile::smooth), std::domain_error);
        CHECK_THROWS_AS(projector(f, -1.0, CutoffProfile::sharp), std::domain_error);
    }

    TEST_CASE("cutoff_inactive matches the multiplier plateau") {
        auto g = make_grid({64}, {8.0});  // max |k| = 8 pi
        const double kmax = g->max_wavenumber();
        const double tau_edge = 1.0 / (kmax * kmax);
        CHECK(cutoff_inactive(*g, tau_edge * 0.999));
        CHECK_FALSE(cutoff_inactive(*g, tau_edge * 1.001));
        // Inactive: the projector is the identity for both profiles.
        Field f = random_field(g, 41);
        for (auto prof : {CutoffProfile::smooth, CutoffProfile::sharp}) {
            Field pf = projector(f, tau_edge * 0.999, prof);
            CHECK(l2_distance(pf, f) <= 1e-14 * lp_norm(f, 2.0));
        }
    }

    TEST_CASE("stepped-nonlinearity pointwise bound, constant 1") {
        // |(N(tau) - I)/tau v| <= |v|^{p+1} over random scalars.
        std::mt19937 rng(71);
        std::uniform_real_distribution<double> amp(0.0, 3.0), ang(0.0, 6.2831853);
        std::uniform_real_distribution<double> taus(1e-4, 1.0), ps(0.25, 4.0);
        for (int trial = 0; trial < 20000; ++trial) {
            const cplx v = std::polar(amp(rng), ang(rng));
            const double tau = taus(rng), p = ps(rng);
            const int lambda = (trial % 2 == 0) ? 1 : -1;
            const cplx dv = (std::polar(1.0, tau * lambda * std::pow(std::abs(v), p)) - 1.0) * v /
                            tau;
            REQUIRE(std::abs(dv) <= std::pow(std::abs(v), p + 1.0) * (1.0 + 1e-12));
        }
    }

    TEST_CASE("stepped-nonlinearity Lipschitz bound, constant p + 1") {
        // |(N v - v)/tau - (N w - w)/tau| <= (p+1) |v - w| (|v|^p + |w|^p).
        std::mt19937 rng(72);
        std::uniform_real_distribution<double> amp(0.0, 2.5), ang(0.0, 6.2831853);
        std::uniform_real_distribution<double> taus(1e-4, 1.0);
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            for (int trial = 0; trial < 5000; ++trial) {
                const cplx v = std::polar(amp(rng), ang(rng));
                const cplx w = std::polar(amp(rng), ang(rng));
                const double tau = taus(rng);
                const int lambda = (trial % 2 == 0) ? 1 : -1;
                auto step = [&](cplx z) {
                    return (std::polar(1.0, tau * lambda * std::pow(std::abs(z), p)) - 1.0) * z /
                           tau;
                };
                const double lhs = std::abs(step(v) - step(w));
                const double rhs = (p + 1.0) * std::abs(v - w) *
                                   (std::pow(std::abs(v), p) + std::pow(std::abs(w), p));
                REQUIRE(lhs <= rhs * (1.0 + 1e-12));
            }
        }
    }

    TEST_CASE("stepped-nonlinearity gradient bound on the Gaussian, constant p + 1") {
        // For f = e^{-x^2}: |d/dx (N(tau) - I)/tau f| <= (p+1) |f|^p |f'|,
        // with the derivative evaluated analytically.
        for (double p : {1.0, 2.0, 3.0}) {
            for (double tau : {1e-3, 1e-2, 1e-1, 1.0}) {
                for (int lambda : {-1, 1}) {
                    for (int i = 0; i <= 400; ++i) {
                        const double x = -5.0 + 10.0 * i / 400.0;
                        const double f = std::exp(-x * x), fp = -2.0 * x * f;
                        const double theta = tau * lambda * std::pow(f, p);
                        const double thetap = tau * lambda * p * std::pow(f, p - 1.0) * fp;
                        const cplx e = std::polar(1.0, theta);
                        const cplx deriv = (e * cplx(0.0, thetap) * f + (e - 1.0) * fp) / tau;
                        const double rhs = (p + 1.0) * std::pow(f, p) * std::abs(fp);
                        REQUIRE(std::abs(deriv) <= rhs * (1.0 + 1e-12));
                    }
                }
            }
        }
    }

    TEST_CASE("cutoff loss bound, sharp profile, constant 1") {
        // ||Pi_tau f - f||_2 <= sqrt(tau) ||grad f||_2.
        auto g = make_grid({128}, {12.0});
        for (int trial = 0; trial < 20; ++trial) {
            Field f = random_field(g, 100 + trial);
            const double grad2 = sobolev_norm(f, 1.0);  // not the seminorm; compute directly
            double semi = 0.0;
            Field fh = forward_dft(f);
            for_each_mode(*g, [&](std::size_t i, const std::array<double, 3>& k) {
                semi += k[0] * k[0] * std::norm(fh.values[i]);
            });
            semi = std::sqrt(semi * g->cell_volume());
            CHECK(semi <= grad2);
            for (double tau : {1e-3, 3e-3, 1e-2, 3e-2, 1e-1}) {
                Field pf = projector(f, tau, CutoffProfile::sharp);
                REQUIRE(l2_distance(pf, f) <= std::sqrt(tau) * semi * (1.0 + 1e-12));
            }
        }
    }

    TEST_CASE("projected gradient bound: 1/sqrt(tau) sharp, 1.2/sqrt(tau) smooth") {
        auto g = make_grid({256}, {6.0});
        for (int trial = 0; trial < 10; ++trial) {
            Field f = random_field(g, 200 + trial);
            const double l2 = lp_norm(f, 2.0);
            for (double tau : {1e-3, 1e-2, 1e-1}) {
                Field ps = projector(f, tau, CutoffProfile::sharp);
                REQUIRE(lp_norm(gradient(ps)[0], 2.0) <= l2 / std::sqrt(tau) * (1.0 + 1e-12));
                Field pm = projector(f, tau, CutoffProfile::smooth);
                REQUIRE(lp_norm(gradient(pm)[0], 2.0) <=
                        1.2 * l2 / std::sqrt(tau) * (1.0 + 1e-12));
            }
        }
    }
}
