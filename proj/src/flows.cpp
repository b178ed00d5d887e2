#include "splitnls/flows.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace splitnls {

double critical_exponent(int d) {
    if (d == 3) return 4.0;
    return std::numeric_limits<double>::infinity();
}

void validate(const EquationParams& eq) {
    if (eq.d < 1 || eq.d > 3)
        throw std::invalid_argument("equation.d: must be 1, 2 or 3");
    if (!(eq.p > 0.0) || !std::isfinite(eq.p))
        throw std::invalid_argument("equation.p: must satisfy p > 0");
    if (eq.p >= critical_exponent(eq.d))
        throw std::invalid_argument("equation.p: must satisfy p < 4 when d = 3");
    if (eq.lambda != -1 && eq.lambda != 1)
        throw std::invalid_argument("equation.lambda: must be -1 or +1");
}

const char* cutoff_name(CutoffProfile p) {
    return p == CutoffProfile::smooth ? "smooth" : "sharp";
}

double cutoff_eval(CutoffProfile profile, double rho) {
    rho = std::abs(rho);
    if (rho <= 1.0) return 1.0;
    if (profile == CutoffProfile::sharp) return 0.0;
    if (rho >= 2.0) return 0.0;
    const double g_outer = std::exp(-1.0 / (2.0 - rho));
    const double g_inner = std::exp(-1.0 / (rho - 1.0));
    return g_outer / (g_outer + g_inner);
}

Field nonlinear_flow(const Field& f, double t, const EquationParams& eq) {
    if (f.space != Space::physical)
        throw std::invalid_argument("nonlinear_flow: input must be tagged physical");
    validate(eq);
    Field out = f;
    const double c = t * static_cast<double>(eq.lambda);
    for (auto& v : out.values) {
        const double a = std::abs(v);
        if (a > 0.0) v *= std::polar(1.0, c * std::pow(a, eq.p));
    }
    return out;
}

namespace {

template <typename Mult>
Field apply_multiplier(const Field& f, Mult&& m) {
    const bool phys = (f.space == Space::physical);
    Field hat = phys ? forward_dft(f) : f;
    for_each_mode(*f.grid, [&](std::size_t i, const std::array<double, 3>& k) {
        hat.values[i] *= m(k);
    });
    return phys ? inverse_dft(hat) : hat;
}

}  // namespace

Field linear_flow(const Field& f, double t) {
    return apply_multiplier(f, [t](const std::array<double, 3>& k) {
        const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        return std::polar(1.0, -t * k2);
    });
}

Field projector(const Field& f, double tau, CutoffProfile profile) {
    if (!(tau > 0.0)) throw std::domain_error("projector: tau must be positive");
    const double root = std::sqrt(tau);
    return apply_multiplier(f, [root, profile](const std::array<double, 3>& k) {
        const double kn = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        return std::complex<double>(cutoff_eval(profile, root * kn), 0.0);
    });
}

Field localized_flow(const Field& f, double t, double tau, CutoffProfile profile) {
    return linear_flow(projector(f, tau, profile), t);
}

bool cutoff_inactive(const Grid& g, double tau) {
    if (!(tau > 0.0)) throw std::domain_error("cutoff_inactive: tau must be positive");
    return g.max_wavenumber() <= 1.0 / std::sqrt(tau);
}

}  // namespace splitnls
