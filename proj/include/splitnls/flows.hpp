#pragma once

#include "splitnls/spectral.hpp"

namespace splitnls {

// Parameters of  d/dt u = i Lap u + i lambda |u|^p u  on the periodic box.
struct EquationParams {
    int d = 1;
    double p = 2.0;
    int lambda = -1;  // -1 defocusing, +1 focusing
};

// Largest admissible nonlinearity power for dimension d: 4 when d = 3,
// unbounded (returned as +inf) for d = 1, 2.
double critical_exponent(int d);

// Throws std::invalid_argument on: d outside {1,2,3}, p <= 0, p >= critical
// exponent, lambda outside {-1,+1}.
void validate(const EquationParams& eq);

enum class CutoffProfile { smooth, sharp };
const char* cutoff_name(CutoffProfile p);

// Radial cutoff evaluated at rho = |xi|: identically 1 on [0,1] and 0 outside
// [0,2). The smooth profile interpolates with the bump quotient
// g(2-rho) / (g(2-rho) + g(rho-1)), g(t) = exp(-1/t) for t > 0; the sharp
// profile is the indicator of the closed unit ball.
double cutoff_eval(CutoffProfile profile, double rho);

// Exact flow of the nonlinear part: pointwise phase rotation
// v -> exp(i t lambda |v|^p) v. Preserves |v| at every node.
Field nonlinear_flow(const Field& f, double t, const EquationParams& eq);

// Free Schroedinger propagator: Fourier multiplier exp(-i t |k|^2).
// Accepts either tag and returns the same tag.
Field linear_flow(const Field& f, double t);

// Frequency cutoff at scale tau^(-1/2): multiplies fhat(k) by the cutoff
// evaluated at sqrt(tau)*|k|. tau <= 0 is a domain error. Same-tag in/out.
Field projector(const Field& f, double tau, CutoffProfile profile);

// Frequency-localized propagator: linear_flow(t) after projector(tau).
Field localized_flow(const Field& f, double t, double tau, CutoffProfile profile);

// True when the grid resolves no wavenumber the cutoff acts on, i.e.
// max |k| <= 1 / sqrt(tau), so the projector multiplier is identically 1
// for either profile and the localized scheme coincides with plain Lie.
bool cutoff_inactive(const Grid& g, double tau);

}  // namespace splitnls
