#pragma once

#include <cstdint>
#include <string>

#include "splitnls/schemes.hpp"

namespace splitnls {

enum class DataKind { gaussian, plane_wave, soliton, rough };
const char* data_name(DataKind k);

struct InitialDataSpec {
    DataKind kind = DataKind::gaussian;
    double amplitude = 1.0;
    double width = 1.0;              // gaussian: exp(-|x/width|^2)
    std::array<int, 3> mode{1, 0, 0};  // plane_wave: integer mode per axis
    double decay_exponent = 1.55;    // rough: spectral law (1+|k|)^(-alpha)
    std::uint64_t seed = 0;          // rough: phase seed
};

// Builds the requested datum on the grid. Throws std::invalid_argument when the
// spec does not fit the grid or equation:
//   plane_wave needs each mode in [-points/2, points/2);
//   soliton needs d = 1, p = 2, lambda = +1;
//   rough needs decay_exponent > d/2 (so the datum has finite L2 norm).
// The rough datum draws i.i.d. phases e^{i theta_m} per signed mode from a
// counter-based generator keyed by (seed, mode), so refining the grid keeps
// the phases of all shared modes; the spectral profile sqrt(N) (1+|k|)^(-alpha)
// is then rescaled to amplitude in the H^1 norm.
Field make_initial_data(const InitialDataSpec& spec, GridPtr grid, const EquationParams& eq);

bool has_analytic_solution(const InitialDataSpec& spec);

// Exact solution at time t for data kinds that admit one:
//   plane_wave: A e^{i k.x} e^{i t (lambda |A|^p - |k|^2)}
//   soliton:    a sqrt(2) sech(a x) e^{i a^2 t}   (d = 1, p = 2, lambda = +1)
Field analytic_solution(const InitialDataSpec& spec, double t, GridPtr grid,
                        const EquationParams& eq);

// Phase angle in [0, 2 pi) for the rough datum at a signed mode; exposed so
// tests can pin the generator.
double rough_phase(std::uint64_t seed, const std::array<int, 3>& mode);

struct ReferenceConfig {
    double tau_ref = 1e-4;
    std::vector<double> sample_times;  // integer multiples of tau_ref; empty = every step
    double tol_ref = 1e-8;             // advisory self-consistency tolerance
};

// High-resolution reference trajectory: Strang splitting at tau_ref, recorded at
// the requested sample times. Throws when a sample time is not an integer
// multiple of tau_ref (within rounding) or lies outside [0, T].
Trajectory reference_solve(const Field& phi, double T, const ReferenceConfig& ref,
                           const EquationParams& eq);

// Conserved functionals of the continuous equation.
double mass(const Field& f);
double energy(const Field& f, const EquationParams& eq);

}  // namespace splitnls
