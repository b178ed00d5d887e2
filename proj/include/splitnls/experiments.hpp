#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "splitnls/oracles.hpp"

namespace splitnls {

// Space-time exponent pair (q, r); q = +inf means the sup-in-time norm.
struct AdmissiblePair {
    double q = std::numeric_limits<double>::infinity();
    double r = 2.0;
};

// Scaling-admissibility: 2/q + d/r = d/2 with q, r >= 2 and (q, r, d) != (2, inf, 2).
bool pair_is_admissible(const AdmissiblePair& pair, int d, double tol = 1e-12);

// The pair attached to the nonlinearity: q = 4(p+2)/(d p), r = p + 2.
// Admissibility is checked exactly in integer arithmetic when p is integral,
// within 1e-12 otherwise; failure is a logic error in the construction.
AdmissiblePair admissible_q0r0(const EquationParams& eq);

struct LadderSpec {
    double tau0 = 1.0 / 32.0;  // coarsest step
    int levels = 6;            // tau_j = tau0 * 2^-j, j = 0 .. levels-1
};
std::vector<double> ladder_taus(const LadderSpec& spec);

// Log-log least-squares fit of error against tau. Rows with nonpositive or
// non-finite error are excluded and recorded; a fit needs >= 3 usable rows.
struct RateFit {
    bool valid = false;
    double slope = 0.0;
    double intercept = 0.0;  // log err = slope * log tau + intercept
    std::vector<double> pairwise;
    std::vector<int> excluded;
};
RateFit rate_fit(const std::vector<double>& taus, const std::vector<double>& errors);

enum class NormWeight { lr, w1r };

// Discrete space-time norm of a trajectory sampled at spacing dt:
//   q finite: (dt * sum_n ||u_n||^q)^(1/q),   q = inf: max_n ||u_n||,
// where ||.|| is L^r or W^{1,r} per weight. Admissibility of the pair is the
// caller's concern; the norm itself is defined for any q, r >= 1.
double discrete_strichartz_norm(const Trajectory& traj, const AdmissiblePair& pair,
                                NormWeight weight);

enum class ReferenceKind { analytic, fine_strang, self_scheme };
const char* reference_name(ReferenceKind k);

// Shared inputs of every experiment.
struct ExperimentSetup {
    EquationParams equation;
    GridPtr grid;
    InitialDataSpec data;
    SchemeKind scheme = SchemeKind::modified_lie;
    CutoffProfile profile = CutoffProfile::smooth;
    double horizon_T = 1.0;
    LadderSpec ladder;
    int jobs = 1;
    bool verbose = false;
};

struct ConvergeKnobs {
    ReferenceKind reference = ReferenceKind::self_scheme;
    double tau_ref = 0.0;  // fine_strang; 0 selects min(tau)/32
    long divider = 64;     // self_scheme refinement factor
    double tol_ref = 1e-8;
    std::optional<std::array<double, 2>> slope_band;
    std::optional<std::array<double, 2>> envelope;  // {exponent, factor}
    double exact_floor = 1e-9;  // all errors below: exact regime, no fit asserted
    std::string error_norm = "max_l2";  // or "final_l2"
    bool compare_projected = false;     // diagnostic: project the reference by Pi_tau
};

struct ReportRow {
    double tau = 0.0;
    std::vector<double> metrics;  // aligned with ExperimentReport::metric_names
    bool valid = true;
    std::string invalid_reason;
    double wall_ms = 0.0;  // CSV only, never serialized to JSON
    double l2_max_step_increase = 0.0;
    double l2_max_rel_drift = 0.0;
    bool cutoff_inactive = false;
};

struct ExperimentReport {
    std::string experiment;
    std::vector<std::string> metric_names;
    std::vector<ReportRow> rows;
    std::map<std::string, RateFit> rates;
    std::map<std::string, double> scalars;
    std::map<std::string, bool> flags;
    std::vector<std::string> warnings;
    // Per-row estimate of the reference error at the row's sample times
    // (cross-row for self_scheme, coarsened-step for fine_strang); empty when
    // the reference is analytic.
    std::vector<double> reference_uncertainty;
    bool pass = false;
    bool complete = true;
};

// Error-vs-tau ladder for the configured scheme against the chosen reference.
ExperimentReport convergence_ladder(const ExperimentSetup& setup, const ConvergeKnobs& knobs);

// Discrete space-time W^{1,r} norms of the scheme trajectory across the ladder;
// passes when each pair's max/min ratio over valid rows stays within bound.
// Requires scheme == modified_lie.
ExperimentReport stability_sweep(const ExperimentSetup& setup,
                                 const std::vector<AdmissiblePair>& pairs, double bound);

// Same sweep for the cutoff free evolution S_tau(n tau) phi, reported as ratios
// against ||phi||_2. Pairs must be admissible.
ExperimentReport strichartz_probe(const ExperimentSetup& setup,
                                  const std::vector<AdmissiblePair>& pairs, double bound);

// Distance between the summed interaction term of the stepped scheme applied to
// the exact solution and its continuous Duhamel counterpart, maximized over
// step boundaries; one metric per ladder row plus D(tau)/sqrt(tau). The time
// integral uses composite midpoint quadrature on the tau_ref mesh; rerunning at
// tau_ref/2 gives the quadrature-resolution estimate per row. Requires a smooth
// datum (not rough) and tau_ref <= min(tau)/32.
ExperimentReport duhamel_defect(const ExperimentSetup& setup, double tau_ref, double bound);

// Single run at the given step size: final-state norms, conservation flags,
// optionally keeping the recorded trajectory.
ExperimentReport simulate_run(const ExperimentSetup& setup, double tau, long record_every,
                              Trajectory* keep = nullptr);

}  // namespace splitnls
