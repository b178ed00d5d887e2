#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "splitnls/flows.hpp"

namespace splitnls {

enum class SchemeKind { modified_lie, lie, strang };
const char* scheme_name(SchemeKind k);

struct SchemeConfig {
    EquationParams params;
    SchemeKind scheme = SchemeKind::modified_lie;
    double tau = 0.1;
    double horizon_T = 1.0;
    CutoffProfile profile = CutoffProfile::smooth;
    long record_every = 1;  // run_scheme keeps every record_every-th state
};

// Throws std::invalid_argument on: invalid equation params, tau <= 0,
// tau > horizon_T, record_every < 1.
void validate(const SchemeConfig& config);

// Number of full steps: floor(horizon_T / tau), with a relative-epsilon guard
// so exact integer ratios are not lost to rounding. Always >= 1 after validate.
long step_count(const SchemeConfig& config);

// L2 bookkeeping collected along a run. step increase is the largest
// ||u_{n+1}||_2 - ||u_n||_2 over steps (negative when strictly decreasing);
// rel drift is max_n | ||u_n|| - ||u_0|| | / ||u_0||.
struct RunStats {
    double l2_initial = 0.0;
    double l2_final = 0.0;
    double l2_max_step_increase = 0.0;
    double l2_max_rel_drift = 0.0;
    long steps = 0;
};

struct Trajectory {
    SchemeConfig config;
    std::vector<double> times;
    std::vector<Field> states;
    RunStats stats;
};

// Thrown when a state stops being finite; the solver never damps or clips.
class BlowupError : public std::runtime_error {
  public:
    BlowupError(double last_finite_time_, long step_)
        : std::runtime_error("non-finite state after step " + std::to_string(step_) +
                             "; last finite time " + std::to_string(last_finite_time_)),
          last_finite_time(last_finite_time_),
          step(step_) {}
    double last_finite_time;  // -1 when even the initial state is non-finite
    long step;
};

// One step of the configured scheme applied to a physical-space state:
//   modified_lie: exp(i tau Lap) Pi_tau N(tau)
//   lie:          exp(i tau Lap) N(tau)
//   strang:       exp(i tau/2 Lap) N(tau) exp(i tau/2 Lap)
// Each factor is applied literally in sequence; nothing is fused.
Field scheme_step(const Field& state, const SchemeConfig& config);

// Sequential stepper exposing the state between steps. The initial state is
// Pi_tau(phi) for modified_lie and phi itself otherwise; both count as step 0.
class SchemeMachine {
  public:
    SchemeMachine(const Field& phi, const SchemeConfig& config);
    const Field& state() const { return state_; }
    long step_index() const { return stats_.steps; }
    double time() const { return stats_.steps * config_.tau; }
    const RunStats& stats() const { return stats_; }
    const SchemeConfig& config() const { return config_; }
    void advance();  // one scheme step; throws BlowupError on non-finite state
  private:
    SchemeConfig config_;
    Field state_;
    RunStats stats_;
    double l2_prev_ = 0.0;
};

// Runs step_count(config) steps, invoking visit(step, t, state) for every state
// including the initial one. Stats are written through stats when non-null.
void run_scheme_stream(const Field& phi, const SchemeConfig& config,
                       const std::function<void(long, double, const Field&)>& visit,
                       RunStats* stats = nullptr);

// As above but materializes the trajectory, keeping every record_every-th
// state (the initial state is always kept; so is the final one).
Trajectory run_scheme(const Field& phi, const SchemeConfig& config);

struct DuhamelForm {
    Field field;
    // Relative L2 distance between the summation form and the stepped product
    // form. Zero in exact arithmetic when the cutoff is a true projection
    // (sharp profile); measured and reported, never asserted, for smooth.
    double rel_l2_deviation = 0.0;
};

// Evaluates the discrete Duhamel summation
//   S_tau(n tau) phi + tau * sum_{k<n} S_tau((n-k) tau) [(N(tau)-I)/tau] Z(k tau)
// with Z the modified Lie iterates, and compares it with Z(n tau).
// Requires config.scheme == modified_lie. n = 0 returns the initial state.
DuhamelForm duhamel_form(const Field& phi, long n, const SchemeConfig& config);

// Binary trajectory dump. Header: u32 dim, u32 points[dim], f64 box_length[dim],
// f64 sample_dt (spacing between dumped states), u64 count. Payload: count
// states of interleaved re/im float64, native little-endian byte order.
void write_trajectory(const Trajectory& traj, const std::string& path);

struct TrajectoryDump {
    GridPtr grid;
    double sample_dt = 0.0;
    std::vector<Field> states;
};
TrajectoryDump read_trajectory(const std::string& path);

}  // namespace splitnls
