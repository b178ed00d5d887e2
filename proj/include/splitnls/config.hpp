#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "splitnls/experiments.hpp"

namespace splitnls {

// Configuration failure classes, mapped to distinct process exit codes:
// parse = malformed JSON text, schema = wrong shape (unknown/missing field,
// wrong type), invariant = well-formed but violates a value constraint.
class ConfigError : public std::runtime_error {
  public:
    enum class Kind { parse, schema, invariant };
    ConfigError(Kind kind_, const std::string& msg) : std::runtime_error(msg), kind(kind_) {}
    Kind kind;
};

// A (q, r) entry as written in the config: either the marker "q0r0" (resolved
// from the equation parameters at run time) or an explicit pair.
struct PairSpec {
    bool q0r0 = false;
    AdmissiblePair pair;
};

struct ExperimentConfig {
    std::string kind;  // simulate | converge | stability | probe | defect
    std::uint64_t seed = 0;

    EquationParams equation;
    std::vector<int> grid_points;
    std::vector<double> box_length;
    InitialDataSpec data;

    SchemeKind scheme = SchemeKind::modified_lie;
    CutoffProfile profile = CutoffProfile::smooth;
    double tau = 0.0;  // simulate only; ladder experiments take steps from ladder
    double horizon_T = 1.0;
    long record_every = 1;

    LadderSpec ladder;

    ReferenceKind reference = ReferenceKind::self_scheme;
    double tau_ref = 0.0;
    long divider = 64;
    double tol_ref = 1e-8;

    bool has_slope_band = false;
    double slope_band_lo = 0.0, slope_band_hi = 0.0;
    bool has_envelope = false;
    double envelope_exponent = 0.0, envelope_factor = 0.0;
    double exact_floor = 1e-9;
    std::string error_norm = "max_l2";
    bool compare_projected = false;

    std::vector<PairSpec> pairs;
    double bound = 4.0;

    std::string out_dir = "out";
    bool dump_trajectory = false;
};

// Strict parse: unknown fields, wrong types and missing required fields are
// schema errors; value constraints are invariant errors, reported as
// "<path>: <reason>". The input must be a JSON object.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Canonical serialization: every field present with defaults materialized,
// keys sorted, floats printed with %.17g so parse(echo(c)) == c exactly and
// echo is a fixed point. Byte-identical for equal configs.
std::string canonical_config_json(const ExperimentConfig& cfg);

// FNV-1a 64 over the canonical serialization, as 16 lowercase hex digits.
std::string config_hash(const ExperimentConfig& cfg);

// Resolves PairSpec entries ("q0r0" markers) against the equation.
std::vector<AdmissiblePair> resolve_pairs(const ExperimentConfig& cfg);

}  // namespace splitnls
