#include "splitnls/config.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "json.hpp"
#include "splitnls/report_io.hpp"

namespace splitnls {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& msg) {
    throw ConfigError(ConfigError::Kind::schema, msg);
}
[[noreturn]] void invariant_error(const std::string& msg) {
    throw ConfigError(ConfigError::Kind::invariant, msg);
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            schema_error(path.empty() ? it.key() + ": unknown field"
                                      : path + "." + it.key() + ": unknown field");
}

const json* find(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
}

const json& require(const json& obj, const std::string& path, const std::string& key) {
    const json* j = find(obj, key);
    if (!j) schema_error(path + key + ": required field missing");
    return *j;
}

double get_num(const json& j, const std::string& path) {
    if (!j.is_number()) schema_error(path + ": must be a number");
    return j.get<double>();
}

long get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) schema_error(path + ": must be an integer");
    return j.get<long>();
}

std::uint64_t get_uint(const json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
        schema_error(path + ": must be a nonnegative integer");
    return j.get<std::uint64_t>();
}

bool get_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) schema_error(path + ": must be a boolean");
    return j.get<bool>();
}

std::string get_str(const json& j, const std::string& path) {
    if (!j.is_string()) schema_error(path + ": must be a string");
    return j.get<std::string>();
}

const json& get_obj(const json& j, const std::string& path) {
    if (!j.is_object()) schema_error(path + ": must be an object");
    return j;
}

const json& get_arr(const json& j, const std::string& path) {
    if (!j.is_array()) schema_error(path + ": must be an array");
    return j;
}

double parse_q_or_r(const json& j, const std::string& path) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        schema_error(path + ": must be a number or \"inf\"");
    }
    return get_num(j, path);
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(ConfigError::Kind::parse, e.what());
    }
    if (!root.is_object()) schema_error("config: top level must be a JSON object");

    ExperimentConfig cfg;
    check_keys(root, "",
               {"experiment", "equation", "grid", "data", "scheme", "reference", "seed",
                "output"});

    if (const json* j = find(root, "seed")) cfg.seed = get_uint(*j, "seed");

    // equation
    {
        const json& eq = get_obj(require(root, "", "equation"), "equation");
        check_keys(eq, "equation", {"d", "p", "lambda"});
        cfg.equation.d = static_cast<int>(get_int(require(eq, "equation.", "d"), "equation.d"));
        cfg.equation.p = get_num(require(eq, "equation.", "p"), "equation.p");
        cfg.equation.lambda =
            static_cast<int>(get_int(require(eq, "equation.", "lambda"), "equation.lambda"));
        try {
            validate(cfg.equation);
        } catch (const std::invalid_argument& e) {
            invariant_error(e.what());
        }
    }

    // grid
    {
        const json& gr = get_obj(require(root, "", "grid"), "grid");
        check_keys(gr, "grid", {"points", "box_length"});
        const json& pts = get_arr(require(gr, "grid.", "points"), "grid.points");
        for (std::size_t i = 0; i < pts.size(); ++i)
            cfg.grid_points.push_back(static_cast<int>(
                get_int(pts[i], "grid.points[" + std::to_string(i) + "]")));
        const json& box = get_arr(require(gr, "grid.", "box_length"), "grid.box_length");
        for (std::size_t i = 0; i < box.size(); ++i)
            cfg.box_length.push_back(get_num(box[i], "grid.box_length[" + std::to_string(i) + "]"));
        if (static_cast<int>(cfg.grid_points.size()) != cfg.equation.d)
            invariant_error("grid.points: length must equal equation.d");
        if (cfg.box_length.size() != cfg.grid_points.size())
            invariant_error("grid.box_length: length must equal grid.points");
        try {
            make_grid(cfg.grid_points, cfg.box_length);
        } catch (const std::invalid_argument& e) {
            invariant_error(std::string("grid: ") + e.what());
        }
    }

    // data
    {
        const json& da = get_obj(require(root, "", "data"), "data");
        check_keys(da, "data",
                   {"kind", "amplitude", "width", "mode", "decay_exponent", "seed"});
        const std::string kind = get_str(require(da, "data.", "kind"), "data.kind");
        if (kind == "gaussian")
            cfg.data.kind = DataKind::gaussian;
        else if (kind == "plane_wave")
            cfg.data.kind = DataKind::plane_wave;
        else if (kind == "soliton")
            cfg.data.kind = DataKind::soliton;
        else if (kind == "rough")
            cfg.data.kind = DataKind::rough;
        else
            invariant_error("data.kind: must be gaussian, plane_wave, soliton or rough");
        cfg.data.seed = cfg.seed;
        if (const json* j = find(da, "amplitude")) cfg.data.amplitude = get_num(*j, "data.amplitude");
        if (const json* j = find(da, "width")) cfg.data.width = get_num(*j, "data.width");
        if (const json* j = find(da, "decay_exponent"))
            cfg.data.decay_exponent = get_num(*j, "data.decay_exponent");
        if (const json* j = find(da, "seed")) cfg.data.seed = get_uint(*j, "data.seed");
        if (const json* j = find(da, "mode")) {
            const json& arr = get_arr(*j, "data.mode");
            if (static_cast<int>(arr.size()) != cfg.equation.d)
                invariant_error("data.mode: length must equal equation.d");
            cfg.data.mode = {0, 0, 0};
            for (std::size_t i = 0; i < arr.size(); ++i)
                cfg.data.mode[i] = static_cast<int>(
                    get_int(arr[i], "data.mode[" + std::to_string(i) + "]"));
        }
        if (cfg.data.kind == DataKind::rough &&
            !(cfg.data.decay_exponent > 0.5 * cfg.equation.d))
            invariant_error("data.decay_exponent: must exceed d/2");
        if (!(cfg.data.width > 0.0)) invariant_error("data.width: must be positive");
    }

    // scheme
    {
        const json& sc = get_obj(require(root, "", "scheme"), "scheme");
        check_keys(sc, "scheme", {"kind", "tau", "horizon_T", "cutoff", "record_every"});
        const std::string kind = get_str(require(sc, "scheme.", "kind"), "scheme.kind");
        if (kind == "modified_lie")
            cfg.scheme = SchemeKind::modified_lie;
        else if (kind == "lie")
            cfg.scheme = SchemeKind::lie;
        else if (kind == "strang")
            cfg.scheme = SchemeKind::strang;
        else
            invariant_error("scheme.kind: must be modified_lie, lie or strang");
        if (const json* j = find(sc, "tau")) cfg.tau = get_num(*j, "scheme.tau");
        if (const json* j = find(sc, "horizon_T")) cfg.horizon_T = get_num(*j, "scheme.horizon_T");
        if (const json* j = find(sc, "cutoff")) {
            const std::string c = get_str(*j, "scheme.cutoff");
            if (c == "smooth")
                cfg.profile = CutoffProfile::smooth;
            else if (c == "sharp")
                cfg.profile = CutoffProfile::sharp;
            else
                invariant_error("scheme.cutoff: must be smooth or sharp");
        }
        if (const json* j = find(sc, "record_every"))
            cfg.record_every = get_int(*j, "scheme.record_every");
        if (!(cfg.horizon_T > 0.0) || !std::isfinite(cfg.horizon_T))
            invariant_error("scheme.horizon_T: must be positive and finite");
        if (cfg.record_every < 1) invariant_error("scheme.record_every: must be >= 1");
        if (cfg.tau < 0.0) invariant_error("scheme.tau: must be positive");
    }

    // reference
    if (const json* r = find(root, "reference")) {
        const json& rf = get_obj(*r, "reference");
        check_keys(rf, "reference", {"kind", "tau_ref", "divider", "tol_ref"});
        if (const json* j = find(rf, "kind")) {
            const std::string k = get_str(*j, "reference.kind");
            if (k == "analytic")
                cfg.reference = ReferenceKind::analytic;
            else if (k == "fine_strang")
                cfg.reference = ReferenceKind::fine_strang;
            else if (k == "self_scheme")
                cfg.reference = ReferenceKind::self_scheme;
            else
                invariant_error("reference.kind: must be analytic, fine_strang or self_scheme");
        }
        if (const json* j = find(rf, "tau_ref")) cfg.tau_ref = get_num(*j, "reference.tau_ref");
        if (const json* j = find(rf, "divider")) cfg.divider = get_int(*j, "reference.divider");
        if (const json* j = find(rf, "tol_ref")) cfg.tol_ref = get_num(*j, "reference.tol_ref");
        if (cfg.tau_ref < 0.0) invariant_error("reference.tau_ref: must be >= 0");
        if (cfg.divider < 2) invariant_error("reference.divider: must be >= 2");
        if (!(cfg.tol_ref > 0.0)) invariant_error("reference.tol_ref: must be positive");
    }

    // experiment
    {
        const json& ex = get_obj(require(root, "", "experiment"), "experiment");
        check_keys(ex, "experiment",
                   {"kind", "ladder", "slope_band", "envelope", "error_norm", "exact_floor",
                    "compare_projected", "pairs", "bound"});
        cfg.kind = get_str(require(ex, "experiment.", "kind"), "experiment.kind");
        static const std::set<std::string> kinds{"simulate", "converge", "stability", "probe",
                                                 "defect"};
        if (!kinds.count(cfg.kind))
            invariant_error(
                "experiment.kind: must be simulate, converge, stability, probe or defect");
        if (const json* j = find(ex, "ladder")) {
            const json& la = get_obj(*j, "experiment.ladder");
            check_keys(la, "experiment.ladder", {"tau0", "levels"});
            cfg.ladder.tau0 = get_num(require(la, "experiment.ladder.", "tau0"),
                                      "experiment.ladder.tau0");
            cfg.ladder.levels = static_cast<int>(get_int(
                require(la, "experiment.ladder.", "levels"), "experiment.ladder.levels"));
            try {
                ladder_taus(cfg.ladder);
            } catch (const std::invalid_argument& e) {
                invariant_error(std::string("experiment.") + e.what());
            }
        } else if (cfg.kind != "simulate") {
            schema_error("experiment.ladder: required field missing");
        }
        if (const json* j = find(ex, "slope_band")) {
            const json& arr = get_arr(*j, "experiment.slope_band");
            if (arr.size() != 2) schema_error("experiment.slope_band: must have 2 entries");
            cfg.has_slope_band = true;
            cfg.slope_band_lo = get_num(arr[0], "experiment.slope_band[0]");
            cfg.slope_band_hi = get_num(arr[1], "experiment.slope_band[1]");
            if (cfg.slope_band_lo > cfg.slope_band_hi)
                invariant_error("experiment.slope_band: lower bound exceeds upper");
        }
        if (const json* j = find(ex, "envelope")) {
            const json& en = get_obj(*j, "experiment.envelope");
            check_keys(en, "experiment.envelope", {"exponent", "factor"});
            cfg.has_envelope = true;
            cfg.envelope_exponent = get_num(require(en, "experiment.envelope.", "exponent"),
                                            "experiment.envelope.exponent");
            cfg.envelope_factor = get_num(require(en, "experiment.envelope.", "factor"),
                                          "experiment.envelope.factor");
            if (!(cfg.envelope_factor > 0.0))
                invariant_error("experiment.envelope.factor: must be positive");
        }
        if (const json* j = find(ex, "error_norm")) {
            cfg.error_norm = get_str(*j, "experiment.error_norm");
            if (cfg.error_norm != "max_l2" && cfg.error_norm != "final_l2")
                invariant_error("experiment.error_norm: must be max_l2 or final_l2");
        }
        if (const json* j = find(ex, "exact_floor"))
            cfg.exact_floor = get_num(*j, "experiment.exact_floor");
        if (const json* j = find(ex, "compare_projected"))
            cfg.compare_projected = get_bool(*j, "experiment.compare_projected");
        if (const json* j = find(ex, "bound")) {
            cfg.bound = get_num(*j, "experiment.bound");
            if (!(cfg.bound > 0.0)) invariant_error("experiment.bound: must be positive");
        }
        if (const json* j = find(ex, "pairs")) {
            const json& arr = get_arr(*j, "experiment.pairs");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string path = "experiment.pairs[" + std::to_string(i) + "]";
                PairSpec ps;
                if (arr[i].is_string()) {
                    if (arr[i].get<std::string>() != "q0r0")
                        invariant_error(path + ": string entries must be \"q0r0\"");
                    ps.q0r0 = true;
                } else {
                    const json& pa = get_arr(arr[i], path);
                    if (pa.size() != 2) schema_error(path + ": must have 2 entries");
                    ps.pair.q = parse_q_or_r(pa[0], path + "[0]");
                    ps.pair.r = parse_q_or_r(pa[1], path + "[1]");
                    if (!(ps.pair.q >= 1.0) || !(ps.pair.r >= 1.0))
                        invariant_error(path + ": q and r must be >= 1");
                }
                cfg.pairs.push_back(ps);
            }
        }
        if ((cfg.kind == "stability" || cfg.kind == "probe") && cfg.pairs.empty())
            invariant_error("experiment.pairs: must be nonempty for " + cfg.kind);
        if (cfg.kind == "simulate" && !(cfg.tau > 0.0))
            invariant_error("scheme.tau: must be positive for simulate");
    }

    // output
    if (const json* o = find(root, "output")) {
        const json& ou = get_obj(*o, "output");
        check_keys(ou, "output", {"directory", "dump_trajectory"});
        if (const json* j = find(ou, "directory")) cfg.out_dir = get_str(*j, "output.directory");
        if (const json* j = find(ou, "dump_trajectory"))
            cfg.dump_trajectory = get_bool(*j, "output.dump_trajectory");
    }

    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    return parse_config(read_text_file(path));
}

std::string canonical_config_json(const ExperimentConfig& cfg) {
    JsonBuf b;
    b.begin_object();

    b.key("data");
    b.begin_object();
    b.key("amplitude");
    b.value(cfg.data.amplitude);
    b.key("decay_exponent");
    b.value(cfg.data.decay_exponent);
    b.key("kind");
    b.value(std::string(data_name(cfg.data.kind)));
    b.key("mode");
    b.begin_array();
    for (int a = 0; a < cfg.equation.d; ++a) b.value_int(cfg.data.mode[a]);
    b.end_array();
    b.key("seed");
    b.value_uint(cfg.data.seed);
    b.key("width");
    b.value(cfg.data.width);
    b.end_object();

    b.key("equation");
    b.begin_object();
    b.key("d");
    b.value_int(cfg.equation.d);
    b.key("lambda");
    b.value_int(cfg.equation.lambda);
    b.key("p");
    b.value(cfg.equation.p);
    b.end_object();

    b.key("experiment");
    b.begin_object();
    b.key("bound");
    b.value(cfg.bound);
    b.key("compare_projected");
    b.value(cfg.compare_projected);
    b.key("envelope");
    if (cfg.has_envelope) {
        b.begin_object();
        b.key("exponent");
        b.value(cfg.envelope_exponent);
        b.key("factor");
        b.value(cfg.envelope_factor);
        b.end_object();
    } else {
        b.null_value();
    }
    b.key("error_norm");
    b.value(cfg.error_norm);
    b.key("exact_floor");
    b.value(cfg.exact_floor);
    b.key("kind");
    b.value(cfg.kind);
    b.key("ladder");
    b.begin_object();
    b.key("levels");
    b.value_int(cfg.ladder.levels);
    b.key("tau0");
    b.value(cfg.ladder.tau0);
    b.end_object();
    b.key("pairs");
    b.begin_array();
    for (const auto& ps : cfg.pairs) {
        if (ps.q0r0) {
            b.value(std::string("q0r0"));
        } else {
            b.begin_array();
            if (std::isinf(ps.pair.q))
                b.value(std::string("inf"));
            else
                b.value(ps.pair.q);
            if (std::isinf(ps.pair.r))
                b.value(std::string("inf"));
            else
                b.value(ps.pair.r);
            b.end_array();
        }
    }
    b.end_array();
    b.key("slope_band");
    if (cfg.has_slope_band) {
        b.begin_array();
        b.value(cfg.slope_band_lo);
        b.value(cfg.slope_band_hi);
        b.end_array();
    } else {
        b.null_value();
    }
    b.end_object();

    b.key("grid");
    b.begin_object();
    b.key("box_length");
    b.begin_array();
    for (double v : cfg.box_length) b.value(v);
    b.end_array();
    b.key("points");
    b.begin_array();
    for (int v : cfg.grid_points) b.value_int(v);
    b.end_array();
    b.end_object();

    b.key("output");
    b.begin_object();
    b.key("directory");
    b.value(cfg.out_dir);
    b.key("dump_trajectory");
    b.value(cfg.dump_trajectory);
    b.end_object();

    b.key("reference");
    b.begin_object();
    b.key("divider");
    b.value_int(cfg.divider);
    b.key("kind");
    b.value(std::string(reference_name(cfg.reference)));
    b.key("tau_ref");
    b.value(cfg.tau_ref);
    b.key("tol_ref");
    b.value(cfg.tol_ref);
    b.end_object();

    b.key("scheme");
    b.begin_object();
    b.key("cutoff");
    b.value(std::string(cutoff_name(cfg.profile)));
    b.key("horizon_T");
    b.value(cfg.horizon_T);
    b.key("kind");
    b.value(std::string(scheme_name(cfg.scheme)));
    b.key("record_every");
    b.value_int(cfg.record_every);
    b.key("tau");
    b.value(cfg.tau);
    b.end_object();

    b.key("seed");
    b.value_uint(cfg.seed);

    b.end_object();
    return b.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = canonical_config_json(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<AdmissiblePair> resolve_pairs(const ExperimentConfig& cfg) {
    std::vector<AdmissiblePair> out;
    out.reserve(cfg.pairs.size());
    for (const auto& ps : cfg.pairs)
        out.push_back(ps.q0r0 ? admissible_q0r0(cfg.equation) : ps.pair);
    return out;
}

}  // namespace splitnls
