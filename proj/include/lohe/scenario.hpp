#ifndef LOHE_SCENARIO_HPP
#define LOHE_SCENARIO_HPP

// Scenario runner: YAML configs describing parameters, initial data, integrator
// settings and requested checks; single runs and kappa0 sweeps with CSV/JSON
// output. Requires yaml-cpp.
//
// Exit codes: 0 all checks passed, 1 a check failed, 2 parse error (syntax,
// unknown or missing field), 3 validation error, 4 runtime error.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "lohe/certificates.hpp"
#include "lohe/diagnostics.hpp"
#include "lohe/error.hpp"
#include "lohe/initial.hpp"
#include "lohe/integrator.hpp"
#include "lohe/model.hpp"
#include "lohe/stability.hpp"

namespace lohe {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;
inline constexpr int parse = 2;
inline constexpr int validation = 3;
inline constexpr int runtime = 4;
} // namespace exit_code

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int code) : std::runtime_error(what), code_(code) {}
    int code() const noexcept { return code_; }

private:
    int code_;
};

class ParseError : public ConfigError {
public:
    explicit ParseError(const std::string& what) : ConfigError("parse error: " + what, exit_code::parse) {}
};

class ValidationError : public ConfigError {
public:
    explicit ValidationError(const std::string& what) : ConfigError("validation error: " + what, exit_code::validation) {}
};

enum class Check {
    framework_A,
    framework_B,
    framework_C,
    energy_monotone,
    gronwall_envelope,
    F26,
    practical_bound,
    stability_incoherent,
    stability_bipolar,
    kuramoto_equivalence,
    gauge_equivalence,
};

inline const std::map<std::string, Check>& check_names() {
    static const std::map<std::string, Check> names = {
        {"framework_A", Check::framework_A},
        {"framework_B", Check::framework_B},
        {"framework_C", Check::framework_C},
        {"energy_monotone", Check::energy_monotone},
        {"gronwall_envelope", Check::gronwall_envelope},
        {"F26", Check::F26},
        {"practical_bound", Check::practical_bound},
        {"stability_incoherent", Check::stability_incoherent},
        {"stability_bipolar", Check::stability_bipolar},
        {"kuramoto_equivalence", Check::kuramoto_equivalence},
        {"gauge_equivalence", Check::gauge_equivalence},
    };
    return names;
}

inline std::string to_string(Check c) {
    for (const auto& [name, value] : check_names())
        if (value == c) return name;
    return "?";
}

enum class OmegaKind { zero, random, homogeneous_random, planar, explicit_list };
enum class InitKind { random, near_aggregated, aggregated, bipolar, incoherent, phases, explicit_list };

struct OmegaSpec {
    OmegaKind kind = OmegaKind::zero;
    double scale = 1.0;
    std::optional<std::uint64_t> seed;
    std::vector<double> nus;
    std::vector<CMatrix> matrices;
};

struct InitSpec {
    InitKind kind = InitKind::random;
    std::optional<std::uint64_t> seed;
    double speed = 0.0;
    double spread = 0.05;
    std::size_t n = 0;
    std::vector<double> phases;
    std::vector<std::vector<Complex>> positions;
    std::vector<std::vector<Complex>> velocities;
};

struct AnsatzSpec {
    double m0 = 1.0;
    double eta = 1.0;
};

struct CheckOptions {
    double stability_t_end = 20.0;
    double stability_eps = 1e-6;
    std::optional<double> inequality_slack;
};

struct ScenarioConfig {
    std::string id = "scenario";
    ModelKind model = ModelKind::second_order;
    ModelParams params;
    OmegaSpec omega;
    std::optional<AnsatzSpec> ansatz;
    InitSpec init;
    IntegratorConfig integrator;
    bool auto_dt = true;
    std::vector<Check> checks;
    CheckOptions options;
    std::optional<std::string> output;
    std::vector<double> sweep_kappa0;

    bool has(Check c) const { return std::find(checks.begin(), checks.end(), c) != checks.end(); }
};

// --- parsing ----------------------------------------------------------------

namespace detail {

inline std::string where(const YAML::Node& n) {
    const auto mark = n.Mark();
    if (mark.line < 0) return {};
    return " (line " + std::to_string(mark.line + 1) + ")";
}

inline void check_keys(const YAML::Node& n, std::initializer_list<const char*> allowed, const std::string& path) {
    if (!n.IsMap()) throw ParseError("'" + path + "' must be a mapping" + where(n));
    for (const auto& kv : n) {
        const auto key = kv.first.as<std::string>();
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw ParseError("unknown key '" + (path.empty() ? key : path + "." + key) + "'" + where(kv.first));
    }
}

template <class T>
T convert(const YAML::Node& n, const std::string& path, const char* expected) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ParseError("field '" + path + "': expected " + expected + where(n));
    }
}

inline double as_double(const YAML::Node& n, const std::string& path) {
    const double x = convert<double>(n, path, "a number");
    if (!std::isfinite(x)) throw ParseError("field '" + path + "': must be finite" + where(n));
    return x;
}

inline std::size_t as_size(const YAML::Node& n, const std::string& path) {
    const long long x = convert<long long>(n, path, "a non-negative integer");
    if (x < 0) throw ParseError("field '" + path + "': expected a non-negative integer" + where(n));
    return static_cast<std::size_t>(x);
}

inline YAML::Node required(const YAML::Node& parent, const char* key, const std::string& path) {
    const YAML::Node n = parent[key];
    if (!n) throw ParseError("missing required field '" + (path.empty() ? std::string(key) : path + "." + key) + "'" + where(parent));
    return n;
}

inline std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

inline Complex as_complex(const YAML::Node& n, const std::string& path) {
    if (n.IsScalar()) return as_double(n, path);
    if (n.IsSequence() && n.size() == 2) return {as_double(n[0], path), as_double(n[1], path)};
    throw ParseError("field '" + path + "': expected a number or [re, im]" + where(n));
}

inline std::vector<Complex> as_cvector(const YAML::Node& n, const std::string& path) {
    if (!n.IsSequence()) throw ParseError("field '" + path + "': expected a list" + where(n));
    std::vector<Complex> v;
    for (std::size_t i = 0; i < n.size(); ++i) v.push_back(as_complex(n[i], path + "[" + std::to_string(i) + "]"));
    return v;
}

inline std::vector<double> as_dvector(const YAML::Node& n, const std::string& path) {
    if (!n.IsSequence()) throw ParseError("field '" + path + "': expected a list of numbers" + where(n));
    std::vector<double> v;
    for (std::size_t i = 0; i < n.size(); ++i) v.push_back(as_double(n[i], path + "[" + std::to_string(i) + "]"));
    return v;
}

template <class E>
E as_enum(const YAML::Node& n, const std::string& path, const std::map<std::string, E>& names) {
    const auto s = convert<std::string>(n, path, "a string");
    const auto it = names.find(s);
    if (it == names.end()) {
        std::string opts;
        for (const auto& [k, v] : names) opts += (opts.empty() ? "" : ", ") + k;
        throw ParseError("field '" + path + "': unknown value '" + s + "' (expected one of: " + opts + ")" + where(n));
    }
    return it->second;
}

inline void parse_params(const YAML::Node& n, ScenarioConfig& c) {
    check_keys(n, {"m", "gamma", "kappa0", "kappa1", "delta", "N", "d", "omega", "ansatz"}, "params");
    auto& p = c.params;
    p.gamma = as_double(required(n, "gamma", "params"), "params.gamma");
    p.kappa0 = as_double(required(n, "kappa0", "params"), "params.kappa0");
    p.kappa1 = as_double(required(n, "kappa1", "params"), "params.kappa1");
    p.N = as_size(required(n, "N", "params"), "params.N");
    p.d = as_size(required(n, "d", "params"), "params.d");
    if (n["delta"]) p.delta = as_double(n["delta"], "params.delta");
    if (n["ansatz"]) {
        const YAML::Node a = n["ansatz"];
        check_keys(a, {"m0", "eta"}, "params.ansatz");
        c.ansatz = AnsatzSpec{as_double(required(a, "m0", "params.ansatz"), "params.ansatz.m0"),
                              as_double(required(a, "eta", "params.ansatz"), "params.ansatz.eta")};
        if (n["m"]) throw ParseError("'params.m' and 'params.ansatz' are mutually exclusive" + where(n["m"]));
    } else {
        p.m = as_double(required(n, "m", "params"), "params.m");
    }
    if (n["omega"]) {
        const YAML::Node o = n["omega"];
        check_keys(o, {"kind", "scale", "seed", "nus", "matrices"}, "params.omega");
        static const std::map<std::string, OmegaKind> kinds = {{"zero", OmegaKind::zero},
                                                               {"random", OmegaKind::random},
                                                               {"homogeneous_random", OmegaKind::homogeneous_random},
                                                               {"planar", OmegaKind::planar},
                                                               {"explicit", OmegaKind::explicit_list}};
        auto& om = c.omega;
        om.kind = as_enum(required(o, "kind", "params.omega"), "params.omega.kind", kinds);
        if (o["scale"]) om.scale = as_double(o["scale"], "params.omega.scale");
        if (o["seed"]) om.seed = as_size(o["seed"], "params.omega.seed");
        if (om.kind == OmegaKind::random || om.kind == OmegaKind::homogeneous_random) {
            if (!om.seed) required(o, "seed", "params.omega");
        }
        if (om.kind == OmegaKind::planar) om.nus = as_dvector(required(o, "nus", "params.omega"), "params.omega.nus");
        if (om.kind == OmegaKind::explicit_list) {
            const YAML::Node ms = required(o, "matrices", "params.omega");
            if (!ms.IsSequence()) throw ParseError("field 'params.omega.matrices': expected a list" + where(ms));
            for (std::size_t k = 0; k < ms.size(); ++k) {
                const std::string path = "params.omega.matrices[" + std::to_string(k) + "]";
                const YAML::Node rows = ms[k];
                if (!rows.IsSequence()) throw ParseError("field '" + path + "': expected a list of rows" + where(rows));
                CMatrix a(rows.size());
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    const auto row = as_cvector(rows[i], path + "[" + std::to_string(i) + "]");
                    if (row.size() != rows.size()) throw ParseError("field '" + path + "': matrix must be square" + where(rows[i]));
                    for (std::size_t j = 0; j < row.size(); ++j) a(i, j) = row[j];
                }
                om.matrices.push_back(a);
            }
        }
    }
}

inline void parse_init(const YAML::Node& n, ScenarioConfig& c) {
    check_keys(n, {"kind", "seed", "speed", "spread", "n", "phases", "positions", "velocities"}, "init");
    static const std::map<std::string, InitKind> kinds = {
        {"random", InitKind::random},         {"near_aggregated", InitKind::near_aggregated},
        {"aggregated", InitKind::aggregated}, {"bipolar", InitKind::bipolar},
        {"incoherent", InitKind::incoherent}, {"phases", InitKind::phases},
        {"explicit", InitKind::explicit_list}};
    auto& in = c.init;
    in.kind = as_enum(required(n, "kind", "init"), "init.kind", kinds);
    if (in.kind == InitKind::random || in.kind == InitKind::near_aggregated)
        in.seed = as_size(required(n, "seed", "init"), "init.seed");
    else if (n["seed"])
        in.seed = as_size(n["seed"], "init.seed");
    if (n["speed"]) in.speed = as_double(n["speed"], "init.speed");
    if (n["spread"]) in.spread = as_double(n["spread"], "init.spread");
    if (in.kind == InitKind::bipolar) in.n = as_size(required(n, "n", "init"), "init.n");
    if (in.kind == InitKind::phases) in.phases = as_dvector(required(n, "phases", "init"), "init.phases");
    if (in.kind == InitKind::explicit_list) {
        const YAML::Node pos = required(n, "positions", "init");
        if (!pos.IsSequence()) throw ParseError("field 'init.positions': expected a list" + where(pos));
        for (std::size_t j = 0; j < pos.size(); ++j)
            in.positions.push_back(as_cvector(pos[j], "init.positions[" + std::to_string(j) + "]"));
        if (n["velocities"]) {
            const YAML::Node vel = n["velocities"];
            if (!vel.IsSequence()) throw ParseError("field 'init.velocities': expected a list" + where(vel));
            for (std::size_t j = 0; j < vel.size(); ++j)
                in.velocities.push_back(as_cvector(vel[j], "init.velocities[" + std::to_string(j) + "]"));
        }
    }
}

inline void parse_integrator(const YAML::Node& n, ScenarioConfig& c) {
    check_keys(n, {"dt", "t_end", "renormalize", "drift_tolerance", "observe_every"}, "integrator");
    auto& ic = c.integrator;
    ic.t_end = as_double(required(n, "t_end", "integrator"), "integrator.t_end");
    if (n["dt"]) {
        if (n["dt"].IsScalar() && n["dt"].Scalar() == "auto") {
            c.auto_dt = true;
        } else {
            ic.dt = as_double(n["dt"], "integrator.dt");
            c.auto_dt = false;
        }
    }
    if (n["renormalize"]) ic.renormalize = convert<bool>(n["renormalize"], "integrator.renormalize", "a boolean");
    if (n["drift_tolerance"]) ic.drift_tolerance = as_double(n["drift_tolerance"], "integrator.drift_tolerance");
    if (n["observe_every"]) ic.observe_every = as_size(n["observe_every"], "integrator.observe_every");
}

} // namespace detail

inline ScenarioConfig parse_config(const YAML::Node& root) {
    using namespace detail;
    check_keys(root, {"id", "model", "params", "init", "integrator", "checks", "check_options", "output", "sweep"}, "");
    ScenarioConfig c;
    if (root["id"]) c.id = convert<std::string>(root["id"], "id", "a string");
    static const std::map<std::string, ModelKind> models = {{"second_order", ModelKind::second_order},
                                                             {"first_order", ModelKind::first_order},
                                                             {"gauge", ModelKind::gauge},
                                                             {"kuramoto", ModelKind::kuramoto}};
    c.model = as_enum(required(root, "model", ""), "model", models);
    parse_params(required(root, "params", ""), c);
    parse_init(required(root, "init", ""), c);
    parse_integrator(required(root, "integrator", ""), c);
    if (root["checks"]) {
        const YAML::Node cs = root["checks"];
        if (!cs.IsSequence()) throw ParseError("field 'checks': expected a list" + where(cs));
        for (std::size_t k = 0; k < cs.size(); ++k) {
            const Check ch = as_enum(cs[k], "checks[" + std::to_string(k) + "]", check_names());
            if (c.has(ch)) throw ParseError("check '" + to_string(ch) + "' listed twice" + where(cs[k]));
            c.checks.push_back(ch);
        }
    }
    if (root["check_options"]) {
        const YAML::Node o = root["check_options"];
        check_keys(o, {"stability_t_end", "stability_eps", "inequality_slack"}, "check_options");
        if (o["stability_t_end"]) c.options.stability_t_end = as_double(o["stability_t_end"], "check_options.stability_t_end");
        if (o["stability_eps"]) c.options.stability_eps = as_double(o["stability_eps"], "check_options.stability_eps");
        if (o["inequality_slack"]) c.options.inequality_slack = as_double(o["inequality_slack"], "check_options.inequality_slack");
    }
    if (root["output"]) c.output = convert<std::string>(root["output"], "output", "a path");
    if (root["sweep"]) {
        const YAML::Node s = root["sweep"];
        check_keys(s, {"kappa0"}, "sweep");
        c.sweep_kappa0 = as_dvector(required(s, "kappa0", "sweep"), "sweep.kappa0");
        if (c.sweep_kappa0.empty()) throw ParseError("field 'sweep.kappa0': grid is empty" + where(s));
    }
    return c;
}

inline ScenarioConfig parse_config_text(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ParseError(e.what());
    }
    return parse_config(root);
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

// --- materialization and validation -----------------------------------------

/// Frequencies for the configured ensemble.
inline std::vector<SkewHermitian> build_omegas(const ScenarioConfig& c) {
    const auto& p = c.params;
    const auto& om = c.omega;
    std::vector<SkewHermitian> out;
    switch (om.kind) {
    case OmegaKind::zero:
        out.assign(p.N, SkewHermitian(p.dim()));
        break;
    case OmegaKind::random: {
        std::mt19937_64 rng(*om.seed);
        for (std::size_t j = 0; j < p.N; ++j) out.push_back(random_skew_hermitian(rng, p.d, om.scale));
        break;
    }
    case OmegaKind::homogeneous_random: {
        std::mt19937_64 rng(*om.seed);
        out.assign(p.N, random_skew_hermitian(rng, p.d, om.scale));
        break;
    }
    case OmegaKind::planar:
        if (p.d != 1) throw ValidationError("params.omega: planar frequencies require d = 1");
        if (om.nus.size() != p.N) throw ValidationError("params.omega.nus: need exactly N values");
        for (double nu : om.nus) out.push_back(SkewHermitian::planar_rotation(nu));
        break;
    case OmegaKind::explicit_list:
        if (om.matrices.size() != p.N) throw ValidationError("params.omega.matrices: need exactly N matrices");
        for (const auto& a : om.matrices) {
            if (a.dim() != p.dim()) throw ValidationError("params.omega.matrices: each matrix must be (d+1)x(d+1)");
            try {
                out.push_back(SkewHermitian::from_matrix(a, 1e-12));
            } catch (const DomainError& e) {
                throw ValidationError(std::string("params.omega.matrices: ") + e.what());
            }
        }
        break;
    }
    return out;
}

/// Parameters with frequencies filled in and m derived from the ansatz if present.
inline ModelParams materialize_params(const ScenarioConfig& c) {
    ModelParams p = c.params;
    if (c.ansatz) {
        if (!(p.kappa0 > 0.0)) throw ValidationError("params.ansatz requires kappa0 > 0");
        if (!(c.ansatz->m0 > 0.0 && c.ansatz->eta > 0.0)) throw ValidationError("params.ansatz: m0 and eta must be > 0");
        p.m = ansatz_mass(p.kappa0, c.ansatz->m0, c.ansatz->eta);
    }
    p.omegas = build_omegas(c);
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw ValidationError(e.what());
    }
    return p;
}

/// Phases of the Kuramoto-compatible initial data.
inline std::vector<double> initial_phases(const ScenarioConfig& c) {
    if (c.init.kind == InitKind::phases) return c.init.phases;
    if (c.init.kind == InitKind::random && c.model == ModelKind::kuramoto) {
        std::mt19937_64 rng(*c.init.seed);
        std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
        std::vector<double> th(c.params.N);
        for (auto& x : th) x = u(rng);
        return th;
    }
    throw ValidationError("init: phase data requires init.kind 'phases' (or 'random' for the kuramoto model)");
}

/// Physical initial state (z, dz/dt). Velocities in rest-type constructions are
/// w = Omega z / gamma, i.e. zero relative velocity.
inline EnsembleState build_initial_state(const ScenarioConfig& c, const ModelParams& p) {
    const auto& in = c.init;
    auto at_rest = [&](EnsembleState s) {
        for (std::size_t j = 0; j < s.N; ++j) detail::set_velocity(p, s, j, CVector(p.dim()));
        return s;
    };
    switch (in.kind) {
    case InitKind::random: {
        if (c.model == ModelKind::kuramoto) return kuramoto_state(initial_phases(c));
        std::mt19937_64 rng(*in.seed);
        return random_state(rng, p, in.speed);
    }
    case InitKind::near_aggregated: {
        std::mt19937_64 rng(*in.seed);
        return near_aggregated_state(rng, p, in.spread, in.speed);
    }
    case InitKind::aggregated:
    case InitKind::bipolar:
    case InitKind::incoherent: {
        EquilibriumSpec spec;
        spec.kind = in.kind == InitKind::aggregated ? EquilibriumKind::aggregated
                    : in.kind == InitKind::bipolar  ? EquilibriumKind::bipolar
                                                    : EquilibriumKind::incoherent;
        spec.N = p.N;
        spec.d = p.d;
        spec.n = in.n;
        try {
            return at_rest(make_equilibrium(spec));
        } catch (const std::exception& e) {
            throw ValidationError(std::string("init: ") + e.what());
        }
    }
    case InitKind::phases: {
        if (p.d != 1) throw ValidationError("init.phases requires d = 1");
        if (in.phases.size() != p.N) throw ValidationError("init.phases: need exactly N phases");
        return at_rest(kuramoto_state(in.phases));
    }
    case InitKind::explicit_list: {
        if (in.positions.size() != p.N) throw ValidationError("init.positions: need exactly N vectors");
        if (!in.velocities.empty() && in.velocities.size() != p.N)
            throw ValidationError("init.velocities: need exactly N vectors");
        EnsembleState s(p.N, p.dim());
        for (std::size_t j = 0; j < p.N; ++j) {
            if (in.positions[j].size() != p.dim()) throw ValidationError("init.positions: each vector needs d+1 entries");
            std::copy(in.positions[j].begin(), in.positions[j].end(), s.zj(j).begin());
            if (std::abs(norm(s.zj(j)) - 1.0) > 1e-9)
                throw ValidationError("init.positions[" + std::to_string(j) + "]: not a unit vector");
            if (in.velocities.empty()) {
                detail::set_velocity(p, s, j, CVector(p.dim()));
            } else {
                if (in.velocities[j].size() != p.dim()) throw ValidationError("init.velocities: each vector needs d+1 entries");
                std::copy(in.velocities[j].begin(), in.velocities[j].end(), s.wj(j).begin());
            }
        }
        if (c.model != ModelKind::first_order && admissibility_defect(p, s) > 1e-9)
            throw ValidationError("init.velocities: Re<z_j, v_j> must vanish");
        return s;
    }
    }
    throw ValidationError("init: unsupported kind");
}

inline bool inertial(ModelKind m) { return m == ModelKind::second_order || m == ModelKind::gauge; }

/// Rejects checks that do not apply to the model/parameters and inconsistent settings.
inline void validate_config(const ScenarioConfig& c, const ModelParams& p) {
    if (c.auto_dt == false && !(c.integrator.dt > 0.0)) throw ValidationError("integrator.dt must be > 0");
    try {
        IntegratorConfig ic = c.integrator;
        if (c.auto_dt) ic.dt = 1.0;
        ic.validate();
    } catch (const DomainError& e) {
        throw ValidationError(e.what());
    }
    if (inertial(c.model) && !(p.m > 0.0)) throw ValidationError("model '" + std::string(to_string(c.model)) + "' requires m > 0");
    if (c.model == ModelKind::first_order || c.model == ModelKind::kuramoto) {
        if (p.m != 0.0 || p.gamma != 1.0)
            throw ValidationError("model '" + std::string(to_string(c.model)) + "' requires m = 0 and gamma = 1");
    }
    if (c.model == ModelKind::kuramoto) {
        if (p.d != 1 || p.kappa1 != 0.0) throw ValidationError("model 'kuramoto' requires d = 1 and kappa1 = 0");
        if (c.omega.kind != OmegaKind::planar && c.omega.kind != OmegaKind::zero)
            throw ValidationError("model 'kuramoto' requires planar (or zero) frequencies");
        if (c.init.kind != InitKind::phases && c.init.kind != InitKind::random)
            throw ValidationError("model 'kuramoto' requires init.kind 'phases' or 'random'");
    }
    if (!c.sweep_kappa0.empty()) {
        for (double k : c.sweep_kappa0)
            if (!(k > 0.0)) throw ValidationError("sweep.kappa0: values must be > 0");
    }
    for (Check ch : c.checks) {
        const std::string name = to_string(ch);
        auto need = [&](bool ok, const std::string& why) {
            if (!ok) throw ValidationError("check '" + name + "' " + why);
        };
        switch (ch) {
        case Check::framework_A:
        case Check::framework_B:
            need(inertial(c.model), "requires an inertial model");
            need(p.homogeneous(), "requires a homogeneous ensemble");
            break;
        case Check::framework_C:
            need(inertial(c.model), "requires an inertial model");
            need(p.kappa0 > 0.0, "requires kappa0 > 0");
            break;
        case Check::energy_monotone:
            need(inertial(c.model), "requires an inertial model");
            need(p.homogeneous(), "requires a homogeneous ensemble");
            need(p.kappa0 + p.kappa1 > 0.0, "requires kappa0 + kappa1 > 0");
            break;
        case Check::gronwall_envelope: {
            need(inertial(c.model), "requires an inertial model");
            need(p.kappa0 > 0.0, "requires kappa0 > 0");
            const double disc = p.gamma * p.gamma - 16.0 * p.m * p.kappa0 * p.delta;
            need(std::abs(disc) > 1e-12, "is undefined in the critically damped case");
            break;
        }
        case Check::F26:
            need(inertial(c.model), "requires an inertial model");
            break;
        case Check::practical_bound:
            need(inertial(c.model), "requires an inertial model");
            need(p.kappa0 > 0.0, "requires kappa0 > 0");
            break;
        case Check::stability_incoherent:
        case Check::stability_bipolar:
            need(c.model == ModelKind::second_order, "requires the second_order model");
            need(p.zero_frequencies(), "requires Omega_j = 0");
            need(p.m > 0.0, "requires m > 0");
            if (ch == Check::stability_incoherent) need(p.N >= 2, "requires N >= 2");
            if (ch == Check::stability_bipolar) need(c.init.kind == InitKind::bipolar, "requires init.kind 'bipolar'");
            break;
        case Check::kuramoto_equivalence:
            need(c.model == ModelKind::first_order || c.model == ModelKind::kuramoto,
                 "requires the first_order or kuramoto model");
            need(p.d == 1 && p.kappa1 == 0.0, "requires d = 1 and kappa1 = 0");
            need(c.omega.kind == OmegaKind::planar || c.omega.kind == OmegaKind::zero, "requires planar frequencies");
            need(c.init.kind == InitKind::phases || (c.model == ModelKind::kuramoto && c.init.kind == InitKind::random),
                 "requires phase initial data");
            break;
        case Check::gauge_equivalence:
            need(inertial(c.model), "requires an inertial model");
            break;
        }
    }
}

// --- running ----------------------------------------------------------------

struct CheckResult {
    std::string name;
    bool pass = false;
    nlohmann::json details;
};

struct RunSummary {
    std::string id;
    double wall_time = 0.0;
    std::optional<DiagnosticsRecord> final_record;
    std::vector<CheckResult> checks;
    std::filesystem::path csv_path;
    std::filesystem::path json_path;
    int exit_code = exit_code::ok;
    std::string error;
    double tail_G = std::numeric_limits<double>::quiet_NaN();
    ModelParams params;

    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }
};

struct RunOptions {
    std::optional<std::filesystem::path> output_dir;
    bool quiet = false;
};

/// Output directory precedence: --output-dir, config `output`, LOHE_OUTPUT_DIR, "lohe_out".
inline std::filesystem::path resolve_output_dir(const ScenarioConfig& c, const RunOptions& o) {
    if (o.output_dir) return *o.output_dir;
    if (c.output) return *c.output;
    if (const char* env = std::getenv("LOHE_OUTPUT_DIR"); env && *env) return env;
    return "lohe_out";
}

inline nlohmann::json params_json(const ModelParams& p) {
    return {{"m", p.m}, {"gamma", p.gamma}, {"kappa0", p.kappa0}, {"kappa1", p.kappa1}, {"delta", p.delta},
            {"N", p.N}, {"d", p.d},         {"omega_inf", omega_inf(p)}, {"omega_diameter", omega_diameter(p)}};
}

inline nlohmann::json to_json(const RunSummary& s) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : s.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"details", c.details}});
    nlohmann::json j = {{"id", s.id},
                        {"wall_time_s", s.wall_time},
                        {"exit_code", s.exit_code},
                        {"params", params_json(s.params)},
                        {"checks", checks},
                        {"files", {{"csv", s.csv_path.string()}, {"json", s.json_path.string()}}}};
    j["final"] = s.final_record ? to_json(*s.final_record) : nlohmann::json(nullptr);
    j["tail_G"] = json_number(s.tail_G);
    if (!s.error.empty()) j["error"] = s.error;
    return j;
}

namespace detail {

inline void write_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << kCsvHeader << '\n';
    for (const auto& r : traj.diagnostics) write_csv_row(out, r);
}

inline double max_state_difference(const EnsembleState& a, const EnsembleState& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.z.size(); ++i) worst = std::max(worst, std::abs(a.z[i] - b.z[i]));
    return worst;
}

/// Per-step monitors for the checks that inspect every integration step.
struct StreamChecks {
    std::optional<InequalityMonitor> inequality;
    std::optional<EnergyMonitor> energy;
    std::optional<GronwallBound> envelope;
    double envelope_excess = -std::numeric_limits<double>::infinity();
    std::optional<double> threshold; // framework bound on G
    double threshold_excess = -std::numeric_limits<double>::infinity();
    double t0 = 0.0;
    ModelKind model;
    const ModelParams* p = nullptr;

    bool active() const { return inequality || energy || envelope || threshold; }

    void operator()(const EnsembleState& s, std::size_t) {
        const DiagnosticsRecord r = compute_diagnostics(*p, s, model);
        if (inequality) inequality->observe(r);
        if (energy) energy->observe(s);
        if (envelope) envelope_excess = std::max(envelope_excess, r.G - gronwall_envelope(*envelope, s.t - t0));
        if (threshold) threshold_excess = std::max(threshold_excess, r.G - *threshold);
    }
};

} // namespace detail

/// Runs one scenario; writes <out>/<id>.csv and <out>/<id>.json. Config
/// problems are thrown as ConfigError; integrator failures are recorded in the
/// summary with exit code 4 (the JSON summary is still written).
inline RunSummary run_scenario(const ScenarioConfig& c, const RunOptions& opts = {}) {
    const auto started = std::chrono::steady_clock::now();
    RunSummary summary;
    summary.id = c.id;
    const ModelParams p = materialize_params(c);
    summary.params = p;
    validate_config(c, p);
    const EnsembleState init = build_initial_state(c, p);
    IntegratorConfig ic = c.integrator;
    if (c.auto_dt) ic.dt = default_dt(p, c.model);

    const auto out_dir = resolve_output_dir(c, opts);
    std::filesystem::create_directories(out_dir);
    summary.csv_path = out_dir / (c.id + ".csv");
    summary.json_path = out_dir / (c.id + ".json");

    auto finish = [&]() {
        summary.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (summary.exit_code == exit_code::ok && !summary.all_passed()) summary.exit_code = exit_code::check_failed;
        std::ofstream js(summary.json_path);
        js << to_json(summary).dump(2) << '\n';
        return summary;
    };

    try {
        // Framework reports need the physical initial data.
        std::optional<FrameworkReport> fa, fb, fc;
        if (c.has(Check::framework_A)) fa = check_framework_A(p, init);
        if (c.has(Check::framework_B)) fb = check_framework_B(p, init);
        if (c.has(Check::framework_C)) fc = check_framework_C(p, init);

        detail::StreamChecks stream;
        stream.model = c.model;
        stream.p = &p;
        stream.t0 = init.t;
        if (c.has(Check::F26)) stream.inequality.emplace(p, c.options.inequality_slack);
        if (c.has(Check::energy_monotone)) stream.energy.emplace(p);
        if (c.has(Check::gronwall_envelope))
            stream.envelope = p.homogeneous() ? homogeneous_envelope(p, init) : heterogeneous_envelope(p, init);
        if (fa && fa->overall)
            stream.threshold = framework_A_threshold(p, init);
        else if (fb && fb->overall)
            stream.threshold = framework_B_threshold(p, init);

        Trajectory traj;
        if (c.model == ModelKind::kuramoto) {
            traj = simulate_kuramoto({initial_phases(c), kuramoto_frequencies(p), p.kappa0}, ic);
        } else {
            const EnsembleState native = c.model == ModelKind::gauge ? physical_to_gauge(p, init) : init;
            traj = stream.active() ? simulate(p, native, ic, c.model, std::ref(stream)) : simulate(p, native, ic, c.model);
        }
        detail::write_csv(summary.csv_path, traj);
        summary.final_record = traj.diagnostics.back();
        summary.tail_G = tail_max_G(traj);

        for (Check ch : c.checks) {
            CheckResult r;
            r.name = to_string(ch);
            switch (ch) {
            case Check::framework_A:
            case Check::framework_B:
            case Check::framework_C: {
                const FrameworkReport& fr = ch == Check::framework_A ? *fa : ch == Check::framework_B ? *fb : *fc;
                r.details = to_json(fr);
                r.pass = fr.overall;
                if (ch != Check::framework_C && fr.overall) {
                    r.details["bound"] = *stream.threshold;
                    r.details["max_G_minus_bound"] = stream.threshold_excess;
                    r.pass = stream.threshold_excess < 1e-9;
                }
                break;
            }
            case Check::energy_monotone: {
                const auto& er = stream.energy->report();
                r.details = to_json(er);
                r.pass = er.max_increase <= 1e-8 && er.max_identity_residual <= 1e-4;
                break;
            }
            case Check::gronwall_envelope:
                r.details = {{"max_G_minus_envelope", stream.envelope_excess}, {"tolerance", 1e-6}};
                r.pass = stream.envelope_excess <= 1e-6;
                break;
            case Check::F26: {
                const auto ir = stream.inequality->report();
                r.details = to_json(ir);
                r.pass = ir.applicable_violations() == 0;
                break;
            }
            case Check::practical_bound: {
                const double bound = practical_bound(p);
                r.details = {{"tail_G", summary.tail_G}, {"practical_bound", bound}};
                r.pass = summary.tail_G <= bound;
                if (c.ansatz) {
                    const double simplified = practical_bound_ansatz(p, c.ansatz->m0, c.ansatz->eta);
                    r.details["practical_bound_ansatz"] = simplified;
                    r.pass = r.pass && summary.tail_G <= simplified;
                }
                break;
            }
            case Check::stability_incoherent: {
                EquilibriumSpec spec{EquilibriumKind::incoherent, p.N, p.d, 0, std::nullopt};
                const auto sr = analyze_equilibrium(p, spec);
                r.details = to_json(sr);
                r.pass = sr.trace_numeric > 0.0 &&
                         std::abs(sr.trace_numeric - sr.trace_analytic) <= 1e-5 * std::abs(sr.trace_analytic) &&
                         sr.blocks.zero <= 2e-8 && sr.blocks.identity <= 2e-8 && sr.blocks.friction <= 2e-8;
                break;
            }
            case Check::stability_bipolar: {
                EquilibriumSpec spec{EquilibriumKind::bipolar, p.N, p.d, c.init.n, std::nullopt};
                const auto sr = analyze_equilibrium(p, spec, c.options.stability_t_end, c.options.stability_eps);
                EquilibriumSpec agg{EquilibriumKind::aggregated, p.N, p.d, 0, std::nullopt};
                const auto ar = analyze_equilibrium(p, agg, c.options.stability_t_end, c.options.stability_eps);
                r.details = {{"bipolar", to_json(sr)}, {"aggregated_control", to_json(ar)}};
                const double measured = sr.growth->rate;
                const bool matches = std::isfinite(measured) && std::abs(measured - *sr.predicted_rate) <= 0.05 * *sr.predicted_rate;
                const bool control = ar.growth->max_norm <= 2.0 * ar.growth->initial_norm;
                r.details["rate_within_5_percent"] = matches;
                r.details["control_no_growth"] = control;
                r.pass = matches && control;
                break;
            }
            case Check::kuramoto_equivalence: {
                const auto theta = initial_phases(c);
                const auto kt = simulate_kuramoto({theta, kuramoto_frequencies(p), p.kappa0}, ic);
                const auto lt = simulate(p, kuramoto_state(theta), ic, ModelKind::first_order);
                double worst = 0.0;
                const auto& zs = lt.states.back();
                for (std::size_t j = 0; j < p.N; ++j) {
                    const double ref = kt.phases.back()[j];
                    worst = std::max(worst, std::abs(phase_near(zs.zj(j), ref) - ref));
                }
                r.details = {{"max_phase_difference", worst}, {"tolerance", 1e-6}};
                r.pass = worst <= 1e-6;
                break;
            }
            case Check::gauge_equivalence: {
                const auto direct = simulate(p, init, ic, ModelKind::second_order);
                const auto gauge = simulate(p, physical_to_gauge(p, init), ic, ModelKind::gauge);
                const double diff =
                    detail::max_state_difference(direct.states.back(), gauge_to_physical(p, gauge.states.back()));
                r.details = {{"max_position_difference", diff}, {"t", direct.times.back()}, {"tolerance", 1e-6}};
                r.pass = diff <= 1e-6;
                break;
            }
            }
            summary.checks.push_back(std::move(r));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        summary.exit_code = exit_code::runtime;
        summary.error = e.what();
    }
    return finish();
}

inline RunSummary run_scenario(const std::filesystem::path& config_path, const RunOptions& opts = {}) {
    return run_scenario(load_config(config_path), opts);
}

// --- sweeps -----------------------------------------------------------------

struct SweepRow {
    double kappa0 = 0.0;
    double m = 0.0;
    double tail_G = std::numeric_limits<double>::quiet_NaN();
    double practical_bound = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> practical_bound_ansatz;
    int exit_code = exit_code::ok;
    std::string error;
};

struct SweepSummary {
    std::string id;
    std::vector<SweepRow> rows;
    std::vector<RunSummary> runs;
    bool tail_strictly_decreasing = false;
    bool all_within_bound = false;
    std::filesystem::path csv_path;
    std::filesystem::path json_path;
    int exit_code = exit_code::ok;
};

/// Point configs of a sweep: kappa0 replaced, id suffixed with the grid index.
inline std::vector<ScenarioConfig> sweep_points(const ScenarioConfig& c) {
    if (c.sweep_kappa0.empty()) throw ValidationError("sweep: config has no 'sweep' section");
    std::vector<ScenarioConfig> out;
    for (std::size_t k = 0; k < c.sweep_kappa0.size(); ++k) {
        ScenarioConfig pc = c;
        pc.params.kappa0 = c.sweep_kappa0[k];
        pc.sweep_kappa0.clear();
        pc.id = c.sweep_kappa0.size() == 1 ? c.id : c.id + "_k" + std::to_string(k);
        out.push_back(std::move(pc));
    }
    return out;
}

/// Runs every grid point in a pool of `workers` threads, continuing past
/// failures, and writes <out>/<id>_sweep.csv (kappa0, m, tail_G,
/// practical_bound, practical_bound_ansatz, exit_code) plus a JSON summary.
inline SweepSummary run_sweep(const ScenarioConfig& c, const RunOptions& opts = {}, unsigned workers = 1) {
    SweepSummary sweep;
    sweep.id = c.id;
    const auto points = sweep_points(c);
    std::vector<RunSummary> runs(points.size());
    std::vector<SweepRow> rows(points.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&]() {
        for (std::size_t k = next++; k < points.size(); k = next++) {
            SweepRow& row = rows[k];
            row.kappa0 = points[k].params.kappa0;
            try {
                runs[k] = run_scenario(points[k], opts);
                row.m = runs[k].params.m;
                row.tail_G = runs[k].tail_G;
                row.exit_code = runs[k].exit_code;
                row.error = runs[k].error;
                row.practical_bound = practical_bound(runs[k].params);
                if (c.ansatz) row.practical_bound_ansatz = practical_bound_ansatz(runs[k].params, c.ansatz->m0, c.ansatz->eta);
            } catch (const ConfigError& e) {
                row.exit_code = e.code();
                row.error = e.what();
                runs[k].id = points[k].id;
                runs[k].exit_code = e.code();
                runs[k].error = e.what();
            } catch (const std::exception& e) {
                row.exit_code = exit_code::runtime;
                row.error = e.what();
                runs[k].id = points[k].id;
                runs[k].exit_code = exit_code::runtime;
                runs[k].error = e.what();
            }
            if (!opts.quiet) {
                std::lock_guard lock(log_mutex);
                std::cerr << "[" << points[k].id << "] kappa0=" << format_double(row.kappa0)
                          << " exit=" << row.exit_code << (row.error.empty() ? "" : " " + row.error) << '\n';
            }
        }
    };
    const unsigned width = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(points.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < width; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // Summary assembly, ordered by grid position.
    std::vector<std::size_t> order(rows.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rows[a].kappa0 < rows[b].kappa0; });
    sweep.tail_strictly_decreasing = true;
    sweep.all_within_bound = true;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& r = rows[order[i]];
        if (r.exit_code != exit_code::ok && r.exit_code != exit_code::check_failed) {
            sweep.tail_strictly_decreasing = sweep.all_within_bound = false;
            continue;
        }
        if (!(r.tail_G <= r.practical_bound)) sweep.all_within_bound = false;
        if (r.practical_bound_ansatz && !(r.tail_G <= *r.practical_bound_ansatz)) sweep.all_within_bound = false;
        if (i > 0 && !(r.tail_G < rows[order[i - 1]].tail_G)) sweep.tail_strictly_decreasing = false;
    }

    const auto out_dir = resolve_output_dir(c, opts);
    std::filesystem::create_directories(out_dir);
    sweep.csv_path = out_dir / (c.id + "_sweep.csv");
    sweep.json_path = out_dir / (c.id + "_sweep.json");
    {
        std::ofstream csv(sweep.csv_path);
        csv << "kappa0,m,tail_G,practical_bound,practical_bound_ansatz,exit_code\n";
        for (const auto& r : rows)
            csv << format_double(r.kappa0) << ',' << format_double(r.m) << ',' << format_double(r.tail_G) << ','
                << format_double(r.practical_bound) << ','
                << (r.practical_bound_ansatz ? format_double(*r.practical_bound_ansatz) : std::string{}) << ','
                << r.exit_code << '\n';
    }
    sweep.exit_code = exit_code::ok;
    for (const auto& r : rows) sweep.exit_code = std::max(sweep.exit_code, r.exit_code);
    if (sweep.exit_code == exit_code::ok && rows.size() > 1 && !sweep.tail_strictly_decreasing)
        sweep.exit_code = exit_code::check_failed;
    {
        nlohmann::json points_json = nlohmann::json::array();
        for (const auto& r : runs) points_json.push_back(to_json(r));
        nlohmann::json j = {{"id", c.id},
                            {"tail_strictly_decreasing", sweep.tail_strictly_decreasing},
                            {"all_within_bound", sweep.all_within_bound},
                            {"exit_code", sweep.exit_code},
                            {"csv", sweep.csv_path.string()},
                            {"points", points_json}};
        std::ofstream js(sweep.json_path);
        js << j.dump(2) << '\n';
    }
    sweep.rows = std::move(rows);
    sweep.runs = std::move(runs);
    return sweep;
}

} // namespace lohe

#endif // LOHE_SCENARIO_HPP
