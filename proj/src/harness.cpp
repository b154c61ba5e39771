#include "thinfilm/harness.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "thinfilm/analysis.hpp"
#include "thinfilm/io.hpp"
#include "thinfilm/perturb.hpp"
#include "thinfilm/spectral.hpp"
#include "thinfilm/steady.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace thinfilm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class KeyType { Num, Int, Str, Bool, List };

struct SchemaEntry {
    const char* key;
    KeyType type;
    json def;  // null = optional, no default materialized
};

const std::vector<SchemaEntry>& schema() {
    static const std::vector<SchemaEntry> s = {
        {"kind", KeyType::Str, nullptr},
        {"n", KeyType::Num, 1.0},
        {"m", KeyType::Num, nullptr},
        {"q", KeyType::Num, nullptr},
        {"n_list", KeyType::List, nullptr},
        {"bond", KeyType::Num, nullptr},
        {"alpha", KeyType::Num, nullptr},
        {"hbar", KeyType::Num, nullptr},
        {"target_period", KeyType::Num, nullptr},
        {"grid.N", KeyType::Int, 1024},
        {"grid.X", KeyType::Num, nullptr},
        {"steady.phase", KeyType::Str, "min"},
        {"initial", KeyType::Str, nullptr},
        {"initial_file", KeyType::Str, nullptr},
        {"perturbation.kind", KeyType::Str, "none"},
        {"perturbation.amplitude", KeyType::Num, 0.0},
        {"perturbation.wavenumber", KeyType::Num, 1.0},
        {"perturbation.decay", KeyType::Num, 0.036},
        {"perturbation.seed", KeyType::Int, 1},
        {"controls.epsilon", KeyType::Num, 1e-11},
        {"controls.dt_init", KeyType::Num, 1e-6},
        {"controls.dt_min", KeyType::Num, 1e-14},
        {"controls.dt_max", KeyType::Num, 0.1},
        {"controls.t_max", KeyType::Num, 100.0},
        {"controls.n_max", KeyType::Int, 8192},
        {"controls.blowup_threshold", KeyType::Num, 0.0},
        {"controls.touchdown_report", KeyType::Num, 1e-6},
        {"controls.fixed_dt", KeyType::Num, 0.0},
        {"controls.max_steps", KeyType::Int, 0},
        {"output.dir", KeyType::Str, "out"},
        {"output.snapshot_every", KeyType::Int, 0},
        {"classify.tol", KeyType::Num, 1e-6},
        {"analyze.dir", KeyType::Str, nullptr},
        {"analyze.steady_file", KeyType::Str, nullptr},
        {"analyze.p", KeyType::Num, 0.2},
        {"bifurcation.alpha_min", KeyType::Num, 0.02},
        {"bifurcation.alpha_max", KeyType::Num, 0.98},
        {"bifurcation.count", KeyType::Int, 40},
        {"bifurcation.q_upper", KeyType::Num, 1.794},
        {"sweep.refine", KeyType::Bool, false},
        {"sweep.refine_iterations", KeyType::Int, 6},
        {"sweep.workers", KeyType::Int, 1},
    };
    return s;
}

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
    throw std::invalid_argument("config key '" + key + "': " + why);
}

double as_num(const json& v, const std::string& key) {
    if (!v.is_number()) bad_key(key, "expected a number");
    return v.get<double>();
}

long long as_int(const json& v, const std::string& key) {
    if (v.is_number_integer() || v.is_number_unsigned()) return v.get<long long>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d == std::rint(d)) return static_cast<long long>(d);
    }
    bad_key(key, "expected an integer");
}

std::string as_str(const json& v, const std::string& key) {
    if (!v.is_string()) bad_key(key, "expected a string");
    return v.get<std::string>();
}

void check_type(const SchemaEntry& e, const json& v) {
    switch (e.type) {
        case KeyType::Num:
            as_num(v, e.key);
            break;
        case KeyType::Int:
            as_int(v, e.key);
            break;
        case KeyType::Str:
            as_str(v, e.key);
            break;
        case KeyType::Bool:
            if (!v.is_boolean()) bad_key(e.key, "expected a boolean");
            break;
        case KeyType::List:
            if (!v.is_array()) bad_key(e.key, "expected an array of numbers");
            for (const auto& x : v)
                if (!x.is_number()) bad_key(e.key, "expected an array of numbers");
            break;
    }
}

PerturbationKind parse_pert_kind(const std::string& s) {
    if (s == "second_derivative") return PerturbationKind::SecondDerivative;
    if (s == "first_derivative") return PerturbationKind::FirstDerivative;
    if (s == "cosine") return PerturbationKind::Cosine;
    if (s == "random") return PerturbationKind::Random;
    bad_key("perturbation.kind", "unknown kind '" + s + "'");
}

OutcomeKind parse_outcome_kind(const std::string& s) {
    if (s == "touch_down") return OutcomeKind::TouchDown;
    if (s == "blow_up") return OutcomeKind::BlowUp;
    if (s == "relaxed_to_constant") return OutcomeKind::RelaxedToConstant;
    if (s == "relaxed_to_periodic") return OutcomeKind::RelaxedToPeriodic;
    if (s == "horizon_reached") return OutcomeKind::HorizonReached;
    if (s == "resolution_exhausted") return OutcomeKind::ResolutionExhausted;
    throw std::invalid_argument("unknown outcome kind '" + s + "'");
}

}  // namespace

double ExperimentConfig::resolved_m() const {
    if (m) return *m;
    if (q) return *q + n - 1.0;
    return n;  // default q = 1
}

ExperimentConfig parse_config(const std::string& json_text, const std::string& kind_hint) {
    json raw;
    try {
        raw = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    if (!raw.is_object()) throw std::invalid_argument("config must be a JSON object");

    for (const auto& item : raw.items()) {
        bool known = false;
        for (const auto& e : schema())
            if (item.key() == e.key) {
                known = true;
                break;
            }
        if (!known) throw std::invalid_argument("unknown config key: '" + item.key() + "'");
    }

    json resolved = json::object();
    for (const auto& e : schema()) {
        if (raw.contains(e.key)) {
            check_type(e, raw[e.key]);
            resolved[e.key] = raw[e.key];
        } else if (!e.def.is_null()) {
            resolved[e.key] = e.def;
        }
    }

    // Experiment kind: subcommand supplies or must agree with the config.
    std::string kind;
    if (resolved.contains("kind")) kind = resolved["kind"].get<std::string>();
    if (!kind_hint.empty()) {
        if (!kind.empty() && kind != kind_hint)
            throw std::invalid_argument("config kind '" + kind + "' conflicts with subcommand '" + kind_hint + "'");
        kind = kind_hint;
    }
    if (kind != "steady" && kind != "evolve" && kind != "sweep" && kind != "bifurcation" && kind != "analyze")
        throw std::invalid_argument("kind must be one of steady|evolve|sweep|bifurcation|analyze");
    resolved["kind"] = kind;

    ExperimentConfig cfg;
    cfg.kind = kind;
    auto num = [&](const char* k) { return resolved[k].get<double>(); };
    auto opt_num = [&](const char* k) -> std::optional<double> {
        if (resolved.contains(k)) return resolved[k].get<double>();
        return std::nullopt;
    };
    auto opt_str = [&](const char* k) -> std::optional<std::string> {
        if (resolved.contains(k)) return resolved[k].get<std::string>();
        return std::nullopt;
    };

    cfg.n = num("n");
    cfg.m = opt_num("m");
    cfg.q = opt_num("q");
    if (resolved.contains("n_list")) cfg.n_list = resolved["n_list"].get<std::vector<double>>();
    cfg.bond = opt_num("bond");
    cfg.alpha = opt_num("alpha");
    cfg.hbar = opt_num("hbar");
    cfg.target_period = opt_num("target_period");
    cfg.grid_n = static_cast<int>(as_int(resolved["grid.N"], "grid.N"));
    cfg.grid_x = opt_num("grid.X");
    cfg.steady_phase = resolved["steady.phase"].get<std::string>();
    cfg.initial_expr = opt_str("initial");
    cfg.initial_file = opt_str("initial_file");
    cfg.pert_kind = resolved["perturbation.kind"].get<std::string>();
    cfg.pert_amplitude = num("perturbation.amplitude");
    cfg.pert_wavenumber = num("perturbation.wavenumber");
    cfg.pert_decay = num("perturbation.decay");
    cfg.pert_seed = static_cast<std::uint64_t>(as_int(resolved["perturbation.seed"], "perturbation.seed"));
    cfg.controls.epsilon = num("controls.epsilon");
    cfg.controls.dt_init = num("controls.dt_init");
    cfg.controls.dt_min = num("controls.dt_min");
    cfg.controls.dt_max = num("controls.dt_max");
    cfg.controls.t_max = num("controls.t_max");
    cfg.controls.n_max = static_cast<int>(as_int(resolved["controls.n_max"], "controls.n_max"));
    cfg.controls.blowup_threshold = num("controls.blowup_threshold");
    cfg.controls.touchdown_report = num("controls.touchdown_report");
    cfg.controls.fixed_dt = num("controls.fixed_dt");
    cfg.controls.max_steps = static_cast<long>(as_int(resolved["controls.max_steps"], "controls.max_steps"));
    cfg.out_dir = resolved["output.dir"].get<std::string>();
    cfg.snapshot_every = static_cast<int>(as_int(resolved["output.snapshot_every"], "output.snapshot_every"));
    cfg.classify_tol = num("classify.tol");
    cfg.analyze_dir = opt_str("analyze.dir");
    cfg.analyze_steady_file = opt_str("analyze.steady_file");
    cfg.analyze_p = num("analyze.p");
    cfg.bif_alpha_min = num("bifurcation.alpha_min");
    cfg.bif_alpha_max = num("bifurcation.alpha_max");
    cfg.bif_count = static_cast<int>(as_int(resolved["bifurcation.count"], "bifurcation.count"));
    cfg.bif_q_upper = num("bifurcation.q_upper");
    cfg.sweep_refine = resolved["sweep.refine"].get<bool>();
    cfg.sweep_refine_iterations = static_cast<int>(as_int(resolved["sweep.refine_iterations"], "sweep.refine_iterations"));
    cfg.sweep_workers = static_cast<int>(as_int(resolved["sweep.workers"], "sweep.workers"));

    // Semantic validation.
    if (cfg.m && cfg.q && std::fabs(*cfg.m - (*cfg.q + cfg.n - 1.0)) > 1e-9 * std::max(1.0, std::fabs(*cfg.m)))
        throw std::invalid_argument("config keys m and q disagree (m must equal q + n - 1)");
    if (cfg.grid_n < 8 || !is_power_of_two(cfg.grid_n)) bad_key("grid.N", "must be a power of two >= 8");
    if (cfg.grid_n > cfg.controls.n_max) bad_key("grid.N", "exceeds controls.n_max");
    if (cfg.steady_phase != "min" && cfg.steady_phase != "peak") bad_key("steady.phase", "must be 'min' or 'peak'");
    if (cfg.pert_kind != "none") parse_pert_kind(cfg.pert_kind);
    cfg.controls.validate();
    if (cfg.snapshot_every < 0) bad_key("output.snapshot_every", "must be >= 0");
    if (!cfg.n_list.empty() && cfg.kind != "sweep") bad_key("n_list", "only valid for sweep experiments");
    if (cfg.initial_expr && cfg.initial_file)
        throw std::invalid_argument("give at most one of 'initial' and 'initial_file'");

    const int modes = (cfg.initial_expr || cfg.initial_file ? 1 : 0) + (cfg.alpha ? 1 : 0) + (cfg.hbar ? 1 : 0);
    if (cfg.kind == "evolve" && modes != 1)
        throw std::invalid_argument("evolve needs exactly one of: alpha (steady base), hbar (constant base), initial/initial_file");
    if (cfg.kind == "steady" || cfg.kind == "sweep") {
        if (!cfg.alpha) throw std::invalid_argument(cfg.kind + " needs 'alpha'");
        if (!cfg.q && !cfg.m) throw std::invalid_argument(cfg.kind + " needs 'q' (or 'm')");
    }
    if (cfg.alpha) {
        if (!cfg.target_period) throw std::invalid_argument("alpha-mode needs 'target_period'");
        if (!cfg.q && !cfg.m) throw std::invalid_argument("alpha-mode needs 'q' (or 'm')");
        if (cfg.grid_x && std::fabs(*cfg.grid_x - *cfg.target_period) > 1e-9 * *cfg.target_period)
            bad_key("grid.X", "conflicts with target_period in alpha-mode");
    }
    if (cfg.hbar && !cfg.grid_x) throw std::invalid_argument("hbar-mode needs 'grid.X'");
    if (cfg.initial_expr && !cfg.grid_x) throw std::invalid_argument("'initial' needs 'grid.X'");
    if (cfg.kind == "sweep") {
        if (cfg.n_list.empty()) throw std::invalid_argument("sweep needs a non-empty 'n_list'");
        if (cfg.m) throw std::invalid_argument("sweep derives m from q and each n; do not give 'm'");
        if (!cfg.q) throw std::invalid_argument("sweep needs 'q'");
        for (size_t i = 0; i + 1 < cfg.n_list.size(); ++i)
            if (!(cfg.n_list[i] < cfg.n_list[i + 1])) bad_key("n_list", "must be strictly increasing");
    }
    if (cfg.kind == "bifurcation") {
        if (!cfg.q && !cfg.m) throw std::invalid_argument("bifurcation needs 'q' (or 'm')");
        if (!cfg.target_period) throw std::invalid_argument("bifurcation needs 'target_period'");
        if (!(cfg.bif_alpha_min > 0.0) || !(cfg.bif_alpha_max < 1.0) || !(cfg.bif_alpha_min <= cfg.bif_alpha_max))
            bad_key("bifurcation.alpha_min", "alpha range must satisfy 0 < min <= max < 1");
        if (cfg.bif_count < 1) bad_key("bifurcation.count", "must be >= 1");
    }
    if (cfg.kind == "analyze" && !cfg.analyze_dir) throw std::invalid_argument("analyze needs 'analyze.dir'");
    if (cfg.sweep_workers < 1) bad_key("sweep.workers", "must be >= 1");
    if (cfg.sweep_refine_iterations < 0) bad_key("sweep.refine_iterations", "must be >= 0");

    cfg.echo = std::move(resolved);
    return cfg;
}

ExperimentConfig load_config(const fs::path& file, const std::string& kind_hint) {
    std::ifstream in(file);
    if (!in) throw std::invalid_argument("cannot open config file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), kind_hint);
}

void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.pert_seed = seed;
    cfg.echo["perturbation.seed"] = seed;
}

// ---------------------------------------------------------------------------
// Initial-data expression grammar, applied pointwise on the mesh.

namespace {

struct ExprParser {
    const std::string& s;
    size_t pos = 0;
    double x;

    ExprParser(const std::string& text, double x_val) : s(text), x(x_val) {}

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
        skip();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!eat(c)) throw std::invalid_argument(std::string("initial expression: expected '") + c + "' at offset " +
                                                 std::to_string(pos));
    }

    double parse_expr() {
        double v = parse_term();
        for (;;) {
            if (eat('+')) v += parse_term();
            else if (eat('-')) v -= parse_term();
            else return v;
        }
    }
    double parse_term() {
        double v = parse_unary();
        for (;;) {
            if (eat('*')) v *= parse_unary();
            else if (eat('/')) v /= parse_unary();
            else return v;
        }
    }
    double parse_unary() {
        if (eat('-')) return -parse_unary();
        if (eat('+')) return parse_unary();
        return parse_power();
    }
    double parse_power() {
        double b = parse_primary();
        if (eat('^')) return std::pow(b, parse_unary());
        return b;
    }
    double parse_primary() {
        skip();
        if (eat('(')) {
            double v = parse_expr();
            expect(')');
            return v;
        }
        if (pos < s.size() && (std::isalpha(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) {
            size_t start = pos;
            while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
            std::string name = s.substr(start, pos - start);
            if (name == "x") return x;
            if (name == "pi") return M_PI;
            double fn_pow = 1.0;
            if (name == "cos" || name == "sin" || name == "exp") {
                if (eat('^')) {  // sin^2(...) style
                    skip();
                    fn_pow = parse_number();
                }
                expect('(');
                double a = parse_expr();
                expect(')');
                double v = name == "cos" ? std::cos(a) : name == "sin" ? std::sin(a) : std::exp(a);
                return fn_pow == 1.0 ? v : std::pow(v, fn_pow);
            }
            throw std::invalid_argument("initial expression: unknown name '" + name + "'");
        }
        return parse_number();
    }
    double parse_number() {
        skip();
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) throw std::invalid_argument("initial expression: expected a number at offset " + std::to_string(pos));
        pos += static_cast<size_t>(end - begin);
        return v;
    }
};

}  // namespace

double eval_initial_expression(const std::string& expr, double x) {
    ExprParser p(expr, x);
    double v = p.parse_expr();
    p.skip();
    if (p.pos != expr.size())
        throw std::invalid_argument("initial expression: trailing characters at offset " + std::to_string(p.pos));
    return v;
}

// ---------------------------------------------------------------------------
// Experiment runners.

namespace {

json outcome_to_json(const Outcome& oc) {
    json j;
    j["kind"] = to_string(oc.kind);
    j["t_stop"] = oc.t_stop;
    j["t_last_resolved"] = oc.t_last_resolved;
    j["value"] = oc.value;
    j["locations"] = oc.locations;
    j["detail"] = oc.detail;
    return j;
}

void write_manifest(const fs::path& dir, const json& m) {
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
    out << m.dump(2) << '\n';
}

// Ratio estimate of the singularity time from the resolved h_min (or h_max) series:
// prefer the sample pair whose value ratio is nearest 2.
double manifest_t_estimate(const RunRecord& rec, double p, bool use_max) {
    std::vector<std::pair<double, double>> rows;
    for (const auto& r : rec.series) {
        const double v = use_max ? r.hmax : r.hmin;
        if (r.resolved && v > 0.0) rows.push_back({r.t, v});
    }
    if (rows.size() < 2) return kNaN;
    const auto [t2, v2] = rows.back();
    const double target = use_max ? -std::log(2.0) : std::log(2.0);
    double best = std::numeric_limits<double>::infinity();
    double t1 = 0.0, v1 = 0.0;
    for (size_t i = 0; i + 1 < rows.size(); ++i) {
        const double d = std::fabs(std::log(rows[i].second / v2) - target);
        if (d < best) {
            best = d;
            t1 = rows[i].first;
            v1 = rows[i].second;
        }
    }
    const double drift = std::fabs(std::log(v1 / v2));
    if (!(t1 < t2) || drift < 0.05) return kNaN;
    try {
        return estimate_singularity_time(t1, v1, t2, v2, p);
    } catch (const std::exception&) {
        return kNaN;
    }
}

struct PreparedRun {
    PeriodicField base;     // unperturbed base state (steady profile or constant)
    PeriodicField initial;  // base with the configured perturbation applied
    ModelParams params;
    bool has_steady = false;
    double X = 0.0;
    json derived;
};

PeriodicField rotate_half(const PeriodicField& f) {
    const int n = f.size();
    PeriodicField g = f;
    for (int j = 0; j < n; ++j) g.values[static_cast<size_t>(j)] = f.values[static_cast<size_t>((j + n / 2) % n)];
    return g;
}

PreparedRun prepare_run(const ExperimentConfig& cfg) {
    PreparedRun prep;
    prep.derived = json::object();
    double bond_resolved = cfg.bond.value_or(1.0);

    if (cfg.initial_expr || cfg.initial_file) {
        if (cfg.initial_expr) {
            const std::string expr = *cfg.initial_expr;
            prep.base = make_grid(*cfg.grid_x, cfg.grid_n,
                                  [&expr](double x) { return eval_initial_expression(expr, x); });
        } else {
            prep.base = read_snapshot_csv(*cfg.initial_file);
        }
        prep.X = prep.base.X;
    } else if (cfg.alpha) {
        const double q = cfg.resolved_q();
        if (q == 0.0)
            throw std::invalid_argument("alpha-mode rescaling is undefined at q = 0; use 'initial' instead");
        CanonicalSteadyState c = solve_canonical(q, *cfg.alpha, 1e-12, cfg.grid_n);
        RescaledSteadyState st = cfg.bond ? scale_with_bond(c, *cfg.bond, *cfg.target_period)
                                          : scale_to_period(c, *cfg.target_period);
        prep.base = st.profile;
        if (cfg.steady_phase == "peak") prep.base = rotate_half(prep.base);
        prep.X = *cfg.target_period;
        bond_resolved = st.bond;
        prep.has_steady = true;
        prep.derived["d_const"] = st.d_const;
        prep.derived["canonical_period"] = st.canonical_period;
        prep.derived["canonical_area"] = c.area;
        prep.derived["energy"] = st.energy;
        prep.derived["steady_area"] = st.area;
        prep.derived["steady_peak"] = prep.base.max();
    } else {
        prep.base = make_grid(*cfg.grid_x, cfg.grid_n, [&](double) { return *cfg.hbar; });
        prep.X = *cfg.grid_x;
    }

    if (prep.base.min() <= 0.0) throw std::invalid_argument("initial data must be strictly positive");

    prep.params = ModelParams{cfg.n, cfg.resolved_m(), bond_resolved};
    prep.params.validate();

    if (cfg.pert_kind != "none") {
        PerturbationSpec spec;
        spec.kind = parse_pert_kind(cfg.pert_kind);
        spec.amplitude = cfg.pert_amplitude;
        spec.wavenumber = cfg.pert_wavenumber;
        spec.decay = cfg.pert_decay;
        spec.seed = cfg.pert_seed;
        prep.initial = apply_perturbation(spec, prep.base);
    } else {
        prep.initial = prep.base;
    }
    if (prep.initial.min() <= 0.0)
        throw std::invalid_argument("perturbed initial data is not strictly positive");

    prep.derived["bond"] = bond_resolved;
    prep.derived["X"] = prep.X;
    prep.derived["N_initial"] = prep.initial.size();
    prep.derived["initial_mass"] = mass(prep.initial);
    return prep;
}

RunProbes energy_probe(const ModelParams& params) {
    RunProbes probes;
    EnergyParams ep = EnergyParams::from_model(params);
    probes.energy = [ep](const PeriodicField& f) { return free_energy(f, ep); };
    return probes;
}

void write_run_artifacts(const fs::path& dir, const RunRecord& rec, json& artifacts) {
    write_series_csv(dir / "series.csv", rec.series);
    artifacts["series"] = "series.csv";
    json snaps = json::array();
    for (const auto& s : rec.snapshots) {
        const std::string name = "snap_" + std::to_string(s.step) + ".csv";
        write_snapshot_csv(dir / name, s.field);
        snaps.push_back(name);
    }
    artifacts["snapshots"] = snaps;
    write_snapshot_csv(dir / "snap_final.csv", rec.final_state);
    artifacts["final"] = "snap_final.csv";
    write_snapshot_csv(dir / "snap_resolved.csv", rec.last_resolved);
    artifacts["last_resolved"] = "snap_resolved.csv";
}

json mesh_history_json(const RunRecord& rec) {
    json h = json::array();
    for (const auto& [t, n] : rec.mesh_history) h.push_back(json::array({t, n}));
    return h;
}

RunRecord execute_run(const PreparedRun& prep, const ExperimentConfig& cfg, const ModelParams& params) {
    StepControls controls = cfg.controls;
    controls.snapshot_every = cfg.snapshot_every;
    RunRecord rec = evolve_run(prep.initial, params, controls, energy_probe(params));
    ClassifyReferences refs;
    if (prep.has_steady) refs.steady = prep.base;
    rec.outcome = classify_outcome(rec, refs, cfg.classify_tol);
    return rec;
}

int run_steady(const ExperimentConfig& cfg, const fs::path& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const double q = cfg.resolved_q();
    if (q == 0.0) throw std::invalid_argument("steady rescaling is undefined at q = 0");
    CanonicalSteadyState c = solve_canonical(q, *cfg.alpha, 1e-12, cfg.grid_n);
    RescaledSteadyState st = cfg.bond ? scale_with_bond(c, *cfg.bond, *cfg.target_period)
                                      : scale_to_period(c, *cfg.target_period);
    PeriodicField profile = cfg.steady_phase == "peak" ? rotate_half(st.profile) : st.profile;
    write_snapshot_csv(out / "snap_steady.csv", profile);

    json m;
    m["kind"] = "steady";
    m["config"] = cfg.echo;
    m["q"] = q;
    m["alpha"] = *cfg.alpha;
    m["P"] = c.period;
    m["A"] = c.area;
    m["E"] = c.energy;
    m["bond"] = st.bond;
    m["D"] = st.d_const;
    m["N"] = cfg.grid_n;
    m["physical"] = {{"period", st.period}, {"area", st.area}, {"min", profile.min()}, {"max", profile.max()}};
    m["artifacts"] = {{"snapshot", "snap_steady.csv"}};
    m["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out, m);
    return 0;
}

int run_evolve(const ExperimentConfig& cfg, const fs::path& out) {
    PreparedRun prep = prepare_run(cfg);
    RunRecord rec = execute_run(prep, cfg, prep.params);

    json m;
    m["kind"] = "evolve";
    m["config"] = cfg.echo;
    json derived = prep.derived;
    derived["blowup_threshold"] = rec.controls.blowup_threshold;
    m["derived"] = derived;
    m["outcome"] = outcome_to_json(rec.outcome);
    if (rec.outcome.kind == OutcomeKind::TouchDown)
        m["outcome"]["t_estimate"] = manifest_t_estimate(rec, cfg.analyze_p, false);
    if (rec.outcome.kind == OutcomeKind::BlowUp)
        m["outcome"]["t_estimate"] = manifest_t_estimate(rec, cfg.analyze_p, true);
    m["final_time"] = rec.outcome.t_stop;
    m["mesh_history"] = mesh_history_json(rec);
    m["series_rows"] = rec.series.size();
    json artifacts;
    write_run_artifacts(out, rec, artifacts);
    m["artifacts"] = artifacts;
    m["wall_time_s"] = rec.wall_time_s;
    write_manifest(out, m);
    return 0;
}

struct SweepRow {
    double n = 0.0;
    Outcome outcome;
    double final_hmin = 0.0;
    int touchdown_count = 0;
    double half_t = kNaN;
    double t_c = kNaN;
};

json sweep_row_json(const SweepRow& r) {
    json j;
    j["n"] = r.n;
    j["outcome"] = to_string(r.outcome.kind);
    j["final_hmin"] = r.final_hmin;
    j["touchdown_count"] = r.touchdown_count;
    j["half_time"] = r.half_t;
    j["t_c"] = r.t_c;
    return j;
}

int run_sweep(const ExperimentConfig& cfg, const fs::path& out) {
    PreparedRun prep = prepare_run(cfg);
    const size_t count = cfg.n_list.size();
    std::vector<SweepRow> rows(count);
    std::vector<RunRecord> recs(count);

    // Deterministic fan-out: rows are indexed by position in n_list, so worker
    // scheduling cannot reorder results.
    std::atomic<size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto work = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                ModelParams params{cfg.n_list[i], cfg.resolved_q() + cfg.n_list[i] - 1.0, prep.params.bond};
                recs[i] = execute_run(prep, cfg, params);
                SweepRow row;
                row.n = cfg.n_list[i];
                row.outcome = recs[i].outcome;
                row.final_hmin = recs[i].series.back().hmin;
                if (row.outcome.kind == OutcomeKind::TouchDown) {
                    row.touchdown_count = static_cast<int>(row.outcome.locations.size());
                    row.half_t = half_time(recs[i], 0.5 * recs[i].series.front().hmin);
                    row.t_c = manifest_t_estimate(recs[i], cfg.analyze_p, false);
                } else if (row.outcome.kind == OutcomeKind::RelaxedToConstant) {
                    row.half_t = half_time(recs[i], 0.5 * (recs[i].series.front().hmin + row.outcome.value));
                }
                rows[i] = row;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const size_t workers = std::min<size_t>(static_cast<size_t>(cfg.sweep_workers), count);
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    // Per-row artifacts and sweep table.
    for (size_t i = 0; i < count; ++i) {
        const fs::path dir = out / ("run_" + std::to_string(i));
        fs::create_directories(dir);
        json artifacts;
        write_run_artifacts(dir, recs[i], artifacts);
    }
    {
        std::ofstream sw(out / "sweep.csv");
        if (!sw) throw std::runtime_error("cannot write sweep.csv");
        sw << "n,outcome,final_hmin,touchdown_count,half_time,t_c\n";
        for (const auto& r : rows)
            sw << format_g17(r.n) << ',' << to_string(r.outcome.kind) << ',' << format_g17(r.final_hmin) << ','
               << r.touchdown_count << ',' << format_g17(r.half_t) << ',' << format_g17(r.t_c) << '\n';
    }

    // Bracket: adjacent pair where touch-down switches off as n increases.
    json bracket = nullptr;
    bool non_monotone = false;
    int transitions = 0;
    for (size_t i = 0; i + 1 < count; ++i) {
        const bool td_lo = rows[i].outcome.kind == OutcomeKind::TouchDown;
        const bool td_hi = rows[i + 1].outcome.kind == OutcomeKind::TouchDown;
        if (td_lo != td_hi) {
            ++transitions;
            if (bracket.is_null() && td_lo && !td_hi) bracket = json::array({rows[i].n, rows[i + 1].n});
        }
    }
    if (transitions > 1) non_monotone = true;

    json refinement = nullptr;
    if (cfg.sweep_refine && bracket.is_array()) {
        double lo = bracket[0].get<double>(), hi = bracket[1].get<double>();
        json iters = json::array();
        for (int it = 0; it < cfg.sweep_refine_iterations; ++it) {
            const double mid = 0.5 * (lo + hi);
            ModelParams params{mid, cfg.resolved_q() + mid - 1.0, prep.params.bond};
            RunRecord rec = execute_run(prep, cfg, params);
            const bool td = rec.outcome.kind == OutcomeKind::TouchDown;
            iters.push_back({{"n", mid}, {"outcome", to_string(rec.outcome.kind)}});
            (td ? lo : hi) = mid;
        }
        refinement = {{"bracket", json::array({lo, hi})}, {"iterations", iters}};
    }

    json m;
    m["kind"] = "sweep";
    m["config"] = cfg.echo;
    json derived = prep.derived;
    m["derived"] = derived;
    json jrows = json::array();
    for (const auto& r : rows) jrows.push_back(sweep_row_json(r));
    m["rows"] = jrows;
    m["bracket"] = bracket;
    m["non_monotone"] = non_monotone;
    m["refinement"] = refinement;
    json row_configs = json::array();
    for (size_t i = 0; i < count; ++i) {
        json rc = cfg.echo;
        rc.erase("n_list");
        rc["kind"] = "evolve";
        rc["n"] = cfg.n_list[i];
        rc["m"] = cfg.resolved_q() + cfg.n_list[i] - 1.0;
        row_configs.push_back(rc);
    }
    m["row_configs"] = row_configs;
    m["artifacts"] = {{"table", "sweep.csv"}};
    write_manifest(out, m);
    return 0;
}

int run_bifurcation(const ExperimentConfig& cfg, const fs::path& out) {
    const double q = cfg.resolved_q();
    std::vector<double> alphas(static_cast<size_t>(cfg.bif_count));
    if (cfg.bif_count == 1) {
        alphas[0] = cfg.bif_alpha_min;
    } else {
        for (int i = 0; i < cfg.bif_count; ++i)
            alphas[static_cast<size_t>(i)] =
                cfg.bif_alpha_min + (cfg.bif_alpha_max - cfg.bif_alpha_min) * i / (cfg.bif_count - 1);
    }
    const double bond = cfg.bond.value_or(1.0);
    auto pts = bifurcation_branch(q, bond, *cfg.target_period, alphas, cfg.bif_q_upper);

    std::ofstream br(out / "branch.csv");
    if (!br) throw std::runtime_error("cannot write branch.csv");
    br << "alpha,E,amplitude,stability\n";
    auto stab = [](BranchStability s) {
        return s == BranchStability::Stable ? "stable" : s == BranchStability::Unstable ? "unstable" : "neutral";
    };
    for (const auto& p : pts)
        br << format_g17(p.alpha) << ',' << format_g17(p.energy) << ',' << format_g17(p.amplitude) << ','
           << stab(p.stability) << '\n';

    json m;
    m["kind"] = "bifurcation";
    m["config"] = cfg.echo;
    m["q"] = q;
    m["bond"] = bond;
    m["points"] = pts.size();
    m["artifacts"] = {{"branch", "branch.csv"}};
    write_manifest(out, m);
    return 0;
}

int run_analyze(const ExperimentConfig& cfg, const fs::path& out) {
    const fs::path src(*cfg.analyze_dir);
    std::ifstream min(src / "manifest.json");
    if (!min) throw std::invalid_argument("analyze.dir has no manifest.json: " + src.string());
    json manifest = json::parse(min);
    if (!manifest.contains("config") || !manifest.contains("outcome"))
        throw std::invalid_argument("manifest in " + src.string() + " is not an evolve manifest");

    ExperimentConfig runner = parse_config(manifest["config"].dump());
    RunRecord rec;
    rec.series = read_series_csv(src / "series.csv");
    rec.last_resolved = read_snapshot_csv(src / "snap_resolved.csv");
    rec.final_state = read_snapshot_csv(src / "snap_final.csv");
    rec.controls = runner.controls;
    if (manifest.contains("derived") && manifest["derived"].contains("blowup_threshold"))
        rec.controls.blowup_threshold = manifest["derived"]["blowup_threshold"].get<double>();
    const json& oj = manifest["outcome"];
    rec.outcome.kind = parse_outcome_kind(oj["kind"].get<std::string>());
    rec.outcome.t_stop = oj["t_stop"].get<double>();
    rec.outcome.t_last_resolved = oj["t_last_resolved"].get<double>();
    rec.outcome.value = oj["value"].get<double>();
    rec.outcome.detail = oj["detail"].get<std::string>();
    for (const auto& loc : oj["locations"]) rec.outcome.locations.push_back(loc.get<double>());
    rec.t_last_resolved = rec.outcome.t_last_resolved;
    rec.params = ModelParams{runner.n, runner.resolved_m(),
                             manifest["derived"].contains("bond") ? manifest["derived"]["bond"].get<double>() : 1.0};

    ClassifyReferences refs;
    if (cfg.analyze_steady_file) refs.steady = read_snapshot_csv(*cfg.analyze_steady_file);
    Outcome refined = classify_outcome(rec, refs, cfg.classify_tol);

    json d;
    d["config"] = cfg.echo;
    d["outcome"] = outcome_to_json(refined);
    const bool td = refined.kind == OutcomeKind::TouchDown;
    const bool bu = refined.kind == OutcomeKind::BlowUp;
    json tc = nullptr, fit = nullptr;
    if (td || bu) {
        const double t_est = manifest_t_estimate(rec, cfg.analyze_p, bu);
        if (std::isfinite(t_est)) {
            tc = t_est;
            std::vector<std::pair<double, double>> samples;
            for (auto it = rec.series.rbegin(); it != rec.series.rend() && samples.size() < 12; ++it) {
                const double v = bu ? it->hmax : it->hmin;
                if (it->resolved && v > 0.0 && t_est - it->t > 0.0)
                    samples.push_back({t_est - it->t, v});
            }
            if (samples.size() >= 2) {
                try {
                    PowerLawFit f = fit_power_law(samples);
                    fit = {{"prefactor", f.prefactor}, {"exponent", f.exponent}};
                } catch (const std::exception&) {
                }
            }
        }
    }
    d["t_c_ratio"] = tc;
    d["power_law"] = fit;

    std::ofstream dout(out / "diagnostics.json");
    if (!dout) throw std::runtime_error("cannot write diagnostics.json");
    dout << d.dump(2) << '\n';
    return 0;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, const std::optional<fs::path>& out_dir_override) {
    const fs::path out = out_dir_override.value_or(fs::path(cfg.out_dir));
    fs::create_directories(out);
    try {
        if (cfg.kind == "steady") return run_steady(cfg, out);
        if (cfg.kind == "evolve") return run_evolve(cfg, out);
        if (cfg.kind == "sweep") return run_sweep(cfg, out);
        if (cfg.kind == "bifurcation") return run_bifurcation(cfg, out);
        return run_analyze(cfg, out);
    } catch (const numeric_error& e) {
        // Numerical failure: record it in the manifest, keep partial artifacts.
        json m;
        m["kind"] = cfg.kind;
        m["config"] = cfg.echo;
        m["error"] = e.what();
        write_manifest(out, m);
        return 1;
    }
}

}  // namespace thinfilm
