#ifndef HAMCURV_SCENARIO_HPP
#define HAMCURV_SCENARIO_HPP

// Scenario files: a flat, sectioned key-value format driving the library
// from the command line. Strict parsing: unknown sections or keys are
// rejected with the offending name and line number. See docs/scenario.md
// for the schema.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hamcurv/hyperbolicity.hpp"

namespace hamcurv {

class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// 17 significant digits: round-trip exact for doubles.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline const std::map<std::string, std::set<std::string>>& scenario_schema() {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"system",
         {"name", "family", "n", "potential", "hamiltonian", "metric_diag", "metric_entries",
          "profile", "negate"}},
        {"task",
         {"type", "point", "p", "q", "method", "axis", "q_from", "q_to", "count", "t_end",
          "horizon", "renorm", "period", "shift", "box_lo", "box_hi", "energy", "energies",
          "samples"}},
        {"output", {"csv", "certificate", "plot", "log"}},
    };
    return schema;
}

}  // namespace detail

struct Scenario {
    std::string path;
    // section -> key -> value, plus line numbers for diagnostics
    std::map<std::string, std::map<std::string, std::string>> kv;
    std::map<std::string, int> key_lines;

    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback = "") const {
        auto s = kv.find(section);
        if (s == kv.end()) return fallback;
        auto k = s->second.find(key);
        return k == s->second.end() ? fallback : k->second;
    }
    bool has(const std::string& section, const std::string& key) const {
        auto s = kv.find(section);
        return s != kv.end() && s->second.count(key) > 0;
    }

    static Scenario parse_text(const std::string& text, const std::string& origin = "<memory>") {
        Scenario sc;
        sc.path = origin;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string t = detail::trim(line);
            if (t.empty() || t[0] == '#') continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw ScenarioError(origin + ":" + std::to_string(lineno) +
                                        ": malformed section header '" + t + "'");
                section = detail::trim(t.substr(1, t.size() - 2));
                if (detail::scenario_schema().count(section) == 0)
                    throw ScenarioError(origin + ":" + std::to_string(lineno) +
                                        ": unknown section '" + section + "'");
                sc.kv[section];
                continue;
            }
            auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ScenarioError(origin + ":" + std::to_string(lineno) +
                                    ": expected 'key = value', got '" + t + "'");
            if (section.empty())
                throw ScenarioError(origin + ":" + std::to_string(lineno) +
                                    ": key outside any section");
            std::string key = detail::trim(t.substr(0, eq));
            std::string value = detail::trim(t.substr(eq + 1));
            const auto& allowed = detail::scenario_schema().at(section);
            if (allowed.count(key) == 0)
                throw ScenarioError(origin + ":" + std::to_string(lineno) + ": unknown key '" +
                                    key + "' in section [" + section + "]");
            if (sc.kv[section].count(key))
                throw ScenarioError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                                    key + "' in section [" + section + "]");
            sc.kv[section][key] = value;
            sc.key_lines[section + "." + key] = lineno;
        }
        return sc;
    }

    static Scenario parse_file(const std::string& file) {
        std::ifstream in(file);
        if (!in) throw ScenarioError("cannot open scenario file '" + file + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_text(ss.str(), file);
    }

    /// Apply an override of the form "section.key=value" (strict schema).
    void apply_override(const std::string& spec) {
        auto eq = spec.find('=');
        auto dot = spec.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ScenarioError("override must look like section.key=value, got '" + spec + "'");
        std::string section = detail::trim(spec.substr(0, dot));
        std::string key = detail::trim(spec.substr(dot + 1, eq - dot - 1));
        std::string value = detail::trim(spec.substr(eq + 1));
        auto schema = detail::scenario_schema().find(section);
        if (schema == detail::scenario_schema().end())
            throw ScenarioError("override names unknown section '" + section + "'");
        if (schema->second.count(key) == 0)
            throw ScenarioError("override names unknown key '" + key + "' in section [" +
                                section + "]");
        kv[section][key] = value;
    }
};

namespace detail {

inline double parse_number(const Scenario& sc, const std::string& section, const std::string& key) {
    std::string v = sc.get(section, key);
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw ScenarioError(sc.path + ": key '" + section + "." + key + "': expected a number, got '" +
                            v + "'");
    }
}

inline long parse_integer(const Scenario& sc, const std::string& section, const std::string& key) {
    double x = parse_number(sc, section, key);
    long n = static_cast<long>(x);
    if (static_cast<double>(n) != x)
        throw ScenarioError(sc.path + ": key '" + section + "." + key + "': expected an integer");
    return n;
}

inline std::vector<double> parse_numbers(const Scenario& sc, const std::string& section,
                                         const std::string& key) {
    std::istringstream in(sc.get(section, key));
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ScenarioError(sc.path + ": key '" + section + "." + key +
                                "': expected numbers, got '" + tok + "'");
        }
    }
    return out;
}

inline std::vector<std::string> split_exprs(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ';')) out.push_back(trim(cur));
    return out;
}

inline std::vector<std::string> config_vars(int n) {
    std::vector<std::string> vars;
    for (int i = 1; i <= n; ++i) vars.push_back("q" + std::to_string(i));
    return vars;
}

}  // namespace detail

/// Build the model declared in [system]; throws ScenarioError with the
/// offending key on any inconsistency.
inline HamiltonianModel build_model(const Scenario& sc) {
    std::string family = sc.get("system", "family");
    if (family.empty()) throw ScenarioError(sc.path + ": missing key 'system.family'");
    if (!sc.has("system", "n")) throw ScenarioError(sc.path + ": missing key 'system.n'");
    int n = static_cast<int>(detail::parse_integer(sc, "system", "n"));
    if (n < 1) throw ScenarioError(sc.path + ": 'system.n' must be positive");

    auto metric_from_config = [&]() -> MetricField {
        if (sc.has("system", "profile")) {
            if (n != 2)
                throw ScenarioError(sc.path + ": 'system.profile' requires n = 2");
            return SurfaceOfRevolution::from_expr(sc.get("system", "profile")).metric();
        }
        if (sc.has("system", "metric_diag")) {
            auto entries = detail::split_exprs(sc.get("system", "metric_diag"));
            if (static_cast<int>(entries.size()) != n)
                throw ScenarioError(sc.path + ": 'system.metric_diag' needs " + std::to_string(n) +
                                    " entries");
            return MetricField::diagonal(detail::config_vars(n), entries);
        }
        if (sc.has("system", "metric_entries")) {
            auto entries = detail::split_exprs(sc.get("system", "metric_entries"));
            if (static_cast<int>(entries.size()) != n * n)
                throw ScenarioError(sc.path + ": 'system.metric_entries' needs " +
                                    std::to_string(n * n) + " entries");
            return MetricField::from_entries(detail::config_vars(n), entries);
        }
        throw ScenarioError(sc.path + ": family '" + family +
                            "' needs 'system.metric_diag', 'system.metric_entries', or "
                            "'system.profile'");
    };
    auto potential_from_config = [&]() -> ScalarField {
        if (!sc.has("system", "potential"))
            throw ScenarioError(sc.path + ": family '" + family + "' needs 'system.potential'");
        try {
            return ScalarField::from_expr(
                Expr::parse(sc.get("system", "potential"), detail::config_vars(n)));
        } catch (const ParseError& e) {
            throw ScenarioError(sc.path + ": key 'system.potential': " + e.what());
        }
    };

    HamiltonianModel model;
    if (family == "natural") {
        model = HamiltonianModel::natural(n, potential_from_config());
    } else if (family == "geodesic") {
        model = HamiltonianModel::geodesic(metric_from_config());
    } else if (family == "mechanical") {
        model = HamiltonianModel::mechanical(metric_from_config(), potential_from_config());
    } else if (family == "custom") {
        if (!sc.has("system", "hamiltonian"))
            throw ScenarioError(sc.path + ": family 'custom' needs 'system.hamiltonian'");
        try {
            model = HamiltonianModel::custom_expr(n, sc.get("system", "hamiltonian"));
        } catch (const ParseError& e) {
            throw ScenarioError(sc.path + ": key 'system.hamiltonian': " + e.what());
        }
    } else {
        throw ScenarioError(sc.path + ": unknown family '" + family +
                            "' (expected natural | geodesic | mechanical | custom)");
    }
    if (sc.get("system", "negate", "false") == "true") model = model.negated();
    return model;
}

namespace detail {

inline PhasePoint point_from_config(const Scenario& sc, int n, const std::string& key = "point") {
    if (sc.has("task", key)) {
        std::vector<double> vals = parse_numbers(sc, "task", key);
        if (static_cast<int>(vals.size()) != 2 * n)
            throw ScenarioError(sc.path + ": 'task." + key + "' needs " + std::to_string(2 * n) +
                                " numbers (p then q)");
        Vec v = Eigen::Map<const Vec>(vals.data(), vals.size());
        return PhasePoint::from_vector(v);
    }
    std::vector<double> p = parse_numbers(sc, "task", "p");
    std::vector<double> q = parse_numbers(sc, "task", "q");
    if (static_cast<int>(p.size()) != n || static_cast<int>(q.size()) != n)
        throw ScenarioError(sc.path + ": 'task.p' and 'task.q' each need " + std::to_string(n) +
                            " numbers");
    return PhasePoint(Eigen::Map<const Vec>(p.data(), n), Eigen::Map<const Vec>(q.data(), n));
}

}  // namespace detail

/// Static checks without executing the task. Empty result means the
/// scenario is runnable.
inline std::vector<std::string> validate_scenario(const Scenario& sc) {
    std::vector<std::string> diags;
    HamiltonianModel model;
    try {
        model = build_model(sc);
    } catch (const ScenarioError& e) {
        diags.push_back(e.what());
        return diags;
    } catch (const std::exception& e) {
        diags.push_back(sc.path + ": " + e.what());
        return diags;
    }

    static const std::set<std::string> kTasks = {"curvature", "reduced",   "flow",   "equilibrium",
                                                "floquet",   "lyapunov",  "theorem1", "theorem2",
                                                "domain",    "sweep"};
    std::string task = sc.get("task", "type");
    if (task.empty()) {
        diags.push_back(sc.path + ": missing key 'task.type'");
        return diags;
    }
    if (kTasks.count(task) == 0) {
        diags.push_back(sc.path + ": unknown task type '" + task + "'");
        return diags;
    }
    const int n = model.dim();
    if (task == "reduced" && n < 2)
        diags.push_back(sc.path + ": reduced curvature: admissible subspace trivial for n=1");
    if ((task == "theorem2" || task == "floquet") && n < 2)
        diags.push_back(sc.path + ": task '" + task + "' needs n >= 2 for a nontrivial Floquet spectrum");
    if (task == "domain" && model.family() != Family::Geodesic &&
        model.family() != Family::MechanicalOnManifold)
        diags.push_back(sc.path + ": domain check requires a metric-based family");
    try {
        if (task == "curvature" || task == "reduced" || task == "flow" || task == "equilibrium" ||
            task == "floquet" || task == "lyapunov" || task == "theorem1" || task == "theorem2")
            detail::point_from_config(sc, n);
    } catch (const ScenarioError& e) {
        diags.push_back(e.what());
    }
    return diags;
}

struct RunOptions {
    std::string out_dir = ".";
    bool emit_plot_data = false;
    unsigned long seed = 20260824ul;
};

struct RunResult {
    int exit_code = 0;  // 0 success, 1 hypothesis-failure certificate, 2 error
    std::vector<std::string> artifacts;
    std::vector<std::string> log;
};

namespace detail {

inline void write_text(RunResult& res, const std::string& dir, const std::string& name,
                       const std::string& content) {
    std::filesystem::create_directories(dir);
    std::string full = (std::filesystem::path(dir) / name).string();
    std::ofstream out(full, std::ios::binary);
    if (!out) throw ScenarioError("cannot write '" + full + "'");
    out << content;
    res.artifacts.push_back(full);
}

inline nlohmann::ordered_json vec_json(const Vec& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline nlohmann::ordered_json cvec_json(const VecC& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back({{"re", v[i].real()}, {"im", v[i].imag()}});
    return a;
}

}  // namespace detail

/// Execute the scenario. Throws ScenarioError (exit code 2 territory) on
/// configuration problems; numerical failures are caught and reported.
inline RunResult run_scenario(const Scenario& sc, const RunOptions& opt = {}) {
    RunResult res;
    HamiltonianModel model = build_model(sc);
    {
        auto diags = validate_scenario(sc);
        if (!diags.empty()) throw ScenarioError(diags.front());
    }
    const int n = model.dim();
    const std::string task = sc.get("task", "type");
    const std::string name = sc.get("system", "name", "scenario");
    res.log.push_back("scenario: " + name);
    res.log.push_back("task: " + task);
    res.log.push_back("seed: " + std::to_string(opt.seed));

    using nlohmann::ordered_json;
    ordered_json record;
    record["schema"] = "hamcurv.certificate.v1";
    record["scenario"] = name;
    record["task"] = task;
    record["seed"] = opt.seed;

    auto finish_json = [&](const ordered_json& j, const std::string& fallback_name) {
        std::string file = sc.get("output", "certificate", fallback_name);
        detail::write_text(res, opt.out_dir, file, j.dump(2) + "\n");
    };

    if (task == "sweep") {
        // one-axis curvature sweep; columns per docs/scenario.md
        int axis = sc.has("task", "axis") ? static_cast<int>(detail::parse_integer(sc, "task", "axis"))
                                          : 1;
        if (axis < 1 || axis > n) throw ScenarioError(sc.path + ": 'task.axis' out of range");
        long count = detail::parse_integer(sc, "task", "count");
        if (count < 2) throw ScenarioError(sc.path + ": 'task.count' must be at least 2");
        double from = detail::parse_number(sc, "task", "q_from");
        double to = detail::parse_number(sc, "task", "q_to");
        std::vector<double> pvals = detail::parse_numbers(sc, "task", "p");
        if (static_cast<int>(pvals.size()) != n)
            throw ScenarioError(sc.path + ": 'task.p' needs " + std::to_string(n) + " numbers");
        Vec p = Eigen::Map<const Vec>(pvals.data(), n);
        Vec qbase = Vec::Zero(n);
        if (sc.has("task", "q")) {
            std::vector<double> qvals = detail::parse_numbers(sc, "task", "q");
            if (static_cast<int>(qvals.size()) != n)
                throw ScenarioError(sc.path + ": 'task.q' needs " + std::to_string(n) + " numbers");
            qbase = Eigen::Map<const Vec>(qvals.data(), n);
        }

        std::ostringstream csv, plot;
        if (n == 1)
            csv << "q,R,sign_class\n";
        else {
            for (int i = 1; i <= n; ++i) csv << "q" << i << ",";
            for (int i = 1; i <= n; ++i) csv << "p" << i << ",";
            for (int i = 1; i <= n; ++i) csv << "g_ev" << i << ",";
            for (int i = 1; i <= n; ++i) csv << "R_ev" << i << ",";
            csv << "sign_class\n";
        }
        for (long k = 0; k < count; ++k) {
            Vec q = qbase;
            q[axis - 1] = from + (to - from) * static_cast<double>(k) / (count - 1);
            PhasePoint x(p, q);
            CurvatureData c = curvature_any(model, x);
            if (n == 1) {
                csv << detail::format_double(q[0]) << "," << detail::format_double(c.R(0, 0))
                    << "," << to_string(c.sign_class) << "\n";
                plot << detail::format_double(q[0]) << " " << detail::format_double(c.R(0, 0))
                     << "\n";
            } else {
                GForm g = g_form(model, x);
                Eigen::SelfAdjointEigenSolver<Mat> ges(g.matrix);
                for (int i = 0; i < n; ++i) csv << detail::format_double(q[i]) << ",";
                for (int i = 0; i < n; ++i) csv << detail::format_double(p[i]) << ",";
                for (int i = 0; i < n; ++i)
                    csv << detail::format_double(ges.eigenvalues()[i]) << ",";
                for (int i = 0; i < n; ++i) csv << detail::format_double(c.eigenvalues[i]) << ",";
                csv << to_string(c.sign_class) << "\n";
                plot << detail::format_double(q[axis - 1]) << " "
                     << detail::format_double(c.eigenvalues.maxCoeff()) << "\n";
            }
        }
        detail::write_text(res, opt.out_dir, sc.get("output", "csv", "sweep.csv"), csv.str());
        if (opt.emit_plot_data)
            detail::write_text(res, opt.out_dir, sc.get("output", "plot", name + "-sweep") + ".xy",
                               plot.str());
    } else if (task == "curvature") {
        PhasePoint x = detail::point_from_config(sc, n);
        std::string method = sc.get("task", "method", "auto");
        CurvatureData c;
        if (method == "schwartzian")
            c = curvature_schwartzian(model, x);
        else if (method == "closed")
            c = curvature_closed_form(model, x);
        else if (method == "auto")
            c = curvature_any(model, x);
        else
            throw ScenarioError(sc.path + ": 'task.method' must be closed | schwartzian | auto");
        record["point"] = {{"p", detail::vec_json(x.p)}, {"q", detail::vec_json(x.q)}};
        record["eigenvalues"] = detail::vec_json(c.eigenvalues);
        record["sign_class"] = to_string(c.sign_class);
        record["selfadjoint_defect"] = c.selfadjoint_defect;
        record["method"] = c.method == CurvatureMethod::ClosedForm ? "closed" : "schwartzian";
        finish_json(record, "curvature.json");
    } else if (task == "reduced") {
        PhasePoint x = detail::point_from_config(sc, n);
        ReducedCurvatureData rc = reduced_curvature(
            model, x,
            model.family() == Family::Custom ? ReducedMethod::Bracket : ReducedMethod::ClosedForm);
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(rc.r_hat, rc.g_hat);
        record["point"] = {{"p", detail::vec_json(x.p)}, {"q", detail::vec_json(x.q)}};
        record["reduced_eigenvalues"] = detail::vec_json(es.eigenvalues());
        record["sign_class"] = to_string(rc.sign_class);
        finish_json(record, "reduced.json");
    } else if (task == "flow") {
        PhasePoint x = detail::point_from_config(sc, n);
        double t_end = detail::parse_number(sc, "task", "t_end");
        Trajectory traj = integrate(model, x, 0.0, t_end);
        std::ostringstream csv;
        csv << "t";
        for (int i = 1; i <= n; ++i) csv << ",p" << i;
        for (int i = 1; i <= n; ++i) csv << ",q" << i;
        csv << ",h\n";
        for (const auto& smp : traj.samples) {
            csv << detail::format_double(smp.t);
            for (int i = 0; i < 2 * n; ++i)
                csv << "," << detail::format_double(smp.x.to_vector()[i]);
            csv << "," << detail::format_double(smp.energy) << "\n";
        }
        detail::write_text(res, opt.out_dir, sc.get("output", "csv", "flow.csv"), csv.str());
        res.log.push_back("energy_drift: " + detail::format_double(traj.energy_drift));
        if (traj.degraded) {
            res.log.push_back("warning: trajectory flagged degraded");
            res.exit_code = 1;
        }
    } else if (task == "equilibrium") {
        PhasePoint x = detail::point_from_config(sc, n);
        EquilibriumResult eq = find_equilibrium(model, x);
        record["equilibrium"] = {{"p", detail::vec_json(eq.x_eq.p)},
                                 {"q", detail::vec_json(eq.x_eq.q)}};
        record["spectrum"] = detail::cvec_json(eq.spectrum);
        record["hyperbolic"] = eq.hyperbolic;
        record["spectral_margin"] = eq.margin;
        finish_json(record, "equilibrium.json");
        if (!eq.hyperbolic) res.exit_code = 1;
    } else if (task == "floquet" || task == "theorem2") {
        PhasePoint x = detail::point_from_config(sc, n);
        double period = detail::parse_number(sc, "task", "period");
        Vec shift = Vec::Zero(2 * n);
        if (sc.has("task", "shift")) {
            std::vector<double> sv = detail::parse_numbers(sc, "task", "shift");
            if (static_cast<int>(sv.size()) != 2 * n)
                throw ScenarioError(sc.path + ": 'task.shift' needs " + std::to_string(2 * n) +
                                    " numbers");
            shift = Eigen::Map<const Vec>(sv.data(), sv.size());
        }
        Vec f0 = hamiltonian_vector_field(model, x);
        Section section{f0 / f0.norm(), x.to_vector() + shift};
        PeriodicOrbit orbit = find_periodic_orbit(model, x, period, section, shift);
        record["period"] = orbit.period;
        record["energy"] = orbit.energy;
        record["orbit_residual"] = orbit.residual;
        if (task == "floquet") {
            FloquetResult fl = floquet_reduced(orbit, model);
            record["multipliers"] = detail::cvec_json(fl.multipliers);
            record["hyperbolic"] = fl.hyperbolic;
            record["floquet_margin"] = fl.margin;
            finish_json(record, "floquet.json");
            if (!fl.hyperbolic) res.exit_code = 1;
        } else {
            int samples = sc.has("task", "samples")
                              ? static_cast<int>(detail::parse_integer(sc, "task", "samples"))
                              : 64;
            Theorem2Certificate cert = check_theorem2_orbit(model, orbit, samples);
            record["hypotheses"] = {{"on_energy_level", cert.on_energy_level},
                                    {"field_never_vertical", cert.field_never_vertical},
                                    {"reduced_curvature_negative", cert.reduced_curvature_negative},
                                    {"reduced_worst_margin", cert.reduced_worst_margin}};
            record["multipliers"] = detail::cvec_json(cert.multipliers);
            record["hyperbolic"] = cert.hyperbolic;
            record["floquet_margin"] = cert.floquet_margin;
            record["certified"] = cert.certified();
            record["notes"] = cert.notes;
            finish_json(record, "theorem2.json");
            if (!cert.certified()) res.exit_code = 1;
        }
    } else if (task == "lyapunov") {
        PhasePoint x = detail::point_from_config(sc, n);
        double horizon = detail::parse_number(sc, "task", "horizon");
        double renorm = sc.has("task", "renorm") ? detail::parse_number(sc, "task", "renorm") : 1.0;
        LyapunovResult ly = lyapunov_exponents(model, x, horizon, renorm);
        record["exponents"] = detail::vec_json(ly.exponents);
        record["sum"] = ly.sum;
        record["volume_ok"] = ly.volume_ok;
        record["renormalizations"] = ly.renormalizations;
        finish_json(record, "lyapunov.json");
    } else if (task == "theorem1") {
        PhasePoint x = detail::point_from_config(sc, n);
        double horizon = detail::parse_number(sc, "task", "horizon");
        std::vector<double> lo = detail::parse_numbers(sc, "task", "box_lo");
        std::vector<double> hi = detail::parse_numbers(sc, "task", "box_hi");
        if (static_cast<int>(lo.size()) != 2 * n || static_cast<int>(hi.size()) != 2 * n)
            throw ScenarioError(sc.path + ": 'task.box_lo'/'task.box_hi' each need " +
                                std::to_string(2 * n) + " numbers");
        PhaseBox box{Eigen::Map<const Vec>(lo.data(), lo.size()),
                     Eigen::Map<const Vec>(hi.data(), hi.size())};
        Theorem1Certificate cert = check_theorem1(model, x, horizon, box);
        record["hypotheses"] = {{"monotone_at_start", cert.monotone_at_start},
                                {"stayed_in_box", cert.stayed_in_box},
                                {"curvature_negative", cert.curvature_negative_along_trajectory},
                                {"curvature_worst_margin", cert.curvature_worst_margin}};
        record["converged"] = cert.converged;
        if (cert.limit_point) {
            record["limit_point"] = {{"p", detail::vec_json(cert.limit_point->p)},
                                     {"q", detail::vec_json(cert.limit_point->q)}};
            record["spectrum"] = detail::cvec_json(cert.spectrum);
        }
        record["limit_hyperbolic"] = cert.limit_hyperbolic;
        record["spectral_margin"] = cert.spectral_margin;
        record["certified"] = cert.certified();
        record["notes"] = cert.notes;
        finish_json(record, "theorem1.json");
        if (!cert.certified()) res.exit_code = 1;
    } else if (task == "domain") {
        std::vector<double> energies;
        if (sc.has("task", "energies"))
            energies = detail::parse_numbers(sc, "task", "energies");
        else
            energies.push_back(detail::parse_number(sc, "task", "energy"));
        std::vector<Vec> grid;
        if (sc.has("task", "q_from")) {
            int axis = sc.has("task", "axis")
                           ? static_cast<int>(detail::parse_integer(sc, "task", "axis"))
                           : 1;
            long count = detail::parse_integer(sc, "task", "count");
            double from = detail::parse_number(sc, "task", "q_from");
            double to = detail::parse_number(sc, "task", "q_to");
            for (long k = 0; k < count; ++k) {
                Vec q = Vec::Zero(n);
                q[axis - 1] = from + (to - from) * static_cast<double>(k) /
                                         static_cast<double>(count - 1);
                grid.push_back(q);
            }
        } else {
            std::vector<double> qv = detail::parse_numbers(sc, "task", "q");
            grid.push_back(Eigen::Map<const Vec>(qv.data(), qv.size()));
        }
        DomainEnergySweep sweep = sweep_domain_energies(model, grid, energies);
        record["energies"] = sweep.energies;
        record["inside_fractions"] = sweep.inside_fractions;
        record["fraction_monotone_in_c"] = sweep.fraction_monotone_in_c;
        std::ostringstream csv;
        csv << "c,q,kappa,lhs,rhs,inside\n";
        bool any_outside = false;
        for (double c : sweep.energies) {
            DomainSweep ds = sweep_domain(model, grid, c);
            for (const auto& v : ds.verdicts) {
                csv << detail::format_double(c) << "," << detail::format_double(v.q.norm()) << ","
                    << detail::format_double(v.kappa) << "," << detail::format_double(v.lhs) << ","
                    << detail::format_double(v.rhs) << "," << (v.inside ? 1 : 0) << "\n";
                if (!v.inside) any_outside = true;
            }
        }
        detail::write_text(res, opt.out_dir, sc.get("output", "csv", "domain.csv"), csv.str());
        finish_json(record, "domain.json");
        if (any_outside && energies.size() == 1) res.exit_code = 1;
    } else {
        throw ScenarioError(sc.path + ": unknown task type '" + task + "'");
    }

    std::ostringstream log;
    for (const auto& l : res.log) log << l << "\n";
    log << "exit: " << res.exit_code << "\n";
    detail::write_text(res, opt.out_dir, sc.get("output", "log", "run.log"), log.str());
    return res;
}

}  // namespace hamcurv

#endif
