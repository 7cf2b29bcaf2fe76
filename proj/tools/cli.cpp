#include "cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "sdesym/catalog.hpp"
#include "sdesym/error.hpp"
#include "sdesym/flow.hpp"
#include "sdesym/ibp.hpp"
#include "sdesym/json_io.hpp"
#include "sdesym/mc.hpp"
#include "sdesym/parallel.hpp"
#include "sdesym/symmetry.hpp"

namespace sdesym {

namespace {

enum class Kind { Int, UInt, Real, Text, Reals, Object, Switch };

struct Flag {
    std::string name;
    std::string key;  // JSON pointer into the settings document
    Kind kind;
    std::string text;
    bool on = false;
    CLI::Option* opt = nullptr;
};

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

Json inline_or_file(const std::string& text) {
    if (!text.empty() && text[0] == '@') return read_json_file(text.substr(1));
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed inline JSON: ") + e.what());
    }
}

double to_real(const std::string& s, const std::string& what) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ValidationError(what + " expects a number, got '" + s + "'");
    return v;
}

template <class T>
T to_integer(const std::string& s, const std::string& what) {
    T v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ValidationError(what + " expects an integer, got '" + s + "'");
    return v;
}

Json to_reals(const std::string& s, const std::string& what) {
    Json a = Json::array();
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) a.push_back(to_real(item, what));
    if (a.empty()) throw ValidationError(what + " expects a comma-separated list of numbers");
    return a;
}

/// Flags are recorded as overrides on top of the --config document.
class Flags {
public:
    void add(CLI::App* app, const std::string& name, const std::string& key, Kind kind, const std::string& help) {
        Flag& f = flags_.emplace_back(Flag{name, key, kind, {}, false, nullptr});
        f.opt = kind == Kind::Switch ? app->add_flag(name, f.on, help) : app->add_option(name, f.text, help);
    }

    void apply(Json& settings) const {
        std::map<std::string, std::string> seen;
        for (const Flag& f : flags_) {
            if (f.opt->count() == 0) continue;
            if (auto it = seen.find(f.key); it != seen.end())
                throw ValidationError(it->second + " and " + f.name + " are mutually exclusive");
            seen[f.key] = f.name;
            Json v;
            switch (f.kind) {
                case Kind::Int: v = to_integer<long long>(f.text, f.name); break;
                case Kind::UInt: v = to_integer<std::uint64_t>(f.text, f.name); break;
                case Kind::Real: v = to_real(f.text, f.name); break;
                case Kind::Text: v = f.text; break;
                case Kind::Reals: v = to_reals(f.text, f.name); break;
                case Kind::Object: v = inline_or_file(f.text); break;
                case Kind::Switch: v = true; break;
            }
            settings[Json::json_pointer(f.key)] = v;
        }
    }

private:
    std::deque<Flag> flags_;
};

class Settings {
public:
    explicit Settings(Json j) : j_(std::move(j)) {}

    bool has(const std::string& ptr) const { return j_.contains(Json::json_pointer(ptr)); }
    const Json& at(const std::string& ptr) const { return j_.at(Json::json_pointer(ptr)); }

    double real(const std::string& ptr, double fallback) const {
        if (!has(ptr)) return fallback;
        if (!at(ptr).is_number()) bad(ptr, "a number");
        return at(ptr).get<double>();
    }
    int integer(const std::string& ptr, int fallback) const {
        if (!has(ptr)) return fallback;
        if (!at(ptr).is_number_integer()) bad(ptr, "an integer");
        return at(ptr).get<int>();
    }
    std::string text(const std::string& ptr, const std::string& fallback) const {
        if (!has(ptr)) return fallback;
        if (!at(ptr).is_string()) bad(ptr, "a string");
        return at(ptr).get<std::string>();
    }
    bool flag(const std::string& ptr) const {
        if (!has(ptr)) return false;
        if (!at(ptr).is_boolean()) bad(ptr, "a boolean");
        return at(ptr).get<bool>();
    }
    std::vector<double> reals(const std::string& ptr, std::vector<double> fallback) const {
        if (!has(ptr)) return fallback;
        const Json& a = at(ptr);
        if (a.is_number()) return {a.get<double>()};
        if (!a.is_array()) bad(ptr, "a list of numbers");
        std::vector<double> out;
        for (const auto& v : a) {
            if (!v.is_number()) bad(ptr, "a list of numbers");
            out.push_back(v.get<double>());
        }
        return out;
    }

private:
    [[noreturn]] static void bad(const std::string& ptr, const char* what) {
        throw ValidationError("setting '" + ptr.substr(1) + "' must be " + what);
    }
    Json j_;
};

// Objects are either catalog references (strings) or inline JSON documents.

CatalogEntry entry(const Json& v) { return catalog_get_ref(v.get<std::string>()); }

SdeSpec sde_of(const Settings& s, const std::string& ptr, int default_n) {
    if (!s.has(ptr)) return *catalog_get("bm", {{"n", std::to_string(default_n)}}).sde;
    const Json& v = s.at(ptr);
    if (v.is_string()) {
        const CatalogEntry e = entry(v);
        if (!e.sde) throw CatalogError("'" + v.get<std::string>() + "' is not an SDE");
        return *e.sde;
    }
    return sde_from_json(v);
}

StochTransformation transform_of(const Settings& s, const std::string& ptr) {
    if (!s.has(ptr)) throw ValidationError("a transformation is required (" + ptr.substr(1) + ")");
    const Json& v = s.at(ptr);
    if (v.is_string()) {
        const CatalogEntry e = entry(v);
        if (!e.transformation) throw CatalogError("'" + v.get<std::string>() + "' is not a finite transformation");
        return *e.transformation;
    }
    return transformation_from_json(v);
}

InfinitesimalSymmetry symmetry_of(const Settings& s, const std::string& ptr) {
    if (!s.has(ptr)) throw ValidationError("an infinitesimal symmetry is required (" + ptr.substr(1) + ")");
    const Json& v = s.at(ptr);
    if (v.is_string()) {
        const CatalogEntry e = entry(v);
        if (!e.symmetry) throw CatalogError("'" + v.get<std::string>() + "' is not an infinitesimal symmetry");
        return *e.symmetry;
    }
    return symmetry_from_json(v);
}

Grid grid_of(const Settings& s) {
    Grid g;
    if (s.has("/grid")) update_from_json(g, s.at("/grid"));
    return g;
}

McConfig mc_of(const Settings& s) {
    McConfig c;
    if (s.has("/mc")) update_from_json(c, s.at("/mc"));
    c.threads = s.integer("/threads", 0);
    return c;
}

std::vector<double> x0_of(const Settings& s, int n) {
    std::vector<double> x0 = s.reals("/x0", std::vector<double>(static_cast<std::size_t>(n), 0.0));
    if (static_cast<int>(x0.size()) != n) throw ValidationError("x0 must have " + std::to_string(n) + " entries");
    return x0;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Outcome {
    Json report;
    int code = 0;
    std::string summary;
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    out << text;
}

// ---------------------------------------------------------------- commands

Outcome cmd_parse_check(const Settings& s) {
    const int n = s.integer("/n", 1);
    const std::string text = s.text("/expr", "");
    const Expr e = parse(text, n);
    Outcome o;
    o.report = Json{{"input", text}, {"n", n}, {"canonical", to_string(e)}, {"depends_on_t", e.depends_on(kTimeVar)}};
    if (s.has("/x")) {
        const std::vector<double> x = s.reals("/x", {});
        if (static_cast<int>(x.size()) != n) throw ValidationError("--x must have n entries");
        const double t = s.real("/t", 0.0);
        o.report["value"] = evaluate(e, x, t);
        o.report["t"] = t;
    }
    o.summary = "ok: " + to_string(e);
    return o;
}

Outcome cmd_compose(const Settings& s) {
    const StochTransformation T1 = transform_of(s, "/transform");
    const StochTransformation T2 = transform_of(s, "/then");
    Outcome o;
    o.report = to_json(compose(T2, T1));
    o.summary = "composed (n = " + std::to_string(T1.n()) + ", d = " + std::to_string(T1.d()) + ")";
    return o;
}

Outcome cmd_invert(const Settings& s) {
    const StochTransformation T = transform_of(s, "/transform");
    Outcome o;
    o.report = to_json(invert(T));
    o.summary = T.has_closed_inverse() ? "inverted (closed form)" : "inverted (numeric inverse)";
    return o;
}

Outcome cmd_push_sde(const Settings& s) {
    const StochTransformation T = transform_of(s, "/transform");
    const SdeSpec sde = sde_of(s, "/sde", T.n());
    const SdeSpec pushed = push_forward_sde(T, sde);
    Outcome o;
    o.report = Json{{"sde", to_json(pushed)}};
    o.summary = "pushed forward";
    if (!s.has("/expect")) return o;

    // compare at the images (Phi(x, t), f(t)) of the source grid nodes
    const SdeSpec expect = sde_of(s, "/expect", T.n());
    if (expect.n() != pushed.n() || expect.d() != pushed.d()) throw ShapeError("expected SDE has the wrong shape");
    const Grid g = grid_of(s);
    const double tol = s.real("/tol", kSymbolicTol);
    double mu_err = 0.0;
    double sigma_err = 0.0;
    std::vector<double> x;
    double t = 0.0;
    for (std::size_t k = 0; k < g.node_count(T.n()); ++k) {
        g.node(T.n(), k, x, t);
        const std::vector<double> y = T.phi().evaluate(x, t);
        const double u = T.f().evaluate_scalar(x, t);
        mu_err = std::max(mu_err, (pushed.mu().evaluate_vector(y, u) - expect.mu().evaluate_vector(y, u)).cwiseAbs().maxCoeff());
        sigma_err = std::max(
            sigma_err, (pushed.sigma().evaluate_matrix(y, u) - expect.sigma().evaluate_matrix(y, u)).cwiseAbs().maxCoeff());
    }
    const bool pass = std::max(mu_err, sigma_err) <= tol;
    o.report["comparison"] = Json{{"expected", to_json(expect)},
                                  {"max_abs_mu", mu_err},
                                  {"max_abs_sigma", sigma_err},
                                  {"grid", to_json(g)},
                                  {"tol", tol},
                                  {"pass", pass}};
    o.code = pass ? 0 : 1;
    o.summary = std::string(pass ? "PASS" : "FAIL") + ": push-forward residual " + fmt(std::max(mu_err, sigma_err)) +
                " (tol " + fmt(tol) + ")";
    return o;
}

Outcome cmd_check_symmetry(const Settings& s) {
    const SymmetryKind kind = parse_symmetry_kind(s.text("/kind", "weak"));
    const Grid g = grid_of(s);
    const int threads = s.integer("/threads", 0);
    const bool finite = s.has("/transform");
    if (finite == s.has("/symmetry")) throw ValidationError("give exactly one of a transformation or a symmetry");
    ResidualReport r;
    Json subject;
    if (finite) {
        const StochTransformation T = transform_of(s, "/transform");
        const SdeSpec sde = sde_of(s, "/sde", T.n());
        r = check_finite(T, sde, kind, g, s.real("/tol", kSymbolicTol), threads);
        subject = Json{{"transformation", to_json(T)}};
    } else {
        const InfinitesimalSymmetry V = symmetry_of(s, "/symmetry");
        const SdeSpec sde = sde_of(s, "/sde", V.n());
        r = check_infinitesimal(V, sde, kind, g, s.real("/tol", kSymbolicTol), threads);
        subject = Json{{"symmetry", to_json(V)}};
    }
    Outcome o;
    o.report = to_json(r);
    o.report["kind"] = to_string(kind);
    o.report["subject"] = subject;
    o.code = r.pass ? 0 : 1;
    o.summary = std::string(r.pass ? "PASS" : "FAIL") + ": " + to_string(kind) + " residual " + fmt(r.max_abs()) +
                " (tol " + fmt(r.tol) + ")";
    for (const auto& e : r.equations) o.summary += "\n  " + e.label + ": max " + fmt(e.max_abs) + ", mean " + fmt(e.mean_abs);
    return o;
}

Json state_json(const FlowState& st) {
    Json phi = Json::array();
    for (double v : st.phi) phi.push_back(v);
    Json h = Json::array();
    for (double v : st.h) h.push_back(v);
    Json B = Json::array();
    for (int r = 0; r < st.B.rows(); ++r) {
        Json row = Json::array();
        for (int c = 0; c < st.B.cols(); ++c) row.push_back(st.B(r, c));
        B.push_back(row);
    }
    return Json{{"lambda", st.lambda}, {"phi", phi}, {"f", st.f}, {"f_prime", st.f_prime}, {"B", B}, {"h", h}};
}

Outcome cmd_reconstruct_flow(const Settings& s, std::string& csv) {
    const InfinitesimalSymmetry V = symmetry_of(s, "/symmetry");
    const double lambda = s.real("/lambda", 1.0);
    const double every = s.real("/every", 0.1);
    if (!(every > 0.0)) throw ValidationError("--every must be positive");
    FlowOptions fo;
    fo.step = s.real("/step", fo.step);
    if (!(fo.step > 0.0)) throw ValidationError("--step must be positive");
    const std::vector<double> x = x0_of(s, V.n());
    const double t = s.real("/t", 0.0);

    const long count = std::lround(std::fabs(lambda) / every);
    Json states = Json::array();
    csv = flow_csv_header(V.n(), V.d()) + "\n";
    for (long i = 0; i <= count; ++i) {
        const double l = i == count ? lambda : std::copysign(static_cast<double>(i) * every, lambda);
        const FlowState st = reconstruct_point(V, l, x, t, fo);
        states.push_back(state_json(st));
        csv += flow_csv_row(st, x, t) + "\n";
        if (i == count) break;
    }
    Outcome o;
    Json xs = Json::array();
    for (double v : x) xs.push_back(v);
    o.report = Json{{"symmetry", to_json(V)}, {"x", xs}, {"t", t}, {"step", fo.step}, {"states", states}};
    o.summary = "flow reconstructed up to lambda = " + fmt(lambda) + " (" + std::to_string(states.size()) + " states)";
    return o;
}

Outcome cmd_simulate(const Settings& s, std::string& csv, bool want_csv) {
    const int n = s.has("/transform") && !s.has("/n") ? transform_of(s, "/transform").n() : s.integer("/n", 1);
    const SdeSpec sde = sde_of(s, "/sde", n);
    const McConfig mc = mc_of(s);
    const std::vector<double> x0 = x0_of(s, sde.n());
    const Observable F = Observable::parse(s.text("/observable", "x1"), sde.n());
    const bool transformed = s.has("/transform");

    Outcome o;
    Json report{{"sde", to_json(sde)}, {"observable", s.text("/observable", "x1")}, {"config", to_json(mc)}};
    Estimate est;
    if (!transformed && !want_csv) {
        const Field& Ff = F.field();
        const std::vector<double> table = map_paths(sde, x0, mc, 1, [&](const PathView& p, std::span<double> out) {
            out[0] = Ff.evaluate_scalar(p.x(p.steps()), p.times.back());
        });
        est = estimate(table, mc.dt);
        report["measure"] = "P";
        report["output_time"] = mc.t_end;
    } else {
        PathEnsemble ens = simulate(sde, x0, mc.t_end, mc.dt, mc.n_paths, mc.seed, mc.threads);
        if (transformed) {
            const StochTransformation T = transform_of(s, "/transform");
            if (T.n() != sde.n()) throw ShapeError("transformation and SDE dimensions differ");
            ens = transform_paths(T, ens, mc.threads);
            report["transformation"] = to_json(T);
        }
        std::vector<double> v(ens.n_paths);
        for (std::size_t p = 0; p < ens.n_paths; ++p) {
            const PathView view = ens.path(p);
            v[p] = view.weight * F.field().evaluate_scalar(view.x(view.steps()), view.times.back());
        }
        est = estimate(v, mc.dt);
        report["measure"] = ens.measure;
        report["output_time"] = ens.times.back();
        if (want_csv) {
            std::ostringstream out;
            write_paths_csv(out, ens);
            csv = out.str();
        }
    }
    report["estimate"] = to_json(est);
    o.report = report;
    o.summary = "E[F(X_T)] = " + fmt(est.value) + " +- " + fmt(est.std_error) + " (" + std::to_string(mc.n_paths) + " paths)";
    return o;
}

std::string ibp_summary(const IbpReport& r) {
    std::string out = std::string(r.pass ? "PASS" : "FAIL") + ": total " + fmt(r.total) + " +- " + fmt(r.se_total) +
                      " (gate " + fmt(r.gate) + " SE)";
    for (const auto& t : r.terms) out += "\n  " + t.label + " = " + fmt(t.value) + " +- " + fmt(t.std_error);
    for (const auto& w : r.warnings) out += "\n  warning: " + w;
    return out;
}

Outcome cmd_ibp(const Settings& s) {
    const InfinitesimalSymmetry V = symmetry_of(s, "/symmetry");
    const SdeSpec sde = sde_of(s, "/sde", V.n());
    IbpOptions opt;
    opt.t = s.real("/t", opt.t);
    opt.x0 = x0_of(s, sde.n());
    opt.gate = s.real("/gate", opt.gate);
    opt.override_precondition = s.flag("/override_precondition");
    opt.hypothesis_paths = static_cast<std::size_t>(s.integer("/hypothesis_paths", static_cast<int>(opt.hypothesis_paths)));
    const IbpReport r = ibp_report(V, sde, Observable::parse(s.text("/F", "sin(x1)"), sde.n()), mc_of(s), opt);
    Outcome o;
    o.report = to_json(r);
    o.report["symmetry"] = to_json(V);
    o.report["F"] = s.text("/F", "sin(x1)");
    o.code = r.pass ? 0 : 1;
    o.summary = ibp_summary(r);
    return o;
}

Outcome cmd_identity(const Settings& s) {
    IdentityParams p;
    p.F = s.text("/F", p.F);
    p.t = s.real("/t", p.t);
    p.s = s.real("/s", p.s);
    const IbpReport r = verify_identity(s.text("/name", ""), p, mc_of(s), s.real("/gate", 4.0));
    Outcome o;
    o.report = to_json(r);
    o.report["params"] = Json{{"F", p.F}, {"t", p.t}, {"s", p.s}};
    o.code = r.pass ? 0 : 1;
    o.summary = ibp_summary(r);
    return o;
}

Outcome cmd_hypothesis_a(const Settings& s) {
    const InfinitesimalSymmetry V = symmetry_of(s, "/symmetry");
    const SdeSpec sde = sde_of(s, "/sde", V.n());
    const std::vector<double> times = s.reals("/times", {1.0});
    const HypothesisAReport r = check_hypothesis_a(V, sde, x0_of(s, sde.n()), times, mc_of(s));
    Outcome o;
    o.report = to_json(r);
    o.report["config"] = to_json(mc_of(s));
    o.code = r.flagged ? 1 : 0;
    o.summary = r.flagged ? "FLAGGED: some second moment is infinite or unstable" : "ok: all second moments stable";
    for (const auto& m : r.rows)
        if (!m.finite || !m.stable) o.summary += "\n  " + m.quantity + " at t = " + fmt(m.time);
    return o;
}

Outcome cmd_catalog(const Settings& s) {
    Outcome o;
    const std::string action = s.text("/action", "list");
    if (action == "list") {
        Json a = Json::array();
        for (const auto& c : catalog_list())
            a.push_back(Json{{"name", c.name}, {"kind", to_string(c.kind)}, {"signature", c.signature}, {"note", c.note}});
        o.report = a;
        o.summary = std::to_string(a.size()) + " catalog entries";
    } else if (action == "show") {
        const CatalogEntry e = catalog_get_ref(s.text("/ref", ""));
        o.report = to_json(e);
        o.summary = e.name + " (" + to_string(e.kind) + ")";
    } else {
        throw ValidationError("catalog action must be 'list' or 'show'");
    }
    return o;
}

// ---------------------------------------------------------------- errors

std::string error_name(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
    if (dynamic_cast<const DomainError*>(&e)) return "DomainError";
    if (dynamic_cast<const DifferentiationError*>(&e)) return "DifferentiationError";
    if (dynamic_cast<const ShapeError*>(&e)) return "ShapeError";
    if (dynamic_cast<const ValidationError*>(&e)) return "ValidationError";
    if (dynamic_cast<const InversionError*>(&e)) return "InversionError";
    if (dynamic_cast<const NotStrongError*>(&e)) return "NotStrongError";
    if (dynamic_cast<const CatalogError*>(&e)) return "CatalogError";
    if (dynamic_cast<const SymmetryPreconditionError*>(&e)) return "SymmetryPreconditionError";
    if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
    if (dynamic_cast<const SimulationError*>(&e)) return "SimulationError";
    if (dynamic_cast<const FlowBlowUp*>(&e)) return "FlowBlowUp";
    return "Error";
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const DomainError*>(&e) || dynamic_cast<const InversionError*>(&e) ||
        dynamic_cast<const SimulationError*>(&e) || dynamic_cast<const FlowBlowUp*>(&e) ||
        dynamic_cast<const NumericalError*>(&e))
        return 3;
    return 2;
}

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Lie symmetries of Brownian-driven SDEs: transformations, determining equations, flows and "
                 "Monte Carlo integration-by-parts checks"};
    app.name("sdesym");
    app.require_subcommand(1);
    app.fallthrough();
    Flags flags;

    std::string config_path;
    std::string out_path;
    std::string csv_path;
    bool no_timestamp = false;
    app.add_option("--config", config_path, "JSON settings file; command-line flags override its keys");
    app.add_option("--out", out_path, "write the report JSON here (summary goes to stdout)");
    app.add_flag("--no-timestamp", no_timestamp, "omit the timestamp so identical runs give identical bytes");
    flags.add(&app, "--threads", "/threads", Kind::Int, "worker threads (never changes results)");

    auto object = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& what) {
        flags.add(sub, "--" + name, key, Kind::Object, what + " as inline JSON or @file");
        flags.add(sub, "--catalog-" + name, key, Kind::Text, what + " as a catalog reference, e.g. name:k=v");
    };
    auto mc_flags = [&](CLI::App* sub) {
        flags.add(sub, "--paths", "/mc/n_paths", Kind::UInt, "number of paths");
        flags.add(sub, "--dt", "/mc/dt", Kind::Real, "Euler-Maruyama step");
        flags.add(sub, "--seed", "/mc/seed", Kind::UInt, "random seed");
    };
    auto grid_flags = [&](CLI::App* sub) {
        flags.add(sub, "--grid-points", "/grid/points", Kind::Int, "grid nodes per space axis");
        flags.add(sub, "--grid-times", "/grid/times", Kind::Int, "grid nodes in time");
        flags.add(sub, "--x-lo", "/grid/x_lo", Kind::Real, "lower space bound of the grid");
        flags.add(sub, "--x-hi", "/grid/x_hi", Kind::Real, "upper space bound of the grid");
        flags.add(sub, "--t-lo", "/grid/t_lo", Kind::Real, "first grid time");
        flags.add(sub, "--t-hi", "/grid/t_hi", Kind::Real, "last grid time");
        flags.add(sub, "--tol", "/tol", Kind::Real, "residual tolerance");
    };

    std::map<CLI::App*, std::string> names;
    auto sub = [&](const std::string& name, const std::string& help) {
        CLI::App* s = app.add_subcommand(name, help);
        names[s] = name;
        return s;
    };

    CLI::App* parse_check = sub("parse-check", "parse an expression and print its canonical form");
    flags.add(parse_check, "expr", "/expr", Kind::Text, "expression");
    parse_check->get_option("expr")->required();
    flags.add(parse_check, "--n", "/n", Kind::Int, "state dimension (default 1)");
    flags.add(parse_check, "--x", "/x", Kind::Reals, "evaluate at this point (comma separated)");
    flags.add(parse_check, "--t", "/t", Kind::Real, "time for --x");

    CLI::App* compose_cmd = sub("compose", "compose two transformations (--transform first, then --then)");
    object(compose_cmd, "transform", "/transform", "first transformation");
    object(compose_cmd, "then", "/then", "second transformation");

    CLI::App* invert_cmd = sub("invert", "invert a transformation");
    object(invert_cmd, "transform", "/transform", "transformation");

    CLI::App* push = sub("push-sde", "push an SDE forward through a transformation");
    object(push, "transform", "/transform", "transformation");
    object(push, "sde", "/sde", "source SDE (default Brownian motion)");
    object(push, "expect", "/expect", "expected result, compared on the grid");
    grid_flags(push);

    CLI::App* check = sub("check-symmetry", "evaluate finite or infinitesimal determining equations");
    object(check, "sde", "/sde", "SDE (default Brownian motion)");
    object(check, "transform", "/transform", "finite transformation");
    object(check, "symmetry", "/symmetry", "infinitesimal symmetry");
    flags.add(check, "--kind", "/kind", Kind::Text, "strong, weak or gweak (default weak)");
    grid_flags(check);

    CLI::App* flow = sub("reconstruct-flow", "integrate the one-parameter group of an infinitesimal symmetry");
    object(flow, "symmetry", "/symmetry", "infinitesimal symmetry");
    flags.add(flow, "--lambda", "/lambda", Kind::Real, "group parameter to reach (default 1)");
    flags.add(flow, "--every", "/every", Kind::Real, "spacing of reported states (default 0.1)");
    flags.add(flow, "--step", "/step", Kind::Real, "RK4 step (default 1e-3)");
    flags.add(flow, "--x", "/x0", Kind::Reals, "source point (default origin)");
    flags.add(flow, "--t", "/t", Kind::Real, "source time (default 0)");
    flow->add_option("--csv", csv_path, "write the states as CSV");

    CLI::App* sim = sub("simulate", "Euler-Maruyama paths, optionally transformed, and E[F(X_T)]");
    object(sim, "sde", "/sde", "SDE (default Brownian motion)");
    object(sim, "transform", "/transform", "transformation applied to the paths");
    flags.add(sim, "--n", "/n", Kind::Int, "dimension of the default Brownian motion");
    flags.add(sim, "--x0", "/x0", Kind::Reals, "starting point (default origin)");
    flags.add(sim, "--t-end", "/mc/t_end", Kind::Real, "horizon (default 1)");
    flags.add(sim, "--observable", "/observable", Kind::Text, "F(x) to average at the final time (default x1)");
    mc_flags(sim);
    sim->add_option("--csv", csv_path, "write the raw paths as CSV");

    CLI::App* ibp = sub("ibp", "Monte Carlo check of the integration-by-parts identity of a symmetry");
    object(ibp, "symmetry", "/symmetry", "infinitesimal symmetry");
    object(ibp, "sde", "/sde", "SDE (default Brownian motion)");
    flags.add(ibp, "--F", "/F", Kind::Text, "observable F(x) (default sin(x1))");
    flags.add(ibp, "--t", "/t", Kind::Real, "horizon (default 1)");
    flags.add(ibp, "--x0", "/x0", Kind::Reals, "starting point (default origin)");
    flags.add(ibp, "--gate", "/gate", Kind::Real, "pass when |total| <= gate * SE (default 4)");
    flags.add(ibp, "--override-precondition", "/override_precondition", Kind::Switch,
              "run even if the symmetry check fails");
    flags.add(ibp, "--hypothesis-paths", "/hypothesis_paths", Kind::Int, "paths for the moment screen (0 disables)");
    mc_flags(ibp);

    CLI::App* ident = sub("identity", "Monte Carlo check of a classical Brownian identity");
    flags.add(ident, "name", "/name", Kind::Text, "stein, covariance, levy-area, isserlis, valpha-first, valpha-second");
    ident->get_option("name")->required();
    flags.add(ident, "--F", "/F", Kind::Text, "observable (default sin(x))");
    flags.add(ident, "--t", "/t", Kind::Real, "time (default 1)");
    flags.add(ident, "--s", "/s", Kind::Real, "second time for covariance (default 0.5)");
    flags.add(ident, "--gate", "/gate", Kind::Real, "gate in standard errors (default 4)");
    mc_flags(ident);

    CLI::App* cat = sub("catalog", "list catalog entries or show one");
    flags.add(cat, "action", "/action", Kind::Text, "list or show");
    cat->get_option("action")->required();
    flags.add(cat, "ref", "/ref", Kind::Text, "entry reference for show, e.g. bm:n=2");

    CLI::App* hyp = sub("hypothesis-a", "second-moment screen for the integration-by-parts hypotheses");
    object(hyp, "symmetry", "/symmetry", "infinitesimal symmetry");
    object(hyp, "sde", "/sde", "SDE (default Brownian motion)");
    flags.add(hyp, "--times", "/times", Kind::Reals, "times to check (default 1)");
    flags.add(hyp, "--x0", "/x0", Kind::Reals, "starting point (default origin)");
    mc_flags(hyp);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: usage: " << e.what() << "\n";
        return 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    const std::string command = names.at(chosen);
    try {
        Json settings = config_path.empty() ? Json::object() : read_json_file(config_path);
        if (!settings.is_object()) throw ValidationError("--config must hold a JSON object");
        flags.apply(settings);
        const Settings s(settings);
        if (s.has("/threads")) {
            const int threads = s.integer("/threads", 0);
            if (threads < 1) throw ValidationError("--threads must be positive");
            set_default_threads(threads);
        }

        std::string csv;
        Outcome o;
        if (command == "parse-check") o = cmd_parse_check(s);
        else if (command == "compose") o = cmd_compose(s);
        else if (command == "invert") o = cmd_invert(s);
        else if (command == "push-sde") o = cmd_push_sde(s);
        else if (command == "check-symmetry") o = cmd_check_symmetry(s);
        else if (command == "reconstruct-flow") o = cmd_reconstruct_flow(s, csv);
        else if (command == "simulate") o = cmd_simulate(s, csv, !csv_path.empty());
        else if (command == "ibp") o = cmd_ibp(s);
        else if (command == "identity") o = cmd_identity(s);
        else if (command == "catalog") o = cmd_catalog(s);
        else o = cmd_hypothesis_a(s);

        Json doc{{"command", command}};
        if (!no_timestamp) doc["timestamp"] = timestamp();
        doc["report"] = o.report;
        const std::string text = dump_json(doc) + "\n";
        if (!csv_path.empty()) write_file(csv_path, csv);
        if (!out_path.empty()) {
            write_file(out_path, text);
            out << o.summary << "\n";
        } else {
            out << text;
            err << o.summary << "\n";
        }
        return o.code;
    } catch (const Error& e) {
        err << "error: " << error_name(e) << ": " << e.what() << "\n";
        return exit_code(e);
    } catch (const Json::exception& e) {
        err << "error: malformed settings: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace sdesym
