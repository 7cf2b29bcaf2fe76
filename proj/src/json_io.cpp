#include "sdesym/json_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "sdesym/error.hpp"

namespace sdesym {

namespace {

void write_string(std::string& out, const std::string& s) {
    // nlohmann handles escaping; reuse it for a lone string
    out += Json(s).dump();
}

void write(std::string& out, const Json& j, int indent, int depth) {
    auto newline = [&](int level) {
        if (indent < 0) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * level), ' ');
    };
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                write_string(out, it.key());
                out += indent < 0 ? ":" : ": ";
                write(out, it.value(), indent, depth + 1);
            }
            newline(depth);
            out += '}';
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                write(out, v, indent, depth + 1);
            }
            newline(depth);
            out += ']';
            return;
        }
        case Json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                out += "null";
                return;
            }
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out += buf;
            return;
        }
        default:
            out += j.dump();
    }
}

[[noreturn]] void bad(const std::string& what) { throw ValidationError(what); }

std::string expr_text(const Json& j, const char* where) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number()) {
        char buf[32];
        const auto r = std::to_chars(buf, buf + sizeof buf, j.get<double>());
        return std::string(buf, r.ptr);
    }
    bad(std::string(where) + ": expected an expression string");
}

std::vector<std::string> expr_list(const Json& j, const char* where) {
    if (j.is_string() || j.is_number()) return {expr_text(j, where)};
    if (!j.is_array()) bad(std::string(where) + ": expected an array of expressions");
    std::vector<std::string> out;
    for (const auto& e : j) out.push_back(expr_text(e, where));
    return out;
}

std::vector<std::vector<std::string>> expr_matrix(const Json& j, const char* where) {
    if (!j.is_array() || j.empty()) bad(std::string(where) + ": expected a non-empty array of rows");
    std::vector<std::vector<std::string>> rows;
    if (!j.front().is_array()) {
        rows.push_back(expr_list(j, where));  // a single row
        return rows;
    }
    for (const auto& r : j) rows.push_back(expr_list(r, where));
    for (const auto& r : rows)
        if (r.size() != rows.front().size()) bad(std::string(where) + ": rows differ in length");
    return rows;
}

int get_int(const Json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) bad(std::string("'") + key + "' must be an integer");
    return j[key].get<int>();
}

double get_real(const Json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) bad(std::string("'") + key + "' must be a number");
    return j[key].get<double>();
}

void require_object(const Json& j, const char* what) {
    if (!j.is_object()) bad(std::string(what) + " must be a JSON object");
}

void check_dim(int v, const char* key) {
    if (v < 1 || v > kMaxStateDim) bad(std::string("'") + key + "' must lie in 1.." + std::to_string(kMaxStateDim));
}

Json strings(const std::vector<std::string>& v) {
    Json a = Json::array();
    for (const auto& s : v) a.push_back(s);
    return a;
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
    std::string out;
    write(out, j, indent, 0);
    return out;
}

Json to_json(const Expr& e) { return to_string(e); }

Json to_json(const Field& f) {
    const std::vector<std::string> s = f.to_strings();
    if (f.kind() == ShapeKind::Scalar) return s.front();
    if (f.kind() == ShapeKind::Vector) return strings(s);
    Json rows = Json::array();
    for (int r = 0; r < f.rows(); ++r) {
        Json row = Json::array();
        for (int c = 0; c < f.cols(); ++c) row.push_back(s[static_cast<std::size_t>(r * f.cols() + c)]);
        rows.push_back(row);
    }
    return rows;
}

Json to_json(const SdeSpec& sde) {
    return Json{{"mu", to_json(sde.mu())}, {"sigma", to_json(sde.sigma())}, {"n", sde.n()}, {"d", sde.d()}};
}

Json to_json(const StochTransformation& T) {
    Json j{{"phi", to_json(T.phi())}};
    if (T.has_closed_inverse()) j["phi_inv"] = to_json(T.phi_inv());
    j["f"] = to_json(T.f());
    j["f_prime"] = to_json(T.f_prime());
    j["B"] = to_json(T.B());
    j["h"] = to_json(T.h());
    j["n"] = T.n();
    j["d"] = T.d();
    return j;
}

Json to_json(const InfinitesimalSymmetry& V) {
    return Json{{"Y", to_json(V.Y())}, {"m", to_json(V.m())}, {"C", to_json(V.C())}, {"H", to_json(V.H())},
                {"n", V.n()},          {"d", V.d()}};
}

Json to_json(const CatalogEntry& e) {
    Json params = Json::object();
    for (const auto& [k, v] : e.params) params[k] = v;
    Json j{{"name", e.name}, {"kind", to_string(e.kind)}, {"params", params}, {"note", e.note}};
    if (e.sde) j["sde"] = to_json(*e.sde);
    if (e.transformation) j["transformation"] = to_json(*e.transformation);
    if (e.symmetry) j["symmetry"] = to_json(*e.symmetry);
    if (!e.base_sde.empty()) j["base_sde"] = e.base_sde;
    if (!e.claim.empty()) j["claim"] = e.claim;
    return j;
}

Json to_json(const Grid& g) {
    return Json{{"points", g.points}, {"x_lo", g.x_lo}, {"x_hi", g.x_hi},
                {"times", g.times},   {"t_lo", g.t_lo}, {"t_hi", g.t_hi}};
}

Json to_json(const ResidualReport& r) {
    Json eqs = Json::array();
    for (const auto& e : r.equations)
        eqs.push_back(Json{{"label", e.label}, {"max_abs", e.max_abs}, {"mean_abs", e.mean_abs}});
    return Json{{"equations", eqs}, {"grid", to_json(r.grid)}, {"tol", r.tol}, {"pass", r.pass}};
}

Json to_json(const McConfig& c) {
    return Json{{"n_paths", c.n_paths}, {"dt", c.dt}, {"t_end", c.t_end}, {"seed", c.seed}};
}

Json to_json(const Estimate& e) {
    return Json{{"value", e.value}, {"std_error", e.std_error}, {"n_paths", e.n_paths}, {"dt", e.dt}};
}

Json to_json(const IbpReport& r) {
    Json j;
    if (r.subject.rfind("identity:", 0) == 0)
        j["identity"] = r.subject.substr(9);
    else
        j["symmetry"] = r.subject;
    Json terms = Json::array();
    for (const auto& t : r.terms)
        terms.push_back(Json{{"label", t.label}, {"value", t.value}, {"std_error", t.std_error}});
    j["terms"] = terms;
    j["total"] = r.total;
    j["se_total"] = r.se_total;
    j["gate"] = r.gate;
    j["pass"] = r.pass;
    j["bounded"] = r.bounded;
    j["fourth_moment"] = r.fourth_moment;
    Json config = to_json(r.config);
    config["t"] = r.t;
    j["config"] = config;
    j["warnings"] = strings(r.warnings);
    return j;
}

Json to_json(const HypothesisAReport& r) {
    Json rows = Json::array();
    for (const auto& m : r.rows) {
        Json ratios = Json::array();
        for (double v : m.doubling_ratios) ratios.push_back(v);
        rows.push_back(Json{{"quantity", m.quantity},
                            {"time", m.time},
                            {"value", m.value},
                            {"std_error", m.std_error},
                            {"finite", m.finite},
                            {"doubling_ratios", ratios},
                            {"stable", m.stable}});
    }
    return Json{{"rows", rows}, {"flagged", r.flagged}};
}

StochTransformation transformation_from_json(const Json& j) {
    require_object(j, "transformation");
    if (!j.contains("phi")) bad("transformation: 'phi' is required");
    const std::vector<std::string> phi = expr_list(j["phi"], "phi");
    const int n = get_int(j, "n", static_cast<int>(phi.size()));
    check_dim(n, "n");
    if (static_cast<int>(phi.size()) != n) bad("transformation: 'phi' must have n entries");
    StochTransformation::Parts p;
    p.phi = Field::parse_vector(phi, n);
    if (j.contains("phi_inv")) {
        const auto inv = expr_list(j["phi_inv"], "phi_inv");
        if (static_cast<int>(inv.size()) != n) bad("transformation: 'phi_inv' must have n entries");
        p.phi_inv = Field::parse_vector(inv, n);
    }
    p.f = Field::parse_scalar(j.contains("f") ? expr_text(j["f"], "f") : "t", n);
    if (j.contains("f_inv")) p.f_inv = Field::parse_scalar(expr_text(j["f_inv"], "f_inv"), n);
    int d = n;
    if (j.contains("B")) {
        const auto rows = expr_matrix(j["B"], "B");
        d = static_cast<int>(rows.size());
        if (static_cast<int>(rows.front().size()) != d) bad("transformation: 'B' must be square");
        p.B = Field::parse_matrix(rows, n);
    }
    d = get_int(j, "d", d);
    check_dim(d, "d");
    if (p.B && p.B->rows() != d) bad("transformation: 'B' must be d x d");
    if (j.contains("h")) {
        const auto h = expr_list(j["h"], "h");
        if (static_cast<int>(h.size()) != d) bad("transformation: 'h' must have d entries");
        p.h = Field::parse_vector(h, n);
    }
    p.d = d;
    StochTransformation T(std::move(p));
    T.validate();
    return T;
}

SdeSpec sde_from_json(const Json& j) {
    require_object(j, "sde");
    if (!j.contains("mu") || !j.contains("sigma")) bad("sde: 'mu' and 'sigma' are required");
    const auto mu = expr_list(j["mu"], "mu");
    const int n = get_int(j, "n", static_cast<int>(mu.size()));
    check_dim(n, "n");
    if (static_cast<int>(mu.size()) != n) bad("sde: 'mu' must have n entries");
    const auto sigma = expr_matrix(j["sigma"], "sigma");
    if (static_cast<int>(sigma.size()) != n) bad("sde: 'sigma' must have n rows");
    const int d = get_int(j, "d", static_cast<int>(sigma.front().size()));
    check_dim(d, "d");
    if (static_cast<int>(sigma.front().size()) != d) bad("sde: 'sigma' must have d columns");
    return SdeSpec(Field::parse_vector(mu, n), Field::parse_matrix(sigma, n));
}

InfinitesimalSymmetry symmetry_from_json(const Json& j) {
    require_object(j, "infinitesimal symmetry");
    if (!j.contains("Y")) bad("infinitesimal symmetry: 'Y' is required");
    const auto Y = expr_list(j["Y"], "Y");
    const int n = get_int(j, "n", static_cast<int>(Y.size()));
    check_dim(n, "n");
    if (static_cast<int>(Y.size()) != n) bad("infinitesimal symmetry: 'Y' must have n entries");
    int d = n;
    std::vector<std::vector<std::string>> C;
    if (j.contains("C")) {
        C = expr_matrix(j["C"], "C");
        d = static_cast<int>(C.size());
    }
    d = get_int(j, "d", d);
    check_dim(d, "d");
    if (C.empty()) C.assign(static_cast<std::size_t>(d), std::vector<std::string>(static_cast<std::size_t>(d), "0"));
    if (static_cast<int>(C.size()) != d || static_cast<int>(C.front().size()) != d)
        bad("infinitesimal symmetry: 'C' must be d x d");
    std::vector<std::string> H(static_cast<std::size_t>(d), "0");
    if (j.contains("H")) H = expr_list(j["H"], "H");
    if (static_cast<int>(H.size()) != d) bad("infinitesimal symmetry: 'H' must have d entries");
    const std::string m = j.contains("m") ? expr_text(j["m"], "m") : "0";
    InfinitesimalSymmetry V(Field::parse_vector(Y, n), Field::parse_scalar(m, n), Field::parse_matrix(C, n),
                            Field::parse_vector(H, n));
    V.validate();
    return V;
}

void update_from_json(Grid& g, const Json& j) {
    require_object(j, "grid");
    g.points = get_int(j, "points", g.points);
    g.times = get_int(j, "times", g.times);
    g.x_lo = get_real(j, "x_lo", g.x_lo);
    g.x_hi = get_real(j, "x_hi", g.x_hi);
    g.t_lo = get_real(j, "t_lo", g.t_lo);
    g.t_hi = get_real(j, "t_hi", g.t_hi);
    if (g.points < 1 || g.times < 1 || !(g.x_lo <= g.x_hi) || !(g.t_lo <= g.t_hi)) bad("grid: invalid ranges");
}

void update_from_json(McConfig& c, const Json& j) {
    require_object(j, "mc");
    if (j.contains("n_paths")) {
        if (!j["n_paths"].is_number_unsigned() || j["n_paths"].get<std::size_t>() == 0)
            bad("mc: 'n_paths' must be a positive integer");
        c.n_paths = j["n_paths"].get<std::size_t>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) bad("mc: 'seed' must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    c.dt = get_real(j, "dt", c.dt);
    c.t_end = get_real(j, "t_end", c.t_end);
    if (!(c.dt > 0.0) || !(c.t_end > 0.0)) bad("mc: 'dt' and 't_end' must be positive");
}

}  // namespace sdesym
