#include "sdesym/catalog.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include "sdesym/error.hpp"

namespace sdesym {

std::string to_string(EntryKind k) {
    switch (k) {
        case EntryKind::Sde: return "sde";
        case EntryKind::FiniteTransformation: return "finite-transformation";
        case EntryKind::InfinitesimalSymmetry: return "infinitesimal-symmetry";
    }
    return "?";
}

namespace {

Expr indicator_less(const Expr& a, const Expr& b) {
    // [a < b] = (sgn(b - a) + |sgn(b - a)|) / 2, with sgn(0) = 0
    const Expr s = sgn(b - a);
    return (s + abs(s)) / Expr(2.0);
}

class Params {
public:
    Params(std::string entry, CatalogParams given, std::set<std::string> allowed)
        : entry_(std::move(entry)), given_(std::move(given)) {
        for (const auto& [k, v] : given_) {
            if (!allowed.count(k)) throw CatalogError(entry_ + ": unknown parameter '" + k + "'");
        }
    }

    double real(const std::string& key, double fallback) {
        auto it = given_.find(key);
        if (it == given_.end()) {
            effective_[key] = format(fallback);
            return fallback;
        }
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used != it->second.size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
            effective_[key] = it->second;
            return v;
        } catch (const std::exception&) {
            throw CatalogError(entry_ + ": parameter '" + key + "' must be a real number, got '" + it->second + "'");
        }
    }

    int integer(const std::string& key, int fallback, int lo, int hi) {
        const double v = real(key, fallback);
        if (v != std::floor(v) || v < lo || v > hi) {
            throw CatalogError(entry_ + ": parameter '" + key + "' must be an integer in [" + std::to_string(lo) + ", " +
                               std::to_string(hi) + "]");
        }
        effective_[key] = std::to_string(static_cast<int>(v));
        return static_cast<int>(v);
    }

    std::string text(const std::string& key, const std::string& fallback) {
        auto it = given_.find(key);
        const std::string v = it == given_.end() ? fallback : it->second;
        effective_[key] = v;
        return v;
    }

    bool has(const std::string& key) const { return given_.count(key) > 0; }

    /// Expression in t only, over state dimension n.
    Expr time_expr(const std::string& key, const std::string& fallback, int n) {
        const std::string s = text(key, fallback);
        Expr e;
        try {
            e = parse(s, n);
        } catch (const ParseError& err) {
            throw CatalogError(entry_ + ": parameter '" + key + "': " + err.what());
        }
        for (int i = 0; i < n; ++i) {
            if (e.depends_on(i)) throw CatalogError(entry_ + ": parameter '" + key + "' must depend on t only");
        }
        return rewrite_kinks(e);
    }

    void require(bool ok, const std::string& what) const {
        if (!ok) throw CatalogError(entry_ + ": " + what);
    }

    const CatalogParams& effective() const { return effective_; }

private:
    static std::string format(double v) {
        // shortest form that round-trips
        char buf[32];
        const auto r = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, r.ptr);
    }

    std::string entry_;
    CatalogParams given_;
    CatalogParams effective_;
};

Field scaled_vars(const Expr& k, int n) {
    std::vector<Expr> e;
    for (int i = 0; i < n; ++i) e.push_back(k * Expr::var(i));
    return Field::vector(std::move(e), n);
}

Field tfield(const Expr& e, int n) { return Field::scalar(e, n); }

Field diag(const Expr& v, int n) {
    std::vector<Expr> e(static_cast<std::size_t>(n * n), Expr(0.0));
    for (int i = 0; i < n; ++i) e[static_cast<std::size_t>(i * n + i)] = v;
    return Field::matrix(n, n, std::move(e), n).relabel(ShapeKind::Matrix);
}

StochTransformation finish(StochTransformation::Parts p) {
    StochTransformation T(std::move(p));
    T.validate();
    return T;
}

CatalogEntry make(const std::string& name, EntryKind kind, const Params& p, std::string note) {
    CatalogEntry e;
    e.name = name;
    e.kind = kind;
    e.params = p.effective();
    e.note = std::move(note);
    return e;
}

CatalogEntry bm(const CatalogParams& given) {
    Params p("bm", given, {"n"});
    const int n = p.integer("n", 1, 1, kMaxStateDim);
    CatalogEntry e = make("bm", EntryKind::Sde, p, "Brownian motion dX = dW (drift 0, diffusion I)");
    e.sde = SdeSpec(Field::zeros(ShapeKind::Vector, n, 1, n), diag(Expr(1.0), n));
    return e;
}

CatalogEntry gbm(const CatalogParams& given) {
    Params p("gbm", given, {"mu", "sigma", "z0"});
    const double mu = p.real("mu", 0.1);
    const double s = p.real("sigma", 0.2);
    const double z0 = p.real("z0", 1.0);
    p.require(s != 0.0, "sigma must be non-zero");
    p.require(z0 > 0.0, "z0 must be positive");
    CatalogEntry e = make("gbm", EntryKind::Sde, p, "geometric Brownian motion dZ = mu Z dt + sigma Z dW");
    const Expr z = Expr::var(0);
    e.sde = SdeSpec(Field::vector({Expr(mu) * z}, 1), Field::matrix(1, 1, {Expr(s) * z}, 1));
    return e;
}

std::string gbm_ref(double mu, double s, double z0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "gbm:mu=%.17g,sigma=%.17g,z0=%.17g", mu, s, z0);
    return buf;
}

CatalogEntry gbm_map(const CatalogParams& given) {
    Params p("gbm_map", given, {"mu", "sigma", "z0"});
    const double mu = p.real("mu", 0.1);
    const double s = p.real("sigma", 0.2);
    const double z0 = p.real("z0", 1.0);
    p.require(s != 0.0, "sigma must be non-zero");
    p.require(z0 > 0.0, "z0 must be positive");
    CatalogEntry e = make("gbm_map", EntryKind::FiniteTransformation, p,
                          "strong map sending Brownian motion to geometric Brownian motion, "
                          "Phi = z0 exp((mu - sigma^2/2) t + sigma x)");
    const Expr x = Expr::var(0);
    const Expr t = Expr::time();
    const Expr drift = Expr(mu - 0.5 * s * s);
    StochTransformation::Parts parts;
    parts.phi = Field::vector({Expr(z0) * exp(drift * t + Expr(s) * x)}, 1);
    parts.phi_inv = Field::vector({(log(x / Expr(z0)) - drift * t) / Expr(s)}, 1);
    parts.f = tfield(t, 1);
    parts.f_inv = tfield(t, 1);
    e.transformation = finish(std::move(parts));
    e.base_sde = "bm:n=1";
    e.claim = "maps-to:" + gbm_ref(mu, s, z0);
    return e;
}

CatalogEntry gbm_girsanov(const CatalogParams& given) {
    Params p("gbm_girsanov", given, {"mu", "sigma"});
    const double mu = p.real("mu", 0.1);
    const double s = p.real("sigma", 0.2);
    p.require(s != 0.0, "sigma must be non-zero");
    CatalogEntry e = make("gbm_girsanov", EntryKind::FiniteTransformation, p,
                          "Girsanov drift h = mu/sigma - sigma/2 followed by Phi = exp(sigma x); "
                          "sends Brownian motion started at 0 to geometric Brownian motion started at 1");
    const Expr x = Expr::var(0);
    StochTransformation::Parts parts;
    parts.phi = Field::vector({exp(Expr(s) * x)}, 1);
    parts.phi_inv = Field::vector({log(x) / Expr(s)}, 1);
    parts.f = tfield(Expr::time(), 1);
    parts.h = Field::vector({Expr(mu / s - 0.5 * s)}, 1);
    e.transformation = finish(std::move(parts));
    e.base_sde = "bm:n=1";
    e.claim = "maps-to:" + gbm_ref(mu, s, 1.0);
    return e;
}

CatalogEntry bridge_map(const CatalogParams& given) {
    Params p("bridge_map", given, {"T", "n"});
    const double T = p.real("T", 1.0);
    const int n = p.integer("n", 1, 1, kMaxStateDim);
    p.require(T > 0.0, "horizon T must be positive");
    CatalogEntry e = make("bridge_map", EntryKind::FiniteTransformation, p,
                          "weak symmetry of Brownian motion whose image is the Brownian bridge on [0, T]: "
                          "f = t T^2/(1 + t T), Phi = (T - f) x, h = f'/(T - f) x");
    const Expr t = Expr::time();
    const Expr TT(T);
    const Expr f = t * TT * TT / (Expr(1.0) + t * TT);
    const Expr fp = TT * TT / pow(Expr(1.0) + t * TT, Expr(2.0));
    StochTransformation::Parts parts;
    parts.phi = scaled_vars(TT - f, n);
    parts.phi_inv = scaled_vars(Expr(1.0) / (TT - f), n);
    parts.f = tfield(f, n);
    parts.f_prime = tfield(fp, n);
    parts.f_inv = tfield(t / (TT * (TT - t)), n);
    parts.h = scaled_vars(fp / (TT - f), n);
    e.transformation = finish(std::move(parts));
    e.base_sde = "bm:n=" + std::to_string(n);
    e.claim = "weak";
    return e;
}

CatalogEntry reflection(const CatalogParams& given) {
    Params p("reflection", given, {"n", "variant"});
    const int n = p.integer("n", 1, 1, kMaxStateDim);
    const std::string variant = p.text("variant", "gweak");
    p.require(variant == "gweak" || variant == "weakB", "variant must be 'gweak' (B = I) or 'weakB' (B = -I)");
    CatalogEntry e = make("reflection", EntryKind::FiniteTransformation, p,
                          variant == "gweak" ? "reflection Phi = -x with B = I: a G-weak symmetry of Brownian motion"
                                             : "reflection Phi = -x with B = -I: a weak symmetry of Brownian motion");
    StochTransformation::Parts parts;
    parts.phi = scaled_vars(Expr(-1.0), n);
    parts.phi_inv = scaled_vars(Expr(-1.0), n);
    parts.f = tfield(Expr::time(), n);
    parts.B = diag(Expr(variant == "gweak" ? 1.0 : -1.0), n);
    e.transformation = finish(std::move(parts));
    e.base_sde = "bm:n=" + std::to_string(n);
    e.claim = variant == "gweak" ? "gweak" : "weak";
    return e;
}

CatalogEntry scaling(const CatalogParams& given) {
    Params p("scaling", given, {"a", "n"});
    const double a = p.real("a", 2.0);
    const int n = p.integer("n", 1, 1, kMaxStateDim);
    p.require(a > 0.0, "scale a must be positive");
    CatalogEntry e = make("scaling", EntryKind::FiniteTransformation, p,
                          "Brownian self-similarity Phi = a x, f = a^2 t");
    const Expr t = Expr::time();
    StochTransformation::Parts parts;
    parts.phi = scaled_vars(Expr(a), n);
    parts.phi_inv = scaled_vars(Expr(1.0 / a), n);
    parts.f = tfield(Expr(a * a) * t, n);
    parts.f_inv = tfield(t / Expr(a * a), n);
    e.transformation = finish(std::move(parts));
    e.base_sde = "bm:n=" + std::to_string(n);
    e.claim = "weak";
    return e;
}

CatalogEntry v_alpha(const CatalogParams& given) {
    Params p("v_alpha", given, {"alpha", "n"});
    const int n = p.integer("n", 1, 1, kMaxStateDim);
    const Expr alpha = p.time_expr("alpha", "t", n);
    CatalogEntry e = make("v_alpha", EntryKind::InfinitesimalSymmetry, p,
                          "time-change family of Brownian motion: Y = alpha'/2 x, m = alpha, C = 0, H = -alpha''/2 x");
    Expr a1;
    Expr a2;
    try {
        a1 = differentiate(alpha, kTimeVar);
        a2 = differentiate(a1, kTimeVar);
    } catch (const DifferentiationError& err) {
        throw CatalogError(std::string("v_alpha: alpha must be twice differentiable: ") + err.what());
    }
    e.symmetry = InfinitesimalSymmetry(scaled_vars(a1 / Expr(2.0), n), tfield(alpha, n),
                                       Field::zeros(ShapeKind::Matrix, n, n, n), scaled_vars(-(a2 / Expr(2.0)), n));
    e.symmetry->validate();
    e.base_sde = "bm:n=" + std::to_string(n);
    e.claim = "weak";
    return e;
}

/// beta and beta' for the v_beta families; beta' is taken from the parameter when given.
std::pair<Expr, Expr> beta_pair(Params& p, int n, const std::string& entry) {
    const Expr beta = p.time_expr("beta", "t", n);
    if (p.has("beta_prime")) return {beta, p.time_expr("beta_prime", "1", n)};
    try {
        return {beta, differentiate(beta, kTimeVar)};
    } catch (const DifferentiationError& err) {
        throw CatalogError(entry + ": cannot differentiate beta (" + err.what() + "); supply beta_prime");
    }
}

CatalogEntry v_beta_1d(const CatalogParams& given) {
    Params p("v_beta_1d", given, {"beta", "beta_prime"});
    const auto [beta, bp] = beta_pair(p, 1, "v_beta_1d");
    CatalogEntry e = make("v_beta_1d", EntryKind::InfinitesimalSymmetry, p,
                          "translation family of 1D Brownian motion: Y = beta, m = 0, C = 0, H = -beta'");
    e.symmetry = InfinitesimalSymmetry(Field::vector({beta}, 1), tfield(Expr(0.0), 1),
                                       Field::zeros(ShapeKind::Matrix, 1, 1, 1), Field::vector({-bp}, 1));
    e.base_sde = "bm:n=1";
    e.claim = "weak";
    return e;
}

InfinitesimalSymmetry rotation_generator(const Expr& beta, const Expr& bp, int n, int i, int j) {
    std::vector<Expr> Y(static_cast<std::size_t>(n), Expr(0.0));
    std::vector<Expr> H(static_cast<std::size_t>(n), Expr(0.0));
    std::vector<Expr> C(static_cast<std::size_t>(n * n), Expr(0.0));
    const Expr xi = Expr::var(i);
    const Expr xj = Expr::var(j);
    Y[static_cast<std::size_t>(i)] = beta * xj;
    Y[static_cast<std::size_t>(j)] = -(beta * xi);
    C[static_cast<std::size_t>(i * n + j)] = beta;
    C[static_cast<std::size_t>(j * n + i)] = -beta;
    H[static_cast<std::size_t>(i)] = -(xj * bp);
    H[static_cast<std::size_t>(j)] = xi * bp;
    InfinitesimalSymmetry V(Field::vector(std::move(Y), n), tfield(Expr(0.0), n),
                            Field::matrix(n, n, std::move(C), n).relabel(ShapeKind::Matrix), Field::vector(std::move(H), n));
    V.validate();
    return V;
}

CatalogEntry v_beta_2d(const CatalogParams& given) {
    Params p("v_beta_2d", given, {"beta", "beta_prime"});
    const auto [beta, bp] = beta_pair(p, 2, "v_beta_2d");
    CatalogEntry e = make("v_beta_2d", EntryKind::InfinitesimalSymmetry, p,
                          "rotation family of planar Brownian motion: Y = beta (x2, -x1), C = [[0, beta], [-beta, 0]], "
                          "H = beta' (-x2, x1)");
    e.symmetry = rotation_generator(beta, bp, 2, 0, 1);
    e.base_sde = "bm:n=2";
    e.claim = "weak";
    return e;
}

CatalogEntry v_beta_nd(const CatalogParams& given) {
    Params p("v_beta_nd", given, {"beta", "beta_prime", "n", "i", "j"});
    const int n = p.integer("n", 3, 2, kMaxStateDim);
    const int i = p.integer("i", 1, 1, n);
    const int j = p.integer("j", 2, 1, n);
    p.require(i < j, "plane indices must satisfy i < j");
    const auto [beta, bp] = beta_pair(p, n, "v_beta_nd");
    CatalogEntry e = make("v_beta_nd", EntryKind::InfinitesimalSymmetry, p,
                          "rotation family in the (xi, xj) plane of n-dimensional Brownian motion, "
                          "same sign convention as v_beta_2d");
    e.symmetry = rotation_generator(beta, bp, n, i - 1, j - 1);
    e.base_sde = "bm:n=" + std::to_string(n);
    e.claim = "weak";
    return e;
}

using Builder = CatalogEntry (*)(const CatalogParams&);

const std::map<std::string, Builder>& builders() {
    static const std::map<std::string, Builder> b = {
        {"bm", bm},
        {"gbm", gbm},
        {"gbm_map", gbm_map},
        {"gbm_girsanov", gbm_girsanov},
        {"bridge_map", bridge_map},
        {"reflection", reflection},
        {"scaling", scaling},
        {"v_alpha", v_alpha},
        {"v_beta_1d", v_beta_1d},
        {"v_beta_2d", v_beta_2d},
        {"v_beta_nd", v_beta_nd},
    };
    return b;
}

}  // namespace

Expr rewrite_kinks(const Expr& e) {
    switch (e.arity()) {
        case 0: return e;
        case 1: return Expr::unary(e.op(), rewrite_kinks(e.arg(0)));
        default: break;
    }
    const Expr a = rewrite_kinks(e.arg(0));
    const Expr b = rewrite_kinks(e.arg(1));
    if (e.op() == Op::Min) {
        const Expr i = indicator_less(a, b);
        return a * i + b * (Expr(1.0) - i);
    }
    if (e.op() == Op::Max) {
        const Expr i = indicator_less(b, a);
        return a * i + b * (Expr(1.0) - i);
    }
    return Expr::binary(e.op(), a, b);
}

CatalogEntry catalog_get(const std::string& name, const CatalogParams& params) {
    const auto& b = builders();
    auto it = b.find(name);
    if (it == b.end()) throw CatalogError("unknown catalog entry '" + name + "'");
    return it->second(params);
}

std::pair<std::string, CatalogParams> parse_catalog_ref(const std::string& ref) {
    const auto colon = ref.find(':');
    std::pair<std::string, CatalogParams> out;
    out.first = ref.substr(0, colon);
    if (out.first.empty()) throw CatalogError("empty catalog reference");
    if (colon == std::string::npos) return out;
    const std::string rest = ref.substr(colon + 1);
    std::size_t start = 0;
    int depth = 0;
    for (std::size_t i = 0; i <= rest.size(); ++i) {
        if (i < rest.size() && rest[i] == '(') ++depth;
        if (i < rest.size() && rest[i] == ')') --depth;
        if (i == rest.size() || (rest[i] == ',' && depth == 0)) {
            const std::string item = rest.substr(start, i - start);
            start = i + 1;
            if (item.empty()) continue;
            const auto eq = item.find('=');
            if (eq == std::string::npos || eq == 0) throw CatalogError("malformed catalog parameter '" + item + "'");
            out.second[item.substr(0, eq)] = item.substr(eq + 1);
        }
    }
    return out;
}

CatalogEntry catalog_get_ref(const std::string& ref) {
    const auto [name, params] = parse_catalog_ref(ref);
    return catalog_get(name, params);
}

const std::vector<CatalogInfo>& catalog_list() {
    static const std::vector<CatalogInfo> list = {
        {"bm", EntryKind::Sde, "bm(n=1)", "Brownian motion"},
        {"gbm", EntryKind::Sde, "gbm(mu=0.1, sigma=0.2, z0=1)", "geometric Brownian motion"},
        {"gbm_map", EntryKind::FiniteTransformation, "gbm_map(mu=0.1, sigma=0.2, z0=1)", "Brownian motion to GBM, strong"},
        {"gbm_girsanov", EntryKind::FiniteTransformation, "gbm_girsanov(mu=0.1, sigma=0.2)",
         "Girsanov drift then exponential map"},
        {"bridge_map", EntryKind::FiniteTransformation, "bridge_map(T=1, n=1)", "Brownian motion to Brownian bridge"},
        {"reflection", EntryKind::FiniteTransformation, "reflection(n=1, variant=gweak|weakB)", "Phi = -x"},
        {"scaling", EntryKind::FiniteTransformation, "scaling(a=2, n=1)", "Phi = a x, f = a^2 t"},
        {"v_alpha", EntryKind::InfinitesimalSymmetry, "v_alpha(alpha=t, n=1)", "time-change generators"},
        {"v_beta_1d", EntryKind::InfinitesimalSymmetry, "v_beta_1d(beta=t, beta_prime?)", "translation generators"},
        {"v_beta_2d", EntryKind::InfinitesimalSymmetry, "v_beta_2d(beta=t, beta_prime?)", "rotation generators"},
        {"v_beta_nd", EntryKind::InfinitesimalSymmetry, "v_beta_nd(beta=t, n=3, i=1, j=2, beta_prime?)",
         "rotation generator of one coordinate plane"},
    };
    return list;
}

}  // namespace sdesym
