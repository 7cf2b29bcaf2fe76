#include "sdesym/ibp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "sdesym/catalog.hpp"
#include "sdesym/error.hpp"
#include "sdesym/parallel.hpp"
#include "sdesym/symmetry.hpp"

namespace sdesym {

namespace {

bool x_independent(const Field& f) {
    if (!f.is_symbolic()) return false;
    for (const Expr& e : f.entries()) {
        if (e.max_var_index() >= 0) return false;
    }
    return true;
}

bool symmetry_is_symbolic(const InfinitesimalSymmetry& V) {
    return V.Y().is_symbolic() && V.m().is_symbolic() && V.C().is_symbolic() && V.H().is_symbolic();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// Sampled boundedness of F, its gradient and Hessian: the sup over a box of
// radius 1000 must not exceed the sup over radius 10 by more than 1%.
bool looks_bounded(const Field& F) {
    const int n = F.state_dim();
    std::vector<Field> parts{F};
    for (int i = 0; i < n; ++i) {
        parts.push_back(derivative(F, i));
        for (int j = 0; j <= i; ++j) parts.push_back(second_derivative(F, i, j));
    }
    auto sup = [&](double radius) {
        double worst = 0.0;
        std::vector<double> x(n);
        constexpr int kSamples = 4001;
        for (int s = 0; s < kSamples; ++s) {
            // Weyl sequence in [-radius, radius]^n, deterministic
            for (int i = 0; i < n; ++i) {
                const double frac = std::fmod(0.5 + s * std::sqrt(2.0 + 3.0 * i), 1.0);
                x[i] = radius * (2.0 * frac - 1.0);
            }
            for (const Field& p : parts) {
                const double v = std::fabs(p.evaluate_scalar(x, 0.0));
                if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
                worst = std::max(worst, v);
            }
        }
        return worst;
    };
    try {
        const double near = sup(10.0);
        const double far = sup(1000.0);
        return std::isfinite(far) && far <= 1.01 * near + 1e-12;
    } catch (const DomainError&) {
        return false;
    }
}

double fourth_moment(std::span<const double> table, std::size_t cols, std::size_t col) {
    const std::size_t N = table.size() / cols;
    std::vector<double> q(N);
    for (std::size_t p = 0; p < N; ++p) {
        const double v = table[p * cols + col];
        q[p] = v * v * v * v;
    }
    return pairwise_sum(q.data(), N) / static_cast<double>(N);
}

void check_precondition(const InfinitesimalSymmetry& V, const SdeSpec& sde, const IbpOptions& opt, IbpReport& r) {
    const double tol = symmetry_is_symbolic(V) && sde.is_symbolic() ? kSymbolicTol : kNumericTol;
    const ResidualReport weak = check_infinitesimal(V, sde, SymmetryKind::Weak, Grid{}, tol);
    if (weak.pass) return;
    const ResidualReport gweak = check_infinitesimal(V, sde, SymmetryKind::GWeak, Grid{}, tol);
    if (gweak.pass) return;
    std::string msg = "V is not a weak or G-weak symmetry of the SDE:";
    for (const auto& e : weak.equations) msg += " weak " + e.label + " residual " + fmt(e.max_abs) + ";";
    for (const auto& e : gweak.equations) msg += " gweak " + e.label + " residual " + fmt(e.max_abs) + ";";
    if (!opt.override_precondition) throw SymmetryPreconditionError(msg);
    r.warnings.push_back("precondition overridden: " + msg);
}

// Evaluates the four terms of the identity and their sum on one path.
class IbpKernel {
public:
    IbpKernel(const InfinitesimalSymmetry& V, const SdeSpec& sde, const Observable& F, std::span<const double> x0,
              double t)
        : H_(V.H()), F_(F.field()), LF_(generator_apply(sde, F.field())), YF_(directional(V.Y(), F.field())), t_(t),
          d_(sde.d()) {
        if (V.n() != sde.n() || F.n() != sde.n()) throw ShapeError("symmetry, SDE and observable dimensions differ");
        if (V.d() != sde.d()) throw ShapeError("symmetry and SDE noise dimensions differ");
        std::vector<double> any(sde.n(), 0.0);
        m_t_ = V.m().evaluate_scalar(any, t);
        yf0_ = YF_.evaluate_scalar(x0, 0.0);
        h_static_ = x_independent(H_);
    }

    void prepare(std::span<const double> times, std::size_t k_t) {
        if (!h_static_) return;
        table_.resize(k_t * d_);
        std::vector<double> any(F_.state_dim(), 0.0);
        for (std::size_t k = 0; k < k_t; ++k) {
            H_.evaluate(any, times[k], std::span<double>(table_.data() + k * d_, static_cast<std::size_t>(d_)));
        }
    }

    void operator()(const PathView& p, std::size_t k_t, std::span<double> out) const {
        double integral = 0.0;
        if (h_static_) {
            for (std::size_t k = 0; k < k_t; ++k) {
                for (int j = 0; j < d_; ++j) integral += table_[k * d_ + j] * p.dw(k, j);
            }
        } else {
            integral = ito_integral(H_, p, k_t);
        }
        const std::span<const double> xt = p.x(k_t);
        out[0] = -m_t_ * LF_.evaluate_scalar(xt, t_);
        out[1] = F_.evaluate_scalar(xt, t_) * integral;
        out[2] = YF_.evaluate_scalar(xt, t_);
        out[3] = -yf0_;
        out[4] = out[0] + out[1] + out[2] + out[3];
    }

private:
    Field H_, F_, LF_, YF_;
    double t_;
    int d_;
    double m_t_ = 0.0;
    double yf0_ = 0.0;
    bool h_static_ = false;
    std::vector<double> table_;
};

const char* const kTermLabels[4] = {"-m(t) E[L(F)(X_t)]", "E[F(X_t) int_0^t H.dW]", "E[Y(F)(X_t)]",
                                    "-E[Y(F)(X_0)]"};

void summarise(IbpReport& r, std::span<const double> table, std::size_t cols, double dt,
               const std::vector<std::string>& labels) {
    for (std::size_t c = 0; c < labels.size(); ++c) {
        const Estimate e = estimate_column(table, cols, c, dt);
        r.terms.push_back({labels[c], e.value, e.std_error});
    }
    const Estimate tot = estimate_column(table, cols, cols - 1, dt);
    r.total = tot.value;
    r.se_total = tot.std_error;
    r.fourth_moment = fourth_moment(table, cols, cols - 1);
    if (!std::isfinite(r.total) || !std::isfinite(r.fourth_moment)) {
        throw NumericalError("per-path statistic is not finite (empirical fourth moment diverged)");
    }
    r.pass = std::fabs(r.total) <= r.gate * r.se_total;
}

std::vector<double> origin_or(const std::vector<double>& x0, int n) {
    if (x0.empty()) return std::vector<double>(n, 0.0);
    if (static_cast<int>(x0.size()) != n) throw ShapeError("x0 does not match the state dimension");
    return x0;
}

void hypothesis_warning(const InfinitesimalSymmetry& V, const SdeSpec& sde, std::span<const double> x0,
                        const McConfig& mc, const IbpOptions& opt, IbpReport& r) {
    if (opt.hypothesis_paths == 0) return;
    McConfig small = mc;
    small.n_paths = opt.hypothesis_paths;
    small.t_end = opt.t;
    small.seed = mc.seed + 0x9E3779B97F4A7C15ull;
    const HypothesisAReport h = check_hypothesis_a(V, sde, x0, {opt.t}, small);
    for (const auto& row : h.rows) {
        if (!row.finite || !row.stable) {
            r.warnings.push_back("Hypothesis A screen flagged " + row.quantity +
                                 (row.finite ? " (unstable under doubling)" : " (non-finite)"));
        }
    }
}

}  // namespace

IbpReport ibp_report(const InfinitesimalSymmetry& V, const SdeSpec& sde, const Observable& F, const McConfig& mc,
                     const IbpOptions& opt) {
    IbpReport r;
    r.subject = "symmetry";
    r.gate = opt.gate;
    r.t = opt.t;
    r.config = mc;
    r.config.t_end = opt.t;
    check_precondition(V, sde, opt, r);
    const std::vector<double> x0 = origin_or(opt.x0, sde.n());
    const std::size_t k_t = step_count(opt.t, mc.dt);
    IbpKernel kernel(V, sde, F, x0, opt.t);
    std::vector<double> times(k_t + 1);
    for (std::size_t k = 0; k <= k_t; ++k) times[k] = static_cast<double>(k) * mc.dt;
    kernel.prepare(times, k_t);
    r.bounded = looks_bounded(F.field());
    const auto table = map_paths(sde, x0, r.config, 5,
                                 [&](const PathView& p, std::span<double> out) { kernel(p, k_t, out); });
    summarise(r, table, 5, mc.dt, {kTermLabels, kTermLabels + 4});
    hypothesis_warning(V, sde, x0, mc, opt, r);
    return r;
}

IbpReport ibp_report(const InfinitesimalSymmetry& V, const SdeSpec& sde, const Observable& F,
                     const PathEnsemble& ens, const IbpOptions& opt) {
    IbpReport r;
    r.subject = "symmetry";
    r.gate = opt.gate;
    r.t = opt.t;
    r.config.n_paths = ens.n_paths;
    r.config.seed = ens.seed;
    r.config.t_end = opt.t;
    r.config.dt = ens.steps() > 0 ? ens.times[1] - ens.times[0] : 0.0;
    check_precondition(V, sde, opt, r);
    if (ens.times.empty() || opt.t > ens.times.back() * (1 + 1e-12)) {
        throw ValidationError("horizon t lies beyond the ensemble grid");
    }
    const std::size_t k_t = grid_index(ens.times, opt.t);
    std::vector<double> x0(ens.X.begin(), ens.X.begin() + ens.n);
    IbpKernel kernel(V, sde, F, x0, opt.t);
    kernel.prepare(ens.times, k_t);
    r.bounded = looks_bounded(F.field());
    std::vector<double> table(ens.n_paths * 5);
    parallel_for(ens.n_paths, 0, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t p = begin; p < end; ++p) kernel(ens.path(p), k_t, std::span<double>(table.data() + 5 * p, 5));
    });
    summarise(r, table, 5, r.config.dt, {kTermLabels, kTermLabels + 4});
    return r;
}

const std::vector<std::string>& identity_names() {
    static const std::vector<std::string> names = {"stein",    "covariance",   "levy-area",
                                                   "isserlis", "valpha-first", "valpha-second"};
    return names;
}

IbpReport verify_identity(const std::string& name, const IdentityParams& params, const McConfig& mc, double gate) {
    const auto& names = identity_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        throw ValidationError("unknown identity '" + name + "'");
    }
    const double t = params.t;
    const double s = params.s;
    const std::size_t k_t = step_count(t, mc.dt);
    const bool planar = name == "levy-area" || name == "isserlis";
    const int n = planar ? 2 : 1;

    IbpReport r;
    r.subject = "identity:" + name;
    r.gate = gate;
    r.t = t;
    r.config = mc;
    r.config.t_end = t;
    std::size_t k_s = 0;
    if (name == "covariance") {
        k_s = step_count(s, mc.dt);
        r.config.t_end = std::max(t, s);
    }

    Field F, Fx, Fy, Fxx;
    if (name != "covariance") {
        F = Observable::parse(params.F, n).field();
        Fx = derivative(F, 0);
        Fxx = second_derivative(F, 0, 0);
        if (planar) Fy = derivative(F, 1);
        r.bounded = looks_bounded(F);
    }

    std::vector<std::string> labels;
    if (name == "stein") labels = {"E[W_t F(W_t)]", "t E[F'(W_t)]"};
    if (name == "covariance") labels = {"E[W_t W_s]", "min(t, s)"};
    if (name == "levy-area") labels = {"E[F(W_t) A_t]", "t E[W1_t dF/dy - W2_t dF/dx]"};
    if (name == "isserlis") labels = {"E[W2_t dF/dx]", "E[W1_t dF/dy]"};
    if (name == "valpha-first") labels = {"t E[F''(W_t)]", "E[W_t F'(W_t)]"};
    if (name == "valpha-second") labels = {"t^2 E[F''(W_t)]", "E[F(W_t) (W_t^2 - t)]"};

    const SdeSpec bm = *catalog_get("bm", {{"n", std::to_string(n)}}).sde;
    const std::vector<double> x0(n, 0.0);
    const auto table = map_paths(bm, x0, r.config, 3, [&](const PathView& p, std::span<double> out) {
        const std::span<const double> w = p.x(k_t);
        double lhs = 0.0;
        double rhs = 0.0;
        if (name == "stein") {
            lhs = w[0] * F.evaluate_scalar(w, 0.0);
            rhs = t * Fx.evaluate_scalar(w, 0.0);
        } else if (name == "covariance") {
            // int_0^t beta'(u) dW_u with beta'(u) = 1 for u < s, 0 otherwise
            double ws = 0.0;
            for (std::size_t k = 0; k < std::min(k_s, k_t); ++k) ws += p.dw(k, 0);
            lhs = w[0] * ws;
            rhs = std::min(t, s);
        } else if (name == "levy-area") {
            double area = 0.0;
            for (std::size_t k = 0; k < k_t; ++k) {
                const std::span<const double> wk = p.x(k);
                area += wk[0] * p.dw(k, 1) - wk[1] * p.dw(k, 0);
            }
            lhs = F.evaluate_scalar(w, 0.0) * area;
            rhs = t * (w[0] * Fy.evaluate_scalar(w, 0.0) - w[1] * Fx.evaluate_scalar(w, 0.0));
        } else if (name == "isserlis") {
            lhs = w[1] * Fx.evaluate_scalar(w, 0.0);
            rhs = w[0] * Fy.evaluate_scalar(w, 0.0);
        } else if (name == "valpha-first") {
            lhs = t * Fxx.evaluate_scalar(w, 0.0);
            rhs = w[0] * Fx.evaluate_scalar(w, 0.0);
        } else {
            lhs = t * t * Fxx.evaluate_scalar(w, 0.0);
            rhs = F.evaluate_scalar(w, 0.0) * (w[0] * w[0] - t);
        }
        out[0] = lhs;
        out[1] = rhs;
        out[2] = lhs - rhs;
    });
    summarise(r, table, 3, mc.dt, labels);
    return r;
}

namespace {

struct Quantity {
    std::string name;
    Field field;
};

std::vector<Quantity> hypothesis_quantities(const InfinitesimalSymmetry& V, const SdeSpec& sde) {
    const Field YY = directional(V.Y(), V.Y());
    return {
        {"CH", multiply(V.C(), V.H())},
        {"H", V.H()},
        {"Y(H)", directional(V.Y(), V.H())},
        {"L(Y)", generator_apply(sde, V.Y())},
        {"Sigma(Y)", sigma_grad_apply(sde, V.Y())},
        {"L(Y(Y^i))", generator_apply(sde, YY)},
        {"Sigma(Y(Y^i))", sigma_grad_apply(sde, YY)},
    };
}

double squared_norm(const Field& f, std::span<const double> x, double t, std::vector<double>& buf) {
    buf.resize(static_cast<std::size_t>(f.size()));
    try {
        f.evaluate(x, t, buf);
    } catch (const DomainError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double s = 0.0;
    for (double v : buf) s += v * v;
    return s;
}

HypothesisAReport summarise_moments(const std::vector<Quantity>& qs, const std::vector<double>& times,
                                    const std::vector<double>& table, double dt) {
    HypothesisAReport rep;
    const std::size_t cols = qs.size() * times.size();
    const std::size_t N = table.size() / cols;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        for (std::size_t qi = 0; qi < qs.size(); ++qi) {
            const std::size_t col = ti * qs.size() + qi;
            MomentEstimate m;
            m.quantity = qs[qi].name;
            m.time = times[ti];
            std::vector<double> v(N);
            for (std::size_t p = 0; p < N; ++p) v[p] = table[p * cols + col];
            m.finite = std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
            const Estimate e = estimate(v, dt);
            m.value = e.value;
            m.std_error = e.std_error;
            m.finite = m.finite && std::isfinite(m.value) && std::isfinite(m.std_error);
            if (m.finite && N >= 8) {
                double prev = pairwise_sum(v.data(), N / 8) / static_cast<double>(N / 8);
                for (std::size_t len : {N / 4, N / 2, N}) {
                    const double cur = pairwise_sum(v.data(), len) / static_cast<double>(len);
                    const double ratio = (cur == 0.0 && prev == 0.0) ? 1.0 : cur / prev;
                    m.doubling_ratios.push_back(ratio);
                    if (!(ratio >= 0.5 && ratio <= 2.0)) m.stable = false;
                    prev = cur;
                }
            }
            if (!m.finite) m.stable = false;
            rep.flagged = rep.flagged || !m.finite || !m.stable;
            rep.rows.push_back(std::move(m));
        }
    }
    return rep;
}

}  // namespace

HypothesisAReport check_hypothesis_a(const InfinitesimalSymmetry& V, const SdeSpec& sde, const PathEnsemble& ens,
                                     const std::vector<double>& times) {
    const auto qs = hypothesis_quantities(V, sde);
    std::vector<std::size_t> idx;
    for (double t : times) idx.push_back(grid_index(ens.times, t));
    const std::size_t cols = qs.size() * times.size();
    std::vector<double> table(ens.n_paths * cols);
    parallel_for(ens.n_paths, 0, [&](std::size_t begin, std::size_t end, int) {
        std::vector<double> buf;
        for (std::size_t p = begin; p < end; ++p) {
            const PathView v = ens.path(p);
            for (std::size_t ti = 0; ti < times.size(); ++ti) {
                for (std::size_t qi = 0; qi < qs.size(); ++qi) {
                    table[p * cols + ti * qs.size() + qi] = squared_norm(qs[qi].field, v.x(idx[ti]), times[ti], buf);
                }
            }
        }
    });
    return summarise_moments(qs, times, table, ens.steps() > 0 ? ens.times[1] - ens.times[0] : 0.0);
}

HypothesisAReport check_hypothesis_a(const InfinitesimalSymmetry& V, const SdeSpec& sde, std::span<const double> x0,
                                     const std::vector<double>& times, const McConfig& mc) {
    if (times.empty()) throw ValidationError("no times requested");
    const auto qs = hypothesis_quantities(V, sde);
    McConfig cfg = mc;
    cfg.t_end = *std::max_element(times.begin(), times.end());
    std::vector<std::size_t> idx;
    for (double t : times) idx.push_back(step_count(t, mc.dt));
    const std::size_t cols = qs.size() * times.size();
    const auto table = map_paths(sde, x0, cfg, static_cast<int>(cols), [&](const PathView& v, std::span<double> out) {
        thread_local std::vector<double> buf;
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
            for (std::size_t qi = 0; qi < qs.size(); ++qi) {
                out[ti * qs.size() + qi] = squared_norm(qs[qi].field, v.x(idx[ti]), times[ti], buf);
            }
        }
    });
    return summarise_moments(qs, times, table, mc.dt);
}

}  // namespace sdesym
