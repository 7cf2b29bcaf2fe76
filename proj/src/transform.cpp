#include "sdesym/transform.hpp"

#include <algorithm>
#include <cmath>

#include "sdesym/error.hpp"

namespace sdesym {

namespace {

Field vars(int n) {
    std::vector<Expr> e;
    for (int i = 0; i < n; ++i) e.push_back(Expr::var(i));
    return Field::vector(std::move(e), n);
}

Field time_field(int n) { return Field::scalar(Expr::time(), n); }

Field reciprocal(const Field& a) {
    return map_entries(
        a, [](const Expr& e) { return Expr(1.0) / e; }, [](double v) { return 1.0 / v; });
}

Field square_root(const Field& a) {
    return map_entries(
        a, [](const Expr& e) { return sqrt(e); }, [](double v) { return std::sqrt(v); });
}

Field negate(const Field& a) {
    return map_entries(
        a, [](const Expr& e) { return -e; }, [](double v) { return -v; });
}

bool is_plain_time(const Field& f) {
    return f.is_symbolic() && f.size() == 1 && f.entry(0).op() == Op::Time;
}

double scalar_at(const Field& f, double t, int n) {
    const std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
    return f.evaluate_scalar(zero, t);
}

// Deterministic quasi-random sample in [lo,hi]: k-th point of an additive recurrence.
double quasi(int k, int axis, double lo, double hi) {
    const double alpha = std::sqrt(2.0 + 3.0 * axis) - std::floor(std::sqrt(2.0 + 3.0 * axis));
    const double u = std::fmod(0.5 + (k + 1) * alpha, 1.0);
    return lo + u * (hi - lo);
}

}  // namespace

Field numeric_phi_inverse(const Field& phi, double tol, int max_iter) {
    const int n = phi.state_dim();
    const Field J = jacobian(phi);
    return Field::numeric(
        ShapeKind::Vector, n, 1, n, [phi, J, n, tol, max_iter](std::span<const double> y, double t, std::span<double> out) {
            Vec target = Eigen::Map<const Vec>(y.data(), n);
            const double scale = std::max(1.0, target.cwiseAbs().maxCoeff());
            Vec x = target;
            auto residual = [&](const Vec& p, Vec& r) -> bool {
                try {
                    r = phi.evaluate_vector(std::span<const double>(p.data(), static_cast<std::size_t>(n)), t) - target;
                } catch (const DomainError&) {
                    return false;
                }
                return r.allFinite();
            };
            Vec r;
            if (!residual(x, r)) {
                // seed outside the domain of Phi; fall back to the origin
                x.setZero();
                if (!residual(x, r)) throw InversionError("numeric inversion of Phi: no admissible starting point");
            }
            for (int it = 0; it < max_iter; ++it) {
                const double norm = r.cwiseAbs().maxCoeff();
                if (norm <= tol * scale) break;
                const Mat jm = J.evaluate_matrix(std::span<const double>(x.data(), static_cast<std::size_t>(n)), t);
                const Vec dx = jm.colPivHouseholderQr().solve(r);
                double step = 1.0;
                Vec trial;
                Vec rt;
                bool accepted = false;
                while (step > 1e-6) {
                    trial = x - step * dx;
                    if (residual(trial, rt) && rt.cwiseAbs().maxCoeff() < norm) {
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if (!accepted) break;
                x = trial;
                r = rt;
            }
            if (!(r.cwiseAbs().maxCoeff() <= 1e-9 * scale)) {
                throw InversionError("numeric inversion of Phi did not converge at t = " + std::to_string(t));
            }
            for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = x(i);
        });
}

Field numeric_time_inverse(const Field& f, const Field& f_prime, int n) {
    return Field::numeric(ShapeKind::Scalar, 1, 1, n, [f, f_prime, n](std::span<const double>, double s, std::span<double> out) {
        if (s == 0.0) {
            out[0] = 0.0;
            return;
        }
        if (!(s > 0.0)) throw InversionError("time change inverse requested for negative time");
        auto F = [&](double t) { return scalar_at(f, t, n) - s; };
        double lo = 0.0;
        double hi = std::max(1.0, s);
        while (F(hi) < 0.0) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e15) throw InversionError("time " + std::to_string(s) + " lies beyond the range of f");
        }
        double t = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
            const double v = F(t);
            if (v == 0.0) break;
            if (v < 0.0) lo = t; else hi = t;
            const double d = scalar_at(f_prime, t, n);
            double next = d > 0.0 ? t - v / d : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::fabs(next - t) <= 1e-16 * std::max(1.0, t) || hi - lo <= 1e-16 * std::max(1.0, hi)) {
                t = next;
                break;
            }
            t = next;
        }
        out[0] = t;
    });
}

StochTransformation::StochTransformation(Parts parts, bool numeric_inversion) : numeric_inversion_(numeric_inversion) {
    if (!parts.phi.valid() || !parts.f.valid()) throw ShapeError("transformation needs phi and f");
    n_ = parts.phi.state_dim();
    if (parts.phi.cols() != 1 || parts.phi.rows() != n_) throw ShapeError("phi must map R^n to R^n");
    phi_ = parts.phi.relabel(ShapeKind::Vector);
    if (parts.f.size() != 1 || parts.f.state_dim() != n_) throw ShapeError("f must be a scalar field");
    f_ = parts.f.relabel(ShapeKind::Scalar);
    if (f_.is_symbolic()) {
        for (int i = 0; i < n_; ++i) {
            if (f_.entry(0).depends_on(i)) throw ValidationError("time change f must depend on t only");
        }
    }
    fp_ = parts.f_prime ? parts.f_prime->relabel(ShapeKind::Scalar) : derivative(f_, kTimeVar);
    if (fp_.size() != 1 || fp_.state_dim() != n_) throw ShapeError("f' must be a scalar field");

    d_ = parts.d;
    if (d_ == 0) d_ = parts.B ? parts.B->rows() : (parts.h ? parts.h->size() : n_);
    B_ = parts.B ? parts.B->relabel(ShapeKind::Matrix) : Field::identity(d_, n_);
    if (B_.rows() != d_ || B_.cols() != d_ || B_.state_dim() != n_) throw ShapeError("B must be d x d");
    h_ = parts.h ? parts.h->relabel(ShapeKind::Vector) : Field::zeros(ShapeKind::Vector, d_, 1, n_);
    if (h_.size() != d_ || h_.cols() != 1 || h_.state_dim() != n_) throw ShapeError("h must have length d");

    if (parts.phi_inv) {
        if (parts.phi_inv->size() != n_ || parts.phi_inv->state_dim() != n_) throw ShapeError("phi_inv must map R^n to R^n");
        phi_inv_ = parts.phi_inv->relabel(ShapeKind::Vector);
        phi_inv_supplied_ = true;
    } else if (numeric_inversion_) {
        phi_inv_ = numeric_phi_inverse(phi_);
    }
    if (parts.f_inv) {
        if (parts.f_inv->size() != 1 || parts.f_inv->state_dim() != n_) throw ShapeError("f_inv must be scalar");
        f_inv_ = parts.f_inv->relabel(ShapeKind::Scalar);
        f_inv_supplied_ = true;
    } else if (is_plain_time(f_)) {
        f_inv_ = f_;
        f_inv_supplied_ = true;
    } else if (numeric_inversion_) {
        f_inv_ = numeric_time_inverse(f_, fp_, n_);
    }
}

StochTransformation StochTransformation::identity(int n, int d) {
    if (n < 1 || d < 1) throw ShapeError("identity transformation needs n, d >= 1");
    Parts p;
    p.phi = vars(n);
    p.phi_inv = vars(n);
    p.f = time_field(n);
    p.f_prime = Field::scalar(Expr(1.0), n);
    p.f_inv = time_field(n);
    p.d = d;
    return StochTransformation(std::move(p));
}

const Field& StochTransformation::phi_inv() const {
    if (!phi_inv_.valid()) throw InversionError("Phi has no inverse and numeric inversion is disabled");
    return phi_inv_;
}

const Field& StochTransformation::f_inv() const {
    if (!f_inv_.valid()) throw InversionError("f has no inverse and numeric inversion is disabled");
    return f_inv_;
}

bool StochTransformation::is_symbolic() const {
    return phi_.is_symbolic() && f_.is_symbolic() && fp_.is_symbolic() && B_.is_symbolic() && h_.is_symbolic() &&
           phi_inv_.is_symbolic() && f_inv_.is_symbolic() && phi_inv_.valid() && f_inv_.valid();
}

void StochTransformation::validate(const ValidationOptions& opt) const {
    const std::vector<double> zero(static_cast<std::size_t>(n_), 0.0);
    auto fail = [](const std::string& what) { throw ValidationError(what); };
    try {
        const double f0 = f_.evaluate_scalar(zero, 0.0);
        if (std::fabs(f0) > 1e-14) fail("time change does not satisfy f(0) = 0 (f(0) = " + std::to_string(f0) + ")");
        const Field df = f_.is_symbolic() ? derivative(f_, kTimeVar) : Field();
        std::vector<double> x(static_cast<std::size_t>(n_));
        for (int k = 0; k < opt.samples; ++k) {
            const double t = quasi(k, 0, opt.t_lo, opt.t_hi);
            const double fp = fp_.evaluate_scalar(zero, t);
            if (!(fp > 0.0)) fail("f' is not positive at t = " + std::to_string(t));
            double ref;
            double tol = opt.fprime_tol;
            if (df.valid()) {
                ref = df.evaluate_scalar(zero, t);
            } else {
                const double h = 1e-5 * std::max(1.0, t);
                const double lo = std::max(0.0, t - h);
                ref = (f_.evaluate_scalar(zero, t + h) - f_.evaluate_scalar(zero, lo)) / (t + h - lo);
                tol = std::max(tol, 1e-6);
            }
            if (std::fabs(ref - fp) > tol * std::max(1.0, std::fabs(fp))) {
                fail("f' disagrees with df/dt at t = " + std::to_string(t));
            }
            if (f_inv_.valid()) {
                const double back = f_inv_.evaluate_scalar(zero, f_.evaluate_scalar(zero, t));
                if (std::fabs(back - t) > opt.inverse_tol * std::max(1.0, t)) {
                    fail("f_inv(f(t)) != t at t = " + std::to_string(t));
                }
            }
            for (int i = 0; i < n_; ++i) x[static_cast<std::size_t>(i)] = quasi(k, i + 1, opt.x_lo, opt.x_hi);
            const Mat B = B_.evaluate_matrix(x, t);
            const double orth = (B * B.transpose() - Mat::Identity(d_, d_)).cwiseAbs().maxCoeff();
            if (!(orth <= opt.orthogonality_tol)) fail("B is not orthogonal (|BB^T - I| = " + std::to_string(orth) + ")");
            if (opt.strict_so && B.determinant() < 0) fail("B has determinant -1 but strict SO(d) was requested");
            if (!h_.evaluate_vector(x, t).allFinite()) fail("h is not finite");
            const Vec y = phi_.evaluate_vector(x, t);
            if (!y.allFinite()) fail("Phi is not finite");
            if (phi_inv_.valid()) {
                const Vec back = phi_inv_.evaluate_vector(std::span<const double>(y.data(), y.size()), t);
                const Vec xv = Eigen::Map<const Vec>(x.data(), n_);
                const double err = (back - xv).cwiseAbs().maxCoeff();
                const double tol_inv = phi_inv_supplied_ ? opt.inverse_tol : std::max(opt.inverse_tol, 1e-6);
                if (!(err <= tol_inv * std::max(1.0, xv.cwiseAbs().maxCoeff()))) {
                    fail("Phi_inv(Phi(x)) != x (error " + std::to_string(err) + ")");
                }
            }
        }
    } catch (const DomainError& e) {
        throw ValidationError(std::string("transformation undefined at a sample point: ") + e.what());
    }
}

StochTransformation compose(const StochTransformation& T2, const StochTransformation& T1) {
    if (T1.n() != T2.n() || T1.d() != T2.d()) throw ShapeError("compose: dimensions differ");
    const int n = T1.n();
    StochTransformation::Parts p;
    p.d = T1.d();
    p.phi = compose(T2.phi(), T1.phi(), T1.f());
    p.f = compose_time(T2.f(), T1.f());
    p.f_prime = multiply(compose_time(T2.f_prime(), T1.f()), T1.f_prime());
    p.B = multiply(compose(T2.B(), T1.phi(), T1.f()), T1.B());
    p.h = add(T1.h(), multiply(square_root(T1.f_prime()),
                               multiply(transpose(T1.B()), compose(T2.h(), T1.phi(), T1.f()))));
    const bool inv = T1.numeric_inversion() && T2.numeric_inversion();
    try {
        // x = Phi1^{-1}(Phi2^{-1}(y, f1(t)), t)
        p.phi_inv = compose(T1.phi_inv(), compose(T2.phi_inv(), vars(n), T1.f()), time_field(n));
        p.f_inv = compose_time(T1.f_inv(), T2.f_inv());
    } catch (const InversionError&) {
        if (!inv) throw;
        p.phi_inv.reset();
        p.f_inv.reset();
    }
    return StochTransformation(std::move(p), inv);
}

StochTransformation invert(const StochTransformation& T) {
    const int n = T.n();
    const std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k <= 16; ++k) {
        const double t = 2.0 * k / 16.0;
        if (!(T.f_prime().evaluate_scalar(zero, t) > 0.0)) {
            throw ValidationError("cannot invert: f is not increasing near t = " + std::to_string(t));
        }
    }
    const Field& finv = T.f_inv();
    const Field phibar = compose(T.phi_inv(), vars(n), finv);
    StochTransformation::Parts p;
    p.d = T.d();
    p.phi = phibar;
    p.phi_inv = compose(T.phi(), vars(n), finv);
    p.f = finv;
    p.f_inv = T.f();
    const Field fbar_prime = reciprocal(compose_time(T.f_prime(), finv));
    p.f_prime = fbar_prime;
    const Field Bback = compose(T.B(), phibar, finv);
    p.B = transpose(Bback);
    p.h = negate(multiply(square_root(fbar_prime), multiply(Bback, compose(T.h(), phibar, finv))));
    return StochTransformation(std::move(p), T.numeric_inversion());
}

SdeSpec push_forward_sde(const StochTransformation& T, const SdeSpec& sde) {
    if (T.n() != sde.n() || T.d() != sde.d()) throw ShapeError("push-forward: transformation and SDE dimensions differ");
    const int n = T.n();
    const Field Dphi = jacobian(T.phi());
    const Field Dphi_sigma = multiply(Dphi, sde.sigma());
    const Field drift = multiply(reciprocal(T.f_prime()),
                                 add(generator_apply(sde, T.phi()), multiply(Dphi_sigma, T.h())).relabel(ShapeKind::Vector));
    const Field diff = multiply(reciprocal(square_root(T.f_prime())), multiply(Dphi_sigma, transpose(T.B())));
    const Field& finv = T.f_inv();
    const Field xmap = compose(T.phi_inv(), vars(n), finv);
    return SdeSpec(compose(drift, xmap, finv).relabel(ShapeKind::Vector), compose(diff, xmap, finv).relabel(ShapeKind::Matrix));
}

}  // namespace sdesym
