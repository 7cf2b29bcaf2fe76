#include "sdesym/sde.hpp"

#include <cmath>

#include "sdesym/error.hpp"

namespace sdesym {

SdeSpec::SdeSpec(Field mu, Field sigma) : mu_(std::move(mu)), sigma_(std::move(sigma)) {
    if (!mu_.valid() || !sigma_.valid()) throw ShapeError("SDE coefficients must be initialised fields");
    n_ = mu_.state_dim();
    if (mu_.cols() != 1 || mu_.rows() != n_) {
        throw ShapeError("drift must be a vector of length n = " + std::to_string(n_));
    }
    if (sigma_.state_dim() != n_ || sigma_.rows() != n_) {
        throw ShapeError("diffusion must have n = " + std::to_string(n_) + " rows");
    }
    d_ = sigma_.cols();
    mu_ = mu_.relabel(ShapeKind::Vector);
    sigma_ = sigma_.relabel(ShapeKind::Matrix);
    a_ = multiply(sigma_, transpose(sigma_)).relabel(ShapeKind::Matrix);
}

void SdeSpec::check_finite_on(const WorkingBox& box, int samples) const {
    // low-discrepancy points (additive recurrence); deterministic, no RNG needed
    std::vector<double> x(static_cast<std::size_t>(n_));
    for (int k = 0; k < samples; ++k) {
        for (int i = 0; i < n_; ++i) {
            const double u = std::fmod(0.5 + (k + 1) * std::sqrt(2.0 + i), 1.0);
            x[static_cast<std::size_t>(i)] = box.x_lo + u * (box.x_hi - box.x_lo);
        }
        const double t = box.t_lo + std::fmod(0.5 + (k + 1) * 0.6180339887498949, 1.0) * (box.t_hi - box.t_lo);
        try {
            for (double v : mu_.evaluate(x, t)) {
                if (!std::isfinite(v)) throw ValidationError("drift is not finite");
            }
            for (double v : sigma_.evaluate(x, t)) {
                if (!std::isfinite(v)) throw ValidationError("diffusion is not finite");
            }
        } catch (const DomainError& e) {
            throw ValidationError(std::string("SDE coefficient undefined on the working box: ") + e.what());
        }
    }
}

Observable::Observable(Field F) : F_(std::move(F)) {
    if (F_.size() != 1) throw ShapeError("observable must be scalar");
    F_ = F_.relabel(ShapeKind::Scalar);
    if (F_.is_symbolic() && F_.entry(0).depends_on(kTimeVar)) {
        throw ValidationError("observable must not depend on t");
    }
    if (F_.is_symbolic()) {
        for (int i = 0; i < F_.state_dim(); ++i) {
            for (int j = 0; j < F_.state_dim(); ++j) (void)second_derivative(F_, i, j);
        }
    }
}

Observable Observable::parse(const std::string& text, int n) { return Observable(Field::parse_scalar(text, n)); }

Field jacobian(const Field& phi) {
    const int n = phi.state_dim();
    const int k = phi.size();
    if (phi.is_symbolic()) {
        std::vector<Expr> e;
        e.reserve(static_cast<std::size_t>(k * n));
        for (int r = 0; r < k; ++r) {
            for (int c = 0; c < n; ++c) e.push_back(differentiate(phi.entry(r), c));
        }
        return Field::matrix(k, n, std::move(e), n).relabel(ShapeKind::Matrix);
    }
    std::vector<Field> cols;
    for (int c = 0; c < n; ++c) cols.push_back(derivative(phi, c));
    return Field::numeric(ShapeKind::Matrix, k, n, n,
                          [cols, k, n](std::span<const double> x, double t, std::span<double> out) {
                              std::vector<double> buf(static_cast<std::size_t>(k));
                              for (int c = 0; c < n; ++c) {
                                  cols[static_cast<std::size_t>(c)].evaluate(x, t, buf);
                                  for (int r = 0; r < k; ++r) out[static_cast<std::size_t>(r * n + c)] = buf[static_cast<std::size_t>(r)];
                              }
                          });
}

Field directional(const Field& Y, const Field& phi) {
    if (Y.size() != phi.state_dim() || Y.state_dim() != phi.state_dim()) {
        throw ShapeError("directional derivative: Y must have one component per state variable");
    }
    Field acc = Field::zeros(phi.kind(), phi.rows(), phi.cols(), phi.state_dim());
    for (int k = 0; k < Y.size(); ++k) {
        if (Y.is_symbolic() && Y.entry(k).is_zero()) continue;
        acc = add(acc, multiply(component(Y, k), derivative(phi, k)));
    }
    return acc;
}

Field generator_apply(const SdeSpec& sde, const Field& phi) {
    if (phi.state_dim() != sde.n()) throw ShapeError("generator: field dimension differs from SDE dimension");
    const int n = sde.n();
    Field acc = derivative(phi, kTimeVar);
    acc = add(acc, directional(sde.mu(), phi));
    const Field& a = sde.diffusion_matrix();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (a.is_symbolic() && a.entry(i, j).is_zero()) continue;
            const Field coef = multiply(Field::scalar(Expr(0.5), n), component(a, i, j));
            acc = add(acc, multiply(coef, second_derivative(phi, i, j)));
        }
    }
    return acc;
}

Field sigma_grad_apply(const SdeSpec& sde, const Field& phi) {
    if (phi.state_dim() != sde.n()) throw ShapeError("Sigma: field dimension differs from SDE dimension");
    if (phi.cols() != 1) throw ShapeError("Sigma expects a scalar or vector field");
    const Field grad_sigma = multiply(jacobian(phi), sde.sigma());  // k x d
    if (phi.size() == 1) return transpose(grad_sigma).relabel(ShapeKind::Vector);
    return grad_sigma.relabel(ShapeKind::Matrix);
}

Field lie_bracket(const Field& Y, const SdeSpec& sde, BracketKind kind) {
    if (Y.size() != sde.n() || Y.state_dim() != sde.n() || Y.cols() != 1) {
        throw ShapeError("Lie bracket: Y must be a vector field of length n");
    }
    const Field DY = jacobian(Y);
    if (kind == BracketKind::Sigma) {
        return subtract(directional(Y, sde.sigma()), multiply(DY, sde.sigma())).relabel(ShapeKind::Matrix);
    }
    const Field& a = sde.diffusion_matrix();
    Field r = subtract(directional(Y, a), multiply(DY, a));
    r = subtract(r, multiply(a, transpose(DY)));
    return r.relabel(ShapeKind::Matrix);
}

}  // namespace sdesym
