#pragma once

#include "sdesym/field.hpp"

namespace sdesym {

/// Region on which coefficients are required to be finite.
struct WorkingBox {
    double x_lo = -10.0;
    double x_hi = 10.0;
    double t_lo = 0.0;
    double t_hi = 10.0;
};

/// dX = mu(X,t) dt + sigma(X,t) dW with X in R^n and W in R^d.
class SdeSpec {
public:
    SdeSpec() = default;
    SdeSpec(Field mu, Field sigma);

    int n() const noexcept { return n_; }
    int d() const noexcept { return d_; }
    const Field& mu() const noexcept { return mu_; }
    const Field& sigma() const noexcept { return sigma_; }
    /// sigma * sigma^T, n x n.
    const Field& diffusion_matrix() const noexcept { return a_; }
    bool is_symbolic() const noexcept { return mu_.is_symbolic() && sigma_.is_symbolic(); }

    /// Throws ValidationError if mu or sigma is non-finite (or out of domain)
    /// at `samples` deterministic points of the box.
    void check_finite_on(const WorkingBox& box, int samples = 64) const;

private:
    int n_ = 0;
    int d_ = 0;
    Field mu_;
    Field sigma_;
    Field a_;
};

/// A time-independent scalar function of the state.
class Observable {
public:
    Observable() = default;
    explicit Observable(Field F);
    static Observable parse(const std::string& text, int n);

    const Field& field() const noexcept { return F_; }
    int n() const noexcept { return F_.state_dim(); }

private:
    Field F_;
};

/// Jacobian D(phi), k x n for a vector field of length k (1 x n for a scalar).
Field jacobian(const Field& phi);

/// Y(phi) = sum_k Y^k d_k phi, applied entrywise to phi of any shape.
Field directional(const Field& Y, const Field& phi);

/// L_t phi = d_t phi + mu . grad phi + 1/2 tr(sigma sigma^T Hess phi), entrywise.
Field generator_apply(const SdeSpec& sde, const Field& phi);

/// Sigma(phi) = sigma^T grad phi: length-d vector for scalar phi, k x d matrix
/// (D(phi) sigma) for a vector phi of length k.
Field sigma_grad_apply(const SdeSpec& sde, const Field& phi);

enum class BracketKind { Sigma, SigmaSquared };

/// [Y, sigma] (n x d) or [Y, sigma sigma^T] (n x n).
Field lie_bracket(const Field& Y, const SdeSpec& sde, BracketKind kind);

}  // namespace sdesym
