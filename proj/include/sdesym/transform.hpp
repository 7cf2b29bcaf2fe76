#pragma once

#include <optional>

#include "sdesym/sde.hpp"

namespace sdesym {

struct ValidationOptions {
    double x_lo = -2.0;
    double x_hi = 2.0;
    double t_lo = 0.0;
    double t_hi = 2.0;
    int samples = 40;
    double orthogonality_tol = 1e-10;
    double inverse_tol = 1e-9;
    double fprime_tol = 1e-8;
    /// Require det B = +1 in addition to B B^T = I.
    bool strict_so = false;
};

/// T = (Phi, f, B, h): spatial map, time change, noise rotation, Girsanov drift.
///
/// phi_inv(y, t) inverts Phi(., t) at the same t. f, f' and f^{-1} are scalar
/// fields that depend on t only. When phi_inv or f_inv is not supplied they are
/// realised numerically (damped Newton for Phi, bracketing plus Newton for f).
class StochTransformation {
public:
    struct Parts {
        Field phi;
        std::optional<Field> phi_inv;
        Field f;
        std::optional<Field> f_prime;  // derived symbolically from f when omitted
        std::optional<Field> f_inv;
        std::optional<Field> B;  // identity when omitted
        std::optional<Field> h;  // zero when omitted
        int d = 0;               // noise dimension; defaults to n
    };

    StochTransformation() = default;
    explicit StochTransformation(Parts parts, bool numeric_inversion = true);

    static StochTransformation identity(int n, int d);

    int n() const noexcept { return n_; }
    int d() const noexcept { return d_; }
    const Field& phi() const noexcept { return phi_; }
    const Field& phi_inv() const;
    const Field& f() const noexcept { return f_; }
    const Field& f_prime() const noexcept { return fp_; }
    const Field& f_inv() const;
    const Field& B() const noexcept { return B_; }
    const Field& h() const noexcept { return h_; }

    bool has_closed_inverse() const noexcept { return phi_inv_supplied_ && f_inv_supplied_; }
    bool numeric_inversion() const noexcept { return numeric_inversion_; }
    bool is_symbolic() const;

    /// Checks the structural invariants at deterministic sample points;
    /// throws ValidationError naming the first violation.
    void validate(const ValidationOptions& opt = {}) const;

private:
    int n_ = 0;
    int d_ = 0;
    Field phi_;
    Field phi_inv_;
    Field f_;
    Field fp_;
    Field f_inv_;
    Field B_;
    Field h_;
    bool phi_inv_supplied_ = false;
    bool f_inv_supplied_ = false;
    bool numeric_inversion_ = true;
};

/// T2 o T1: first T1, then T2.
StochTransformation compose(const StochTransformation& T2, const StochTransformation& T1);
StochTransformation invert(const StochTransformation& T);

/// E_T(mu, sigma), expressed in the target variables (y, s) = (Phi(x,t), f(t)).
SdeSpec push_forward_sde(const StochTransformation& T, const SdeSpec& sde);

/// Numeric right inverse of Phi(., t): solves Phi(x, t) = y by damped Newton from x = y.
Field numeric_phi_inverse(const Field& phi, double tol = 1e-12, int max_iter = 50);
/// Numeric inverse of an increasing time change with f(0) = 0.
Field numeric_time_inverse(const Field& f, const Field& f_prime, int n);

}  // namespace sdesym
