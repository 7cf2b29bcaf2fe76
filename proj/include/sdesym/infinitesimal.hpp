#pragma once

#include <optional>

#include "sdesym/field.hpp"

namespace sdesym {

/// V = (Y, m, C, H): generator of a one-parameter group of transformations.
/// Y is a length-n vector field, m a scalar function of t, C an antisymmetric
/// d x d matrix field and H a length-d vector field.
class InfinitesimalSymmetry {
public:
    InfinitesimalSymmetry() = default;
    /// m' is derived symbolically when not supplied.
    InfinitesimalSymmetry(Field Y, Field m, Field C, Field H, std::optional<Field> m_prime = std::nullopt);

    int n() const noexcept { return Y_.state_dim(); }
    int d() const noexcept { return C_.rows(); }
    const Field& Y() const noexcept { return Y_; }
    const Field& m() const noexcept { return m_; }
    const Field& m_prime() const noexcept { return mp_; }
    const Field& C() const noexcept { return C_; }
    const Field& H() const noexcept { return H_; }

    /// True when m, C and H vanish identically (symbolically).
    bool is_strong() const;

    /// C + C^T = 0 to `tol` at deterministic sample points of [-2,2]^n x [0,2].
    void validate(double tol = 1e-12) const;

private:
    Field Y_;
    Field m_;
    Field mp_;
    Field C_;
    Field H_;
};

}  // namespace sdesym
