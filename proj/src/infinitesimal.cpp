#include "sdesym/infinitesimal.hpp"

#include <cmath>

#include "sdesym/error.hpp"

namespace sdesym {

namespace {

bool all_zero(const Field& f) {
    if (!f.is_symbolic()) return false;
    for (const Expr& e : f.entries()) {
        if (!e.is_zero()) return false;
    }
    return true;
}

}  // namespace

InfinitesimalSymmetry::InfinitesimalSymmetry(Field Y, Field m, Field C, Field H, std::optional<Field> m_prime)
    : Y_(std::move(Y)), m_(std::move(m)), C_(std::move(C)), H_(std::move(H)) {
    const int n = Y_.state_dim();
    if (Y_.cols() != 1 || Y_.rows() != n) throw ShapeError("Y must be a vector field of length n");
    Y_ = Y_.relabel(ShapeKind::Vector);
    if (m_.size() != 1 || m_.state_dim() != n) throw ShapeError("m must be a scalar field");
    m_ = m_.relabel(ShapeKind::Scalar);
    if (m_.is_symbolic()) {
        for (int i = 0; i < n; ++i) {
            if (m_.entry(0).depends_on(i)) throw ValidationError("m must depend on t only");
        }
    }
    mp_ = m_prime ? m_prime->relabel(ShapeKind::Scalar) : derivative(m_, kTimeVar);
    if (C_.rows() != C_.cols() || C_.state_dim() != n) throw ShapeError("C must be a square d x d field");
    C_ = C_.relabel(ShapeKind::Matrix);
    if (H_.cols() != 1 || H_.rows() != C_.rows() || H_.state_dim() != n) throw ShapeError("H must have length d");
    H_ = H_.relabel(ShapeKind::Vector);
}

bool InfinitesimalSymmetry::is_strong() const { return all_zero(m_) && all_zero(C_) && all_zero(H_); }

void InfinitesimalSymmetry::validate(double tol) const {
    const int n = this->n();
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int k = 0; k < 40; ++k) {
        for (int i = 0; i < n; ++i) {
            x[static_cast<std::size_t>(i)] = -2.0 + 4.0 * std::fmod(0.5 + (k + 1) * std::sqrt(2.0 + i), 1.0);
        }
        const double t = 2.0 * std::fmod(0.5 + (k + 1) * 0.6180339887498949, 1.0);
        const Mat c = C_.evaluate_matrix(x, t);
        const double asym = (c + c.transpose()).cwiseAbs().maxCoeff();
        if (!(asym <= tol)) throw ValidationError("C is not antisymmetric (|C + C^T| = " + std::to_string(asym) + ")");
    }
}

}  // namespace sdesym
