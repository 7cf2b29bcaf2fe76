#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdesym/expr.hpp"

namespace sdesym {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ShapeKind { Scalar, Vector, Matrix };

/// A scalar, vector or matrix valued function of (x, t), x in R^n.
///
/// A field is either symbolic (one Expr per slot, row-major for matrices) or
/// numerically backed by a callable. Symbolic fields support exact
/// differentiation and substitution; numeric fields fall back to central
/// differences. Both kinds are immutable and safe to evaluate concurrently.
class Field {
public:
    using NumericFn = std::function<void(std::span<const double> x, double t, std::span<double> out)>;

    Field() = default;

    static Field scalar(Expr e, int n);
    static Field vector(std::vector<Expr> entries, int n);
    static Field matrix(int rows, int cols, std::vector<Expr> row_major, int n);
    static Field numeric(ShapeKind kind, int rows, int cols, int n, NumericFn fn);

    static Field zeros(ShapeKind kind, int rows, int cols, int n);
    static Field identity(int size, int n);

    /// Parses each entry with `parse(text, n)`.
    static Field parse_scalar(const std::string& text, int n);
    static Field parse_vector(const std::vector<std::string>& texts, int n);
    static Field parse_matrix(const std::vector<std::vector<std::string>>& rows, int n);

    ShapeKind kind() const noexcept { return kind_; }
    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    int size() const noexcept { return rows_ * cols_; }
    int state_dim() const noexcept { return n_; }
    bool valid() const noexcept { return n_ > 0; }
    bool is_symbolic() const noexcept { return numeric_ == nullptr; }

    const std::vector<Expr>& entries() const;
    const Expr& entry(int i) const;
    const Expr& entry(int r, int c) const;

    void evaluate(std::span<const double> x, double t, std::span<double> out) const;
    std::vector<double> evaluate(std::span<const double> x, double t) const;
    double evaluate_scalar(std::span<const double> x, double t) const;
    Vec evaluate_vector(std::span<const double> x, double t) const;
    Mat evaluate_matrix(std::span<const double> x, double t) const;

    /// Same field with a different kind tag (e.g. a 1x1 matrix viewed as a vector).
    Field relabel(ShapeKind kind) const;

    /// Expression strings; numeric fields report "<numeric>" per slot.
    std::vector<std::string> to_strings() const;

private:
    void check_symbolic() const;

    ShapeKind kind_ = ShapeKind::Scalar;
    int rows_ = 0;
    int cols_ = 0;
    int n_ = 0;
    std::vector<Expr> entries_;
    std::shared_ptr<const std::vector<Program>> programs_;
    std::shared_ptr<const NumericFn> numeric_;
};

// Structural algebra on fields. Results are symbolic when every operand is.

Field add(const Field& a, const Field& b);
Field subtract(const Field& a, const Field& b);
/// Matrix product; vectors act as columns. A scalar operand scales the other one.
Field multiply(const Field& a, const Field& b);
Field transpose(const Field& a);
/// Entry (r, c) of a field as a scalar field.
Field component(const Field& a, int r, int c = 0);
/// Reshape a vector of scalar fields into one vector field.
Field stack_vector(const std::vector<Field>& parts);

/// outer(space(x, t), time(x, t)): `space` must be a vector field of length
/// outer.state_dim(); the result lives on space.state_dim() variables.
Field compose(const Field& outer, const Field& space, const Field& time);
Field compose_time(const Field& outer, const Field& time);

/// Partial derivative with respect to a state index or kTimeVar.
Field derivative(const Field& a, int var);
Field second_derivative(const Field& a, int var1, int var2);

/// Applies a unary scalar function elementwise (symbolic if `a` is).
Field map_entries(const Field& a, const std::function<Expr(const Expr&)>& symbolic,
                  const std::function<double(double)>& numeric);

}  // namespace sdesym
