#include "sdesym/field.hpp"

#include <algorithm>
#include <cmath>

#include "sdesym/error.hpp"

namespace sdesym {

namespace {

ShapeKind kind_for(int rows, int cols) {
    if (rows == 1 && cols == 1) return ShapeKind::Scalar;
    if (cols == 1) return ShapeKind::Vector;
    return ShapeKind::Matrix;
}

std::string shape_string(const Field& f) {
    return std::to_string(f.rows()) + "x" + std::to_string(f.cols());
}

void require_same_state_dim(const Field& a, const Field& b, const char* op) {
    if (a.state_dim() != b.state_dim()) {
        throw ShapeError(std::string(op) + ": state dimensions differ (" + std::to_string(a.state_dim()) +
                         " vs " + std::to_string(b.state_dim()) + ")");
    }
}

double fd_step(double v, double rel) { return rel * std::max(1.0, std::fabs(v)); }

}  // namespace

Field Field::scalar(Expr e, int n) { return matrix(1, 1, {std::move(e)}, n); }

Field Field::vector(std::vector<Expr> entries, int n) {
    const int k = static_cast<int>(entries.size());
    Field f = matrix(k, 1, std::move(entries), n);
    f.kind_ = ShapeKind::Vector;
    return f;
}

Field Field::matrix(int rows, int cols, std::vector<Expr> row_major, int n) {
    if (n < 1 || n > kMaxStateDim) throw ShapeError("state dimension must lie in 1..8");
    if (rows < 1 || cols < 1 || static_cast<int>(row_major.size()) != rows * cols) {
        throw ShapeError("field entry count does not match its shape");
    }
    for (const Expr& e : row_major) {
        if (e.max_var_index() >= n) {
            throw ShapeError("field entry " + to_string(e) + " references a variable beyond dimension " +
                             std::to_string(n));
        }
    }
    Field f;
    f.kind_ = kind_for(rows, cols);
    if (rows == 1 && cols == 1) f.kind_ = ShapeKind::Scalar;
    f.rows_ = rows;
    f.cols_ = cols;
    f.n_ = n;
    auto programs = std::make_shared<std::vector<Program>>();
    programs->reserve(row_major.size());
    for (const Expr& e : row_major) programs->emplace_back(e);
    f.programs_ = std::move(programs);
    f.entries_ = std::move(row_major);
    return f;
}

Field Field::numeric(ShapeKind kind, int rows, int cols, int n, NumericFn fn) {
    if (n < 1 || n > kMaxStateDim) throw ShapeError("state dimension must lie in 1..8");
    if (rows < 1 || cols < 1) throw ShapeError("numeric field needs a positive shape");
    Field f;
    f.kind_ = kind;
    f.rows_ = rows;
    f.cols_ = cols;
    f.n_ = n;
    f.numeric_ = std::make_shared<const NumericFn>(std::move(fn));
    return f;
}

Field Field::zeros(ShapeKind kind, int rows, int cols, int n) {
    Field f = matrix(rows, cols, std::vector<Expr>(static_cast<std::size_t>(rows * cols), Expr(0.0)), n);
    f.kind_ = kind;
    return f;
}

Field Field::identity(int size, int n) {
    std::vector<Expr> e(static_cast<std::size_t>(size * size), Expr(0.0));
    for (int i = 0; i < size; ++i) e[static_cast<std::size_t>(i * size + i)] = Expr(1.0);
    Field f = matrix(size, size, std::move(e), n);
    f.kind_ = ShapeKind::Matrix;
    return f;
}

Field Field::parse_scalar(const std::string& text, int n) { return scalar(parse(text, n), n); }

Field Field::parse_vector(const std::vector<std::string>& texts, int n) {
    if (texts.empty()) throw ShapeError("vector field needs at least one entry");
    std::vector<Expr> e;
    e.reserve(texts.size());
    for (const auto& s : texts) e.push_back(parse(s, n));
    return vector(std::move(e), n);
}

Field Field::parse_matrix(const std::vector<std::vector<std::string>>& rows, int n) {
    if (rows.empty() || rows.front().empty()) throw ShapeError("matrix field needs at least one entry");
    const std::size_t cols = rows.front().size();
    std::vector<Expr> e;
    for (const auto& row : rows) {
        if (row.size() != cols) throw ShapeError("ragged matrix field");
        for (const auto& s : row) e.push_back(parse(s, n));
    }
    Field f = matrix(static_cast<int>(rows.size()), static_cast<int>(cols), std::move(e), n);
    f.kind_ = ShapeKind::Matrix;
    return f;
}

Field Field::relabel(ShapeKind kind) const {
    const bool ok = (kind == ShapeKind::Scalar && size() == 1) || (kind == ShapeKind::Vector && cols_ == 1) ||
                    kind == ShapeKind::Matrix;
    if (!ok) throw ShapeError("cannot view a " + shape_string(*this) + " field as that kind");
    Field f = *this;
    f.kind_ = kind;
    return f;
}

void Field::check_symbolic() const {
    if (!is_symbolic()) throw ShapeError("field is numerically backed and has no symbolic entries");
}

const std::vector<Expr>& Field::entries() const {
    check_symbolic();
    return entries_;
}

const Expr& Field::entry(int i) const {
    check_symbolic();
    if (i < 0 || i >= size()) throw ShapeError("field entry index out of range");
    return entries_[static_cast<std::size_t>(i)];
}

const Expr& Field::entry(int r, int c) const { return entry(r * cols_ + c); }

void Field::evaluate(std::span<const double> x, double t, std::span<double> out) const {
    if (static_cast<int>(x.size()) != n_) {
        throw ShapeError("point dimension " + std::to_string(x.size()) + " does not match field dimension " +
                         std::to_string(n_));
    }
    if (static_cast<int>(out.size()) != size()) throw ShapeError("output buffer does not match field shape");
    if (numeric_) {
        (*numeric_)(x, t, out);
        return;
    }
    const auto& programs = *programs_;
    for (std::size_t i = 0; i < programs.size(); ++i) out[i] = programs[i](x.data(), t);
}

std::vector<double> Field::evaluate(std::span<const double> x, double t) const {
    std::vector<double> out(static_cast<std::size_t>(size()));
    evaluate(x, t, out);
    return out;
}

double Field::evaluate_scalar(std::span<const double> x, double t) const {
    if (size() != 1) throw ShapeError("field of shape " + shape_string(*this) + " is not scalar");
    double v = 0.0;
    evaluate(x, t, std::span<double>(&v, 1));
    return v;
}

Vec Field::evaluate_vector(std::span<const double> x, double t) const {
    Vec v(size());
    evaluate(x, t, std::span<double>(v.data(), static_cast<std::size_t>(v.size())));
    return v;
}

Mat Field::evaluate_matrix(std::span<const double> x, double t) const {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(rows_, cols_);
    evaluate(x, t, std::span<double>(m.data(), static_cast<std::size_t>(m.size())));
    return m;
}

std::vector<std::string> Field::to_strings() const {
    std::vector<std::string> out;
    if (!is_symbolic()) {
        out.assign(static_cast<std::size_t>(size()), "<numeric>");
        return out;
    }
    for (const Expr& e : entries_) out.push_back(to_string(e));
    return out;
}

// ---------------------------------------------------------------------------

namespace {

// matrix() infers a kind from the shape; this restores the one an operation asked for.
Field with_kind(const Field& f, ShapeKind kind) { return f.kind() == kind ? f : f.relabel(kind); }

template <class Combine>
Field elementwise(const Field& a, const Field& b, const char* name, Combine combine,
                  Expr (*symbolic)(const Expr&, const Expr&)) {
    require_same_state_dim(a, b, name);
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(name) + ": shapes differ (" + shape_string(a) + " vs " + shape_string(b) + ")");
    }
    if (a.is_symbolic() && b.is_symbolic()) {
        std::vector<Expr> e;
        e.reserve(static_cast<std::size_t>(a.size()));
        for (int i = 0; i < a.size(); ++i) e.push_back(symbolic(a.entry(i), b.entry(i)));
        return with_kind(Field::matrix(a.rows(), a.cols(), std::move(e), a.state_dim()), a.kind());
    }
    return Field::numeric(a.kind(), a.rows(), a.cols(), a.state_dim(),
                          [a, b, combine](std::span<const double> x, double t, std::span<double> out) {
                              std::vector<double> vb(out.size());
                              a.evaluate(x, t, out);
                              b.evaluate(x, t, vb);
                              for (std::size_t i = 0; i < out.size(); ++i) out[i] = combine(out[i], vb[i]);
                          });
}

Expr add_expr(const Expr& a, const Expr& b) { return a + b; }
Expr sub_expr(const Expr& a, const Expr& b) { return a - b; }

}  // namespace

Field add(const Field& a, const Field& b) {
    return elementwise(a, b, "add", [](double u, double v) { return u + v; }, add_expr);
}

Field subtract(const Field& a, const Field& b) {
    return elementwise(a, b, "subtract", [](double u, double v) { return u - v; }, sub_expr);
}

Field multiply(const Field& a, const Field& b) {
    require_same_state_dim(a, b, "multiply");
    const bool a_scalar = a.kind() == ShapeKind::Scalar;
    const bool b_scalar = b.kind() == ShapeKind::Scalar;
    if (a_scalar || b_scalar) {
        const Field& s = a_scalar ? a : b;
        const Field& m = a_scalar ? b : a;
        if (s.is_symbolic() && m.is_symbolic()) {
            std::vector<Expr> e;
            for (int i = 0; i < m.size(); ++i) e.push_back(a_scalar ? s.entry(0) * m.entry(i) : m.entry(i) * s.entry(0));
            return with_kind(Field::matrix(m.rows(), m.cols(), std::move(e), m.state_dim()), m.kind());
        }
        return Field::numeric(m.kind(), m.rows(), m.cols(), m.state_dim(),
                              [s, m](std::span<const double> x, double t, std::span<double> out) {
                                  const double k = s.evaluate_scalar(x, t);
                                  m.evaluate(x, t, out);
                                  for (double& v : out) v *= k;
                              });
    }
    if (a.cols() != b.rows()) {
        throw ShapeError("multiply: inner dimensions differ (" + shape_string(a) + " * " + shape_string(b) + ")");
    }
    const int rows = a.rows();
    const int cols = b.cols();
    const int inner = a.cols();
    const ShapeKind kind = kind_for(rows, cols);
    if (a.is_symbolic() && b.is_symbolic()) {
        std::vector<Expr> e;
        e.reserve(static_cast<std::size_t>(rows * cols));
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                Expr acc(0.0);
                for (int k = 0; k < inner; ++k) acc = acc + a.entry(r, k) * b.entry(k, c);
                e.push_back(acc);
            }
        }
        return with_kind(Field::matrix(rows, cols, std::move(e), a.state_dim()), kind);
    }
    return Field::numeric(kind, rows, cols, a.state_dim(),
                          [a, b](std::span<const double> x, double t, std::span<double> out) {
                              const Mat ma = a.evaluate_matrix(x, t);
                              const Mat mb = b.evaluate_matrix(x, t);
                              const Mat p = ma * mb;
                              for (Eigen::Index r = 0; r < p.rows(); ++r) {
                                  for (Eigen::Index c = 0; c < p.cols(); ++c) {
                                      out[static_cast<std::size_t>(r * p.cols() + c)] = p(r, c);
                                  }
                              }
                          });
}

Field transpose(const Field& a) {
    const ShapeKind kind = a.kind() == ShapeKind::Scalar ? ShapeKind::Scalar : kind_for(a.cols(), a.rows());
    const ShapeKind out_kind = (a.kind() == ShapeKind::Vector) ? ShapeKind::Matrix : kind;
    if (a.is_symbolic()) {
        std::vector<Expr> e;
        for (int r = 0; r < a.cols(); ++r) {
            for (int c = 0; c < a.rows(); ++c) e.push_back(a.entry(c, r));
        }
        return with_kind(Field::matrix(a.cols(), a.rows(), std::move(e), a.state_dim()), out_kind);
    }
    return Field::numeric(out_kind, a.cols(), a.rows(), a.state_dim(),
                          [a](std::span<const double> x, double t, std::span<double> out) {
                              const Mat m = a.evaluate_matrix(x, t);
                              for (Eigen::Index r = 0; r < m.cols(); ++r) {
                                  for (Eigen::Index c = 0; c < m.rows(); ++c) {
                                      out[static_cast<std::size_t>(r * m.rows() + c)] = m(c, r);
                                  }
                              }
                          });
}

Field component(const Field& a, int r, int c) {
    if (r < 0 || r >= a.rows() || c < 0 || c >= a.cols()) throw ShapeError("component index out of range");
    if (a.is_symbolic()) return Field::scalar(a.entry(r, c), a.state_dim());
    const int idx = r * a.cols() + c;
    return Field::numeric(ShapeKind::Scalar, 1, 1, a.state_dim(),
                          [a, idx](std::span<const double> x, double t, std::span<double> out) {
                              out[0] = a.evaluate(x, t)[static_cast<std::size_t>(idx)];
                          });
}

Field stack_vector(const std::vector<Field>& parts) {
    if (parts.empty()) throw ShapeError("stack_vector needs at least one part");
    const int n = parts.front().state_dim();
    bool symbolic = true;
    for (const Field& p : parts) {
        if (p.size() != 1) throw ShapeError("stack_vector expects scalar parts");
        if (p.state_dim() != n) throw ShapeError("stack_vector: state dimensions differ");
        symbolic = symbolic && p.is_symbolic();
    }
    if (symbolic) {
        std::vector<Expr> e;
        for (const Field& p : parts) e.push_back(p.entry(0));
        return Field::vector(std::move(e), n);
    }
    return Field::numeric(ShapeKind::Vector, static_cast<int>(parts.size()), 1, n,
                          [parts](std::span<const double> x, double t, std::span<double> out) {
                              for (std::size_t i = 0; i < parts.size(); ++i) out[i] = parts[i].evaluate_scalar(x, t);
                          });
}

Field compose(const Field& outer, const Field& space, const Field& time) {
    if (space.size() != outer.state_dim()) {
        throw ShapeError("compose: inner map has " + std::to_string(space.size()) + " components, outer field needs " +
                         std::to_string(outer.state_dim()));
    }
    if (time.size() != 1) throw ShapeError("compose: time map must be scalar");
    require_same_state_dim(space, time, "compose");
    const int n = space.state_dim();
    if (outer.is_symbolic() && space.is_symbolic() && time.is_symbolic()) {
        std::map<int, Expr> bindings;
        for (int i = 0; i < space.size(); ++i) bindings[i] = space.entry(i);
        bindings[kTimeVar] = time.entry(0);
        std::vector<Expr> e;
        for (const Expr& o : outer.entries()) e.push_back(substitute(o, bindings));
        return with_kind(Field::matrix(outer.rows(), outer.cols(), std::move(e), n), outer.kind());
    }
    return Field::numeric(outer.kind(), outer.rows(), outer.cols(), n,
                          [outer, space, time](std::span<const double> x, double t, std::span<double> out) {
                              const std::vector<double> y = space.evaluate(x, t);
                              const double s = time.evaluate_scalar(x, t);
                              outer.evaluate(y, s, out);
                          });
}

Field compose_time(const Field& outer, const Field& time) {
    std::vector<Expr> id;
    for (int i = 0; i < outer.state_dim(); ++i) id.push_back(Expr::var(i));
    if (time.state_dim() != outer.state_dim()) throw ShapeError("compose_time: state dimensions differ");
    return compose(outer, Field::vector(std::move(id), outer.state_dim()), time);
}

Field derivative(const Field& a, int var) {
    if (var != kTimeVar && (var < 0 || var >= a.state_dim())) throw ShapeError("derivative variable out of range");
    if (a.is_symbolic()) {
        std::vector<Expr> e;
        for (const Expr& x : a.entries()) e.push_back(differentiate(x, var));
        return with_kind(Field::matrix(a.rows(), a.cols(), std::move(e), a.state_dim()), a.kind());
    }
    return Field::numeric(a.kind(), a.rows(), a.cols(), a.state_dim(),
                          [a, var](std::span<const double> x, double t, std::span<double> out) {
                              std::vector<double> xp(x.begin(), x.end());
                              std::vector<double> lo(out.size());
                              std::vector<double> hi(out.size());
                              if (var == kTimeVar) {
                                  const double h = fd_step(t, 1e-5);
                                  a.evaluate(xp, t + h, hi);
                                  a.evaluate(xp, t - h, lo);
                                  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (hi[i] - lo[i]) / (2.0 * h);
                                  return;
                              }
                              const auto v = static_cast<std::size_t>(var);
                              const double h = fd_step(x[v], 1e-5);
                              xp[v] = x[v] + h;
                              a.evaluate(xp, t, hi);
                              xp[v] = x[v] - h;
                              a.evaluate(xp, t, lo);
                              for (std::size_t i = 0; i < out.size(); ++i) out[i] = (hi[i] - lo[i]) / (2.0 * h);
                          });
}

Field second_derivative(const Field& a, int var1, int var2) {
    if (a.is_symbolic()) return derivative(derivative(a, var1), var2);
    for (int v : {var1, var2}) {
        if (v != kTimeVar && (v < 0 || v >= a.state_dim())) throw ShapeError("derivative variable out of range");
    }
    return Field::numeric(
        a.kind(), a.rows(), a.cols(), a.state_dim(),
        [a, var1, var2](std::span<const double> x, double t, std::span<double> out) {
            std::vector<double> xp(x.begin(), x.end());
            double tp = t;
            auto coord = [&](int v) -> double& { return v == kTimeVar ? tp : xp[static_cast<std::size_t>(v)]; };
            const std::size_t m = out.size();
            std::vector<double> buf(m);
            auto eval_at = [&](double d1, double d2, double weight) {
                const double c1 = coord(var1);
                coord(var1) += d1;
                const double c2 = coord(var2);
                coord(var2) += d2;
                a.evaluate(xp, tp, buf);
                for (std::size_t i = 0; i < m; ++i) out[i] += weight * buf[i];
                coord(var2) = c2;
                coord(var1) = c1;
            };
            std::fill(out.begin(), out.end(), 0.0);
            const double h1 = fd_step(coord(var1), 1e-4);
            if (var1 == var2) {
                eval_at(h1, 0.0, 1.0);
                eval_at(0.0, 0.0, -2.0);
                eval_at(-h1, 0.0, 1.0);
                for (double& v : out) v /= h1 * h1;
                return;
            }
            const double h2 = fd_step(coord(var2), 1e-4);
            eval_at(h1, h2, 1.0);
            eval_at(h1, -h2, -1.0);
            eval_at(-h1, h2, -1.0);
            eval_at(-h1, -h2, 1.0);
            for (double& v : out) v /= 4.0 * h1 * h2;
        });
}

Field map_entries(const Field& a, const std::function<Expr(const Expr&)>& symbolic,
                  const std::function<double(double)>& numeric) {
    if (a.is_symbolic()) {
        std::vector<Expr> e;
        for (const Expr& x : a.entries()) e.push_back(symbolic(x));
        return with_kind(Field::matrix(a.rows(), a.cols(), std::move(e), a.state_dim()), a.kind());
    }
    return Field::numeric(a.kind(), a.rows(), a.cols(), a.state_dim(),
                          [a, numeric](std::span<const double> x, double t, std::span<double> out) {
                              a.evaluate(x, t, out);
                              for (double& v : out) v = numeric(v);
                          });
}

}  // namespace sdesym
