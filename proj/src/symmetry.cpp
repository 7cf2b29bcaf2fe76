#include "sdesym/symmetry.hpp"

#include <cmath>
#include <functional>

#include "sdesym/error.hpp"
#include "sdesym/parallel.hpp"

namespace sdesym {

SymmetryKind parse_symmetry_kind(const std::string& s) {
    if (s == "strong") return SymmetryKind::Strong;
    if (s == "weak") return SymmetryKind::Weak;
    if (s == "gweak" || s == "g-weak") return SymmetryKind::GWeak;
    throw ValidationError("unknown symmetry kind '" + s + "' (expected strong, weak or gweak)");
}

std::string to_string(SymmetryKind k) {
    switch (k) {
        case SymmetryKind::Strong: return "strong";
        case SymmetryKind::Weak: return "weak";
        case SymmetryKind::GWeak: return "gweak";
    }
    return "?";
}

std::size_t Grid::node_count(int n) const {
    std::size_t c = static_cast<std::size_t>(times);
    for (int i = 0; i < n; ++i) c *= static_cast<std::size_t>(points);
    return c;
}

void Grid::node(int n, std::size_t k, std::vector<double>& x, double& t) const {
    x.resize(static_cast<std::size_t>(n));
    auto coord = [](int i, int count, double lo, double hi) {
        return count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (count - 1);
    };
    for (int i = 0; i < n; ++i) {
        x[static_cast<std::size_t>(i)] = coord(static_cast<int>(k % static_cast<std::size_t>(points)), points, x_lo, x_hi);
        k /= static_cast<std::size_t>(points);
    }
    t = coord(static_cast<int>(k), times, t_lo, t_hi);
}

double ResidualReport::max_abs() const {
    double m = 0.0;
    for (const auto& e : equations) m = std::max(m, e.max_abs);
    return m;
}

const EquationResidual& ResidualReport::equation(const std::string& label) const {
    for (const auto& e : equations) {
        if (e.label == label) return e;
    }
    throw ValidationError("report has no equation '" + label + "'");
}

namespace {

// Evaluates `eval(x, t, out)` (one max-abs residual per equation) on every node.
ResidualReport run_grid(const std::vector<std::string>& labels, int n, const Grid& grid, double tol, int threads,
                        const std::function<void(const std::vector<double>&, double, double*)>& eval) {
    if (grid.points < 1 || grid.times < 1) throw ValidationError("grid needs at least one node per axis");
    const std::size_t nodes = grid.node_count(n);
    const std::size_t m = labels.size();
    std::vector<double> per_node(nodes * m, 0.0);
    parallel_for(nodes, threads, [&](std::size_t begin, std::size_t end, int) {
        std::vector<double> x;
        double t = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            grid.node(n, k, x, t);
            eval(x, t, per_node.data() + k * m);
        }
    });
    ResidualReport rep;
    rep.grid = grid;
    rep.n = n;
    rep.tol = tol;
    rep.pass = true;
    std::vector<double> column(nodes);
    for (std::size_t e = 0; e < m; ++e) {
        EquationResidual r;
        r.label = labels[e];
        for (std::size_t k = 0; k < nodes; ++k) {
            const double v = per_node[k * m + e];
            column[k] = v;
            // NaN must fail the check, so it sticks in max_abs
            if (std::isnan(v)) r.max_abs = v;
            else if (v > r.max_abs) r.max_abs = v;
        }
        r.mean_abs = pairwise_sum(column.data(), nodes) / static_cast<double>(nodes);
        if (!(r.max_abs <= tol)) rep.pass = false;
        rep.equations.push_back(r);
    }
    return rep;
}

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

ResidualReport check_finite(const StochTransformation& T, const SdeSpec& sde, SymmetryKind kind, const Grid& grid,
                            double tol, int threads) {
    if (T.n() != sde.n() || T.d() != sde.d()) throw ShapeError("transformation and SDE dimensions differ");
    const int n = sde.n();
    const int d = sde.d();
    const Field LPhi = generator_apply(sde, T.phi());
    const Field DPhi = jacobian(T.phi());
    const std::vector<std::string> labels = {"drift", kind == SymmetryKind::GWeak ? "diffusion-squared" : "diffusion"};
    return run_grid(labels, n, grid, tol, threads, [&](const std::vector<double>& x, double t, double* out) {
        const double f = T.f().evaluate_scalar(x, t);
        const double fp = T.f_prime().evaluate_scalar(x, t);
        const Mat B = T.B().evaluate_matrix(x, t);
        const Vec h = T.h().evaluate_vector(x, t);
        if (kind == SymmetryKind::Strong) {
            const double scale = std::max(1.0, std::fabs(t));
            if (std::fabs(f - t) > 1e-12 * scale || std::fabs(fp - 1.0) > 1e-12 ||
                max_abs(B - Mat::Identity(d, d)) > 1e-12 || max_abs(h) > 1e-12) {
                throw NotStrongError("strong symmetry check requires f = t, B = I and h = 0");
            }
        }
        const Vec y = T.phi().evaluate_vector(x, t);
        const Mat J = DPhi.evaluate_matrix(x, t);
        const Mat sig = sde.sigma().evaluate_matrix(x, t);
        const Mat Jsig = J * sig;
        const Vec expected_mu = (LPhi.evaluate_vector(x, t) + Jsig * h) / fp;
        out[0] = max_abs(sde.mu().evaluate_vector(as_span(y), f) - expected_mu);
        const Mat sig_y = sde.sigma().evaluate_matrix(as_span(y), f);
        if (kind == SymmetryKind::GWeak) {
            Mat r = sig_y * sig_y.transpose() - (Jsig * Jsig.transpose()) / fp;
            r = 0.5 * (r + r.transpose());
            out[1] = max_abs(r);
        } else {
            out[1] = max_abs(sig_y - (Jsig * B.transpose()) / std::sqrt(fp));
        }
    });
}

ResidualReport check_infinitesimal(const InfinitesimalSymmetry& V, const SdeSpec& sde, SymmetryKind kind,
                                   const Grid& grid, double tol, int threads) {
    if (V.n() != sde.n() || V.d() != sde.d()) throw ShapeError("symmetry and SDE dimensions differ");
    const int n = sde.n();
    if (kind == SymmetryKind::Strong && !V.is_strong()) {
        throw NotStrongError("strong infinitesimal check requires m = 0, C = 0 and H = 0");
    }
    const Field& mu = sde.mu();
    const Field& sigma = sde.sigma();
    Field drift = subtract(directional(V.Y(), mu), generator_apply(sde, V.Y()));
    Field diffusion;
    if (kind == SymmetryKind::Strong) {
        diffusion = lie_bracket(V.Y(), sde, BracketKind::Sigma);
    } else {
        drift = add(drift, multiply(V.m(), derivative(mu, kTimeVar)));
        drift = subtract(drift, multiply(sigma, V.H()).relabel(ShapeKind::Vector));
        drift = add(drift, multiply(V.m_prime(), mu));
        if (kind == SymmetryKind::Weak) {
            diffusion = lie_bracket(V.Y(), sde, BracketKind::Sigma);
            diffusion = add(diffusion, multiply(multiply(Field::scalar(Expr(0.5), n), V.m_prime()), sigma));
            diffusion = add(diffusion, multiply(sigma, V.C()).relabel(ShapeKind::Matrix));
        } else {
            diffusion = lie_bracket(V.Y(), sde, BracketKind::SigmaSquared);
            diffusion = add(diffusion, multiply(V.m_prime(), sde.diffusion_matrix()));
        }
    }
    const bool squared = kind == SymmetryKind::GWeak;
    const std::vector<std::string> labels = {"drift", squared ? "diffusion-squared" : "diffusion"};
    return run_grid(labels, n, grid, tol, threads, [&](const std::vector<double>& x, double t, double* out) {
        out[0] = max_abs(drift.evaluate_vector(x, t));
        Mat r = diffusion.evaluate_matrix(x, t);
        if (squared) r = 0.5 * (r + r.transpose());
        out[1] = max_abs(r);
    });
}

namespace {

struct RotationParts {
    Mat B;
    double condition;
};

RotationParts rotation_at(const Field& phi, const Field& DPhi, const Field& f, const Field& f_prime,
                          const SdeSpec& sde, std::span<const double> x, double t) {
    const int n = sde.n();
    const Vec y = phi.evaluate_vector(x, t);
    const double s = f.evaluate_scalar(x, t);
    const double fp = f_prime.evaluate_scalar(x, t);
    const Mat sig_y = sde.sigma().evaluate_matrix(as_span(y), s);
    const Eigen::JacobiSVD<Mat> svd(sig_y);
    const auto sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    const double cond = smin > 0.0 ? (sv(0) / smin) * (sv(0) / smin) : INFINITY;
    if (!(cond < 1e12)) throw NumericalError("sigma^T sigma is singular at a grid node; rotation undetermined");
    // least squares sigma Z = I_n gives Z = (sigma^T sigma)^{-1} sigma^T
    const Mat Z = sig_y.colPivHouseholderQr().solve(Mat::Identity(n, n));
    const Mat B = Z * DPhi.evaluate_matrix(x, t) * sde.sigma().evaluate_matrix(x, t) / std::sqrt(fp);
    return {B, cond};
}

}  // namespace

RotationResult recover_rotation(const Field& phi, const Field& f, const Field& f_prime, const SdeSpec& sde,
                                const Grid& grid) {
    if (phi.size() != sde.n() || phi.state_dim() != sde.n()) throw ShapeError("phi must map R^n to R^n");
    const int n = sde.n();
    const int d = sde.d();
    const Field DPhi = jacobian(phi);
    RotationResult res;
    std::vector<double> x;
    double t = 0.0;
    for (std::size_t k = 0; k < grid.node_count(n); ++k) {
        grid.node(n, k, x, t);
        const RotationParts p = rotation_at(phi, DPhi, f, f_prime, sde, x, t);
        res.max_condition = std::max(res.max_condition, p.condition);
        const double err = max_abs(p.B * p.B.transpose() - Mat::Identity(d, d));
        res.max_orthogonality_error = std::max(res.max_orthogonality_error, err);
    }
    if (!(res.max_orthogonality_error <= 1e-8)) {
        throw ValidationError("recovered rotation is not orthogonal (error " +
                              std::to_string(res.max_orthogonality_error) +
                              "); the input is not a G-weak symmetry");
    }
    res.B = Field::numeric(ShapeKind::Matrix, d, d, n,
                           [phi, DPhi, f, f_prime, sde, d](std::span<const double> x, double t, std::span<double> out) {
                               const Mat B = rotation_at(phi, DPhi, f, f_prime, sde, x, t).B;
                               for (int r = 0; r < d; ++r) {
                                   for (int c = 0; c < d; ++c) out[static_cast<std::size_t>(r * d + c)] = B(r, c);
                               }
                           });
    return res;
}

}  // namespace sdesym
