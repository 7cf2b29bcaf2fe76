#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sdesym/sde.hpp"
#include "sdesym/transform.hpp"

namespace sdesym {

inline constexpr double kDefaultDt = 1.0 / 1024.0;

struct McConfig {
    double t_end = 1.0;
    double dt = kDefaultDt;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 0;
    /// Worker count; <= 0 means default_threads(). Never changes results.
    int threads = 0;
};

/// t_end / dt, which must be a positive integer to within 1e-9 (ValidationError).
std::size_t step_count(double t_end, double dt);

/// Mean and standard error of per-path samples.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    double dt = 0.0;
};

/// Pairwise mean and SE = sample sd / sqrt(N), reduced in a fixed order.
Estimate estimate(std::span<const double> samples, double dt = 0.0);
/// Same over a strided column of a row-major table.
Estimate estimate_column(std::span<const double> table, std::size_t cols, std::size_t col, double dt = 0.0);

/// One path on a (possibly non-uniform) grid; pointers stay valid only during the callback.
struct PathView {
    std::size_t index = 0;
    int n = 0;
    int d = 0;
    std::span<const double> times;
    const double* X = nullptr;   // (steps + 1) x n
    const double* W = nullptr;   // (steps + 1) x d
    const double* dW = nullptr;  // steps x d; W is their running sum
    double weight = 1.0;

    std::size_t steps() const noexcept { return times.size() - 1; }
    std::span<const double> x(std::size_t k) const { return {X + k * n, static_cast<std::size_t>(n)}; }
    std::span<const double> w(std::size_t k) const { return {W + k * d, static_cast<std::size_t>(d)}; }
    double dw(std::size_t k, int j) const { return dW[k * d + j]; }
};

/// Index of grid time `t` (within 1e-9 relative); throws ValidationError if `t` is not on the grid.
std::size_t grid_index(std::span<const double> times, double t);

/// Linear interpolation of X at time `t` between bracketing grid nodes.
std::vector<double> state_at(const PathView& p, double t);

/// Euler-Maruyama simulation that hands every path to `fn` instead of storing it,
/// so N = 10^6 fits in memory. fn(path, out) writes n_out statistics; the result is
/// the row-major n_paths x n_out table. Paths draw from counter-based substreams keyed
/// by (seed, path index), so the table is bit-identical for any thread count.
/// Throws SimulationError when |X| exceeds 1e10.
using PathFn = std::function<void(const PathView& path, std::span<double> out)>;
std::vector<double> map_paths(const SdeSpec& sde, std::span<const double> x0, const McConfig& cfg, int n_out,
                              const PathFn& fn);

/// Materialised ensemble, for small N.
struct PathEnsemble {
    std::vector<double> times;
    int n = 0;
    int d = 0;
    std::size_t n_paths = 0;
    std::vector<double> X;   // n_paths x (steps + 1) x n
    std::vector<double> W;   // n_paths x (steps + 1) x d
    std::vector<double> dW;  // n_paths x steps x d
    std::vector<double> weights;
    std::uint64_t seed = 0;
    /// "P", or "Q(h)" after a Girsanov reweighting.
    std::string measure = "P";

    std::size_t steps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
    PathView path(std::size_t p) const;
    double x(std::size_t p, std::size_t k, int i) const { return X[(p * (steps() + 1) + k) * n + i]; }
    double w(std::size_t p, std::size_t k, int j) const { return W[(p * (steps() + 1) + k) * d + j]; }
};

PathEnsemble simulate(const SdeSpec& sde, std::span<const double> x0, double t_end, double dt, std::size_t n_paths,
                      std::uint64_t seed, int threads = 0);

/// Action of T on one path: X'_j = Phi(X_k, t_k) at t'_j = f(t_k), and
/// W'_{k+1} = W'_k + sqrt(f'(t_k)) B(X_k, t_k) (dW_k - h(X_k, t_k) dt_k), left point.
/// log_weight accumulates sum h.dW - 1/2 |h|^2 dt. Throws ValidationError if the
/// sampled f decreases (ties from rounding are allowed) or B is not orthogonal to 1e-8.
struct TransformedPath {
    std::vector<double> times;
    std::vector<double> X;
    std::vector<double> W;
    std::vector<double> dW;
    double log_weight = 0.0;
};
TransformedPath transform_path(const StochTransformation& T, const PathView& path);

PathEnsemble transform_paths(const StochTransformation& T, const PathEnsemble& ens, int threads = 0);

/// Doleans-Dade weights exp(sum h.dW - 1/2 sum |h|^2 dt) by left-point sums.
/// Throws NumericalError on overflow.
double girsanov_log_weight(const Field& h, const PathView& path, std::size_t k_end);
std::vector<double> girsanov_weights(const Field& h, const PathEnsemble& ens, int threads = 0);

/// sum_{k < k_end} G(X_k, t_k) . dW_k for a length-d vector field G.
double ito_integral(const Field& G, const PathView& path, std::size_t k_end);
std::vector<double> ito_integral(const Field& G, const PathEnsemble& ens, std::size_t k_end, int threads = 0);

/// Raw paths as CSV: path,k,t,x1..xn,w1..wd,weight.
void write_paths_csv(std::ostream& out, const PathEnsemble& ens);

}  // namespace sdesym
