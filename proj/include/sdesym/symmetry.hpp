#pragma once

#include <string>
#include <vector>

#include "sdesym/infinitesimal.hpp"
#include "sdesym/sde.hpp"
#include "sdesym/transform.hpp"

namespace sdesym {

enum class SymmetryKind { Strong, Weak, GWeak };

SymmetryKind parse_symmetry_kind(const std::string& s);
std::string to_string(SymmetryKind k);

/// Tensor grid: `points` nodes per space axis on [x_lo, x_hi] times `times` nodes on [t_lo, t_hi].
struct Grid {
    int points = 11;
    double x_lo = -2.0;
    double x_hi = 2.0;
    int times = 8;
    double t_lo = 0.1;
    double t_hi = 2.0;

    std::size_t node_count(int n) const;
    /// Node k as (x, t); nodes are ordered with time varying slowest.
    void node(int n, std::size_t k, std::vector<double>& x, double& t) const;
};

struct EquationResidual {
    std::string label;
    double max_abs = 0.0;
    double mean_abs = 0.0;
};

struct ResidualReport {
    std::vector<EquationResidual> equations;
    Grid grid;
    int n = 0;
    double tol = 0.0;
    bool pass = false;

    double max_abs() const;
    const EquationResidual& equation(const std::string& label) const;
};

inline constexpr double kSymbolicTol = 1e-9;
inline constexpr double kNumericTol = 1e-6;

/// Finite determining equations, evaluated at every source node (x, t) of the grid:
///   drift      mu(Phi, f) - (1/f') (L Phi + DPhi sigma h)
///   diffusion  sigma(Phi, f) - (1/sqrt f') DPhi sigma B^T                     (strong, weak)
///              sigma sigma^T(Phi, f) - (1/f') DPhi sigma sigma^T DPhi^T       (gweak)
/// This is the target-side condition pulled back through the bijection (Phi, f).
/// kind = Strong requires f = t, B = I, h = 0 and throws NotStrongError otherwise.
ResidualReport check_finite(const StochTransformation& T, const SdeSpec& sde, SymmetryKind kind,
                            const Grid& grid = {}, double tol = kSymbolicTol, int threads = 0);

/// Infinitesimal determining equations on the grid.
ResidualReport check_infinitesimal(const InfinitesimalSymmetry& V, const SdeSpec& sde, SymmetryKind kind,
                                   const Grid& grid = {}, double tol = kSymbolicTol, int threads = 0);

struct RotationResult {
    Field B;
    /// Largest condition number of sigma^T sigma over the grid.
    double max_condition = 0.0;
    double max_orthogonality_error = 0.0;
};

/// The rotation that upgrades a G-weak symmetry (Phi, f, ., h) to a weak one:
///   B = (1/sqrt f') [sigma (sigma^T sigma)^{-1}]^T(Phi, f) DPhi sigma.
/// Validated orthogonal to 1e-8 on the grid (ValidationError otherwise).
RotationResult recover_rotation(const Field& phi, const Field& f, const Field& f_prime, const SdeSpec& sde,
                                const Grid& grid = {});

}  // namespace sdesym
