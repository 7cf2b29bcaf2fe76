#pragma once

#include <string>
#include <vector>

#include "sdesym/infinitesimal.hpp"
#include "sdesym/mc.hpp"
#include "sdesym/sde.hpp"

namespace sdesym {

struct IbpTerm {
    std::string label;
    double value = 0.0;
    double std_error = 0.0;
};

/// Terms of an integration-by-parts identity, each estimated from the same paths,
/// plus the total computed path-wise (so its SE accounts for the correlations).
struct IbpReport {
    std::string subject;
    std::vector<IbpTerm> terms;
    double total = 0.0;
    double se_total = 0.0;
    double gate = 4.0;
    bool pass = false;
    /// F and its first two derivatives looked bounded on a wide sample.
    bool bounded = false;
    /// Empirical E[s^4] of the per-path total; must be finite.
    double fourth_moment = 0.0;
    double t = 1.0;
    McConfig config;
    std::vector<std::string> warnings;
};

struct IbpOptions {
    double t = 1.0;
    /// Starting point; empty means the origin.
    std::vector<double> x0;
    double gate = 4.0;
    /// Skip the symmetry precondition (the report then carries a warning).
    bool override_precondition = false;
    /// Paths used by the advisory Hypothesis A screen; 0 disables it.
    std::size_t hypothesis_paths = 4096;
};

/// Per path s = -m(t) L(F)(X_t) + F(X_t) sum_k H(X_k, t_k).dW_k + Y(F)(X_t, t) - Y(F)(x0, 0),
/// reported as mean(s) +- SE; pass when |mean| <= gate * SE.
/// Throws SymmetryPreconditionError unless V passes check_infinitesimal (weak or gweak).
IbpReport ibp_report(const InfinitesimalSymmetry& V, const SdeSpec& sde, const Observable& F, const McConfig& mc,
                     const IbpOptions& opt = {});
/// Same statistic over a materialised ensemble; t must be a node of its grid.
IbpReport ibp_report(const InfinitesimalSymmetry& V, const SdeSpec& sde, const Observable& F,
                     const PathEnsemble& ens, const IbpOptions& opt = {});

struct IdentityParams {
    std::string F = "sin(x)";
    double t = 1.0;
    /// Second time, for the covariance identity.
    double s = 0.5;
};

/// stein, covariance, levy-area, isserlis, valpha-first, valpha-second.
const std::vector<std::string>& identity_names();

/// Left and right sides of a classical Brownian identity as terms; total = LHS - RHS
/// with SE from the per-path difference. Throws ValidationError for unknown names or
/// unusable parameters.
IbpReport verify_identity(const std::string& name, const IdentityParams& params, const McConfig& mc,
                          double gate = 4.0);

struct MomentEstimate {
    std::string quantity;
    double time = 0.0;
    double value = 0.0;
    double std_error = 0.0;
    bool finite = true;
    /// Ratios of the estimate over successive path-count doublings N/8 -> N/4 -> N/2 -> N.
    std::vector<double> doubling_ratios;
    bool stable = true;
};

struct HypothesisAReport {
    std::vector<MomentEstimate> rows;
    /// Some quantity is non-finite or unstable under doubling.
    bool flagged = false;
};

/// Empirical second moments E|Q(X_t, t)|^2 for Q in CH, H, Y(H), L(Y), Sigma(Y),
/// L(Y(Y^i)) and Sigma(Y(Y^i)), where Y(Y^i) = sum_k Y^k d_k Y^i.
HypothesisAReport check_hypothesis_a(const InfinitesimalSymmetry& V, const SdeSpec& sde, const PathEnsemble& ens,
                                     const std::vector<double>& times);
HypothesisAReport check_hypothesis_a(const InfinitesimalSymmetry& V, const SdeSpec& sde, std::span<const double> x0,
                                     const std::vector<double>& times, const McConfig& mc);

}  // namespace sdesym
