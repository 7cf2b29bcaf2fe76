#pragma once

#include <span>
#include <string>

#include "sdesym/infinitesimal.hpp"
#include "sdesym/transform.hpp"

namespace sdesym {

/// T_lambda evaluated at one source point (x, t).
struct FlowState {
    double lambda = 0.0;
    Vec phi;
    double f = 0.0;
    double f_prime = 1.0;
    Mat B;
    Vec h;
};

struct FlowOptions {
    double step = 1e-3;
    double blow_up = 1e12;
};

/// Integrates the flow system from lambda = 0 to `lambda` with fixed-step RK4:
///   dPhi = Y(Phi, f),  df = m(f),  df' = m'(f) f',  dB = C(Phi, f) B,  dh = sqrt(f') B^T H(Phi, f).
/// B is re-orthonormalised after every step. Throws FlowBlowUp.
FlowState reconstruct_point(const InfinitesimalSymmetry& V, double lambda, std::span<const double> x, double t,
                            const FlowOptions& opt = {});

/// T_lambda as a transformation whose fields integrate on demand (memoised).
/// The inverse is realised by T_{-lambda}.
StochTransformation as_transformation(const InfinitesimalSymmetry& V, double lambda, const FlowOptions& opt = {});

std::string flow_csv_header(int n, int d);
std::string flow_csv_row(const FlowState& s, std::span<const double> x, double t);

}  // namespace sdesym
