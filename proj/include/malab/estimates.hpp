#ifndef MALAB_ESTIMATES_HPP
#define MALAB_ESTIMATES_HPP

#include <optional>

#include "malab/torus.hpp"

namespace malab {

/// Constants the gradient-estimate machinery is parameterized by. The
/// couplings the derivation fixes are:
///   2 delta sup|phi| = C/2      (so H'(phi) <= -C/2 for H = -C phi + delta phi^2)
///   K > 2n                      (K = 2n+1 when auto-derived)
///   (C/4) e^{-sup F} > 2        (C = 9 e^{sup F} when auto-derived)
/// C0 is the curvature constant, identically 0 on the flat torus but kept as
/// a free parameter.
struct ParamSet {
    double C = 9.0;
    double delta = 0.0;
    double K = 3.0;
    double c4 = 1.0;
    double C0 = 0.0;
    double chi = 2.0;      // 2n/(2n-1)
    double eps = 0.25;     // companion comparison weight, in (0, 1/2)
    double alpha0 = 1.0;   // exposed alpha-invariant proxy (never computed)
    double q = 9.0;

    void validate(int n) const;
};

/// Derives (C, delta, K, chi) from sup|phi - mean(phi)| and sup F; the other
/// fields keep their defaults unless overridden by the caller.
ParamSet derive_params(const ScalarField& phi, const ScalarField& F);

enum class VolumeWeight { background, ma };

/// (integral |grad phi|^p dvol)^{1/p}; 'ma' weights with det(I+phi_ij)
/// (= e^F on solutions), 'background' with the flat unit volume.
double grad_lp(const ScalarField& phi, double p, VolumeWeight weight);

/// integrate(exp(eps |grad phi|^2)); rejects eps sup|grad phi|^2 > 300.
double exp_moment(const ScalarField& phi, double eps);

struct MomentFit {
    double c2 = 0.0;
    double L = 0.0;
    std::vector<double> moments;   // m_k, k = 1..kmax
    std::vector<double> residuals; // log m_k - k log k - (log c2 + k log L), all <= 0
};

/// Envelope fit of integrate((|grad phi|^2 + K)^k e^F) <= c2 L^k k^k over
/// k = 1..kmax: least-squares slope in k, intercept raised to the minimal
/// envelope position.
MomentFit moment_fit(const ScalarField& phi, const ScalarField& F, double K, int kmax);

struct BochnerCheck {
    double mismatch = 0.0; // sup |lhs - rhs|
    double scale = 0.0;    // sup |lhs|
};

/// Flat-torus identity behind the gradient Laplacian computation:
///   tr(B w_ij) = 2 Re sum_a F_a conj(phi_a) + sum_a x_a^* B x_a + Re tr(P^2 B)
/// with w = |grad phi|^2, P = phi_ij, B = (I+P)^{-1} and x_a the rows of the
/// holomorphic Hessian. Third derivatives are eliminated through the
/// differentiated equation, so both sides are assembled independently.
/// Requires (phi, F) to solve the equation to sup residual <= 1e-9.
BochnerCheck check_bochner(const ScalarField& phi, const ScalarField& F);

struct DiffIneqReport {
    double min_slack = 0.0;  // min over grid of lhs - rhs
    double term_scale = 0.0; // max sup-norm among the assembled terms
    double slack_rel = 0.0;  // min_slack / term_scale
    ParamSet params;
};

/// Pointwise differential inequality for u = e^H (|grad phi|^2 + K):
///   Lap_phi u >= (C/4) tr_phi(g) u + 2 delta e^H |grad_phi phi|^2_phi |grad phi|^2
///              + e^H (n + Lap phi) + 2 e^H <grad phi, grad F>
///              - (1 + 4.5 C) u + e^H (C^2 K / 4) |grad_phi phi|^2_phi
///              - C0 e^H tr_phi(g) |grad phi|^2
/// (the C0 term keeps the curvature constant as a free parameter; it vanishes
/// on the torus). phi is re-centered to mean zero before assembly, which
/// makes the check invariant under constant shifts. Lap phi means the complex
/// trace sum_i phi_{i ibar}.
DiffIneqReport check_diff_ineq(const ScalarField& phi, const ScalarField& F,
                               const std::optional<ParamSet>& params = std::nullopt);

/// integrate(exp(-p (phi - sup phi))); rejects p (sup phi - inf phi) > 300.
double skoda(const ScalarField& phi, double p);

/// min over the grid of phi - eps psi; both inputs must be sup-normalized
/// (sup = 0) and eps in [0, 1/2).
double compare_companion(const ScalarField& phi, const ScalarField& psi, double eps);

} // namespace malab

#endif
