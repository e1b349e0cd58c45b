#ifndef MALAB_MOLLIFY_HPP
#define MALAB_MOLLIFY_HPP

#include "malab/moduli.hpp"
#include "malab/torus.hpp"

namespace malab {

// Periodic mollification with the compactly supported bump
//   rho(x) = c (1 - |x|^2)^3  on the unit ball of R^{2n},  unit mass,
// scaled as rho_r(x) = r^{-2n} rho(x/r). The convolution acts in Fourier
// space: every mode k is damped by the kernel transform B(r |k|).

/// Fourier transform of the unit kernel at radial frequency t, normalized so
/// B(0) = 1. Closed form: (n+3)! 2^{n+3} J_{n+3}(2 pi t) / (2 pi t)^{n+3}.
double kernel_multiplier(int n, double t);

/// Gradient-mass constant K of the unit kernel, in the background gradient
/// convention |grad f|^2 = sum_a f_a conj(f_a): K = (1/2) int |D rho| dx, so
/// that sup |grad(f * rho_r)| <= K sup|f| / r. Computed by quadrature.
double kernel_gradient_mass(int n);

/// f * rho_r. Requires 4 * grid spacing <= r < 1/2.
ScalarField mollify(const ScalarField& f, double r);

/// (F_g, F_b) with F_g = mollify(f, r) and F_b = f - F_g.
std::pair<ScalarField, ScalarField> decompose(const ScalarField& f, double r);

struct MollifyReport {
    std::vector<double> radii;
    std::vector<double> grad_products; // r * sup|grad F_r|
    std::vector<double> diff_ratios;   // sup|f - F_r| / (omega(r) + r)
    std::vector<bool> resolved;        // false when r is outside the valid band
};

/// Sweeps the radii and reports the two smoothing-bound columns; radii that
/// the grid cannot resolve (r < 4h) or that wrap (r >= 1/2) are flagged.
MollifyReport verify_bounds(const ScalarField& f, const ModulusOfContinuity& m,
                            const std::vector<double>& radii);

/// CSV with header "r,grad_product,diff_ratio" (unresolved rows are skipped).
void write_mollify_csv(const MollifyReport& report, const std::string& path);

} // namespace malab

#endif
