#ifndef MALAB_POGORELOV_HPP
#define MALAB_POGORELOV_HPP

#include <complex>
#include <vector>

#include "malab/common.hpp"

namespace malab {

// Closed-form evaluation of u(z) = n^{2/n} (1 + |z_1|^2 + ... + |z_{n-1}|^2)
// |z_n|^{2/n}, its complex Hessian, and the determinant residual |det u_ij - 1|.
// Everything is classical off the singular set {z_n = 0}; points there are
// rejected.

struct PogorelovPoint {
    int n = 2; // 2..4
    std::vector<std::complex<double>> z;

    void validate() const;
};

double pogorelov_u(const PogorelovPoint& pt);

/// d u / d z_n (the component that blows up for n >= 3).
std::complex<double> pogorelov_grad_n(const PogorelovPoint& pt);

/// Closed-form complex Hessian, row-major n x n (Hermitian).
std::vector<std::complex<double>> pogorelov_hessian(const PogorelovPoint& pt);

/// |det u_ij - 1| from the closed-form Hessian.
double pogorelov_det_residual(const PogorelovPoint& pt);

struct GradientExponentFit {
    double slope = 0.0; // expected 2/n - 1
    std::vector<double> log_radius;
    std::vector<double> log_sup; // sup |du/dz_n| per annulus, z' = 0
};

/// Samples sup |du/dz_n| on dyadic annuli |z_n| in [2^-k-1, 2^-k] (k = 1..annuli)
/// and fits the log-log slope by least squares.
GradientExponentFit pogorelov_gradient_exponent(int n, int annuli);

} // namespace malab

#endif
