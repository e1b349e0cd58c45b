#ifndef MALAB_MODULI_HPP
#define MALAB_MODULI_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "malab/torus.hpp"

namespace malab {

enum class ModulusKind { hoelder, log_power, linear, tabulated };

/// Modulus of continuity: continuous, strictly increasing on (0,1], omega(0)=0.
/// Parametric families plus piecewise-linear tabulated data. Tabulated moduli
/// interpolate linearly, join (0,0) to the first sample, and extend past the
/// last sample with the final segment slope.
class ModulusOfContinuity {
public:
    static ModulusOfContinuity hoelder(double A, double alpha);   // A r^alpha
    static ModulusOfContinuity log_power(double A, double beta);  // A (log(e/r))^-beta
    static ModulusOfContinuity linear(double L);                  // L r
    static ModulusOfContinuity tabulated(std::vector<std::pair<double, double>> samples);

    ModulusKind kind() const { return kind_; }
    double param_a() const { return a_; }
    double param_b() const { return b_; }
    const std::vector<std::pair<double, double>>& samples() const { return samples_; }

    /// omega(r) for r in [0,1].
    double eval(double r) const;
    double omega1() const { return eval(1.0); }

    struct Inverse {
        double r = 0.0;
        bool saturated = false; // s exceeded omega(1); caller clips to 1
    };
    /// Bisection inverse: |omega(r) - s| <= 1e-12 * max(s,1) when unsaturated.
    Inverse inverse(double s) const;

    std::string describe() const;

private:
    ModulusOfContinuity() = default;
    ModulusKind kind_ = ModulusKind::linear;
    double a_ = 1.0;
    double b_ = 0.0;
    std::vector<std::pair<double, double>> samples_;
};

struct DiniResult {
    bool divergent = false;
    double value = 0.0; // meaningful only when finite
};

/// integral over (0,1] of omega(r)^2 / r dr, computed after r = exp(-t) as an
/// adaptive Simpson integral of omega(e^-t)^2 on [0, 700]. The truncated tail
/// is extrapolated from the measured decay exponent sigma of the integrand
/// between t = 525 and t = 700 (tail ~ g(700)*700/(sigma-1)); integrands with
/// sigma <= 1.001 are declared divergent.
DiniResult dini2(const ModulusOfContinuity& m);

/// Moser radius schedule: sup{0 < r <= 1 : c4 omega(r) <= 1/sqrt(8(q-1))},
/// i.e. min(1, omega^{-1}(1/(c4 sqrt(8(q-1))))). Requires q >= 9, c4 > 0.
double r_q(const ModulusOfContinuity& m, double q, double c4);

/// A_q(r) = 1 - 2 c4 omega(r) - 2 (q-1) c4^2 omega(r)^2.
double a_q(const ModulusOfContinuity& m, double q, double c4, double r);

struct IterationSum {
    int k0 = 0;                  // smallest integer with chi^k0 > 9.5
    bool sum_divergent = false;
    double sum = 0.0;
    int terms = 0;
    bool dini_divergent = false;
    double dini = 0.0;
    double c33 = 0.0;            // 8 c4^2 / (chi^-1/2 (1 - chi^-1/2))
    bool bound_divergent = false;
    double bound = 0.0;
    std::optional<bool> holds;   // sum <= bound when both sides are finite
};

/// Brute-force sum over k >= k0 of chi^-k log(1/r_{chi^k + 1/2}) against the
/// c33 * dini2 bound. Partial sums are monotone (summands are nonnegative);
/// summation stops once the increment falls below 1e-12 past saturation.
IterationSum iteration_sum(const ModulusOfContinuity& m, double chi, double c4);

struct EmpiricalEntry {
    double r = 0.0;
    double value = 0.0;
    bool resolved = false; // false when r is below the grid spacing
};

struct EmpiricalModulus {
    std::vector<EmpiricalEntry> entries;
    bool strict = false; // resolved values strictly increasing and positive
    ModulusOfContinuity to_modulus() const;
};

/// omega(r_i) = max over lattice shifts s with |s| <= r_i of sup_x |f(x+s)-f(x)|
/// (flat-torus Euclidean shift length). Monotone in r by construction.
EmpiricalModulus empirical_modulus(const ScalarField& f, const std::vector<double>& radii);

/// Two-column CSV (r, omega), strictly increasing rows; tabulated moduli only.
void write_modulus_csv(const ModulusOfContinuity& m, const std::string& path);
ModulusOfContinuity read_modulus_csv(const std::string& path);

} // namespace malab

#endif
