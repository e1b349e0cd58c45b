#ifndef MALAB_RHS_HPP
#define MALAB_RHS_HPP

#include <cstdint>

#include "malab/torus.hpp"

namespace malab {

/// One term amplitude * cos(2 pi <freq, x> + phase); freq is an integer
/// vector over the 2n real axes, nonzero, with |components| below Nyquist.
struct TrigTerm {
    double amplitude = 0.0;
    std::vector<int> freq;
    double phase = 0.0;
};

ScalarField trig_field(const DomainPtr& dom, const std::vector<TrigTerm>& terms);

/// Weierstrass-type field: amplitude * sum_{j=0..levels} 2^{-j alpha}
/// cos(2 pi <w_j, x> + theta_j), where w_j is an integer frequency of length
/// close to 2^j. Directions come from integer vectors of norm <= 4 drawn by
/// the counter RNG and rescaled to radius 2^j (rounded back to the lattice),
/// so every level stays band-limited. Fully determined by (spec, seed).
ScalarField weierstrass(const DomainPtr& dom, double alpha, int levels, double amplitude,
                        std::uint64_t seed);
/// The realized modes, exposed for generator-analysis oracles in tests.
std::vector<TrigTerm> weierstrass_modes(int n, int resolution, double alpha, int levels,
                                        double amplitude, std::uint64_t seed);

/// f + c with c = -log(integrate(e^f)); afterwards integrate(e^F) = 1.
/// Rejects sup f > 300 (overflow).
ScalarField normalize_rhs(const ScalarField& f);

struct Manufactured {
    ScalarField phi; // the chosen potential (mean zero)
    ScalarField F;   // log det(I + phi_ij), so (phi, F) solves the equation exactly
};

/// Builds the exact solution pair from a stored trigonometric potential.
/// Fails (naming the minimal eigenvalue) if I + phi_ij is not positive.
Manufactured manufactured(const DomainPtr& dom, const std::vector<TrigTerm>& potential);

} // namespace malab

#endif
