#ifndef MALAB_SOLVER_HPP
#define MALAB_SOLVER_HPP

#include "malab/torus.hpp"

namespace malab {

struct SolverConfig {
    double newton_tol = 1e-10;        // residual sup-norm target
    int max_newton = 50;
    double damping = 0.5;             // backtracking factor
    double min_step = 0x1p-20;
    double positivity_margin = 1e-3;  // smallest allowed eigenvalue of I+phi_ij
    double krylov_tol = 1e-12;
    int max_krylov = 500;
    int continuation_steps = 1;       // homotopy steps for hard right-hand sides

    void validate() const;
};

enum class SolveStatus { converged, positivity_breakdown, non_convergence };

struct SolveReport {
    SolveStatus status = SolveStatus::converged;
    ScalarField phi;                    // mean zero
    double residual_sup = 0.0;          // sup |det(I+phi_ij) - e^F|
    int newton_iters = 0;
    double min_eig_final = 0.0;
    double wall_time_s = 0.0;
    std::vector<double> residual_history; // per accepted Newton iterate
};

/// Pointwise det(I + phi_ij) - e^F.
ScalarField residual(const ScalarField& phi, const ScalarField& F);

/// Throws Error(positivity_breakdown / non_convergence) unless converged.
const SolveReport& ensure_converged(const SolveReport& report);

/// n = 1 only: the equation is linear, 1 + phi_{z zbar} = e^F, solved exactly
/// by Fourier division. Requires integrate(e^F) = 1 to 1e-10.
SolveReport solve_n1(const ScalarField& F);

/// Damped Newton on G(phi) = log det(I+phi_ij) - F for n in {1,2}. The
/// linearization is the solution-metric Laplacian; the inner solve is a
/// BiCGStab iteration preconditioned by the flat inverse Laplacian on the
/// mean-zero subspace. Backtracking maintains the positivity margin and a
/// strict residual decrease.
SolveReport solve(const ScalarField& F, const SolverConfig& cfg = {});

enum class CompanionMap { log_e_plus_t, power };

struct CompanionResult {
    SolveReport report;   // psi, mean-zero gauge
    ScalarField psi_sup;  // same solution shifted so sup psi = 0
    double mass = 0.0;    // A = integrate(e^F Phi(e^F))
};

/// Companion equation: det(I + psi_ij) = e^F Phi(e^F) / A with
/// A = integrate(e^F Phi(e^F)). Phi is log(e+t) or t^s for s in (0,1).
CompanionResult companion_psi(const ScalarField& F, CompanionMap map, double power_s,
                              const SolverConfig& cfg = {});

} // namespace malab

#endif
