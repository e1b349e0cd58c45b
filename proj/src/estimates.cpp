#include "malab/estimates.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "malab/solver.hpp"

namespace malab {

namespace {

ScalarField centered(const ScalarField& phi) {
    const double m = kahan_mean(phi.v);
    ScalarField out{phi.dom, std::vector<double>(phi.size())};
    parallel_for(phi.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) out.v[p] = phi.v[p] - m;
    });
    return out;
}

// sum_{ij} conj(v_j) B_{ji} v_i for the stored upper-triangle Hermitian B.
double herm_quadratic(const HermitianField& binv, const cplx* v, std::size_t stride, std::size_t p) {
    const std::size_t N = binv.dom->point_count();
    const int n = binv.n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += binv.entry[static_cast<std::size_t>(HermitianField::tri(i, i, n)) * N + p].real() *
               std::norm(v[static_cast<std::size_t>(i) * stride + p]);
        for (int j = i + 1; j < n; ++j) {
            const cplx bij = binv.entry[static_cast<std::size_t>(HermitianField::tri(i, j, n)) * N + p];
            // B_{ji} v_i conj(v_j) + B_{ij} v_j conj(v_i) = 2 Re(B_{ij} v_j conj(v_i))
            acc += 2.0 * (bij * v[static_cast<std::size_t>(j) * stride + p] *
                          std::conj(v[static_cast<std::size_t>(i) * stride + p]))
                             .real();
        }
    }
    return acc;
}

// Pointwise inverse of I + h as a HermitianField (n <= 4 via Eigen for n>2).
HermitianField invert_one_plus(const HermitianField& h) {
    const std::size_t N = h.dom->point_count();
    const int n = h.n;
    HermitianField b{h.dom, n, std::vector<cplx>(h.entry.size())};
    if (n == 1) {
        parallel_for(N, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t p = lo; p < hi; ++p) b.entry[p] = cplx(1.0 / (1.0 + h.entry[p].real()), 0.0);
        });
    } else if (n == 2) {
        parallel_for(N, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t p = lo; p < hi; ++p) {
                const double a = 1.0 + h.entry[p].real();
                const cplx off = h.entry[N + p];
                const double c = 1.0 + h.entry[2 * N + p].real();
                const double det = a * c - std::norm(off);
                b.entry[p] = cplx(c / det, 0.0);
                b.entry[N + p] = -off / det;
                b.entry[2 * N + p] = cplx(a / det, 0.0);
            }
        });
    } else {
        parallel_for(N, [&](std::size_t lo, std::size_t hi) {
            Eigen::MatrixXcd a(n, n);
            for (std::size_t p = lo; p < hi; ++p) {
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j) {
                        const cplx e = h.entry[static_cast<std::size_t>(HermitianField::tri(i, j, n)) * N + p];
                        a(i, j) = e + (i == j ? cplx(1.0, 0.0) : cplx(0.0, 0.0));
                        if (i != j) a(j, i) = std::conj(e);
                    }
                const Eigen::MatrixXcd inv = a.inverse();
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j)
                        b.entry[static_cast<std::size_t>(HermitianField::tri(i, j, n)) * N + p] = inv(i, j);
            }
        });
    }
    return b;
}

// Re tr(B X) pointwise for Hermitian fields in the shared layout.
ScalarField contract_herm(const HermitianField& b, const HermitianField& x) {
    const std::size_t N = b.dom->point_count();
    const int n = b.n;
    ScalarField out{b.dom, std::vector<double>(N)};
    parallel_for(N, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
                acc += b.entry[static_cast<std::size_t>(HermitianField::tri(i, i, n)) * N + p].real() *
                       x.entry[static_cast<std::size_t>(HermitianField::tri(i, i, n)) * N + p].real();
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    const std::size_t t = static_cast<std::size_t>(HermitianField::tri(i, j, n)) * N + p;
                    acc += 2.0 * (b.entry[t] * std::conj(x.entry[t])).real();
                }
            out.v[p] = acc;
        }
    });
    return out;
}

} // namespace

void ParamSet::validate(int n) const {
    if (!(C > 0.0) || !(K > 0.0) || !(c4 > 0.0) || !(C0 >= 0.0) || !(alpha0 > 0.0))
        fail(ErrCode::invalid_argument, "ParamSet constants must be positive (C0 >= 0)");
    if (!(delta >= 0.0)) fail(ErrCode::invalid_argument, "ParamSet delta must be >= 0");
    if (!(K > 2.0 * n)) fail(ErrCode::invalid_argument, "ParamSet requires K > 2n");
    if (!(eps >= 0.0) || !(eps < 0.5)) fail(ErrCode::invalid_argument, "ParamSet eps must be in [0, 1/2)");
    if (!(chi > 1.0)) fail(ErrCode::invalid_argument, "ParamSet chi must be > 1");
    if (!(q >= 1.0)) fail(ErrCode::invalid_argument, "ParamSet q must be >= 1");
}

ParamSet derive_params(const ScalarField& phi, const ScalarField& F) {
    require_same_domain(phi, F);
    const int n = phi.dom->dim();
    const ScalarField phic = centered(phi);
    ParamSet ps;
    ps.C = 9.0 * std::exp(F.max()); // (C/4) e^{-sup F} = 2.25 > 2
    const double s = phic.sup_abs();
    ps.delta = s > 0.0 ? ps.C / (4.0 * s) : 0.0; // 2 delta sup|phi| = C/2
    ps.K = 2.0 * n + 1.0;
    ps.chi = 2.0 * n / (2.0 * n - 1.0);
    ps.validate(n);
    return ps;
}

double grad_lp(const ScalarField& phi, double p, VolumeWeight weight) {
    if (!(p >= 1.0)) fail(ErrCode::invalid_argument, "grad_lp requires p >= 1");
    const ScalarField w = grad_norm_sq(gradient(phi));
    std::vector<double> integrand(w.size());
    if (weight == VolumeWeight::background) {
        parallel_for(w.size(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t q = lo; q < hi; ++q) integrand[q] = std::pow(w.v[q], 0.5 * p);
        });
    } else {
        const ScalarField det = det_one_plus(hessian(phi));
        parallel_for(w.size(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t q = lo; q < hi; ++q) integrand[q] = std::pow(w.v[q], 0.5 * p) * det.v[q];
        });
    }
    return std::pow(kahan_mean(integrand), 1.0 / p);
}

double exp_moment(const ScalarField& phi, double eps) {
    if (!(eps > 0.0)) fail(ErrCode::invalid_argument, "exp_moment requires eps > 0");
    const ScalarField w = grad_norm_sq(gradient(phi));
    if (eps * w.max() > 300.0)
        fail(ErrCode::invalid_argument, "exp_moment: eps sup|grad phi|^2 > 300 would overflow");
    std::vector<double> integrand(w.size());
    parallel_for(w.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t q = lo; q < hi; ++q) integrand[q] = std::exp(eps * w.v[q]);
    });
    return kahan_mean(integrand);
}

MomentFit moment_fit(const ScalarField& phi, const ScalarField& F, double K, int kmax) {
    require_same_domain(phi, F);
    if (kmax < 4) fail(ErrCode::invalid_argument, "moment_fit requires kmax >= 4");
    if (!(K > 0.0)) fail(ErrCode::invalid_argument, "moment_fit requires K > 0");
    const ScalarField w = grad_norm_sq(gradient(phi));

    MomentFit fit;
    fit.moments.resize(static_cast<std::size_t>(kmax));
    std::vector<double> integrand(w.size());
    for (int k = 1; k <= kmax; ++k) {
        parallel_for(w.size(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t q = lo; q < hi; ++q)
                integrand[q] = std::pow(w.v[q] + K, static_cast<double>(k)) * std::exp(F.v[q]);
        });
        fit.moments[static_cast<std::size_t>(k - 1)] = kahan_mean(integrand);
    }

    // least-squares slope of y_k = log m_k - k log k against k, intercept
    // raised so the envelope dominates every moment
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int k = 1; k <= kmax; ++k) {
        const double y = std::log(fit.moments[static_cast<std::size_t>(k - 1)]) - k * std::log(static_cast<double>(k));
        sx += k;
        sy += y;
        sxx += static_cast<double>(k) * k;
        sxy += k * y;
    }
    const double nk = static_cast<double>(kmax);
    const double slope = (nk * sxy - sx * sy) / (nk * sxx - sx * sx);
    double intercept = -1e300;
    for (int k = 1; k <= kmax; ++k) {
        const double y = std::log(fit.moments[static_cast<std::size_t>(k - 1)]) - k * std::log(static_cast<double>(k));
        intercept = std::max(intercept, y - slope * k);
    }
    fit.L = std::exp(slope);
    fit.c2 = std::exp(intercept);
    fit.residuals.resize(static_cast<std::size_t>(kmax));
    for (int k = 1; k <= kmax; ++k) {
        const double y = std::log(fit.moments[static_cast<std::size_t>(k - 1)]) - k * std::log(static_cast<double>(k));
        fit.residuals[static_cast<std::size_t>(k - 1)] = y - (intercept + slope * k);
    }
    return fit;
}

BochnerCheck check_bochner(const ScalarField& phi, const ScalarField& F) {
    require_same_domain(phi, F);
    const double res = residual(phi, F).sup_abs();
    if (res > 1e-9)
        fail(ErrCode::invalid_argument,
             "check_bochner: (phi, F) is not a solution pair (residual " + std::to_string(res) + ")");

    const std::size_t N = phi.dom->point_count();
    const int n = phi.dom->dim();

    auto [grad, hess] = spectral_derivatives(phi);
    const HermitianField binv = invert_one_plus(hess);
    const ScalarField w = grad_norm_sq(grad);
    const HermitianField hess_w = hessian(w);
    const ScalarField lhs = contract_herm(binv, hess_w);

    const GradientField gradF = gradient(F);
    const SymComplexField holo = holomorphic_hessian(phi);

    ScalarField rhs{phi.dom, std::vector<double>(N)};
    parallel_for(N, [&](std::size_t lo, std::size_t hi) {
        std::vector<cplx> row(static_cast<std::size_t>(n));
        for (std::size_t p = lo; p < hi; ++p) {
            // 2 Re sum_a F_a conj(phi_a)
            double acc = 0.0;
            for (int a = 0; a < n; ++a)
                acc += 2.0 * (gradF.comp[static_cast<std::size_t>(a) * N + p] *
                              std::conj(grad.comp[static_cast<std::size_t>(a) * N + p]))
                                 .real();
            // sum_a x_a^* B x_a with x_a = (phi_{a i})_i
            for (int a = 0; a < n; ++a) {
                for (int i = 0; i < n; ++i) {
                    const int lo_ = std::min(a, i), hi_ = std::max(a, i);
                    row[static_cast<std::size_t>(i)] =
                        holo.entry[static_cast<std::size_t>(HermitianField::tri(lo_, hi_, n)) * N + p];
                }
                double quad = 0.0;
                for (int i = 0; i < n; ++i) {
                    quad += binv.entry[static_cast<std::size_t>(HermitianField::tri(i, i, n)) * N + p].real() *
                            std::norm(row[static_cast<std::size_t>(i)]);
                    for (int j = i + 1; j < n; ++j)
                        quad += 2.0 * (binv.entry[static_cast<std::size_t>(HermitianField::tri(i, j, n)) * N + p] *
                                       row[static_cast<std::size_t>(j)] * std::conj(row[static_cast<std::size_t>(i)]))
                                          .real();
                }
                acc += quad;
            }
            // Re tr(P^2 B) = (n + Lap phi) - 2n + tr_phi g, assembled directly
            double p2b = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const cplx pij = (i <= j)
                                         ? hess.entry[static_cast<std::size_t>(HermitianField::tri(i, j, n)) * N + p]
                                         : std::conj(hess.entry[static_cast<std::size_t>(HermitianField::tri(j, i, n)) * N + p]);
                    for (int k = 0; k < n; ++k) {
                        const cplx pjk = (j <= k)
                                             ? hess.entry[static_cast<std::size_t>(HermitianField::tri(j, k, n)) * N + p]
                                             : std::conj(hess.entry[static_cast<std::size_t>(HermitianField::tri(k, j, n)) * N + p]);
                        const cplx bki = (k <= i)
                                             ? binv.entry[static_cast<std::size_t>(HermitianField::tri(k, i, n)) * N + p]
                                             : std::conj(binv.entry[static_cast<std::size_t>(HermitianField::tri(i, k, n)) * N + p]);
                        p2b += (pij * pjk * bki).real();
                    }
                }
            rhs.v[p] = acc + p2b;
        }
    });

    BochnerCheck out;
    for (std::size_t p = 0; p < N; ++p) {
        out.mismatch = std::max(out.mismatch, std::abs(lhs.v[p] - rhs.v[p]));
        out.scale = std::max(out.scale, std::abs(lhs.v[p]));
    }
    return out;
}

DiffIneqReport check_diff_ineq(const ScalarField& phi, const ScalarField& F,
                               const std::optional<ParamSet>& params) {
    require_same_domain(phi, F);
    const int n = phi.dom->dim();
    const std::size_t N = phi.dom->point_count();

    const ScalarField phic = centered(phi);
    const ParamSet ps = params ? *params : derive_params(phic, F);
    ps.validate(n);

    auto [grad, hess] = spectral_derivatives(phic);
    const double lam = min_eigenvalue(hess);
    if (!(lam > 0.0))
        fail(ErrCode::positivity_breakdown,
             "check_diff_ineq: I + phi_ij is not positive (min eigenvalue " + std::to_string(lam) + ")");
    const HermitianField binv = invert_one_plus(hess);
    const ScalarField w = grad_norm_sq(grad);
    const ScalarField trg = trace_inv_one_plus(hess);
    const GradientField gradF = gradient(F);

    // u = e^H (|grad phi|^2 + K), H = -C phi + delta phi^2
    ScalarField u{phi.dom, std::vector<double>(N)};
    std::vector<double> eH(N);
    parallel_for(N, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            eH[p] = std::exp(-ps.C * phic.v[p] + ps.delta * phic.v[p] * phic.v[p]);
            u.v[p] = eH[p] * (w.v[p] + ps.K);
        }
    });
    const ScalarField lhs = contract_herm(binv, hessian(u));

    // Lap phi in the estimate formulas is the complex trace sum_i phi_{i ibar}.
    std::vector<double> lapc(N);
    parallel_for(N, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
                acc += hess.entry[static_cast<std::size_t>(HermitianField::tri(i, i, n)) * N + p].real();
            lapc[p] = acc;
        }
    });

    DiffIneqReport rep;
    rep.params = ps;
    rep.min_slack = 1e300;
    double scale = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
        const double npp = herm_quadratic(binv, grad.comp.data(), N, p); // |grad_phi phi|^2_phi
        double gdot = 0.0;                                               // Re sum_a F_a conj(phi_a)
        for (int a = 0; a < n; ++a)
            gdot += (gradF.comp[static_cast<std::size_t>(a) * N + p] *
                     std::conj(grad.comp[static_cast<std::size_t>(a) * N + p]))
                        .real();

        const double t1 = 0.25 * ps.C * trg.v[p] * u.v[p];
        const double t2 = 2.0 * ps.delta * eH[p] * npp * w.v[p];
        const double t3 = eH[p] * (n + lapc[p]);
        const double t4 = 2.0 * eH[p] * gdot;
        const double t5 = -(1.0 + 4.5 * ps.C) * u.v[p];
        const double t6 = eH[p] * (0.25 * ps.C * ps.C * ps.K) * npp;
        const double t7 = -ps.C0 * eH[p] * trg.v[p] * w.v[p];
        const double rhs = t1 + t2 + t3 + t4 + t5 + t6 + t7;

        rep.min_slack = std::min(rep.min_slack, lhs.v[p] - rhs);
        for (double t : {lhs.v[p], t1, t2, t3, t4, t5, t6, t7}) scale = std::max(scale, std::abs(t));
    }
    rep.term_scale = scale;
    rep.slack_rel = scale > 0.0 ? rep.min_slack / scale : rep.min_slack;
    return rep;
}

double skoda(const ScalarField& phi, double p) {
    if (!(p > 0.0)) fail(ErrCode::invalid_argument, "skoda requires p > 0");
    const double sup = phi.max();
    if (p * (sup - phi.min()) > 300.0)
        fail(ErrCode::invalid_argument, "skoda: p sup(-phi) > 300 would overflow");
    std::vector<double> integrand(phi.size());
    parallel_for(phi.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t q = lo; q < hi; ++q) integrand[q] = std::exp(-p * (phi.v[q] - sup));
    });
    return kahan_mean(integrand);
}

double compare_companion(const ScalarField& phi, const ScalarField& psi, double eps) {
    require_same_domain(phi, psi);
    if (!(eps >= 0.0) || !(eps < 0.5)) fail(ErrCode::invalid_argument, "eps must be in [0, 1/2)");
    if (std::abs(phi.max()) > 1e-9 || std::abs(psi.max()) > 1e-9)
        fail(ErrCode::invalid_argument, "compare_companion expects sup-normalized inputs (sup = 0)");
    double m = 1e300;
    for (std::size_t p = 0; p < phi.size(); ++p) m = std::min(m, phi.v[p] - eps * psi.v[p]);
    return m;
}

} // namespace malab
