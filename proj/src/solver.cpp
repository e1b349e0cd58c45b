#include "malab/solver.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "malab/rhs.hpp"

namespace malab {

namespace {

constexpr double kPi = std::numbers::pi;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> exp_field(const ScalarField& f) {
    std::vector<double> e(f.size());
    parallel_for(f.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) e[p] = std::exp(f.v[p]);
    });
    return e;
}

void require_compatible_rhs(const ScalarField& F) {
    std::vector<double> e = exp_field(F);
    const double mass = kahan_mean(e);
    if (std::abs(mass - 1.0) > 1e-10)
        fail(ErrCode::invalid_argument,
             "right-hand side violates the compatibility condition: integrate(e^F) = " + std::to_string(mass) +
                 " (normalize_rhs first)");
}

void subtract_mean(std::vector<double>& v) {
    const double m = kahan_sum(v.data(), v.size()) / static_cast<double>(v.size());
    parallel_for(v.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) v[p] -= m;
    });
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double y = a[i] * b[i] - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Pointwise inverse metric entries B = (I + phi_ij)^{-1}, upper triangle SoA.
struct InverseMetric {
    int n = 0;
    std::size_t count = 0;
    std::vector<cplx> entry;

    void build(const HermitianField& h) {
        n = h.n;
        count = h.dom->point_count();
        entry.resize(static_cast<std::size_t>(n * (n + 1) / 2) * count);
        if (n == 1) {
            parallel_for(count, [&](std::size_t lo, std::size_t hi) {
                for (std::size_t p = lo; p < hi; ++p) entry[p] = cplx(1.0 / (1.0 + h.entry[p].real()), 0.0);
            });
        } else if (n == 2) {
            parallel_for(count, [&](std::size_t lo, std::size_t hi) {
                for (std::size_t p = lo; p < hi; ++p) {
                    const double a = 1.0 + h.entry[p].real();
                    const cplx b = h.entry[count + p];
                    const double c = 1.0 + h.entry[2 * count + p].real();
                    const double det = a * c - std::norm(b);
                    entry[p] = cplx(c / det, 0.0);
                    entry[count + p] = -b / det;
                    entry[2 * count + p] = cplx(a / det, 0.0);
                }
            });
        } else {
            fail(ErrCode::invalid_argument, "inverse metric supported for n in {1,2}");
        }
    }

    // Re tr(B * X) for a Hermitian matrix field X (same layout).
    void contract(const HermitianField& x, std::vector<double>& out) const {
        if (n == 1) {
            parallel_for(count, [&](std::size_t lo, std::size_t hi) {
                for (std::size_t p = lo; p < hi; ++p) out[p] = entry[p].real() * x.entry[p].real();
            });
        } else {
            parallel_for(count, [&](std::size_t lo, std::size_t hi) {
                for (std::size_t p = lo; p < hi; ++p) {
                    const double diag = entry[p].real() * x.entry[p].real() +
                                        entry[2 * count + p].real() * x.entry[2 * count + p].real();
                    const double off = 2.0 * (entry[count + p] * std::conj(x.entry[count + p])).real();
                    out[p] = diag + off;
                }
            });
        }
    }
};

// Workspace for the linearized operator psi -> Re tr(B psi_ij) (mean removed)
// and the flat inverse-Laplacian preconditioner.
struct Linearized {
    const TorusDomain* dom = nullptr;
    const InverseMetric* metric = nullptr;
    std::vector<cplx> coeffs, work, synth;
    std::vector<double> symbol; // -pi^2 |k|^2 per mode (derivative convention)
    HermitianField hess_x;

    void init(const DomainPtr& d, const InverseMetric& m) {
        dom = d.get();
        metric = &m;
        const std::size_t N = dom->point_count();
        coeffs.resize(N);
        work.resize(N);
        synth.resize(N);
        hess_x.dom = d;
        hess_x.n = dom->dim();
        hess_x.entry.resize(static_cast<std::size_t>(hess_x.n * (hess_x.n + 1) / 2) * N);
        symbol.resize(N);
        const int axes = dom->axes();
        const int res = dom->resolution();
        std::vector<int> ix(static_cast<std::size_t>(axes), 0);
        for (std::size_t idx = 0; idx < N; ++idx) {
            double k2 = 0.0;
            for (int a = 0; a < axes; ++a) {
                const double k = dom->dfreq(ix[static_cast<std::size_t>(a)]);
                k2 += k * k;
            }
            symbol[idx] = -kPi * kPi * k2;
            for (int a = axes - 1; a >= 0; --a) {
                if (++ix[static_cast<std::size_t>(a)] < res) break;
                ix[static_cast<std::size_t>(a)] = 0;
            }
        }
    }

    void apply(const std::vector<double>& x, std::vector<double>& out) {
        const std::size_t N = dom->point_count();
        const int n = dom->dim();
        dom->spectrum(x.data(), coeffs.data());
        const int axes = dom->axes();
        const int res = dom->resolution();
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                std::vector<int> ix(static_cast<std::size_t>(axes), 0);
                for (std::size_t idx = 0; idx < N; ++idx) {
                    const cplx mi(kPi * dom->dfreq(ix[static_cast<std::size_t>(2 * i + 1)]),
                                  kPi * dom->dfreq(ix[static_cast<std::size_t>(2 * i)]));
                    const cplx nj(-kPi * dom->dfreq(ix[static_cast<std::size_t>(2 * j + 1)]),
                                  kPi * dom->dfreq(ix[static_cast<std::size_t>(2 * j)]));
                    work[idx] = mi * nj * coeffs[idx];
                    for (int a = axes - 1; a >= 0; --a) {
                        if (++ix[static_cast<std::size_t>(a)] < res) break;
                        ix[static_cast<std::size_t>(a)] = 0;
                    }
                }
                cplx* dst = hess_x.entry.data() + static_cast<std::size_t>(HermitianField::tri(i, j, n)) * N;
                dom->synthesize(work.data(), dst);
            }
        }
        metric->contract(hess_x, out);
        subtract_mean(out);
    }

    void precondition(const std::vector<double>& r, std::vector<double>& out) {
        const std::size_t N = dom->point_count();
        dom->spectrum(r.data(), coeffs.data());
        for (std::size_t idx = 0; idx < N; ++idx)
            work[idx] = (symbol[idx] == 0.0) ? cplx(0.0, 0.0) : coeffs[idx] / symbol[idx];
        dom->synthesize(work.data(), synth.data());
        parallel_for(N, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t p = lo; p < hi; ++p) out[p] = synth[p].real();
        });
    }
};

// Preconditioned BiCGStab for the Newton correction.
bool bicgstab(Linearized& op, const std::vector<double>& b, std::vector<double>& x, double tol,
              int max_iters) {
    const std::size_t N = b.size();
    x.assign(N, 0.0);
    std::vector<double> r = b, rhat = b, p(N, 0.0), v(N, 0.0), s(N), t(N), phat(N), shat(N), tmp(N);
    const double bnorm = norm2(b);
    if (bnorm == 0.0) return true;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (int it = 0; it < max_iters; ++it) {
        const double rho_new = dot(rhat, r);
        if (std::abs(rho_new) < 1e-300) return norm2(r) <= tol * bnorm;
        if (it == 0) {
            p = r;
        } else {
            const double beta = (rho_new / rho) * (alpha / omega);
            parallel_for(N, [&](std::size_t lo, std::size_t hi) {
                for (std::size_t q = lo; q < hi; ++q) p[q] = r[q] + beta * (p[q] - omega * v[q]);
            });
        }
        rho = rho_new;
        op.precondition(p, phat);
        op.apply(phat, v);
        const double denom = dot(rhat, v);
        if (std::abs(denom) < 1e-300) return norm2(r) <= tol * bnorm;
        alpha = rho / denom;
        parallel_for(N, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t q = lo; q < hi; ++q) s[q] = r[q] - alpha * v[q];
        });
        if (norm2(s) <= tol * bnorm) {
            parallel_for(N, [&](std::size_t lo, std::size_t hi) {
                for (std::size_t q = lo; q < hi; ++q) x[q] += alpha * phat[q];
            });
            return true;
        }
        op.precondition(s, shat);
        op.apply(shat, t);
        const double tt = dot(t, t);
        if (tt == 0.0) return false;
        omega = dot(t, s) / tt;
        parallel_for(N, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t q = lo; q < hi; ++q) {
                x[q] += alpha * phat[q] + omega * shat[q];
                r[q] = s[q] - omega * t[q];
            }
        });
        if (norm2(r) <= tol * bnorm) return true;
        if (omega == 0.0) return false;
    }
    return false;
}

} // namespace

void SolverConfig::validate() const {
    if (!(newton_tol > 0.0) || !(krylov_tol > 0.0) || !(positivity_margin > 0.0) || !(min_step > 0.0))
        fail(ErrCode::invalid_argument, "solver tolerances must be positive");
    if (!(damping > 0.0) || !(damping < 1.0)) fail(ErrCode::invalid_argument, "damping must be in (0,1)");
    if (max_newton < 1 || max_krylov < 1 || continuation_steps < 1)
        fail(ErrCode::invalid_argument, "solver iteration limits must be >= 1");
}

ScalarField residual(const ScalarField& phi, const ScalarField& F) {
    require_same_domain(phi, F);
    const ScalarField det = det_one_plus(hessian(phi));
    ScalarField r{phi.dom, std::vector<double>(phi.size())};
    parallel_for(phi.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) r.v[p] = det.v[p] - std::exp(F.v[p]);
    });
    return r;
}

const SolveReport& ensure_converged(const SolveReport& report) {
    switch (report.status) {
        case SolveStatus::converged:
            return report;
        case SolveStatus::positivity_breakdown:
            fail(ErrCode::positivity_breakdown,
                 "solver could not maintain the positivity margin (min step reached)");
        case SolveStatus::non_convergence:
            fail(ErrCode::non_convergence,
                 "solver did not reach the residual target (residual_sup = " +
                     std::to_string(report.residual_sup) + ")");
    }
    fail(ErrCode::numerical, "bad solve status");
}

SolveReport solve_n1(const ScalarField& F) {
    const auto t0 = Clock::now();
    if (F.dom->dim() != 1) fail(ErrCode::invalid_argument, "solve_n1 requires complex dimension 1");
    require_compatible_rhs(F);

    ScalarField rhs{F.dom, exp_field(F)};
    parallel_for(rhs.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) rhs.v[p] -= 1.0;
    });
    ScalarField phi = inverse_laplacian_c(rhs);
    subtract_mean(phi.v);

    SolveReport rep;
    rep.phi = std::move(phi);
    rep.residual_sup = residual(rep.phi, F).sup_abs();
    rep.newton_iters = 0;
    rep.min_eig_final = min_eigenvalue(hessian(rep.phi));
    rep.residual_history = {rep.residual_sup};
    rep.status = SolveStatus::converged;
    rep.wall_time_s = seconds_since(t0);
    return rep;
}

namespace {

SolveReport newton_solve(const ScalarField& F, const SolverConfig& cfg, ScalarField phi0,
                         Clock::time_point t0) {
    const auto dom = F.dom;
    const std::size_t N = dom->point_count();
    const std::vector<double> expF = exp_field(F);

    SolveReport rep;
    rep.phi = std::move(phi0);
    subtract_mean(rep.phi.v);

    HermitianField hess = hessian(rep.phi);
    if (min_eigenvalue(hess) < cfg.positivity_margin) {
        // fall back to a safe start if the warm start is outside the cone
        rep.phi = const_field(dom, 0.0);
        hess = hessian(rep.phi);
    }
    ScalarField det = det_one_plus(hess);

    auto sup_residual = [&](const ScalarField& d) {
        double s = 0.0;
        for (std::size_t p = 0; p < N; ++p) s = std::max(s, std::abs(d.v[p] - expF[p]));
        return s;
    };

    InverseMetric metric;
    Linearized op;
    std::vector<double> rhs(N), step(N);

    double res = sup_residual(det);
    rep.residual_history.push_back(res);

    for (int iter = 1; iter <= cfg.max_newton; ++iter) {
        rep.newton_iters = iter;
        if (res <= cfg.newton_tol) {
            rep.status = SolveStatus::converged;
            break;
        }
        if (iter == cfg.max_newton) {
            rep.status = SolveStatus::non_convergence;
            break;
        }

        metric.build(hess);
        op.init(dom, metric);
        parallel_for(N, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t p = lo; p < hi; ++p) rhs[p] = F.v[p] - std::log(det.v[p]);
        });
        subtract_mean(rhs);
        bicgstab(op, rhs, step, cfg.krylov_tol, cfg.max_krylov);

        // Backtracking: positivity margin first, then strict residual decrease.
        double t = 1.0;
        bool accepted = false;
        bool positivity_blocked = false;
        ScalarField cand{dom, std::vector<double>(N)};
        while (t >= cfg.min_step) {
            parallel_for(N, [&](std::size_t lo, std::size_t hi) {
                for (std::size_t p = lo; p < hi; ++p) cand.v[p] = rep.phi.v[p] + t * step[p];
            });
            subtract_mean(cand.v);
            HermitianField cand_hess = hessian(cand);
            if (min_eigenvalue(cand_hess) < cfg.positivity_margin) {
                positivity_blocked = true;
                t *= cfg.damping;
                continue;
            }
            ScalarField cand_det = det_one_plus(cand_hess);
            const double cand_res = sup_residual(cand_det);
            if (cand_res < res * (1.0 - 1e-4 * t)) {
                rep.phi = std::move(cand);
                hess = std::move(cand_hess);
                det = std::move(cand_det);
                res = cand_res;
                rep.residual_history.push_back(res);
                accepted = true;
                break;
            }
            positivity_blocked = false;
            t *= cfg.damping;
        }
        if (!accepted) {
            rep.status = positivity_blocked ? SolveStatus::positivity_breakdown : SolveStatus::non_convergence;
            break;
        }
    }

    rep.residual_sup = res;
    rep.min_eig_final = min_eigenvalue(hess);
    rep.wall_time_s = seconds_since(t0);
    return rep;
}

} // namespace

SolveReport solve(const ScalarField& F, const SolverConfig& cfg) {
    const auto t0 = Clock::now();
    cfg.validate();
    const int n = F.dom->dim();
    if (n != 1 && n != 2) fail(ErrCode::invalid_argument, "solve supports n in {1,2}");
    require_compatible_rhs(F);

    ScalarField phi = const_field(F.dom, 0.0);
    if (cfg.continuation_steps > 1) {
        for (int s = 1; s < cfg.continuation_steps; ++s) {
            const double w = static_cast<double>(s) / cfg.continuation_steps;
            ScalarField Fs{F.dom, std::vector<double>(F.size())};
            parallel_for(F.size(), [&](std::size_t lo, std::size_t hi) {
                for (std::size_t p = lo; p < hi; ++p) Fs.v[p] = w * F.v[p];
            });
            Fs = normalize_rhs(Fs);
            SolveReport stage = newton_solve(Fs, cfg, std::move(phi), t0);
            phi = std::move(stage.phi);
        }
    }
    return newton_solve(F, cfg, std::move(phi), t0);
}

CompanionResult companion_psi(const ScalarField& F, CompanionMap map, double power_s,
                              const SolverConfig& cfg) {
    if (map == CompanionMap::power && (!(power_s > 0.0) || !(power_s < 1.0)))
        fail(ErrCode::invalid_argument, "companion power exponent must lie in (0,1)");

    std::vector<double> w(F.size());
    parallel_for(F.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const double ef = std::exp(F.v[p]);
            w[p] = (map == CompanionMap::log_e_plus_t) ? ef * std::log(std::numbers::e + ef)
                                                       : std::pow(ef, 1.0 + power_s);
        }
    });
    const double mass = kahan_mean(w);

    ScalarField Ft{F.dom, std::vector<double>(F.size())};
    parallel_for(F.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) Ft.v[p] = std::log(w[p] / mass);
    });

    CompanionResult out;
    out.mass = mass;
    out.report = (F.dom->dim() == 1) ? solve_n1(Ft) : solve(Ft, cfg);
    const double sup = out.report.phi.max();
    out.psi_sup = ScalarField{F.dom, std::vector<double>(F.size())};
    parallel_for(F.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) out.psi_sup.v[p] = out.report.phi.v[p] - sup;
    });
    return out;
}

} // namespace malab
