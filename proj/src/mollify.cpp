#include "malab/mollify.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <unordered_map>

namespace malab {

namespace {

constexpr double kPi = std::numbers::pi;

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

// Adaptive Simpson, absolute tolerance (same scheme as the Dini quadrature).
template <class Fn>
double simpson_rec(const Fn& g, double a, double b, double fa, double fm, double fb, double whole,
                   double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = g(lm), frm = g(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
    return simpson_rec(g, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           simpson_rec(g, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

template <class Fn>
double adaptive_simpson(const Fn& g, double a, double b, double eps) {
    const double fa = g(a), fb = g(b), fm = g(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(g, a, b, fa, fm, fb, whole, eps, 48);
}

} // namespace

double kernel_multiplier(int n, double t) {
    if (n < 1 || n > 4) fail(ErrCode::invalid_argument, "kernel multiplier defined for n in [1,4]");
    const int nu = n + 3;
    const double u = 2.0 * kPi * std::abs(t);
    if (u < 1e-4) {
        // series of Gamma(nu+1) 2^nu J_nu(u)/u^nu around u = 0
        const double u2 = u * u;
        return 1.0 - u2 / (4.0 * (nu + 1)) + u2 * u2 / (32.0 * (nu + 1) * (nu + 2));
    }
    return factorial(nu) * std::pow(2.0, nu) * std::cyl_bessel_j(nu, u) / std::pow(u, nu);
}

double kernel_gradient_mass(int n) {
    const int d = 2 * n;
    auto num = [d](double s) { return 6.0 * std::pow(s, d) * std::pow(1.0 - s * s, 2.0); };
    auto den = [d](double s) { return std::pow(s, d - 1) * std::pow(1.0 - s * s, 3.0); };
    const double a = adaptive_simpson(num, 0.0, 1.0, 1e-13);
    const double b = adaptive_simpson(den, 0.0, 1.0, 1e-13);
    return 0.5 * a / b; // 1/2 converts |D rho| mass to the complex-gradient convention
}

namespace {

void check_radius(const TorusDomain& d, double r) {
    const double h = 1.0 / d.resolution();
    if (!(r >= 4.0 * h))
        fail(ErrCode::invalid_argument, "mollification radius below 4 grid spacings (kernel unresolved)");
    if (!(r < 0.5)) fail(ErrCode::invalid_argument, "mollification radius >= 1/2 wraps around the torus");
}

} // namespace

ScalarField mollify(const ScalarField& f, double r) {
    const auto& d = *f.dom;
    check_radius(d, r);
    const std::size_t N = d.point_count();
    std::vector<cplx> coeffs(N);
    d.spectrum(f.v.data(), coeffs.data());

    // Damp each mode by B(r |k|); B depends only on |k|^2, so the factors are
    // memoized over the distinct squared norms of this grid.
    std::unordered_map<long long, double> table;
    const int axes = d.axes();
    std::vector<int> ix(static_cast<std::size_t>(axes), 0);
    const int m = d.resolution();
    for (std::size_t idx = 0; idx < N; ++idx) {
        long long k2 = 0;
        for (int a = 0; a < axes; ++a) {
            const long long k = d.freq(ix[static_cast<std::size_t>(a)]);
            k2 += k * k;
        }
        auto it = table.find(k2);
        if (it == table.end())
            it = table.emplace(k2, kernel_multiplier(d.dim(), r * std::sqrt(static_cast<double>(k2)))).first;
        coeffs[idx] *= it->second;
        for (int a = axes - 1; a >= 0; --a) {
            if (++ix[static_cast<std::size_t>(a)] < m) break;
            ix[static_cast<std::size_t>(a)] = 0;
        }
    }

    std::vector<cplx> out(N);
    d.synthesize(coeffs.data(), out.data());
    ScalarField g{f.dom, std::vector<double>(N)};
    parallel_for(N, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) g.v[p] = out[p].real();
    });
    return g;
}

std::pair<ScalarField, ScalarField> decompose(const ScalarField& f, double r) {
    ScalarField good = mollify(f, r);
    ScalarField bad{f.dom, std::vector<double>(f.size())};
    parallel_for(f.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) bad.v[p] = f.v[p] - good.v[p];
    });
    return {std::move(good), std::move(bad)};
}

MollifyReport verify_bounds(const ScalarField& f, const ModulusOfContinuity& m,
                            const std::vector<double>& radii) {
    MollifyReport rep;
    const double h = 1.0 / f.dom->resolution();
    for (double r : radii) {
        rep.radii.push_back(r);
        if (!(r >= 4.0 * h) || !(r < 0.5)) {
            rep.resolved.push_back(false);
            rep.grad_products.push_back(0.0);
            rep.diff_ratios.push_back(0.0);
            continue;
        }
        const ScalarField fr = mollify(f, r);
        const ScalarField gsq = grad_norm_sq(gradient(fr));
        const double gsup = std::sqrt(gsq.max());
        double dsup = 0.0;
        for (std::size_t p = 0; p < f.size(); ++p) dsup = std::max(dsup, std::abs(f.v[p] - fr.v[p]));
        rep.resolved.push_back(true);
        rep.grad_products.push_back(r * gsup);
        rep.diff_ratios.push_back(dsup / (m.eval(r) + r));
    }
    return rep;
}

void write_mollify_csv(const MollifyReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrCode::io, "cannot open " + path);
    out << "r,grad_product,diff_ratio\n";
    char buf[128];
    for (std::size_t i = 0; i < report.radii.size(); ++i) {
        if (!report.resolved[i]) continue;
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", report.radii[i], report.grad_products[i],
                      report.diff_ratios[i]);
        out << buf;
    }
}

} // namespace malab
