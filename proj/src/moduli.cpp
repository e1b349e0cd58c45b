#include "malab/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace malab {

namespace {

double lerp_segment(double x0, double y0, double x1, double y1, double x) {
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

} // namespace

ModulusOfContinuity ModulusOfContinuity::hoelder(double A, double alpha) {
    if (!(A > 0.0) || !(alpha > 0.0) || !(alpha <= 1.0))
        fail(ErrCode::invalid_argument, "Hoelder modulus needs A > 0 and alpha in (0,1]");
    ModulusOfContinuity m;
    m.kind_ = ModulusKind::hoelder;
    m.a_ = A;
    m.b_ = alpha;
    return m;
}

ModulusOfContinuity ModulusOfContinuity::log_power(double A, double beta) {
    if (!(A > 0.0) || !(beta > 0.0)) fail(ErrCode::invalid_argument, "LogPower modulus needs A > 0, beta > 0");
    ModulusOfContinuity m;
    m.kind_ = ModulusKind::log_power;
    m.a_ = A;
    m.b_ = beta;
    return m;
}

ModulusOfContinuity ModulusOfContinuity::linear(double L) {
    if (!(L > 0.0)) fail(ErrCode::invalid_argument, "Linear modulus needs L > 0");
    ModulusOfContinuity m;
    m.kind_ = ModulusKind::linear;
    m.a_ = L;
    return m;
}

ModulusOfContinuity ModulusOfContinuity::tabulated(std::vector<std::pair<double, double>> samples) {
    if (samples.empty()) fail(ErrCode::invalid_argument, "tabulated modulus needs at least one sample");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& [r, w] = samples[i];
        if (!(r > 0.0) || !(r <= 1.0) || !(w > 0.0) || !std::isfinite(r) || !std::isfinite(w))
            fail(ErrCode::invalid_argument, "tabulated modulus samples must have r in (0,1] and omega > 0");
        if (i > 0 && (!(r > samples[i - 1].first) || !(w > samples[i - 1].second)))
            fail(ErrCode::invalid_argument, "tabulated modulus samples must be strictly increasing");
    }
    ModulusOfContinuity m;
    m.kind_ = ModulusKind::tabulated;
    m.samples_ = std::move(samples);
    return m;
}

double ModulusOfContinuity::eval(double r) const {
    if (!(r >= 0.0) || !(r <= 1.0)) fail(ErrCode::invalid_argument, "modulus argument outside [0,1]");
    if (r == 0.0) return 0.0;
    switch (kind_) {
        case ModulusKind::hoelder:
            return a_ * std::pow(r, b_);
        case ModulusKind::log_power:
            return a_ * std::pow(1.0 - std::log(r), -b_);
        case ModulusKind::linear:
            return a_ * r;
        case ModulusKind::tabulated: {
            const auto& s = samples_;
            if (r <= s.front().first) return s.front().second * r / s.front().first;
            if (r >= s.back().first) {
                if (s.size() == 1) return s.back().second * r / s.back().first;
                const auto& p = s[s.size() - 2];
                return lerp_segment(p.first, p.second, s.back().first, s.back().second, r);
            }
            auto it = std::upper_bound(s.begin(), s.end(), r,
                                       [](double x, const auto& e) { return x < e.first; });
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            return lerp_segment(lo.first, lo.second, hi.first, hi.second, r);
        }
    }
    fail(ErrCode::invalid_argument, "bad modulus kind");
}

ModulusOfContinuity::Inverse ModulusOfContinuity::inverse(double s) const {
    if (!(s >= 0.0)) fail(ErrCode::invalid_argument, "inverse argument must be >= 0");
    if (s == 0.0) return {0.0, false};
    const double top = omega1();
    if (s > top) return {1.0, true};
    double lo = 0.0, hi = 1.0;
    double best = 1.0, best_err = std::abs(top - s);
    const double tol = 1e-12 * std::max(s, 1.0);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double w = eval(mid);
        const double err = std::abs(w - s);
        if (err < best_err) {
            best = mid;
            best_err = err;
        }
        if (err <= tol * 1e-3) break; // exact enough, stop early
        if (w < s)
            lo = mid;
        else
            hi = mid;
    }
    return {best, false};
}

std::string ModulusOfContinuity::describe() const {
    char buf[96];
    switch (kind_) {
        case ModulusKind::hoelder:
            std::snprintf(buf, sizeof(buf), "Hoelder(A=%g, alpha=%g)", a_, b_);
            break;
        case ModulusKind::log_power:
            std::snprintf(buf, sizeof(buf), "LogPower(A=%g, beta=%g)", a_, b_);
            break;
        case ModulusKind::linear:
            std::snprintf(buf, sizeof(buf), "Linear(L=%g)", a_);
            break;
        case ModulusKind::tabulated:
            std::snprintf(buf, sizeof(buf), "Tabulated(%zu samples)", samples_.size());
            break;
    }
    return buf;
}

namespace {

// Standard recursive adaptive Simpson with absolute tolerance.
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
    return simpson_rec(g, a, b, fa, fm, fb, whole, eps, 52);
}

constexpr double kTmax = 700.0;

} // namespace

DiniResult dini2(const ModulusOfContinuity& m) {
    auto g = [&m](double t) {
        const double w = m.eval(std::exp(-t));
        return w * w;
    };
    // Dyadic blocks seed the adaptive refinement deterministically.
    double value = 0.0;
    double lo = 0.0;
    for (double hi = 1.0; lo < kTmax; hi = std::min(2.0 * hi, kTmax)) {
        value += adaptive_simpson(g, lo, hi, 1e-10 * (hi - lo) / kTmax);
        lo = hi;
        if (hi >= kTmax) break;
    }
    const double g_end = g(kTmax);
    if (g_end > 0.0) {
        const double t1 = 0.75 * kTmax;
        const double g1 = g(t1);
        const double sigma = (g1 > g_end) ? std::log(g1 / g_end) / std::log(kTmax / t1) : 0.0;
        if (!(sigma > 1.001)) return {true, 0.0};
        value += g_end * kTmax / (sigma - 1.0);
    }
    return {false, value};
}

double r_q(const ModulusOfContinuity& m, double q, double c4) {
    if (!(q >= 9.0)) fail(ErrCode::invalid_argument, "r_q requires q >= 9");
    if (!(c4 > 0.0)) fail(ErrCode::invalid_argument, "r_q requires c4 > 0");
    const double s = 1.0 / (c4 * std::sqrt(8.0 * (q - 1.0)));
    const auto inv = m.inverse(s);
    return inv.saturated ? 1.0 : std::min(1.0, inv.r);
}

double a_q(const ModulusOfContinuity& m, double q, double c4, double r) {
    const double w = m.eval(r);
    return 1.0 - 2.0 * c4 * w - 2.0 * (q - 1.0) * c4 * c4 * w * w;
}

IterationSum iteration_sum(const ModulusOfContinuity& m, double chi, double c4) {
    if (!(chi > 1.0)) fail(ErrCode::invalid_argument, "iteration_sum requires chi > 1");
    if (!(c4 > 0.0)) fail(ErrCode::invalid_argument, "iteration_sum requires c4 > 0");

    IterationSum out;
    int k0 = 0;
    while (std::pow(chi, k0) <= 9.5) ++k0;
    out.k0 = k0;

    const double rchi = std::pow(chi, -0.5);
    out.c33 = 8.0 * c4 * c4 / (rchi * (1.0 - rchi));

    const auto dini = dini2(m);
    out.dini_divergent = dini.divergent;
    out.dini = dini.value;
    out.bound_divergent = dini.divergent;
    out.bound = dini.divergent ? 0.0 : out.c33 * dini.value;

    const double top = m.omega1();
    double sum = 0.0;
    bool past_saturation = false;
    bool converged = false;
    int tiny_streak = 0;
    for (int k = k0; k - k0 <= 20000; ++k) {
        const double q = std::pow(chi, k) + 0.5;
        const double s = 1.0 / (c4 * std::sqrt(8.0 * (q - 1.0)));
        double summand = 0.0;
        if (s <= top) {
            past_saturation = true;
            const auto inv = m.inverse(s);
            const double r = std::min(1.0, inv.r);
            summand = std::pow(chi, -k) * std::log(1.0 / r);
        }
        sum += summand;
        out.terms = k - k0 + 1;
        if (summand > 1e9) break; // clearly diverging
        tiny_streak = (past_saturation && summand < 1e-12) ? tiny_streak + 1 : 0;
        if (tiny_streak >= 3) { // three consecutive negligible increments
            converged = true;
            break;
        }
    }
    out.sum_divergent = !converged;
    out.sum = sum;
    if (!out.sum_divergent && !out.bound_divergent) out.holds = (out.sum <= out.bound * (1.0 + 1e-12));
    return out;
}

ModulusOfContinuity EmpiricalModulus::to_modulus() const {
    std::vector<std::pair<double, double>> samples;
    for (const auto& e : entries)
        if (e.resolved) samples.emplace_back(e.r, e.value);
    if (samples.empty()) fail(ErrCode::invalid_argument, "empirical modulus has no resolved entries");
    if (!strict) fail(ErrCode::invalid_argument, "empirical modulus is not strictly increasing (degenerate field?)");
    return ModulusOfContinuity::tabulated(std::move(samples));
}

EmpiricalModulus empirical_modulus(const ScalarField& f, const std::vector<double>& radii) {
    const auto& d = *f.dom;
    if (radii.empty()) fail(ErrCode::invalid_argument, "radii list is empty");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || !(radii[i] <= 0.5))
            fail(ErrCode::invalid_argument, "radii must lie in (0, 0.5]");
        if (i > 0 && !(radii[i] > radii[i - 1])) fail(ErrCode::invalid_argument, "radii must be increasing");
    }
    const int m = d.resolution();
    const int axes = d.axes();
    const double h = 1.0 / m;
    const double rmax = radii.back();
    const int S = static_cast<int>(std::floor(rmax / h + 1e-12));

    // Enumerate lattice shifts with 0 < |s| h <= rmax. D(s) = D(-s), so only
    // shifts whose first nonzero component is positive are visited.
    std::vector<std::vector<int>> shifts;
    std::vector<int> cur(static_cast<std::size_t>(axes), 0);
    const std::function<void(int, double)> rec = [&](int axis, double norm2) {
        if (axis == axes) {
            bool zero = true, positive = false;
            for (int a = 0; a < axes; ++a) {
                if (cur[static_cast<std::size_t>(a)] != 0) {
                    positive = cur[static_cast<std::size_t>(a)] > 0;
                    zero = false;
                    break;
                }
            }
            if (!zero && positive && norm2 * h * h <= rmax * rmax * (1.0 + 1e-12)) shifts.push_back(cur);
            return;
        }
        for (int s = -S; s <= S; ++s) {
            cur[static_cast<std::size_t>(axis)] = s;
            const double add = static_cast<double>(s) * s;
            if (norm2 + add > rmax * rmax / (h * h) * (1.0 + 1e-12)) continue;
            rec(axis + 1, norm2 + add);
        }
        cur[static_cast<std::size_t>(axis)] = 0;
    };
    rec(0, 0.0);

    std::vector<std::size_t> strides(static_cast<std::size_t>(axes));
    std::size_t st = 1;
    for (int a = axes - 1; a >= 0; --a) {
        strides[static_cast<std::size_t>(a)] = st;
        st *= static_cast<std::size_t>(m);
    }

    std::vector<std::pair<double, double>> dist_sup(shifts.size()); // (|s| h, D(s))
    parallel_for(shifts.size(), [&](std::size_t lo, std::size_t hi) {
        std::vector<std::vector<std::size_t>> tab(static_cast<std::size_t>(axes),
                                                  std::vector<std::size_t>(static_cast<std::size_t>(m)));
        for (std::size_t si = lo; si < hi; ++si) {
            const auto& s = shifts[si];
            double norm2 = 0.0;
            for (int a = 0; a < axes; ++a) {
                norm2 += static_cast<double>(s[static_cast<std::size_t>(a)]) * s[static_cast<std::size_t>(a)];
                for (int i = 0; i < m; ++i) {
                    const int j = ((i + s[static_cast<std::size_t>(a)]) % m + m) % m;
                    tab[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] =
                        static_cast<std::size_t>(j) * strides[static_cast<std::size_t>(a)];
                }
            }
            double sup = 0.0;
            int ix[8] = {0};
            const std::size_t N = d.point_count();
            std::size_t tgt = 0;
            for (int a = 0; a < axes; ++a) tgt += tab[static_cast<std::size_t>(a)][0];
            for (std::size_t p = 0; p < N; ++p) {
                sup = std::max(sup, std::abs(f.v[tgt] - f.v[p]));
                for (int a = axes - 1; a >= 0; --a) {
                    tgt -= tab[static_cast<std::size_t>(a)][static_cast<std::size_t>(ix[a])];
                    if (++ix[a] < m) {
                        tgt += tab[static_cast<std::size_t>(a)][static_cast<std::size_t>(ix[a])];
                        break;
                    }
                    ix[a] = 0;
                    tgt += tab[static_cast<std::size_t>(a)][0];
                }
            }
            dist_sup[si] = {h * std::sqrt(norm2), sup};
        }
    });

    std::sort(dist_sup.begin(), dist_sup.end());

    EmpiricalModulus out;
    out.entries.reserve(radii.size());
    double running = 0.0;
    std::size_t pos = 0;
    for (double r : radii) {
        while (pos < dist_sup.size() && dist_sup[pos].first <= r * (1.0 + 1e-12)) {
            running = std::max(running, dist_sup[pos].second);
            ++pos;
        }
        EmpiricalEntry e;
        e.r = r;
        e.resolved = pos > 0;
        e.value = e.resolved ? running : 0.0;
        out.entries.push_back(e);
    }
    out.strict = true;
    double prev = 0.0;
    for (const auto& e : out.entries) {
        if (!e.resolved) continue;
        if (!(e.value > prev)) out.strict = false;
        prev = e.value;
    }
    return out;
}

void write_modulus_csv(const ModulusOfContinuity& m, const std::string& path) {
    if (m.kind() != ModulusKind::tabulated)
        fail(ErrCode::invalid_argument, "CSV serialization is defined for tabulated moduli");
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrCode::io, "cannot open " + path);
    out << "r,omega\n";
    char buf[96];
    for (const auto& [r, w] : m.samples()) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", r, w);
        out << buf;
    }
}

ModulusOfContinuity read_modulus_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrCode::io, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("r,omega", 0) != 0)
        fail(ErrCode::io, path + ": expected header 'r,omega'");
    std::vector<std::pair<double, double>> samples;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        double r = 0.0, w = 0.0;
        char comma = 0;
        if (!(row >> r >> comma >> w) || comma != ',') fail(ErrCode::io, path + ": malformed CSV row");
        samples.emplace_back(r, w);
    }
    return ModulusOfContinuity::tabulated(std::move(samples));
}

} // namespace malab
