#include "malab/rhs.hpp"

#include <cmath>
#include <numbers>

#include "malab/prng.hpp"

namespace malab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void validate_term(const TorusDomain& d, const TrigTerm& t) {
    if (static_cast<int>(t.freq.size()) != d.axes())
        fail(ErrCode::invalid_argument, "trig term frequency must have 2n components");
    bool zero = true;
    for (int k : t.freq) {
        if (std::abs(k) >= d.resolution() / 2)
            fail(ErrCode::invalid_argument, "trig term frequency at or above Nyquist");
        if (k != 0) zero = false;
    }
    if (zero) fail(ErrCode::invalid_argument, "trig term frequency is zero");
    if (!std::isfinite(t.amplitude) || !std::isfinite(t.phase))
        fail(ErrCode::invalid_argument, "trig term has non-finite amplitude or phase");
}

} // namespace

ScalarField trig_field(const DomainPtr& dom, const std::vector<TrigTerm>& terms) {
    const auto& d = *dom;
    for (const auto& t : terms) validate_term(d, t);
    const int m = d.resolution();
    const int axes = d.axes();
    const std::size_t N = d.point_count();

    // Per-term, per-axis phase tables: cos(sum_a ph[a][ix_a] + phase).
    std::vector<std::vector<double>> tables(terms.size());
    for (std::size_t ti = 0; ti < terms.size(); ++ti) {
        auto& tab = tables[ti];
        tab.resize(static_cast<std::size_t>(axes) * static_cast<std::size_t>(m));
        for (int a = 0; a < axes; ++a)
            for (int i = 0; i < m; ++i)
                tab[static_cast<std::size_t>(a) * m + i] =
                    kTwoPi * terms[ti].freq[static_cast<std::size_t>(a)] * (static_cast<double>(i) / m);
    }

    ScalarField out{dom, std::vector<double>(N, 0.0)};
    parallel_for(N, [&](std::size_t lo, std::size_t hi) {
        int ix[8] = {0};
        std::size_t rem = lo;
        for (int a = axes - 1; a >= 0; --a) {
            ix[a] = static_cast<int>(rem % static_cast<std::size_t>(m));
            rem /= static_cast<std::size_t>(m);
        }
        for (std::size_t p = lo; p < hi; ++p) {
            double acc = 0.0;
            for (std::size_t ti = 0; ti < terms.size(); ++ti) {
                double phase = terms[ti].phase;
                for (int a = 0; a < axes; ++a) phase += tables[ti][static_cast<std::size_t>(a) * m + ix[a]];
                acc += terms[ti].amplitude * std::cos(phase);
            }
            out.v[p] = acc;
            for (int a = axes - 1; a >= 0; --a) {
                if (++ix[a] < m) break;
                ix[a] = 0;
            }
        }
    });
    return out;
}

std::vector<TrigTerm> weierstrass_modes(int n, int resolution, double alpha, int levels,
                                        double amplitude, std::uint64_t seed) {
    if (!(alpha > 0.0) || !(alpha <= 1.0)) fail(ErrCode::invalid_argument, "weierstrass alpha must be in (0,1]");
    if (levels < 0) fail(ErrCode::invalid_argument, "weierstrass levels must be >= 0");
    if ((1 << levels) >= resolution / 2)
        fail(ErrCode::invalid_argument, "weierstrass top level 2^J is at or above the Nyquist frequency");
    const int axes = 2 * n;

    CounterRng rng{seed, 0};
    std::vector<TrigTerm> terms;
    terms.reserve(static_cast<std::size_t>(levels) + 1);
    for (int j = 0; j <= levels; ++j) {
        // integer direction with |v| <= 4, v != 0 (rejection sampling)
        std::vector<int> v(static_cast<std::size_t>(axes), 0);
        for (;;) {
            double norm2 = 0.0;
            bool zero = true;
            for (int a = 0; a < axes; ++a) {
                v[static_cast<std::size_t>(a)] = static_cast<int>(rng.next_int(-4, 4));
                norm2 += static_cast<double>(v[static_cast<std::size_t>(a)]) * v[static_cast<std::size_t>(a)];
                if (v[static_cast<std::size_t>(a)] != 0) zero = false;
            }
            if (!zero && norm2 <= 16.0) break;
        }
        double norm = 0.0;
        for (int a = 0; a < axes; ++a) norm += static_cast<double>(v[static_cast<std::size_t>(a)]) * v[static_cast<std::size_t>(a)];
        norm = std::sqrt(norm);
        const double radius = static_cast<double>(1 << j);
        TrigTerm t;
        t.freq.resize(static_cast<std::size_t>(axes));
        bool zero = true;
        int argmax = 0;
        for (int a = 0; a < axes; ++a) {
            t.freq[static_cast<std::size_t>(a)] =
                static_cast<int>(std::lround(radius * v[static_cast<std::size_t>(a)] / norm));
            if (t.freq[static_cast<std::size_t>(a)] != 0) zero = false;
            if (std::abs(v[static_cast<std::size_t>(a)]) > std::abs(v[static_cast<std::size_t>(argmax)])) argmax = a;
        }
        if (zero) // tiny radius rounded everything away; fall back to the dominant axis
            t.freq[static_cast<std::size_t>(argmax)] = v[static_cast<std::size_t>(argmax)] > 0 ? 1 : -1;
        t.amplitude = amplitude * std::pow(2.0, -static_cast<double>(j) * alpha);
        t.phase = kTwoPi * rng.next_unit();
        terms.push_back(std::move(t));
    }
    return terms;
}

ScalarField weierstrass(const DomainPtr& dom, double alpha, int levels, double amplitude,
                        std::uint64_t seed) {
    return trig_field(dom, weierstrass_modes(dom->dim(), dom->resolution(), alpha, levels, amplitude, seed));
}

ScalarField normalize_rhs(const ScalarField& f) {
    if (f.max() > 300.0) fail(ErrCode::invalid_argument, "normalize_rhs: sup f > 300 would overflow exp");
    std::vector<double> e(f.size());
    parallel_for(f.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) e[p] = std::exp(f.v[p]);
    });
    const double c = -std::log(kahan_mean(e));
    ScalarField out{f.dom, std::vector<double>(f.size())};
    parallel_for(f.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) out.v[p] = f.v[p] + c;
    });
    return out;
}

Manufactured manufactured(const DomainPtr& dom, const std::vector<TrigTerm>& potential) {
    ScalarField phi = trig_field(dom, potential);
    const HermitianField hess = hessian(phi);
    const double lam = min_eigenvalue(hess);
    if (!(lam > 0.0))
        fail(ErrCode::positivity_breakdown,
             "manufactured potential is not plurisubharmonic: min eigenvalue of I+phi_ij is " +
                 std::to_string(lam));
    ScalarField det = det_one_plus(hess);
    ScalarField F{dom, std::vector<double>(phi.size())};
    parallel_for(phi.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) F.v[p] = std::log(det.v[p]);
    });
    return {std::move(phi), std::move(F)};
}

} // namespace malab
