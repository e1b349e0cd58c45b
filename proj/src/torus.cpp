#include "malab/torus.hpp"

#include <fftw3.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

namespace malab {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

bool is_pow2(int x) { return x > 0 && (x & (x - 1)) == 0; }

constexpr double kPi = std::numbers::pi;

// Iterates grid/mode indices in row-major order keeping the per-axis odometer
// incrementally; chunk starts are decoded from the flat index so the loop can
// run under parallel_for.
template <class Fn>
void for_each_index(const TorusDomain& d, Fn&& fn) {
    const int axes = d.axes();
    const int m = d.resolution();
    parallel_for(d.point_count(), [&](std::size_t lo, std::size_t hi) {
        int ix[8] = {0};
        std::size_t rem = lo;
        for (int a = axes - 1; a >= 0; --a) {
            ix[a] = static_cast<int>(rem % static_cast<std::size_t>(m));
            rem /= static_cast<std::size_t>(m);
        }
        for (std::size_t idx = lo; idx < hi; ++idx) {
            fn(idx, ix);
            for (int a = axes - 1; a >= 0; --a) {
                if (++ix[a] < m) break;
                ix[a] = 0;
            }
        }
    });
}

} // namespace

struct TorusDomain::FftImpl {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    fftw_complex* in = nullptr;
    fftw_complex* out = nullptr;
    std::size_t count = 0;

    ~FftImpl() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
        if (in) fftw_free(in);
        if (out) fftw_free(out);
    }
};

TorusDomain::TorusDomain(int n, int m) : n_(n), m_(m) {
    count_ = 1;
    for (int a = 0; a < 2 * n; ++a) count_ *= static_cast<std::size_t>(m);

    freq_.resize(static_cast<std::size_t>(m));
    dfreq_.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const int k = (i <= m / 2) ? i : i - m;
        freq_[static_cast<std::size_t>(i)] = (i == m / 2) ? -m / 2 : k;
        dfreq_[static_cast<std::size_t>(i)] = (i == m / 2) ? 0.0 : static_cast<double>(k);
    }

    fft_ = std::make_unique<FftImpl>();
    fft_->count = count_;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fft_->in = fftw_alloc_complex(count_);
        fft_->out = fftw_alloc_complex(count_);
        if (!fft_->in || !fft_->out) fail(ErrCode::invalid_argument, "domain allocation failed");
        std::vector<int> dims(static_cast<std::size_t>(2 * n), m);
        fft_->forward = fftw_plan_dft(2 * n, dims.data(), fft_->in, fft_->out, FFTW_FORWARD, FFTW_MEASURE);
        fft_->backward = fftw_plan_dft(2 * n, dims.data(), fft_->in, fft_->out, FFTW_BACKWARD, FFTW_MEASURE);
        if (!fft_->forward || !fft_->backward) fail(ErrCode::invalid_argument, "FFT planning failed");
    }
}

TorusDomain::~TorusDomain() = default;

void TorusDomain::spectrum(const double* field, cplx* coeffs) const {
    std::lock_guard<std::mutex> lock(fft_mutex_);
    for (std::size_t i = 0; i < count_; ++i) {
        fft_->in[i][0] = field[i];
        fft_->in[i][1] = 0.0;
    }
    fftw_execute(fft_->forward);
    const double inv = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < count_; ++i) coeffs[i] = cplx(fft_->out[i][0] * inv, fft_->out[i][1] * inv);
}

void TorusDomain::spectrum_c(const cplx* field, cplx* coeffs) const {
    std::lock_guard<std::mutex> lock(fft_mutex_);
    std::memcpy(fft_->in, field, count_ * sizeof(cplx));
    fftw_execute(fft_->forward);
    const double inv = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < count_; ++i) coeffs[i] = cplx(fft_->out[i][0] * inv, fft_->out[i][1] * inv);
}

void TorusDomain::synthesize(const cplx* coeffs, cplx* field) const {
    std::lock_guard<std::mutex> lock(fft_mutex_);
    std::memcpy(fft_->in, coeffs, count_ * sizeof(cplx));
    fftw_execute(fft_->backward);
    std::memcpy(field, fft_->out, count_ * sizeof(cplx));
}

DomainPtr make_domain(int n, int resolution) {
    if (n < 1 || n > 4) fail(ErrCode::invalid_argument, "complex dimension must be in [1,4]");
    if (resolution < 8 || !is_pow2(resolution))
        fail(ErrCode::invalid_argument, "resolution must be a power of two >= 8");
    if (n > 2) {
        long double bytes = 8.0L;
        for (int a = 0; a < 2 * n; ++a) bytes *= resolution;
        if (bytes > static_cast<long double>(memory_cap()))
            fail(ErrCode::invalid_argument,
                 "field storage for n=" + std::to_string(n) + ", resolution=" + std::to_string(resolution) +
                     " exceeds the memory cap");
    }
    return std::shared_ptr<TorusDomain>(new TorusDomain(n, resolution));
}

double ScalarField::sup_abs() const {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

double ScalarField::min() const {
    double s = v.empty() ? 0.0 : v[0];
    for (double x : v) s = std::min(s, x);
    return s;
}

double ScalarField::max() const {
    double s = v.empty() ? 0.0 : v[0];
    for (double x : v) s = std::max(s, x);
    return s;
}

ScalarField const_field(const DomainPtr& dom, double value) {
    if (!dom) fail(ErrCode::invalid_argument, "null domain");
    return ScalarField{dom, std::vector<double>(dom->point_count(), value)};
}

ScalarField field_from_data(const DomainPtr& dom, std::vector<double> values) {
    if (!dom) fail(ErrCode::invalid_argument, "null domain");
    if (values.size() != dom->point_count())
        fail(ErrCode::invalid_argument, "field data size does not match the domain");
    for (double x : values)
        if (!std::isfinite(x)) fail(ErrCode::invalid_argument, "field contains non-finite values");
    return ScalarField{dom, std::move(values)};
}

void require_same_domain(const ScalarField& a, const ScalarField& b) {
    if (!a.dom || !b.dom || !a.dom->compatible(*b.dom))
        fail(ErrCode::invalid_argument, "fields live on different domains");
}

namespace {

// d/dz_a multiplier pi*(k_{2a+1} + i k_{2a}) and d/dzbar_a multiplier
// pi*(-k_{2a+1} + i k_{2a}) for the mode exp(2 pi i <k,x>).
inline cplx mu(const TorusDomain& d, const int* ix, int a) {
    return cplx(kPi * d.dfreq(ix[2 * a + 1]), kPi * d.dfreq(ix[2 * a]));
}
inline cplx nu(const TorusDomain& d, const int* ix, int a) {
    return cplx(-kPi * d.dfreq(ix[2 * a + 1]), kPi * d.dfreq(ix[2 * a]));
}

std::vector<cplx> field_spectrum(const ScalarField& f) {
    std::vector<cplx> c(f.size());
    f.dom->spectrum(f.v.data(), c.data());
    return c;
}

void synth_into(const TorusDomain& d, const std::vector<cplx>& coeffs, cplx* out) { d.synthesize(coeffs.data(), out); }

} // namespace

std::pair<GradientField, HermitianField> spectral_derivatives(const ScalarField& f) {
    const auto& d = *f.dom;
    const std::size_t N = d.point_count();
    const int n = d.dim();
    const auto base = field_spectrum(f);

    GradientField g{f.dom, n, std::vector<cplx>(static_cast<std::size_t>(n) * N)};
    HermitianField h{f.dom, n, std::vector<cplx>(static_cast<std::size_t>(n * (n + 1) / 2) * N)};

    std::vector<cplx> work(N);
    for (int a = 0; a < n; ++a) {
        for_each_index(d, [&](std::size_t idx, const int* ix) { work[idx] = mu(d, ix, a) * base[idx]; });
        synth_into(d, work, g.comp.data() + static_cast<std::size_t>(a) * N);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            for_each_index(d, [&](std::size_t idx, const int* ix) {
                work[idx] = mu(d, ix, i) * nu(d, ix, j) * base[idx];
            });
            cplx* dst = h.entry.data() + static_cast<std::size_t>(HermitianField::tri(i, j, n)) * N;
            synth_into(d, work, dst);
            if (i == j) // diagonal of a Hermitian matrix is real
                parallel_for(N, [&](std::size_t lo, std::size_t hi) {
                    for (std::size_t p = lo; p < hi; ++p) dst[p] = cplx(dst[p].real(), 0.0);
                });
        }
    }
    return {std::move(g), std::move(h)};
}

GradientField gradient(const ScalarField& f) {
    const auto& d = *f.dom;
    const std::size_t N = d.point_count();
    const int n = d.dim();
    const auto base = field_spectrum(f);
    GradientField g{f.dom, n, std::vector<cplx>(static_cast<std::size_t>(n) * N)};
    std::vector<cplx> work(N);
    for (int a = 0; a < n; ++a) {
        for_each_index(d, [&](std::size_t idx, const int* ix) { work[idx] = mu(d, ix, a) * base[idx]; });
        synth_into(d, work, g.comp.data() + static_cast<std::size_t>(a) * N);
    }
    return g;
}

HermitianField hessian(const ScalarField& f) { return spectral_derivatives(f).second; }

SymComplexField holomorphic_hessian(const ScalarField& f) {
    const auto& d = *f.dom;
    const std::size_t N = d.point_count();
    const int n = d.dim();
    const auto base = field_spectrum(f);
    SymComplexField s{f.dom, n, std::vector<cplx>(static_cast<std::size_t>(n * (n + 1) / 2) * N)};
    std::vector<cplx> work(N);
    for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
            for_each_index(d, [&](std::size_t idx, const int* ix) {
                work[idx] = mu(d, ix, a) * mu(d, ix, b) * base[idx];
            });
            synth_into(d, work, s.entry.data() + static_cast<std::size_t>(HermitianField::tri(a, b, n)) * N);
        }
    }
    return s;
}

ScalarField laplacian_c(const ScalarField& f) {
    const auto& d = *f.dom;
    const std::size_t N = d.point_count();
    const auto base = field_spectrum(f);
    std::vector<cplx> work(N);
    for_each_index(d, [&](std::size_t idx, const int* ix) {
        double k2 = 0.0;
        for (int a = 0; a < d.axes(); ++a) {
            const double k = d.dfreq(ix[a]);
            k2 += k * k;
        }
        work[idx] = -kPi * kPi * k2 * base[idx];
    });
    std::vector<cplx> out(N);
    synth_into(d, work, out.data());
    ScalarField r{f.dom, std::vector<double>(N)};
    parallel_for(N, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) r.v[p] = out[p].real();
    });
    return r;
}

ScalarField inverse_laplacian_c(const ScalarField& f) {
    const auto& d = *f.dom;
    const std::size_t N = d.point_count();
    auto base = field_spectrum(f);
    for_each_index(d, [&](std::size_t idx, const int* ix) {
        double k2 = 0.0;
        for (int a = 0; a < d.axes(); ++a) {
            const double k = d.dfreq(ix[a]);
            k2 += k * k;
        }
        // Mean mode and pure-Nyquist modes are outside the invertible band.
        base[idx] = (k2 == 0.0) ? cplx(0.0, 0.0) : base[idx] / (-kPi * kPi * k2);
    });
    std::vector<cplx> out(N);
    synth_into(d, base, out.data());
    ScalarField r{f.dom, std::vector<double>(N)};
    parallel_for(N, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) r.v[p] = out[p].real();
    });
    return r;
}

double integrate(const ScalarField& f) { return kahan_mean(f.v); }

ScalarField grad_norm_sq(const GradientField& g) {
    const std::size_t N = g.dom->point_count();
    ScalarField r{g.dom, std::vector<double>(N)};
    parallel_for(N, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            double s = 0.0;
            for (int a = 0; a < g.n; ++a) s += std::norm(g.comp[static_cast<std::size_t>(a) * N + p]);
            r.v[p] = s;
        }
    });
    return r;
}

namespace {

template <int N>
using CMat = Eigen::Matrix<cplx, N, N>;

template <int N>
CMat<N> one_plus_at(const HermitianField& h, std::size_t p) {
    const std::size_t count = h.dom->point_count();
    CMat<N> a;
    for (int i = 0; i < N; ++i) {
        for (int j = i; j < N; ++j) {
            const cplx e = h.entry[static_cast<std::size_t>(HermitianField::tri(i, j, N)) * count + p];
            a(i, j) = e + ((i == j) ? cplx(1.0, 0.0) : cplx(0.0, 0.0));
            if (i != j) a(j, i) = std::conj(e);
        }
    }
    return a;
}

template <int N, class Fn>
void pointwise_matrix(const HermitianField& h, double* out, Fn&& fn) {
    parallel_for(h.dom->point_count(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) out[p] = fn(one_plus_at<N>(h, p));
    });
}

template <class Fn1, class Fn2, class Fn34>
ScalarField dispatch_matrix_op(const HermitianField& h, Fn1&& f1, Fn2&& f2, Fn34&& f34) {
    const std::size_t count = h.dom->point_count();
    ScalarField r{h.dom, std::vector<double>(count)};
    switch (h.n) {
        case 1:
            parallel_for(count, [&](std::size_t lo, std::size_t hi) {
                for (std::size_t p = lo; p < hi; ++p) r.v[p] = f1(1.0 + h.entry[p].real());
            });
            break;
        case 2:
            parallel_for(count, [&](std::size_t lo, std::size_t hi) {
                for (std::size_t p = lo; p < hi; ++p) {
                    const double a = 1.0 + h.entry[p].real();
                    const cplx b = h.entry[count + p];
                    const double c = 1.0 + h.entry[2 * count + p].real();
                    r.v[p] = f2(a, b, c);
                }
            });
            break;
        case 3:
            pointwise_matrix<3>(h, r.v.data(), f34);
            break;
        case 4:
            pointwise_matrix<4>(h, r.v.data(), f34);
            break;
        default:
            fail(ErrCode::invalid_argument, "unsupported dimension");
    }
    return r;
}

} // namespace

double min_eigenvalue(const HermitianField& h) {
    auto field = dispatch_matrix_op(
        h, [](double a) { return a; },
        [](double a, cplx b, double c) {
            const double mid = 0.5 * (a + c);
            const double rad = std::sqrt(0.25 * (a - c) * (a - c) + std::norm(b));
            return mid - rad;
        },
        [](const auto& mat) {
            Eigen::SelfAdjointEigenSolver<std::decay_t<decltype(mat)>> es(mat, Eigen::EigenvaluesOnly);
            return es.eigenvalues().minCoeff();
        });
    return field.min();
}

ScalarField det_one_plus(const HermitianField& h) {
    return dispatch_matrix_op(
        h, [](double a) { return a; },
        [](double a, cplx b, double c) { return a * c - std::norm(b); },
        [](const auto& mat) { return mat.determinant().real(); });
}

ScalarField trace_inv_one_plus(const HermitianField& h) {
    return dispatch_matrix_op(
        h, [](double a) { return 1.0 / a; },
        [](double a, cplx b, double c) { return (a + c) / (a * c - std::norm(b)); },
        [](const auto& mat) { return mat.inverse().trace().real(); });
}

ScalarField resample(const ScalarField& f, int new_resolution) {
    const auto& d = *f.dom;
    if (new_resolution == d.resolution()) return f;
    auto nd = make_domain(d.dim(), new_resolution);
    const auto base = field_spectrum(f);
    std::vector<cplx> coeffs(nd->point_count(), cplx(0.0, 0.0));
    const int keep = std::min(d.resolution(), new_resolution) / 2; // modes |k| < keep survive
    const int axes = d.axes();
    const int mo = d.resolution();
    const int mn = new_resolution;
    for_each_index(d, [&](std::size_t idx, const int* ix) {
        std::size_t tgt = 0;
        for (int a = 0; a < axes; ++a) {
            const int k = d.freq(ix[a]);
            if (k <= -keep || k >= keep) return;
            tgt = tgt * static_cast<std::size_t>(mn) + static_cast<std::size_t>(k >= 0 ? k : k + mn);
        }
        coeffs[tgt] = base[idx];
    });
    (void)mo;
    std::vector<cplx> out(nd->point_count());
    nd->synthesize(coeffs.data(), out.data());
    ScalarField r{nd, std::vector<double>(nd->point_count())};
    for (std::size_t p = 0; p < out.size(); ++p) r.v[p] = out[p].real();
    return r;
}

double spectral_power(const ScalarField& f) {
    const auto base = field_spectrum(f);
    std::vector<double> mags(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) mags[i] = std::norm(base[i]);
    return kahan_sum(mags.data(), mags.size());
}

} // namespace malab
