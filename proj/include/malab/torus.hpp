#ifndef MALAB_TORUS_HPP
#define MALAB_TORUS_HPP

#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include "malab/common.hpp"

namespace malab {

using cplx = std::complex<double>;

/// Flat Kaehler torus of complex dimension n, discretized on a uniform grid
/// with `resolution` points per real axis (2n real axes, unit periods, unit
/// volume). Complex coordinates are z_a = x_{2a} + i x_{2a+1} (0-based axes),
/// the background metric is the identity, all curvature terms vanish.
///
/// The domain owns the FFT plans and a scratch buffer pair; transforms are
/// serialized internally, so fields on the same domain can be used from
/// several threads. Storage is row-major with the last real axis fastest.
class TorusDomain {
public:
    ~TorusDomain();
    TorusDomain(const TorusDomain&) = delete;
    TorusDomain& operator=(const TorusDomain&) = delete;

    int dim() const { return n_; }             // complex dimension
    int axes() const { return 2 * n_; }        // real axes
    int resolution() const { return m_; }
    std::size_t point_count() const { return count_; }

    /// Integer frequency for DFT index i on one axis: i, or i-m past the
    /// midpoint. The Nyquist index m/2 maps to 0 for derivative purposes
    /// (table `dfreq`), keeping derivatives of real fields real.
    int freq(int index) const { return freq_[static_cast<std::size_t>(index)]; }
    double dfreq(int index) const { return dfreq_[static_cast<std::size_t>(index)]; }

    /// Normalized forward transform: coefficients c_k with
    /// f(x) = sum_k c_k exp(2 pi i <k,x>).
    void spectrum(const double* field, cplx* coeffs) const;
    void spectrum_c(const cplx* field, cplx* coeffs) const;
    /// Inverse of spectrum(); imaginary residue is discarded by callers that
    /// expect real output.
    void synthesize(const cplx* coeffs, cplx* field) const;

    bool compatible(const TorusDomain& other) const {
        return n_ == other.n_ && m_ == other.m_;
    }

private:
    TorusDomain(int n, int m);
    friend std::shared_ptr<TorusDomain> make_domain(int n, int resolution);

    int n_ = 0;
    int m_ = 0;
    std::size_t count_ = 0;
    std::vector<int> freq_;
    std::vector<double> dfreq_;

    struct FftImpl;
    std::unique_ptr<FftImpl> fft_;
    mutable std::mutex fft_mutex_;
};

using DomainPtr = std::shared_ptr<TorusDomain>;

/// 1 <= n <= 4, resolution a power of two >= 8. Domains with n > 2 are
/// rejected when a single field would exceed the configured memory cap.
DomainPtr make_domain(int n, int resolution);

/// Real-valued grid function. Values are row-major over the 2n real axes.
struct ScalarField {
    DomainPtr dom;
    std::vector<double> v;

    std::size_t size() const { return v.size(); }
    double sup_abs() const;
    double min() const;
    double max() const;
};

/// Per-point holomorphic gradient (f_a = df/dz_a), component-major storage.
struct GradientField {
    DomainPtr dom;
    int n = 0;
    std::vector<cplx> comp; // comp[a * N + idx]

    const cplx* component(int a) const { return comp.data() + static_cast<std::size_t>(a) * dom->point_count(); }
};

/// Per-point Hermitian matrix (f_{i jbar}); only the upper triangle i <= j is
/// stored (diagonal entries real), the lower triangle is the conjugate by
/// construction.
struct HermitianField {
    DomainPtr dom;
    int n = 0;
    std::vector<cplx> entry; // entry[tri(i,j) * N + idx], i <= j

    static int tri(int i, int j, int n) { return i * n - i * (i - 1) / 2 + (j - i); }
    const cplx* at(int i, int j) const {
        return entry.data() + static_cast<std::size_t>(tri(i, j, n)) * dom->point_count();
    }
};

/// Per-point complex symmetric matrix of holomorphic second derivatives
/// f_{ab} = d^2 f / dz_a dz_b; upper triangle a <= b stored.
struct SymComplexField {
    DomainPtr dom;
    int n = 0;
    std::vector<cplx> entry; // entry[tri(a,b) * N + idx]

    const cplx* at(int a, int b) const {
        return entry.data() + static_cast<std::size_t>(HermitianField::tri(a, b, n)) * dom->point_count();
    }
};

ScalarField const_field(const DomainPtr& dom, double value);
/// Rejects non-finite entries and size mismatches.
ScalarField field_from_data(const DomainPtr& dom, std::vector<double> values);

void require_same_domain(const ScalarField& a, const ScalarField& b);

/// Exact Fourier differentiation. Returns (f_a, f_{i jbar}); exact for
/// trigonometric polynomials below the Nyquist frequency.
std::pair<GradientField, HermitianField> spectral_derivatives(const ScalarField& f);
GradientField gradient(const ScalarField& f);
HermitianField hessian(const ScalarField& f);
SymComplexField holomorphic_hessian(const ScalarField& f);
/// Complex trace Laplacian sum_i f_{i ibar} (= 1/4 of the real Laplacian).
ScalarField laplacian_c(const ScalarField& f);
/// Solves sum_i u_{i ibar} = f - mean(f) with mean-zero u (Fourier division).
ScalarField inverse_laplacian_c(const ScalarField& f);

/// Mean of grid values == integral against the unit-volume measure.
double integrate(const ScalarField& f);

/// Pointwise |grad f|^2 = sum_a f_a conj(f_a) (gradient in the background
/// metric; equals 1/4 of the squared Euclidean gradient).
ScalarField grad_norm_sq(const GradientField& g);

/// Minimum over the grid of the smallest eigenvalue of I + h.
double min_eigenvalue(const HermitianField& h);
/// Pointwise det(I + h) (real by hermiticity).
ScalarField det_one_plus(const HermitianField& h);
/// Pointwise trace of (I + h)^{-1}.
ScalarField trace_inv_one_plus(const HermitianField& h);

/// Spectral resample (zero-pad / truncate). Exact for fields band-limited
/// below the coarser Nyquist frequency.
ScalarField resample(const ScalarField& f, int new_resolution);

/// Sum over modes of |c_k|^2 (Parseval partner of integrate(f^2)).
double spectral_power(const ScalarField& f);

} // namespace malab

#endif
