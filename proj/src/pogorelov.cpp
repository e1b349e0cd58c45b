#include "malab/pogorelov.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace malab {

namespace {

using cd = std::complex<double>;

double rho_of(const PogorelovPoint& pt) {
    double rho = 1.0;
    for (int i = 0; i + 1 < pt.n; ++i) rho += std::norm(pt.z[static_cast<std::size_t>(i)]);
    return rho;
}

} // namespace

void PogorelovPoint::validate() const {
    if (n < 2 || n > 4) fail(ErrCode::invalid_argument, "Pogorelov example defined for n in [2,4]");
    if (static_cast<int>(z.size()) != n) fail(ErrCode::invalid_argument, "point needs n coordinates");
    if (std::abs(z[static_cast<std::size_t>(n - 1)]) == 0.0)
        fail(ErrCode::invalid_argument, "singular point: z_n = 0");
}

double pogorelov_u(const PogorelovPoint& pt) {
    pt.validate();
    const double c = std::pow(static_cast<double>(pt.n), 2.0 / pt.n);
    const double t = std::pow(std::norm(pt.z[static_cast<std::size_t>(pt.n - 1)]), 1.0 / pt.n);
    return c * rho_of(pt) * t;
}

std::complex<double> pogorelov_grad_n(const PogorelovPoint& pt) {
    pt.validate();
    const int n = pt.n;
    const double c = std::pow(static_cast<double>(n), 2.0 / n);
    const cd zn = pt.z[static_cast<std::size_t>(n - 1)];
    const double t = std::pow(std::norm(zn), 1.0 / n);
    return c * rho_of(pt) * t / (static_cast<double>(n) * zn);
}

std::vector<std::complex<double>> pogorelov_hessian(const PogorelovPoint& pt) {
    pt.validate();
    const int n = pt.n;
    const double c = std::pow(static_cast<double>(n), 2.0 / n);
    const cd zn = pt.z[static_cast<std::size_t>(n - 1)];
    const double zn2 = std::norm(zn);
    const double t = std::pow(zn2, 1.0 / n);
    const double rho = rho_of(pt);

    // u_{i jbar} = c t delta_ij                  (i, j < n)
    // u_{i nbar} = c conj(z_i) t / (n conj(z_n)) (i < n)
    // u_{n nbar} = c rho t / (n^2 |z_n|^2)
    std::vector<cd> h(static_cast<std::size_t>(n) * n, cd(0.0, 0.0));
    for (int i = 0; i + 1 < n; ++i) {
        h[static_cast<std::size_t>(i) * n + i] = cd(c * t, 0.0);
        const cd mixed = c * std::conj(pt.z[static_cast<std::size_t>(i)]) * t / (static_cast<double>(n) * std::conj(zn));
        h[static_cast<std::size_t>(i) * n + (n - 1)] = mixed;
        h[static_cast<std::size_t>(n - 1) * n + i] = std::conj(mixed);
    }
    h[static_cast<std::size_t>(n - 1) * n + (n - 1)] = cd(c * rho * t / (static_cast<double>(n) * n * zn2), 0.0);
    return h;
}

double pogorelov_det_residual(const PogorelovPoint& pt) {
    const auto h = pogorelov_hessian(pt);
    const int n = pt.n;
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = h[static_cast<std::size_t>(i) * n + j];
    return std::abs(m.determinant().real() - 1.0);
}

GradientExponentFit pogorelov_gradient_exponent(int n, int annuli) {
    if (n < 2 || n > 4) fail(ErrCode::invalid_argument, "n must be in [2,4]");
    if (annuli < 4) fail(ErrCode::invalid_argument, "need at least 4 annuli");

    GradientExponentFit fit;
    for (int k = 1; k <= annuli; ++k) {
        const double inner = std::pow(2.0, -k - 1);
        const double outer = std::pow(2.0, -k);
        double sup = 0.0;
        for (double r : {inner, std::sqrt(inner * outer), outer}) {
            for (int j = 0; j < 16; ++j) {
                const double th = 2.0 * std::numbers::pi * j / 16.0;
                PogorelovPoint pt;
                pt.n = n;
                pt.z.assign(static_cast<std::size_t>(n), cd(0.0, 0.0));
                pt.z[static_cast<std::size_t>(n - 1)] = std::polar(r, th);
                sup = std::max(sup, std::abs(pogorelov_grad_n(pt)));
            }
        }
        fit.log_radius.push_back(std::log(std::sqrt(inner * outer)));
        fit.log_sup.push_back(std::log(sup));
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double m = static_cast<double>(annuli);
    for (int i = 0; i < annuli; ++i) {
        sx += fit.log_radius[static_cast<std::size_t>(i)];
        sy += fit.log_sup[static_cast<std::size_t>(i)];
        sxx += fit.log_radius[static_cast<std::size_t>(i)] * fit.log_radius[static_cast<std::size_t>(i)];
        sxy += fit.log_radius[static_cast<std::size_t>(i)] * fit.log_sup[static_cast<std::size_t>(i)];
    }
    fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return fit;
}

} // namespace malab
