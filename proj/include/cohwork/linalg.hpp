#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace cohwork {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

namespace tol {
// Validation tolerances, in the natural units of the quantity checked.
inline constexpr double hermiticity = 1e-10;
inline constexpr double unitarity = 1e-10;
inline constexpr double trace = 1e-12;
inline constexpr double psd_floor = -1e-10;
inline constexpr double reconstruction = 1e-10;
inline constexpr double eigenvalue_floor = 1e-14;
inline constexpr double default_merge = 1e-9;
inline constexpr double imag_residue = 1e-8;
}  // namespace tol

// Largest |H - H^dag| entry.
inline double hermiticity_error(const Matrix& h) {
    return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

// Largest |U^dag U - 1| entry.
inline double unitarity_error(const Matrix& u) {
    Matrix g = u.adjoint() * u;
    g.diagonal().array() -= 1.0;
    return g.cwiseAbs().maxCoeff();
}

// log(2 cosh(x)), safe for large |x|.
inline double log_two_cosh(double x) {
    const double a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a));
}

// log(sum_n exp(x_n)) without overflow; -inf for an empty list.
inline double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) return -std::numeric_limits<double>::infinity();
    double m = xs[0];
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// Magnitude-and-sign representation of a real number whose magnitude may
// exceed double range: value = sign * exp(log_abs).
struct SignedLog {
    double sign = 0.0;      // -1, 0, or +1
    double log_abs = -std::numeric_limits<double>::infinity();

    static SignedLog from_value(double v) {
        if (v == 0.0) return {};
        return {v > 0.0 ? 1.0 : -1.0, std::log(std::abs(v))};
    }

    double value() const { return sign == 0.0 ? 0.0 : sign * std::exp(log_abs); }

    SignedLog operator*(const SignedLog& o) const {
        if (sign == 0.0 || o.sign == 0.0) return {};
        return {sign * o.sign, log_abs + o.log_abs};
    }
};

// sum_n w_n * exp(x_n) with sign tracking, evaluated in log space.
inline SignedLog signed_log_sum_exp(std::span<const double> xs,
                                    std::span<const double> ws) {
    if (xs.size() != ws.size())
        throw std::invalid_argument("signed_log_sum_exp: length mismatch");
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (ws[i] != 0.0) m = std::max(m, xs[i] + std::log(std::abs(ws[i])));
    if (!std::isfinite(m)) return {};
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (ws[i] != 0.0)
            s += std::copysign(std::exp(xs[i] + std::log(std::abs(ws[i])) - m), ws[i]);
    if (s == 0.0) return {};
    return {s > 0.0 ? 1.0 : -1.0, m + std::log(std::abs(s))};
}

}  // namespace cohwork
