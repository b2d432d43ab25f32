#pragma once

#include "cohwork/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <sstream>
#include <utility>

namespace cohwork::fcs {

using cohwork::Complex;
using cohwork::Matrix;
using cohwork::RealVector;

// A Hermitian operator H = sum_n eps_n |psi_n><psi_n| stored by its
// eigenvalues (ascending) and the unitary matrix of eigenvector columns.
// Energies are in units with hbar = k_B = 1.
class SpectralOperator {
  public:
    SpectralOperator(RealVector eigenvalues, Matrix eigenvectors)
        : eigenvalues_(std::move(eigenvalues)), eigenvectors_(std::move(eigenvectors)) {
        if (eigenvalues_.size() == 0 || eigenvectors_.rows() != eigenvectors_.cols() ||
            eigenvectors_.rows() != eigenvalues_.size())
            throw std::invalid_argument("SpectralOperator: inconsistent dimensions");
        const double uerr = unitarity_error(eigenvectors_);
        if (uerr > tol::unitarity) {
            std::ostringstream msg;
            msg << "SpectralOperator: eigenvector matrix not unitary, |U^dag U - 1| = " << uerr;
            throw std::invalid_argument(msg.str());
        }
    }

    Eigen::Index dim() const { return eigenvalues_.size(); }
    const RealVector& eigenvalues() const { return eigenvalues_; }
    const Matrix& eigenvectors() const { return eigenvectors_; }

    // Reassembled dense operator sum_n eps_n |psi_n><psi_n|.
    Matrix matrix() const {
        return eigenvectors_ * eigenvalues_.asDiagonal() * eigenvectors_.adjoint();
    }

    // ln Z = ln Tr exp(-H/T), evaluated with the spectrum shifted so the
    // largest Boltzmann exponent is 0.
    double log_partition(double temperature) const {
        if (temperature <= 0.0)
            throw std::domain_error("log_partition: temperature must be positive");
        const double beta = 1.0 / temperature;
        std::vector<double> xs(static_cast<std::size_t>(dim()));
        for (Eigen::Index n = 0; n < dim(); ++n)
            xs[static_cast<std::size_t>(n)] = -beta * eigenvalues_[n];
        return log_sum_exp(xs);
    }

  private:
    RealVector eigenvalues_;
    Matrix eigenvectors_;
};

namespace detail {

// Deterministic order for eigenvector columns inside a degenerate group:
// lexicographic on entries rounded to 12 decimals. Columns are first given a
// canonical phase (largest pivot entry made real positive) so the comparison
// does not depend on solver phase choices.
inline void canonicalize_degenerate_columns(RealVector& vals, Matrix& vecs) {
    const Eigen::Index d = vals.size();
    const double scale = std::max({1.0, std::abs(vals[0]), std::abs(vals[d - 1])});
    const double group_tol = 1e-12 * scale;

    auto fix_phase = [&](Eigen::Index c) {
        Eigen::Index pivot = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < d; ++r) {
            const double a = std::abs(vecs(r, c));
            if (a > best + 1e-12) {
                best = a;
                pivot = r;
            }
        }
        const Complex z = vecs(pivot, c);
        if (std::abs(z) > 0.0) vecs.col(c) *= std::conj(z) / std::abs(z);
    };
    for (Eigen::Index c = 0; c < d; ++c) fix_phase(c);

    auto rounded = [](double x) { return std::round(x * 1e12); };
    auto col_less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index r = 0; r < d; ++r) {
            const double ra = rounded(vecs(r, a).real()), rb = rounded(vecs(r, b).real());
            if (ra != rb) return ra < rb;
            const double ia = rounded(vecs(r, a).imag()), ib = rounded(vecs(r, b).imag());
            if (ia != ib) return ia < ib;
        }
        return false;
    };

    Eigen::Index begin = 0;
    while (begin < d) {
        Eigen::Index end = begin + 1;
        while (end < d && vals[end] - vals[begin] <= group_tol) ++end;
        if (end - begin > 1) {
            std::vector<Eigen::Index> order(static_cast<std::size_t>(end - begin));
            std::iota(order.begin(), order.end(), begin);
            std::sort(order.begin(), order.end(), col_less);
            Matrix block(d, end - begin);
            for (Eigen::Index j = 0; j < end - begin; ++j)
                block.col(j) = vecs.col(order[static_cast<std::size_t>(j)]);
            vecs.middleCols(begin, end - begin) = block;
        }
        begin = end;
    }
}

}  // namespace detail

// Dense eigendecomposition of a Hermitian matrix. Eigenvalues ascending;
// degenerate groups get a deterministic column order.
inline SpectralOperator spectral_decompose(const Matrix& h) {
    if (h.rows() != h.cols() || h.rows() == 0)
        throw std::invalid_argument("spectral_decompose: matrix must be square and nonempty");
    const double herr = hermiticity_error(h);
    if (herr > tol::hermiticity) {
        std::ostringstream msg;
        msg << "spectral_decompose: matrix not Hermitian, |H - H^dag| = " << herr;
        throw std::invalid_argument(msg.str());
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> solver((h + h.adjoint()) / 2.0);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("spectral_decompose: eigensolver failed to converge");
    RealVector vals = solver.eigenvalues();
    Matrix vecs = solver.eigenvectors();
    detail::canonicalize_degenerate_columns(vals, vecs);

    SpectralOperator op(std::move(vals), std::move(vecs));
    const double rerr = (op.matrix() - h).cwiseAbs().maxCoeff();
    if (rerr > tol::reconstruction) {
        std::ostringstream msg;
        msg << "spectral_decompose: reconstruction error " << rerr;
        throw std::runtime_error(msg.str());
    }
    return op;
}

}  // namespace cohwork::fcs
