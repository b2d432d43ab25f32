#pragma once

#include "cohwork/spectral.hpp"

#include <sstream>
#include <utility>

namespace cohwork::fcs {

// Density matrix: Hermitian, unit trace, positive semidefinite (up to a
// small negative-eigenvalue floor).
class StateMatrix {
  public:
    explicit StateMatrix(Matrix rho) : rho_(std::move(rho)) {
        if (rho_.rows() != rho_.cols() || rho_.rows() == 0)
            throw std::invalid_argument("StateMatrix: matrix must be square and nonempty");
        const double herr = hermiticity_error(rho_);
        if (herr > tol::trace) {
            std::ostringstream msg;
            msg << "StateMatrix: not Hermitian, |rho - rho^dag| = " << herr;
            throw std::invalid_argument(msg.str());
        }
        const double terr = std::abs(rho_.trace() - Complex(1.0, 0.0));
        if (terr > tol::trace) {
            std::ostringstream msg;
            msg << "StateMatrix: trace deviates from 1 by " << terr;
            throw std::invalid_argument(msg.str());
        }
        Eigen::SelfAdjointEigenSolver<Matrix> solver((rho_ + rho_.adjoint()) / 2.0);
        if (solver.eigenvalues().minCoeff() < tol::psd_floor) {
            std::ostringstream msg;
            msg << "StateMatrix: negative eigenvalue " << solver.eigenvalues().minCoeff();
            throw std::invalid_argument(msg.str());
        }
    }

    Eigen::Index dim() const { return rho_.rows(); }
    const Matrix& matrix() const { return rho_; }

  private:
    Matrix rho_;
};

// Protocol unitary U(tau). The trivial protocol is the identity (sudden quench).
class Protocol {
  public:
    explicit Protocol(Matrix u) : u_(std::move(u)) {
        if (u_.rows() != u_.cols() || u_.rows() == 0)
            throw std::invalid_argument("Protocol: matrix must be square and nonempty");
        const double uerr = unitarity_error(u_);
        if (uerr > tol::unitarity) {
            std::ostringstream msg;
            msg << "Protocol: not unitary, |U^dag U - 1| = " << uerr;
            throw std::invalid_argument(msg.str());
        }
    }

    static Protocol identity(Eigen::Index dim) { return Protocol(Matrix::Identity(dim, dim)); }

    Eigen::Index dim() const { return u_.rows(); }
    const Matrix& matrix() const { return u_; }

  private:
    Matrix u_;
};

// Gibbs state exp(-H/T)/Z, assembled in the eigenbasis of H with Boltzmann
// weights shifted by the ground-state energy.
inline StateMatrix thermal_state(const SpectralOperator& h, double temperature) {
    if (temperature <= 0.0)
        throw std::domain_error("thermal_state: temperature must be positive");
    const double beta = 1.0 / temperature;
    const double e0 = h.eigenvalues().minCoeff();
    RealVector w(h.dim());
    for (Eigen::Index n = 0; n < h.dim(); ++n)
        w[n] = std::exp(-beta * (h.eigenvalues()[n] - e0));
    w /= w.sum();
    Matrix rho = h.eigenvectors() * w.asDiagonal() * h.eigenvectors().adjoint();
    return StateMatrix((rho + rho.adjoint()) / 2.0);
}

struct StateSplit {
    StateMatrix incoherent;  // diagonal of rho in the eigenbasis of H0
    Matrix coherent;         // rho - incoherent; traceless, zero diagonal in that basis
};

// Split rho into incoherent + coherent parts relative to the specific
// eigenvector columns carried by h0 (degenerate subspaces included).
inline StateSplit split_state(const StateMatrix& rho, const SpectralOperator& h0) {
    if (rho.dim() != h0.dim())
        throw std::invalid_argument("split_state: dimension mismatch");
    const Matrix& v = h0.eigenvectors();
    Matrix rho_eig = v.adjoint() * rho.matrix() * v;
    Matrix diag = Matrix::Zero(rho.dim(), rho.dim());
    diag.diagonal() = rho_eig.diagonal().real().cast<Complex>();
    Matrix incoherent = v * diag * v.adjoint();
    incoherent = (incoherent + incoherent.adjoint()) / 2.0;
    Matrix coherent = rho.matrix() - incoherent;
    return {StateMatrix(incoherent), std::move(coherent)};
}

}  // namespace cohwork::fcs
