#pragma once

#include "cohwork/fcs.hpp"

#include <limits>

namespace cohwork::fcs {

// Relative entropy S(rho1 || rho2) = Tr[rho1 ln rho1 - rho1 ln rho2].
// Eigenvalues below the floor are treated as exactly zero with 0 ln 0 := 0.
// If rho1 carries weight above 1e-12 outside the support of rho2 the
// divergence is signalled by returning +infinity.
inline double relative_entropy(const StateMatrix& rho1, const StateMatrix& rho2) {
    if (rho1.dim() != rho2.dim())
        throw std::invalid_argument("relative_entropy: dimension mismatch");
    const Eigen::SelfAdjointEigenSolver<Matrix> s1(rho1.matrix());
    const Eigen::SelfAdjointEigenSolver<Matrix> s2(rho2.matrix());
    const Eigen::Index d = rho1.dim();

    double entropy1 = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) entropy1 += detail::xlnx(s1.eigenvalues()[i]);

    // q_j = <w_j| rho1 |w_j> in the eigenbasis of rho2.
    const Matrix overlaps = s2.eigenvectors().adjoint() * rho1.matrix() * s2.eigenvectors();

    double cross = 0.0, outside = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double q = overlaps(j, j).real();
        const double mu = s2.eigenvalues()[j];
        if (mu > tol::eigenvalue_floor)
            cross += q * std::log(mu);
        else
            outside += q;
    }
    if (outside > 1e-12) return std::numeric_limits<double>::infinity();
    return entropy1 - cross;
}

struct FreeEnergySplit {
    double incoherent = 0.0;  // F^in = -T ln Z + T S(rho_in || rho^G)
    double coherent = 0.0;    // F^c  = T S(rho || rho_in)
    double total() const { return incoherent + coherent; }
};

// Free energy F = Tr[H rho] + T Tr[rho ln rho], split into the part carried
// by the energy populations and the part contributed by coherence.
inline FreeEnergySplit free_energy(const StateMatrix& rho, const SpectralOperator& h,
                                   double temperature) {
    if (temperature <= 0.0)
        throw std::domain_error("free_energy: temperature must be positive");
    const auto split = split_state(rho, h);

    // F^in collapses to Tr[H rho_in] + T sum_m P_m ln P_m.
    const Matrix rho_eig =
        h.eigenvectors().adjoint() * rho.matrix() * h.eigenvectors();
    double energy = 0.0, shannon = 0.0;
    for (Eigen::Index m = 0; m < h.dim(); ++m) {
        const double pm = rho_eig(m, m).real();
        energy += pm * h.eigenvalues()[m];
        shannon += detail::xlnx(pm);
    }
    FreeEnergySplit out;
    out.incoherent = energy + temperature * shannon;
    out.coherent = temperature * relative_entropy(rho, split.incoherent);
    return out;
}

// Summary of the protocol thermodynamics: initial free-energy split, the
// free-energy change to the post-protocol Gibbs state, the irreversible work
// and the entropy production Sigma = beta <W_irr> = S(rho(tau) || rho^G(tau)).
struct FreeEnergyReport {
    double f_in = 0.0;
    double f_c = 0.0;
    double delta_f = 0.0;
    double w_irr = 0.0;
    double sigma = 0.0;
};

inline FreeEnergyReport thermodynamic_report(const StateMatrix& rho0, const SpectralOperator& h0,
                                             const SpectralOperator& h_tau, const Protocol& u,
                                             double temperature) {
    if (temperature <= 0.0)
        throw std::domain_error("thermodynamic_report: temperature must be positive");
    detail::check_dims(rho0, h0, h_tau, u);
    const auto split = free_energy(rho0, h0, temperature);
    FreeEnergyReport report;
    report.f_in = split.incoherent;
    report.f_c = split.coherent;
    report.delta_f = -temperature * h_tau.log_partition(temperature) - split.total();
    report.w_irr = work_moment(rho0, h0, h_tau, u, 1) - report.delta_f;
    report.sigma = report.w_irr / temperature;
    return report;
}

}  // namespace cohwork::fcs
