#pragma once

#include "cohwork/quasidist.hpp"
#include "cohwork/state.hpp"

#include <sstream>
#include <vector>

namespace cohwork::fcs {

namespace detail {

inline void check_dims(const StateMatrix& rho0, const SpectralOperator& h0,
                       const SpectralOperator& h_tau, const Protocol& u) {
    if (rho0.dim() != h0.dim() || h0.dim() != h_tau.dim() || h_tau.dim() != u.dim())
        throw std::invalid_argument("fcs: dimension mismatch between state, operators, protocol");
}

// Protocol matrix in the energy bases, U_lm = <psi_tau^l| U |psi_0^m>,
// and the state in the initial energy basis, rho_mn = <psi_0^m| rho |psi_0^n>.
struct EnergyFrame {
    Matrix u;    // d x d
    Matrix rho;  // d x d
    const RealVector* eps0;
    const RealVector* eps_tau;
};

inline EnergyFrame energy_frame(const StateMatrix& rho0, const SpectralOperator& h0,
                                const SpectralOperator& h_tau, const Protocol& u) {
    check_dims(rho0, h0, h_tau, u);
    return {h_tau.eigenvectors().adjoint() * u.matrix() * h0.eigenvectors(),
            h0.eigenvectors().adjoint() * rho0.matrix() * h0.eigenvectors(),
            &h0.eigenvalues(), &h_tau.eigenvalues()};
}

// x ln x with the 0 ln 0 := 0 convention and the eigenvalue floor.
inline double xlnx(double x) {
    return x > tol::eigenvalue_floor ? x * std::log(x) : 0.0;
}

}  // namespace detail

// Characteristic function of work,
//   chi_u = Tr[ e^{iu H_tau} U e^{-i(u/2) H_0} rho0 e^{-i(u/2) H_0} U^dag ],
// evaluated as the spectral triple sum
//   sum_{lmn} e^{iu (eps_tau^l - (eps_0^m + eps_0^n)/2)} U_lm rho_mn U^dag_nl.
// Complex u is supported; each term bundles its full exponent before
// exponentiation, so imaginary u never forms overflowing partial factors.
inline Complex characteristic_function(const StateMatrix& rho0, const SpectralOperator& h0,
                                       const SpectralOperator& h_tau, const Protocol& u,
                                       Complex counting) {
    const auto f = detail::energy_frame(rho0, h0, h_tau, u);
    const Eigen::Index d = f.u.rows();
    const Complex iu = Complex(0.0, 1.0) * counting;
    Complex chi = 0.0;
    for (Eigen::Index l = 0; l < d; ++l)
        for (Eigen::Index m = 0; m < d; ++m) {
            if (f.u(l, m) == Complex(0.0, 0.0)) continue;
            for (Eigen::Index n = 0; n < d; ++n) {
                const Complex amp = f.u(l, m) * f.rho(m, n) * std::conj(f.u(l, n));
                if (amp == Complex(0.0, 0.0)) continue;
                const double work = (*f.eps_tau)[l] - ((*f.eps0)[m] + (*f.eps0)[n]) / 2.0;
                chi += std::exp(iu * work) * amp;
            }
        }
    return chi;
}

// n-th work moment
//   <W^n> = sum_{lmn} (eps_tau^l - (eps_0^m + eps_0^n)/2)^n U_lm rho_mn U^dag_nl.
// The imaginary residue must cancel; a residue above 1e-8 signals numerical
// breakdown and is reported instead of discarded.
inline double work_moment(const StateMatrix& rho0, const SpectralOperator& h0,
                          const SpectralOperator& h_tau, const Protocol& u, int n) {
    if (n < 1) throw std::domain_error("work_moment: order must be >= 1");
    const auto f = detail::energy_frame(rho0, h0, h_tau, u);
    const Eigen::Index d = f.u.rows();
    Complex moment = 0.0;
    for (Eigen::Index l = 0; l < d; ++l)
        for (Eigen::Index m = 0; m < d; ++m)
            for (Eigen::Index k = 0; k < d; ++k) {
                const Complex amp = f.u(l, m) * f.rho(m, k) * std::conj(f.u(l, k));
                const double work = (*f.eps_tau)[l] - ((*f.eps0)[m] + (*f.eps0)[k]) / 2.0;
                moment += std::pow(work, n) * amp;
            }
    if (std::abs(moment.imag()) > tol::imag_residue) {
        std::ostringstream msg;
        msg << "work_moment: imaginary residue " << moment.imag();
        throw std::runtime_error(msg.str());
    }
    return moment.real();
}

// Work quasidistribution: atoms at W = eps_tau^l - (eps_0^m + eps_0^n)/2 with
// weights Re[U_lm rho_mn U^dag_nl] accumulated over contributing triples.
// Imaginary parts cancel pairwise between (m,n) and (n,m); the residue per
// merged atom is monitored and reported above 1e-8. Atoms whose merged
// weight is numerical debris (|weight| <= 1e-15, e.g. from basis-rotation
// roundoff of an exactly commuting state) are dropped, never by sign.
inline WorkQuasiDistribution quasidistribution(const StateMatrix& rho0,
                                               const SpectralOperator& h0,
                                               const SpectralOperator& h_tau,
                                               const Protocol& u,
                                               double merge_tolerance = tol::default_merge,
                                               double prune_threshold = 1e-15) {
    if (merge_tolerance <= 0.0)
        throw std::domain_error("quasidistribution: merge tolerance must be positive");
    const auto f = detail::energy_frame(rho0, h0, h_tau, u);
    const Eigen::Index d = f.u.rows();

    struct Contribution {
        double w;
        Complex amp;
    };
    std::vector<Contribution> raw;
    raw.reserve(static_cast<std::size_t>(d) * d * d);
    for (Eigen::Index l = 0; l < d; ++l)
        for (Eigen::Index m = 0; m < d; ++m) {
            if (f.u(l, m) == Complex(0.0, 0.0)) continue;
            for (Eigen::Index n = 0; n < d; ++n) {
                const Complex amp = f.u(l, m) * f.rho(m, n) * std::conj(f.u(l, n));
                if (amp == Complex(0.0, 0.0)) continue;
                raw.push_back({(*f.eps_tau)[l] - ((*f.eps0)[m] + (*f.eps0)[n]) / 2.0, amp});
            }
        }
    std::sort(raw.begin(), raw.end(), [](const Contribution& a, const Contribution& b) {
        if (a.w != b.w) return a.w < b.w;
        if (a.amp.real() != b.amp.real()) return a.amp.real() < b.amp.real();
        return a.amp.imag() < b.amp.imag();
    });

    std::vector<WorkAtom> atoms;
    std::size_t i = 0;
    while (i < raw.size()) {
        std::size_t j = i + 1;
        while (j < raw.size() && raw[j].w - raw[j - 1].w <= merge_tolerance) ++j;
        Complex sum = 0.0;
        double abs_weight = 0.0, pos = 0.0;
        for (std::size_t t = i; t < j; ++t) {
            sum += raw[t].amp;
            abs_weight += std::abs(raw[t].amp);
            pos += std::abs(raw[t].amp) * raw[t].w;
        }
        if (std::abs(sum.imag()) > tol::imag_residue) {
            std::ostringstream msg;
            msg << "quasidistribution: imaginary residue " << sum.imag() << " at W = "
                << (abs_weight > 0.0 ? pos / abs_weight : raw[i].w);
            throw std::runtime_error(msg.str());
        }
        const double w = abs_weight > 1e-300 ? pos / abs_weight : raw[i].w;
        atoms.push_back({w, sum.real()});
        i = j;
    }
    return WorkQuasiDistribution::from_contributions(std::move(atoms), merge_tolerance,
                                                     prune_threshold);
}

// Average work split into the protocol-independent / protocol-dependent
// incoherent parts and the coherent part, plus the matching split of the
// second moment.
struct WorkDecomposition {
    double w_in_indep = 0.0;
    double w_in_dep = 0.0;
    double w_coherent = 0.0;
    double m2_in = 0.0;
    double m2_coherent = 0.0;

    double total_work() const { return w_in_indep + w_in_dep + w_coherent; }
    double total_second_moment() const { return m2_in + m2_coherent; }
};

//   <W>^in_indep = -sum_m P_m eps_0^m - T sum_m P_m ln P_m - T ln Z_tau
//   <W>^in_dep   = sum_{lm} P_m P(l|m) eps_tau^l + T sum_m P_m ln P_m + T ln Z_tau
//   <W>^c        = 2 sum_{l, m>n} eps_tau^l Re[U_lm rho_mn U^dag_nl]
//   <W^2>^in     = sum_{lm} P_m P(l|m) (eps_tau^l - eps_0^m)^2
//   <W^2>^c      = 2 sum_{l, m>n} ((eps_tau^l)^2 - eps_tau^l (eps_0^m + eps_0^n))
//                    * Re[U_lm rho_mn U^dag_nl]
// with P_m the populations in the initial energy basis and P(l|m) = |U_lm|^2.
inline WorkDecomposition work_decomposition(const StateMatrix& rho0, const SpectralOperator& h0,
                                            const SpectralOperator& h_tau, const Protocol& u,
                                            double temperature) {
    if (temperature <= 0.0)
        throw std::domain_error("work_decomposition: temperature must be positive");
    const auto f = detail::energy_frame(rho0, h0, h_tau, u);
    const Eigen::Index d = f.u.rows();
    const double ln_z_tau = h_tau.log_partition(temperature);

    double energy0 = 0.0, shannon = 0.0;
    for (Eigen::Index m = 0; m < d; ++m) {
        const double pm = f.rho(m, m).real();
        energy0 += pm * (*f.eps0)[m];
        shannon += detail::xlnx(pm);
    }

    WorkDecomposition out;
    out.w_in_indep = -energy0 - temperature * shannon - temperature * ln_z_tau;

    double energy_tau = 0.0;
    for (Eigen::Index l = 0; l < d; ++l)
        for (Eigen::Index m = 0; m < d; ++m) {
            const double p = f.rho(m, m).real() * std::norm(f.u(l, m));
            energy_tau += p * (*f.eps_tau)[l];
            out.m2_in += p * std::pow((*f.eps_tau)[l] - (*f.eps0)[m], 2);
        }
    out.w_in_dep = energy_tau + temperature * shannon + temperature * ln_z_tau;

    for (Eigen::Index l = 0; l < d; ++l)
        for (Eigen::Index m = 0; m < d; ++m)
            for (Eigen::Index n = 0; n < m; ++n) {
                const double re =
                    (f.u(l, m) * f.rho(m, n) * std::conj(f.u(l, n))).real();
                out.w_coherent += 2.0 * (*f.eps_tau)[l] * re;
                out.m2_coherent +=
                    2.0 * (std::pow((*f.eps_tau)[l], 2) -
                           (*f.eps_tau)[l] * ((*f.eps0)[m] + (*f.eps0)[n])) * re;
            }
    return out;
}

// delta W^2 = <W^2> - <W>^2. A quasidistribution can push this slightly
// negative; anything beyond -1e-9 is flagged as numerical breakdown.
inline double work_fluctuation(const StateMatrix& rho0, const SpectralOperator& h0,
                               const SpectralOperator& h_tau, const Protocol& u) {
    const double m1 = work_moment(rho0, h0, h_tau, u, 1);
    const double m2 = work_moment(rho0, h0, h_tau, u, 2);
    const double var = m2 - m1 * m1;
    if (var < -1e-9) {
        std::ostringstream msg;
        msg << "work_fluctuation: variance " << var << " below tolerance";
        throw std::runtime_error(msg.str());
    }
    return var;
}

// <exp(-beta W)> = chi_{u = i beta}, evaluated over the quasidistribution
// atoms. Atoms with |beta * W| beyond 700 are handled in log space with sign
// tracking. The atom list is kept unpruned here: weights as small as
// e^{-beta eps} can carry order-one contributions once reweighted by
// e^{-beta W}.
inline double fluctuation_relation(const StateMatrix& rho0, const SpectralOperator& h0,
                                   const SpectralOperator& h_tau, const Protocol& u,
                                   double temperature,
                                   double merge_tolerance = tol::default_merge) {
    if (temperature <= 0.0)
        throw std::domain_error("fluctuation_relation: temperature must be positive");
    const double beta = 1.0 / temperature;
    const auto dist = quasidistribution(rho0, h0, h_tau, u, merge_tolerance, 0.0);
    if (beta * dist.max_abs_work() <= 700.0) {
        double s = 0.0;
        for (const auto& a : dist.atoms()) s += a.weight * std::exp(-beta * a.w);
        return s;
    }
    return dist.exp_weighted_sum_log(beta).value();
}

}  // namespace cohwork::fcs
