#pragma once

#include "cohwork/entropy.hpp"
#include "cohwork/errors.hpp"

#include <array>
#include <sstream>
#include <vector>

namespace cohwork::ising {

using fcs::Protocol;
using fcs::SpectralOperator;
using fcs::StateMatrix;
using fcs::WorkAtom;
using fcs::WorkQuasiDistribution;

// Sudden quench of the periodic transverse-field Ising chain
//   H(lambda) = -sum_j lambda sigma_j^x + sigma_j^z sigma_j^{z+1}
// from field lambda0 to lambda0 + delta_lambda, prepared in a p-weighted
// mix of the Gibbs state and the coherent Gibbs state at temperature T with
// relative phase phi (uniform across modes unless overridden per mode).
struct IsingQuenchSpec {
    int chain_length = 2;          // N, even
    double field_initial = 0.0;    // lambda0 >= 0
    double quench_amplitude = 0.0; // delta_lambda, lambda_tau = lambda0 + delta_lambda
    double temperature = 1.0;      // T > 0
    double coherent_weight = 0.0;  // p in [0, 1]
    double relative_phase = 0.0;   // phi_k, uniform
    std::vector<double> mode_phases;  // optional per-mode override, size N/2

    double field_final() const { return field_initial + quench_amplitude; }

    void validate() const {
        if (chain_length < 2 || chain_length % 2 != 0)
            throw std::domain_error("IsingQuenchSpec: chain length must be even and >= 2");
        if (field_initial < 0.0)
            throw std::domain_error("IsingQuenchSpec: initial field must be >= 0");
        if (field_final() < 0.0)
            throw std::domain_error("IsingQuenchSpec: final field must be >= 0");
        if (temperature <= 0.0)
            throw std::domain_error("IsingQuenchSpec: temperature must be positive");
        if (coherent_weight < 0.0 || coherent_weight > 1.0)
            throw std::domain_error("IsingQuenchSpec: coherent weight must lie in [0, 1]");
        if (!mode_phases.empty() &&
            mode_phases.size() != static_cast<std::size_t>(chain_length / 2))
            throw std::domain_error("IsingQuenchSpec: mode phase override must have N/2 entries");
    }
};

// Positive-momentum grid k_n = pi (2n - 1) / N, n = 1 .. N/2.
inline std::vector<double> mode_grid(int chain_length) {
    if (chain_length < 2 || chain_length % 2 != 0)
        throw std::domain_error("mode_grid: chain length must be even and >= 2");
    std::vector<double> ks(static_cast<std::size_t>(chain_length / 2));
    for (int n = 1; n <= chain_length / 2; ++n)
        ks[static_cast<std::size_t>(n - 1)] = M_PI * (2.0 * n - 1.0) / chain_length;
    return ks;
}

// eps_k = 2 sqrt(sin^2 k + (lambda - cos k)^2)
inline double dispersion(double lambda, double k) {
    return 2.0 * std::hypot(std::sin(k), lambda - std::cos(k));
}

// Principal angle of (lambda - cos k) + i sin k; lies in (0, pi) for
// k in (0, pi), giving theta = pi - k at lambda = 0 and theta -> 0 as
// lambda -> infinity.
inline double bogoliubov_angle(double lambda, double k) {
    const double re = lambda - std::cos(k);
    const double im = std::sin(k);
    if (std::hypot(re, im) == 0.0)
        throw std::domain_error("bogoliubov_angle: gap closes at lambda = 1, k = 0");
    return std::atan2(im, re);
}

namespace detail {

inline std::size_t mode_index(const IsingQuenchSpec& spec, double k) {
    const int n = static_cast<int>(std::lround((k * spec.chain_length / M_PI + 1.0) / 2.0));
    const double on_grid = M_PI * (2.0 * n - 1.0) / spec.chain_length;
    if (n < 1 || n > spec.chain_length / 2 || std::abs(k - on_grid) > 1e-9)
        throw std::domain_error("ising: momentum is not on the mode grid");
    return static_cast<std::size_t>(n - 1);
}

inline double phase_for(const IsingQuenchSpec& spec, std::size_t mode) {
    return spec.mode_phases.empty() ? spec.relative_phase : spec.mode_phases[mode];
}

}  // namespace detail

// Per-mode bundle for one positive momentum.
struct ModeData {
    double k = 0.0;
    double eps0 = 0.0;       // pre-quench dispersion
    double eps_tau = 0.0;    // post-quench dispersion
    double theta0 = 0.0;     // pre-quench Bogoliubov angle
    double theta_tau = 0.0;  // post-quench Bogoliubov angle
    double delta = 0.0;      // theta_tau - theta0; <= 0 for delta_lambda > 0
    double z = 0.0;          // Z_k = 2 cosh(beta eps0 / 2)
};

inline ModeData mode_data(const IsingQuenchSpec& spec, double k) {
    spec.validate();
    detail::mode_index(spec, k);
    ModeData md;
    md.k = k;
    md.eps0 = dispersion(spec.field_initial, k);
    md.eps_tau = dispersion(spec.field_final(), k);
    md.theta0 = bogoliubov_angle(spec.field_initial, k);
    md.theta_tau = bogoliubov_angle(spec.field_final(), k);
    md.delta = md.theta_tau - md.theta0;
    md.z = 2.0 * std::cosh(md.eps0 / (2.0 * spec.temperature));
    return md;
}

// Work quasidistribution of one (k, -k) mode pair:
//   P(0)                  = 2 / Z^2
//   P(+-eps_tau + eps0)   = e^{+beta eps0} (1 -+ cos Delta) / (2 Z^2)
//   P(+-eps_tau - eps0)   = e^{-beta eps0} (1 +- cos Delta) / (2 Z^2)
//   P(+-eps_tau)          = +- p sin Delta cos phi / Z^2
// The last pair comes from the coherences and may be negative; it carries
// zero net weight. Weights are evaluated through e^{-beta eps0} so that low
// temperatures cannot overflow.
struct ModeQuasiDistribution {
    std::array<WorkAtom, 7> atoms;  // order: 0, +t+0, -t+0, +t-0, -t-0, +t, -t

    double total_weight() const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.weight;
        return s;
    }

    double coherent_weight_sum() const { return atoms[5].weight + atoms[6].weight; }

    WorkQuasiDistribution merged(double merge_tolerance = tol::default_merge) const {
        return WorkQuasiDistribution::from_contributions(
            std::vector<WorkAtom>(atoms.begin(), atoms.end()), merge_tolerance);
    }
};

inline ModeQuasiDistribution mode_quasidistribution(const IsingQuenchSpec& spec, double k) {
    const auto md = mode_data(spec, k);
    const double phi = detail::phase_for(spec, detail::mode_index(spec, k));
    const double x = md.eps0 / spec.temperature;  // beta eps0
    const double q = std::exp(-x);
    const double g = 1.0 / ((1.0 + q) * (1.0 + q));  // e^{beta eps0} / Z^2
    const double c = std::cos(md.delta);
    const double coherent = spec.coherent_weight * std::sin(md.delta) * std::cos(phi) * q * g;

    ModeQuasiDistribution out;
    out.atoms[0] = {0.0, 2.0 * q * g};
    out.atoms[1] = {md.eps_tau + md.eps0, (1.0 - c) * g / 2.0};
    out.atoms[2] = {-md.eps_tau + md.eps0, (1.0 + c) * g / 2.0};
    out.atoms[3] = {md.eps_tau - md.eps0, q * q * (1.0 + c) * g / 2.0};
    out.atoms[4] = {-md.eps_tau - md.eps0, q * q * (1.0 - c) * g / 2.0};
    out.atoms[5] = {md.eps_tau, coherent};
    out.atoms[6] = {-md.eps_tau, -coherent};
    return out;
}

// Dense 4-dimensional system for one (k, -k) mode pair in the pre-quench
// occupation basis {|00>, |10>, |01>, |11>}. H0 is diagonal with
// eps0 (n_k + n_{-k} - 1); the sudden quench leaves the state untouched
// (U = 1) while the {|00>, |11>} sector of H_tau is rotated by Delta/2:
//   H_tau|_{00,11} = eps_tau [[-cos Delta, sin Delta], [sin Delta, cos Delta]].
// The state carries Gibbs populations and the coherences
// <11|rho|00> = p e^{-i phi} / Z^2 and <10|rho|01> = p / Z^2.
struct ModeSystem {
    StateMatrix rho0;
    SpectralOperator h0;
    SpectralOperator h_tau;
    Protocol u;
};

inline ModeSystem oracle_mode_system(const IsingQuenchSpec& spec, double k) {
    const auto md = mode_data(spec, k);
    const double phi = detail::phase_for(spec, detail::mode_index(spec, k));
    const double x = md.eps0 / spec.temperature;
    const double q = std::exp(-x);
    const double g = 1.0 / ((1.0 + q) * (1.0 + q));
    const double p = spec.coherent_weight;

    Matrix h0 = Matrix::Zero(4, 4);
    h0(0, 0) = -md.eps0;
    h0(3, 3) = md.eps0;

    Matrix h_tau = Matrix::Zero(4, 4);
    h_tau(0, 0) = -md.eps_tau * std::cos(md.delta);
    h_tau(3, 3) = md.eps_tau * std::cos(md.delta);
    h_tau(0, 3) = md.eps_tau * std::sin(md.delta);
    h_tau(3, 0) = md.eps_tau * std::sin(md.delta);

    Matrix rho = Matrix::Zero(4, 4);
    rho(0, 0) = g;
    rho(1, 1) = q * g;
    rho(2, 2) = q * g;
    rho(3, 3) = q * q * g;
    rho(3, 0) = p * q * g * std::exp(Complex(0.0, -phi));
    rho(0, 3) = std::conj(rho(3, 0));
    rho(1, 2) = p * q * g;
    rho(2, 1) = p * q * g;

    return {StateMatrix(std::move(rho)), fcs::spectral_decompose(h0),
            fcs::spectral_decompose(h_tau), Protocol::identity(4)};
}

// Single-mode 2x2 block of the initial state in the basis {|0_k>, |1_k>}:
// thermal diagonal (e^{beta eps0/2}, e^{-beta eps0/2})/Z with coherence
// <1|rho|0> = p e^{-i phi/2} / Z, paired with H = eps0 (n - 1/2). Used for
// state-only thermodynamics, where each positive-k mode stands for itself
// and its -k partner.
struct SingleModeState {
    StateMatrix rho0;
    SpectralOperator h0;
};

inline SingleModeState single_mode_state(const IsingQuenchSpec& spec, double k) {
    const auto md = mode_data(spec, k);
    const double phi = detail::phase_for(spec, detail::mode_index(spec, k));
    const double x = md.eps0 / spec.temperature;
    const double q = std::exp(-x);

    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = -md.eps0 / 2.0;
    h(1, 1) = md.eps0 / 2.0;

    Matrix rho = Matrix::Zero(2, 2);
    rho(0, 0) = 1.0 / (1.0 + q);
    rho(1, 1) = q / (1.0 + q);
    rho(1, 0) = spec.coherent_weight * std::sqrt(q) / (1.0 + q) *
                std::exp(Complex(0.0, -phi / 2.0));
    rho(0, 1) = std::conj(rho(1, 0));

    return {StateMatrix(std::move(rho)), fcs::spectral_decompose(h)};
}

// Distribution of the total work W = sum_{k>0} W_k by iterated sparse
// convolution of the per-mode atom lists, merging after each mode and
// dropping atoms below the prune threshold (never by sign). Exact
// enumeration only; chains above the guard are refused.
inline WorkQuasiDistribution convolve_modes(const IsingQuenchSpec& spec,
                                            double merge_tolerance = tol::default_merge,
                                            int max_chain_length = 24,
                                            double prune_threshold = 1e-15) {
    spec.validate();
    if (spec.chain_length > max_chain_length) {
        std::ostringstream msg;
        msg << "convolve_modes: N = " << spec.chain_length
            << " exceeds the exact-enumeration guard N <= " << max_chain_length;
        throw CapacityError(msg.str());
    }
    std::vector<WorkAtom> acc{{0.0, 1.0}};
    for (double k : mode_grid(spec.chain_length)) {
        const auto mode = mode_quasidistribution(spec, k);
        std::vector<WorkAtom> next;
        next.reserve(acc.size() * mode.atoms.size());
        for (const auto& a : acc)
            for (const auto& b : mode.atoms)
                next.push_back({a.w + b.w, a.weight * b.weight});
        acc = WorkQuasiDistribution::from_contributions(std::move(next), merge_tolerance,
                                                        prune_threshold)
                  .atoms();
    }
    return WorkQuasiDistribution::from_contributions(std::move(acc), merge_tolerance);
}

// <W> = sum_{k>0} (eps0 - eps_tau cos Delta) tanh(beta eps0 / 2)
//                 + 2 p eps_tau sin Delta cos phi / Z^2
inline double average_work(const IsingQuenchSpec& spec) {
    spec.validate();
    const auto grid = mode_grid(spec.chain_length);
    double total = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto md = mode_data(spec, grid[i]);
        const double phi = detail::phase_for(spec, i);
        const double x = md.eps0 / spec.temperature;
        const double q = std::exp(-x);
        const double inv_z2 = q / ((1.0 + q) * (1.0 + q));
        total += (md.eps0 - md.eps_tau * std::cos(md.delta)) * std::tanh(x / 2.0) +
                 2.0 * spec.coherent_weight * md.eps_tau * std::sin(md.delta) *
                     std::cos(phi) * inv_z2;
    }
    return total;
}

// delta W^2 = sum_{k>0} 2 (eps_tau^2 + eps0^2 - 2 eps_tau eps0 cos Delta)
//                        * cosh(beta eps0) / Z^2  -  <W_k>^2
// (mode pairs are independent, so the variances add).
inline double work_fluctuation_closed(const IsingQuenchSpec& spec) {
    spec.validate();
    const auto grid = mode_grid(spec.chain_length);
    double total = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto md = mode_data(spec, grid[i]);
        const double phi = detail::phase_for(spec, i);
        const double x = md.eps0 / spec.temperature;
        const double q = std::exp(-x);
        const double inv_z2 = q / ((1.0 + q) * (1.0 + q));
        const double cosh_over_z2 = (1.0 + q * q) / (2.0 * (1.0 + q) * (1.0 + q));
        const double mean =
            (md.eps0 - md.eps_tau * std::cos(md.delta)) * std::tanh(x / 2.0) +
            2.0 * spec.coherent_weight * md.eps_tau * std::sin(md.delta) * std::cos(phi) *
                inv_z2;
        const double second =
            2.0 *
            (md.eps_tau * md.eps_tau + md.eps0 * md.eps0 -
             2.0 * md.eps_tau * md.eps0 * std::cos(md.delta)) *
            cosh_over_z2;
        total += second - mean * mean;
    }
    return total;
}

// <e^{-beta W}> as the exact product over mode pairs of the atom sums
//   sum_j P(W_j) e^{-beta W_j}
//     = [4 cosh^2(beta eps_tau / 2) - 2 p sin Delta cos phi sinh(beta eps_tau)]
//       / (4 cosh^2(beta eps0 / 2)),
// accumulated in log space with sign tracking.
inline SignedLog fluctuation_relation_closed_log(const IsingQuenchSpec& spec) {
    spec.validate();
    const auto grid = mode_grid(spec.chain_length);
    SignedLog total{1.0, 0.0};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto md = mode_data(spec, grid[i]);
        const double phi = detail::phase_for(spec, i);
        const double a = md.eps_tau / spec.temperature;
        const double b = md.eps0 / spec.temperature;
        const double psc = spec.coherent_weight * std::sin(md.delta) * std::cos(phi);
        // numerator / e^a; each term is nonnegative for |psc| <= 1
        const double scaled = (1.0 - psc) + 2.0 * std::exp(-a) +
                              (1.0 + psc) * std::exp(-2.0 * a);
        if (scaled <= 0.0) return {};
        const double log_factor =
            a + std::log(scaled) - b - 2.0 * std::log1p(std::exp(-b));
        total = total * SignedLog{1.0, log_factor};
    }
    return total;
}

inline double fluctuation_relation_closed(const IsingQuenchSpec& spec) {
    return fluctuation_relation_closed_log(spec).value();
}

// ln(Z_tau / Z_0) = sum_{k>0} 2 [ln 2cosh(beta eps_tau/2) - ln 2cosh(beta eps0/2)],
// the Jarzynski value of ln<e^{-beta W}> for p = 0.
inline double log_partition_ratio(const IsingQuenchSpec& spec) {
    spec.validate();
    double total = 0.0;
    for (double k : mode_grid(spec.chain_length)) {
        const auto md = mode_data(spec, k);
        total += 2.0 * (log_two_cosh(md.eps_tau / (2.0 * spec.temperature)) -
                        log_two_cosh(md.eps0 / (2.0 * spec.temperature)));
    }
    return total;
}

// Eigenvalues (Lambda+, Lambda-) of the single-mode 2x2 initial state with
// thermal diagonal (e^{beta eps/2}, e^{-beta eps/2})/Z and off-diagonal
// magnitude p/Z, by explicit diagonalization. Closed form:
//   Lambda+- = 1/2 +- sqrt(sinh^2(beta eps/2) + p^2) / (2 cosh(beta eps/2)).
inline std::pair<double, double> initial_state_eigenvalues(const IsingQuenchSpec& spec,
                                                           double k) {
    const auto md = mode_data(spec, k);
    const double x = md.eps0 / spec.temperature;
    const double q = std::exp(-x);
    Eigen::Matrix2d m;
    m(0, 0) = 1.0 / (1.0 + q);                          // e^{x/2} / Z
    m(1, 1) = q / (1.0 + q);                            // e^{-x/2} / Z
    m(0, 1) = m(1, 0) = spec.coherent_weight * std::exp(-x / 2.0) / (1.0 + q);  // p / Z
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(m);
    return {solver.eigenvalues()[1], solver.eigenvalues()[0]};
}

// Delta F = -T ln Z_tau - F_0 with F_0 assembled per mode pair from the
// single-mode energies and eigenvalue entropies (factor 2 counts the -k
// partner). Independent of the relative phase by construction.
inline double delta_free_energy(const IsingQuenchSpec& spec) {
    spec.validate();
    const double t = spec.temperature;
    double f0 = 0.0, ln_z_tau = 0.0;
    for (double k : mode_grid(spec.chain_length)) {
        const auto md = mode_data(spec, k);
        const auto [lp, lm] = initial_state_eigenvalues(spec, k);
        const double x = md.eps0 / t;
        f0 += -md.eps0 * std::tanh(x / 2.0) +
              2.0 * t * (fcs::detail::xlnx(lp) + fcs::detail::xlnx(lm));
        ln_z_tau += 2.0 * log_two_cosh(md.eps_tau / (2.0 * t));
    }
    return -t * ln_z_tau - f0;
}

// <W_irr> = <W> - Delta F; beta <W_irr> is the entropy production.
inline double irreversible_work(const IsingQuenchSpec& spec) {
    return average_work(spec) - delta_free_energy(spec);
}

// Kink statistic on a uniform grid: the absolute slope change at the center
// index divided by the median absolute slope change elsewhere.
inline double kink_ratio(std::span<const double> values, std::size_t center) {
    if (values.size() < 5 || center == 0 || center + 1 >= values.size())
        throw std::domain_error("kink_ratio: need interior center on a grid of >= 5 points");
    std::vector<double> changes(values.size() - 2);
    for (std::size_t i = 1; i + 1 <= values.size() - 1; ++i)
        changes[i - 1] =
            std::abs((values[i + 1] - values[i]) - (values[i] - values[i - 1]));
    const double at_center = changes[center - 1];
    std::vector<double> rest;
    rest.reserve(changes.size() - 1);
    for (std::size_t i = 0; i < changes.size(); ++i)
        if (i != center - 1) rest.push_back(changes[i]);
    std::sort(rest.begin(), rest.end());
    const std::size_t mid = rest.size() / 2;
    const double median =
        rest.size() % 2 == 1 ? rest[mid] : (rest[mid - 1] + rest[mid]) / 2.0;
    if (median == 0.0) return std::numeric_limits<double>::infinity();
    return at_center / median;
}

}  // namespace cohwork::ising
