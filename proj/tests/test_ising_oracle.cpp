#include "cohwork/experiment.hpp"
#include "support/random_systems.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <unsupported/Eigen/KroneckerProduct>

using namespace cohwork;
using namespace cohwork::ising;

namespace {

IsingQuenchSpec make_spec(int n, double lambda0, double dlambda, double t, double p,
                          double phi) {
    IsingQuenchSpec spec;
    spec.chain_length = n;
    spec.field_initial = lambda0;
    spec.quench_amplitude = dlambda;
    spec.temperature = t;
    spec.coherent_weight = p;
    spec.relative_phase = phi;
    return spec;
}

double dist_distance(const fcs::WorkQuasiDistribution& a, const fcs::WorkQuasiDistribution& b) {
    const auto& xs = a.atoms();
    const auto& ys = b.atoms();
    std::size_t i = 0, j = 0;
    double dev = 0.0;
    while (i < xs.size() || j < ys.size()) {
        if (i < xs.size() && j < ys.size() && std::abs(xs[i].w - ys[j].w) <= 1e-6) {
            dev = std::max(dev, std::abs(xs[i].weight - ys[j].weight));
            ++i, ++j;
        } else if (j >= ys.size() || (i < xs.size() && xs[i].w < ys[j].w)) {
            dev = std::max(dev, std::abs(xs[i].weight));
            ++i;
        } else {
            dev = std::max(dev, std::abs(ys[j].weight));
            ++j;
        }
    }
    return dev;
}

}  // namespace

TEST_CASE("oracle_mode_system: null quench is a point mass") {
    const auto spec = make_spec(10, 0.7, 0.0, 2.0, 0.9, 0.4);
    const auto sys = oracle_mode_system(spec, mode_grid(10)[0]);
    const auto dist = fcs::quasidistribution(sys.rho0, sys.h0, sys.h_tau, sys.u);
    REQUIRE(dist.atoms().size() == 1);
    CHECK(dist.atoms()[0].w == Catch::Approx(0.0).margin(1e-12));
    CHECK(dist.atoms()[0].weight == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("oracle_mode_system: p = 0 reproduces the two-point-measurement lines") {
    const auto spec = make_spec(10, 0.5, 0.4, 1.5, 0.0, 1.0);
    for (double k : mode_grid(10)) {
        const auto sys = oracle_mode_system(spec, k);
        const auto dense = fcs::quasidistribution(sys.rho0, sys.h0, sys.h_tau, sys.u);
        CHECK(dense.min_weight() >= -1e-12);
        CHECK(dist_distance(dense, mode_quasidistribution(spec, k).merged()) < 1e-12);
    }
}

TEST_CASE("oracle_mode_system: coherent atoms carry the +- p sin Delta / Z^2 pattern") {
    const auto spec = make_spec(10, 0.0, 0.5, 100.0, 1.0, 0.0);
    const double k = mode_grid(10)[2];
    const auto md = mode_data(spec, k);
    const auto sys = oracle_mode_system(spec, k);
    const auto dense = fcs::quasidistribution(sys.rho0, sys.h0, sys.h_tau, sys.u);

    const double x = md.eps0 / spec.temperature;
    const double q = std::exp(-x);
    const double expected = std::sin(md.delta) * q / ((1.0 + q) * (1.0 + q));

    double at_plus = 0.0, at_minus = 0.0;
    for (const auto& a : dense.atoms()) {
        if (std::abs(a.w - md.eps_tau) < 1e-9) at_plus = a.weight;
        if (std::abs(a.w + md.eps_tau) < 1e-9) at_minus = a.weight;
    }
    CHECK(at_plus == Catch::Approx(expected).margin(1e-12));
    CHECK(at_minus == Catch::Approx(-expected).margin(1e-12));
    CHECK(at_plus < 0.0);  // Delta < 0 for a positive quench
}

TEST_CASE("oracle_mode_system: pinned case at k = pi/2, phi = pi") {
    const auto spec = make_spec(2, 0.0, 0.5, 100.0, 1.0, M_PI);
    const auto sys = oracle_mode_system(spec, M_PI / 2.0);
    const auto dense = fcs::quasidistribution(sys.rho0, sys.h0, sys.h_tau, sys.u);
    const auto closed = mode_quasidistribution(spec, M_PI / 2.0).merged();
    CHECK(dist_distance(dense, closed) < 1e-10);
}

TEST_CASE("oracle equivalence: 200 randomized specs match atom-by-atom") {
    CHECK(sweep::oracle_max_deviation(200, 77001) < 1e-9);
}

TEST_CASE("oracle_mode_system: sudden-quench identity for the initial energy") {
    std::mt19937_64 rng(35001);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto spec = make_spec(10, 3.0 * u01(rng), u01(rng), 0.5 + 5.0 * u01(rng),
                                    u01(rng), 2.0 * M_PI * u01(rng));
        const double k = mode_grid(10)[rng() % 5];
        const auto sys = oracle_mode_system(spec, k);
        const double direct = (sys.rho0.matrix() * sys.h0.matrix()).trace().real();
        // Same expectation assembled in the post-quench eigenrepresentation.
        const Matrix vt = sys.h_tau.eigenvectors();
        const double rotated =
            ((vt.adjoint() * sys.rho0.matrix() * vt) * (vt.adjoint() * sys.h0.matrix() * vt))
                .trace()
                .real();
        CHECK(direct == Catch::Approx(rotated).margin(1e-10));
    }
}

TEST_CASE("convolve_modes: N = 4 matches a full 16-dimensional dense computation") {
    // The strongest end-to-end check: build the two-pair composite system
    // explicitly (tensor products of the per-pair blocks) and push it through
    // the dense engine in one shot, exercising merging and convolution
    // against a route that never factorizes over modes.
    std::mt19937_64 rng(35010);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        IsingQuenchSpec spec;
        spec.chain_length = 4;
        do {
            spec.field_initial = 3.0 * u01(rng);
            spec.quench_amplitude = -0.5 + 1.5 * u01(rng);
        } while (spec.field_final() < 0.0);
        spec.temperature = 0.5 + 10.0 * u01(rng);
        spec.coherent_weight = u01(rng);
        spec.relative_phase = 2.0 * M_PI * u01(rng);

        const auto grid = mode_grid(4);
        const auto a = oracle_mode_system(spec, grid[0]);
        const auto b = oracle_mode_system(spec, grid[1]);
        const Matrix id4 = Matrix::Identity(4, 4);
        const Matrix rho =
            Eigen::kroneckerProduct(a.rho0.matrix(), b.rho0.matrix());
        const Matrix h0 = Eigen::kroneckerProduct(a.h0.matrix(), id4) +
                          Eigen::kroneckerProduct(id4, b.h0.matrix());
        const Matrix h_tau = Eigen::kroneckerProduct(a.h_tau.matrix(), id4) +
                             Eigen::kroneckerProduct(id4, b.h_tau.matrix());
        const auto dense = fcs::quasidistribution(
            fcs::StateMatrix(rho), fcs::spectral_decompose(h0),
            fcs::spectral_decompose(h_tau), fcs::Protocol::identity(16));
        const auto closed = convolve_modes(spec);
        CHECK(dist_distance(dense, closed) < 1e-9);
    }
}

TEST_CASE("average_work matches the dense per-mode first moments") {
    std::mt19937_64 rng(35002);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        IsingQuenchSpec spec;
        spec.chain_length = 2 * (1 + static_cast<int>(rng() % 8));
        do {
            spec.field_initial = 3.0 * u01(rng);
            spec.quench_amplitude = -0.5 + 1.5 * u01(rng);
        } while (spec.field_final() < 0.0);
        spec.temperature = std::pow(10.0, -2.0 + 4.0 * u01(rng));
        spec.coherent_weight = u01(rng);
        spec.relative_phase = 2.0 * M_PI * u01(rng);

        double dense_sum = 0.0, dense_var = 0.0;
        for (double k : mode_grid(spec.chain_length)) {
            const auto sys = oracle_mode_system(spec, k);
            const double m1 = fcs::work_moment(sys.rho0, sys.h0, sys.h_tau, sys.u, 1);
            const double m2 = fcs::work_moment(sys.rho0, sys.h0, sys.h_tau, sys.u, 2);
            dense_sum += m1;
            dense_var += m2 - m1 * m1;
        }
        CHECK(average_work(spec) == Catch::Approx(dense_sum).margin(1e-9));
        CHECK(work_fluctuation_closed(spec) == Catch::Approx(dense_var).margin(1e-8));
    }
}

TEST_CASE("fluctuation_relation_closed: Jarzynski at p = 0") {
    std::mt19937_64 rng(35003);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        IsingQuenchSpec spec;
        spec.chain_length = 2 * (1 + static_cast<int>(rng() % 10));
        do {
            spec.field_initial = 3.0 * u01(rng);
            spec.quench_amplitude = -0.5 + 1.5 * u01(rng);
        } while (spec.field_final() < 0.0);
        spec.temperature = std::pow(10.0, -2.0 + 4.0 * u01(rng));
        spec.coherent_weight = 0.0;
        const auto lg = fluctuation_relation_closed_log(spec);
        CHECK(lg.sign == 1.0);
        CHECK(std::abs(lg.log_abs - log_partition_ratio(spec)) < 1e-10);
    }
}

TEST_CASE("fluctuation_relation_closed: null quench gives 1 for any p, phi") {
    for (double p : {0.0, 0.5, 1.0})
        for (double phi : {0.0, 1.2, M_PI}) {
            const auto spec = make_spec(10, 1.3, 0.0, 2.0, p, phi);
            CHECK(fluctuation_relation_closed(spec) == Catch::Approx(1.0).margin(1e-12));
        }
}

TEST_CASE("fluctuation_relation_closed: matches the dense engine per mode") {
    std::mt19937_64 rng(35004);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        IsingQuenchSpec spec;
        spec.chain_length = 2;
        do {
            spec.field_initial = 3.0 * u01(rng);
            spec.quench_amplitude = -0.5 + 1.5 * u01(rng);
        } while (spec.field_final() < 0.0);
        spec.temperature = 0.5 + 10.0 * u01(rng);
        spec.coherent_weight = u01(rng);
        spec.relative_phase = 2.0 * M_PI * u01(rng);
        const auto sys = oracle_mode_system(spec, M_PI / 2.0);
        const double dense =
            fcs::fluctuation_relation(sys.rho0, sys.h0, sys.h_tau, sys.u, spec.temperature);
        const double closed = fluctuation_relation_closed(spec);
        CHECK(std::abs(closed - dense) <= 1e-10 * std::max(1.0, std::abs(dense)));
    }
}

TEST_CASE("fluctuation_relation_closed: coherence shifts the value monotonically in cos phi") {
    // For Delta < 0 the coherent atoms add -2 p sin Delta cos phi sinh(beta
    // eps_tau)/Z^2 > 0 at phi = 0, so the value sits above the Jarzynski
    // point, and below it at phi = pi. Both engines agree on this ordering.
    const auto base = make_spec(2, 0.0, 0.5, 2.0, 1.0, 0.0);
    auto at_phi = [&](double p, double phi) {
        auto spec = base;
        spec.coherent_weight = p;
        spec.relative_phase = phi;
        return spec;
    };
    const double jarzynski = fluctuation_relation_closed(at_phi(0.0, 0.0));
    const double aligned = fluctuation_relation_closed(at_phi(1.0, 0.0));
    const double opposed = fluctuation_relation_closed(at_phi(1.0, M_PI));
    CHECK(aligned > jarzynski);
    CHECK(opposed < jarzynski);

    const auto sys_aligned = oracle_mode_system(at_phi(1.0, 0.0), M_PI / 2.0);
    const auto sys_opposed = oracle_mode_system(at_phi(1.0, M_PI), M_PI / 2.0);
    const double dense_aligned = fcs::fluctuation_relation(
        sys_aligned.rho0, sys_aligned.h0, sys_aligned.h_tau, sys_aligned.u, 2.0);
    const double dense_opposed = fcs::fluctuation_relation(
        sys_opposed.rho0, sys_opposed.h0, sys_opposed.h_tau, sys_opposed.u, 2.0);
    CHECK(dense_aligned == Catch::Approx(aligned).epsilon(1e-10));
    CHECK(dense_opposed == Catch::Approx(opposed).epsilon(1e-10));
}

TEST_CASE("delta_free_energy: trivial and thermal reductions") {
    CHECK(delta_free_energy(make_spec(10, 0.8, 0.0, 1.0, 0.0, 0.0)) ==
          Catch::Approx(0.0).margin(1e-12));

    std::mt19937_64 rng(35005);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        IsingQuenchSpec spec;
        spec.chain_length = 2 * (1 + static_cast<int>(rng() % 10));
        do {
            spec.field_initial = 3.0 * u01(rng);
            spec.quench_amplitude = -0.5 + 1.5 * u01(rng);
        } while (spec.field_final() < 0.0);
        spec.temperature = std::pow(10.0, -2.0 + 4.0 * u01(rng));
        spec.coherent_weight = 0.0;
        const double expected = -spec.temperature * log_partition_ratio(spec);
        CHECK(std::abs(delta_free_energy(spec) - expected) <=
              1e-10 * std::max(1.0, std::abs(expected)));
    }
}

TEST_CASE("delta_free_energy: independent of the relative phase") {
    for (double p : {0.3, 1.0})
        for (double lambda0 : {0.0, 1.0, 2.0}) {
            const double reference =
                delta_free_energy(make_spec(100, lambda0, 0.1, 100.0, p, 0.0));
            for (double phi : {0.5, M_PI / 2.0, M_PI, 5.0}) {
                const double value =
                    delta_free_energy(make_spec(100, lambda0, 0.1, 100.0, p, phi));
                CHECK(std::abs(value - reference) <= 1e-10);
            }
        }
}

TEST_CASE("delta_free_energy: matches the dense report on thermal mode systems") {
    std::mt19937_64 rng(35006);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        IsingQuenchSpec spec;
        spec.chain_length = 2 * (1 + static_cast<int>(rng() % 6));
        do {
            spec.field_initial = 3.0 * u01(rng);
            spec.quench_amplitude = -0.5 + 1.5 * u01(rng);
        } while (spec.field_final() < 0.0);
        spec.temperature = 0.3 + 5.0 * u01(rng);
        spec.coherent_weight = 0.0;
        double dense = 0.0;
        for (double k : mode_grid(spec.chain_length)) {
            const auto sys = oracle_mode_system(spec, k);
            dense += fcs::thermodynamic_report(sys.rho0, sys.h0, sys.h_tau, sys.u,
                                               spec.temperature)
                         .delta_f;
        }
        CHECK(delta_free_energy(spec) == Catch::Approx(dense).margin(1e-8));
    }
}

TEST_CASE("delta_free_energy: matches the dense report on product-state mode systems") {
    // The per-mode eigenvalue route treats each mode as an independent 2x2
    // block; the matching dense system is the tensor product of the k and -k
    // blocks, whose pair free energy is exactly twice the single-mode one.
    std::mt19937_64 rng(35007);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        IsingQuenchSpec spec;
        spec.chain_length = 2 * (1 + static_cast<int>(rng() % 6));
        do {
            spec.field_initial = 3.0 * u01(rng);
            spec.quench_amplitude = -0.5 + 1.5 * u01(rng);
        } while (spec.field_final() < 0.0);
        spec.temperature = 0.3 + 5.0 * u01(rng);
        spec.coherent_weight = u01(rng);
        spec.relative_phase = 2.0 * M_PI * u01(rng);

        double dense = 0.0;
        for (double k : mode_grid(spec.chain_length)) {
            const auto single = single_mode_state(spec, k);
            const auto pair_sys = oracle_mode_system(spec, k);
            const Matrix rho_prod = Eigen::kroneckerProduct(single.rho0.matrix(),
                                                            single.rho0.matrix());
            const Matrix h_pair =
                Eigen::kroneckerProduct(single.h0.matrix(), Matrix::Identity(2, 2)) +
                Eigen::kroneckerProduct(Matrix::Identity(2, 2), single.h0.matrix());
            const auto report = fcs::thermodynamic_report(
                fcs::StateMatrix(rho_prod), fcs::spectral_decompose(h_pair),
                pair_sys.h_tau, fcs::Protocol::identity(4), spec.temperature);
            dense += report.delta_f;
        }
        CHECK(delta_free_energy(spec) == Catch::Approx(dense).margin(1e-8));
    }
}

TEST_CASE("delta_free_energy: coherence erasure reduces Delta F") {
    const double at_p0 = delta_free_energy(make_spec(100, 0.0, 0.1, 100.0, 0.0, 0.0));
    const double at_p1 = delta_free_energy(make_spec(100, 0.0, 0.1, 100.0, 1.0, 0.0));
    CHECK(at_p1 < at_p0);
}

TEST_CASE("irreversible_work: trivial zero and monotone growth with p") {
    CHECK(irreversible_work(make_spec(10, 0.5, 0.0, 1.0, 0.0, 0.0)) ==
          Catch::Approx(0.0).margin(1e-12));

    double previous = -1e-9;
    for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double w = irreversible_work(make_spec(100, 0.0, 0.1, 100.0, p, 0.0));
        CHECK(w >= -1e-9);
        CHECK(w >= previous);
        previous = w;
    }
}

TEST_CASE("irreversible_work: pure coherence erasure under a null quench") {
    const auto spec = make_spec(10, 0.7, 0.0, 2.0, 1.0, 0.9);
    double f0_coherent = 0.0;
    for (double k : mode_grid(spec.chain_length)) {
        const auto single = single_mode_state(spec, k);
        f0_coherent +=
            2.0 * fcs::free_energy(single.rho0, single.h0, spec.temperature).coherent;
    }
    CHECK(irreversible_work(spec) == Catch::Approx(f0_coherent).margin(1e-8));
}
