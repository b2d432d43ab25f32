#pragma once

#include "cohwork/config.hpp"
#include "cohwork/version.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <optional>
#include <random>
#include <thread>

namespace cohwork::sweep {

namespace detail {

inline void apply_param(ising::IsingQuenchSpec& spec, const std::string& param, double value) {
    if (param == "N")
        spec.chain_length = static_cast<int>(value);
    else if (param == "lambda0")
        spec.field_initial = value;
    else if (param == "delta_lambda")
        spec.quench_amplitude = value;
    else if (param == "T")
        spec.temperature = value;
    else if (param == "p")
        spec.coherent_weight = value;
    else if (param == "phi")
        spec.relative_phase = value;
    else
        throw ConfigError("unknown sweep parameter \"" + param + "\"");
}

inline std::string utc_timestamp() {
    const std::time_t t =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline unsigned thread_budget(std::size_t n_points) {
    unsigned n = 0;
    if (const char* env = std::getenv("COHWORK_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v >= 0) n = static_cast<unsigned>(v);
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, n_points)));
}

// Total-work distribution through the dense engine: per-mode 4-dim systems,
// convolved with the same merge/prune policy as the closed-form route.
inline fcs::WorkQuasiDistribution generic_distribution(const ising::IsingQuenchSpec& spec,
                                                       double merge_tolerance,
                                                       int max_chain_length = 24) {
    if (spec.chain_length > max_chain_length) {
        std::ostringstream msg;
        msg << "generic distribution: N = " << spec.chain_length
            << " exceeds the exact-enumeration guard N <= " << max_chain_length;
        throw CapacityError(msg.str());
    }
    std::vector<fcs::WorkAtom> acc{{0.0, 1.0}};
    for (double k : ising::mode_grid(spec.chain_length)) {
        const auto sys = ising::oracle_mode_system(spec, k);
        const auto mode =
            fcs::quasidistribution(sys.rho0, sys.h0, sys.h_tau, sys.u, merge_tolerance);
        std::vector<fcs::WorkAtom> next;
        next.reserve(acc.size() * mode.atoms().size());
        for (const auto& a : acc)
            for (const auto& b : mode.atoms())
                next.push_back({a.w + b.w, a.weight * b.weight});
        acc = fcs::WorkQuasiDistribution::from_contributions(std::move(next), merge_tolerance,
                                                             1e-15)
                  .atoms();
    }
    return fcs::WorkQuasiDistribution::from_contributions(std::move(acc), merge_tolerance);
}

struct ScalarBundle {
    std::optional<double> average_work;
    std::optional<double> fluctuation;
    std::optional<double> fluctuation_relation;
    std::optional<double> delta_f;
    std::optional<double> w_irr;
    std::optional<fcs::WorkDecomposition> decomposition;
};

inline ScalarBundle ising_scalars(const ExperimentConfig& cfg,
                                  const ising::IsingQuenchSpec& spec) {
    ScalarBundle out;
    if (cfg.wants(OutputKind::average_work)) out.average_work = ising::average_work(spec);
    if (cfg.wants(OutputKind::fluctuation))
        out.fluctuation = ising::work_fluctuation_closed(spec);
    if (cfg.wants(OutputKind::fluctuation_relation))
        out.fluctuation_relation = ising::fluctuation_relation_closed(spec);
    if (cfg.wants(OutputKind::delta_f) || cfg.wants(OutputKind::w_irr)) {
        const double df = ising::delta_free_energy(spec);
        out.delta_f = df;
        out.w_irr = ising::average_work(spec) - df;
    }
    if (cfg.wants(OutputKind::decomposition)) {
        fcs::WorkDecomposition d;
        d.w_in_indep = -spec.temperature * ising::log_partition_ratio(spec);
        double w_in_sum = 0.0, w_sum = 0.0;
        double m2_modes = 0.0, w_in_sq = 0.0, w_sq = 0.0;
        const auto grid = ising::mode_grid(spec.chain_length);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto md = ising::mode_data(spec, grid[i]);
            const double phi = ising::detail::phase_for(spec, i);
            const double x = md.eps0 / spec.temperature;
            const double q = std::exp(-x);
            const double inv_z2 = q / ((1.0 + q) * (1.0 + q));
            const double w_in =
                (md.eps0 - md.eps_tau * std::cos(md.delta)) * std::tanh(x / 2.0);
            const double w_c = 2.0 * spec.coherent_weight * md.eps_tau *
                               std::sin(md.delta) * std::cos(phi) * inv_z2;
            const double m2 = 2.0 *
                              (md.eps_tau * md.eps_tau + md.eps0 * md.eps0 -
                               2.0 * md.eps_tau * md.eps0 * std::cos(md.delta)) *
                              (1.0 + q * q) / (2.0 * (1.0 + q) * (1.0 + q));
            w_in_sum += w_in;
            w_sum += w_in + w_c;
            m2_modes += m2;
            w_in_sq += w_in * w_in;
            w_sq += (w_in + w_c) * (w_in + w_c);
        }
        d.w_in_dep = w_in_sum - d.w_in_indep;
        d.w_coherent = w_sum - w_in_sum;
        d.m2_in = m2_modes + w_in_sum * w_in_sum - w_in_sq;
        d.m2_coherent = (m2_modes + w_sum * w_sum - w_sq) - d.m2_in;
        out.decomposition = d;
    }
    return out;
}

inline ScalarBundle generic_scalars(const ExperimentConfig& cfg,
                                    const ising::IsingQuenchSpec& spec) {
    ScalarBundle out;
    const auto grid = ising::mode_grid(spec.chain_length);

    const bool need_moments = cfg.wants(OutputKind::average_work) ||
                              cfg.wants(OutputKind::fluctuation) ||
                              cfg.wants(OutputKind::w_irr);
    const bool need_thermo = cfg.wants(OutputKind::delta_f) || cfg.wants(OutputKind::w_irr);

    double w_total = 0.0, var_total = 0.0;
    SignedLog fr{1.0, 0.0};
    double f0_total = 0.0, ln_z_tau = 0.0;
    fcs::WorkDecomposition d;
    double w_in_sum = 0.0, w_sum = 0.0, m2_modes = 0.0, w_in_sq = 0.0, w_sq = 0.0;

    for (double k : grid) {
        if (need_moments || cfg.wants(OutputKind::fluctuation_relation) ||
            cfg.wants(OutputKind::decomposition)) {
            const auto sys = ising::oracle_mode_system(spec, k);
            if (need_moments) {
                const double m1 = fcs::work_moment(sys.rho0, sys.h0, sys.h_tau, sys.u, 1);
                const double m2 = fcs::work_moment(sys.rho0, sys.h0, sys.h_tau, sys.u, 2);
                w_total += m1;
                var_total += m2 - m1 * m1;
            }
            if (cfg.wants(OutputKind::fluctuation_relation))
                fr = fr * SignedLog::from_value(fcs::fluctuation_relation(
                         sys.rho0, sys.h0, sys.h_tau, sys.u, spec.temperature,
                         cfg.merge_tolerance));
            if (cfg.wants(OutputKind::decomposition)) {
                const auto dk = fcs::work_decomposition(sys.rho0, sys.h0, sys.h_tau, sys.u,
                                                        spec.temperature);
                d.w_in_indep += dk.w_in_indep;
                const double w_in = dk.w_in_indep + dk.w_in_dep;
                w_in_sum += w_in;
                w_sum += dk.total_work();
                m2_modes += dk.total_second_moment();
                w_in_sq += w_in * w_in;
                w_sq += dk.total_work() * dk.total_work();
            }
        }
        if (need_thermo) {
            const auto md = ising::mode_data(spec, k);
            const auto single = ising::single_mode_state(spec, k);
            f0_total +=
                2.0 * fcs::free_energy(single.rho0, single.h0, spec.temperature).total();
            ln_z_tau += 2.0 * log_two_cosh(md.eps_tau / (2.0 * spec.temperature));
        }
    }

    if (cfg.wants(OutputKind::average_work)) out.average_work = w_total;
    if (cfg.wants(OutputKind::fluctuation)) out.fluctuation = var_total;
    if (cfg.wants(OutputKind::fluctuation_relation)) out.fluctuation_relation = fr.value();
    if (need_thermo) {
        const double df = -spec.temperature * ln_z_tau - f0_total;
        out.delta_f = df;
        out.w_irr = w_total - df;
    }
    if (cfg.wants(OutputKind::decomposition)) {
        d.w_in_dep = w_in_sum - d.w_in_indep;
        d.w_coherent = w_sum - w_in_sum;
        d.m2_in = m2_modes + w_in_sum * w_in_sum - w_in_sq;
        d.m2_coherent = (m2_modes + w_sum * w_sum - w_sq) - d.m2_in;
        out.decomposition = d;
    }
    return out;
}

struct PointResult {
    std::vector<double> scalars;
    std::vector<fcs::WorkAtom> distribution;
    std::vector<fcs::HistogramPoint> histogram;
};

inline PointResult compute_point(const ExperimentConfig& cfg,
                                 const ising::IsingQuenchSpec& spec) {
    spec.validate();
    PointResult out;

    const bool needs_distribution =
        cfg.wants(OutputKind::distribution) || cfg.wants(OutputKind::histogram);
    if (needs_distribution) {
        const auto dist = cfg.engine == Engine::ising
                              ? ising::convolve_modes(spec, cfg.merge_tolerance)
                              : generic_distribution(spec, cfg.merge_tolerance);
        if (cfg.wants(OutputKind::distribution)) out.distribution = dist.atoms();
        if (cfg.wants(OutputKind::histogram))
            out.histogram =
                fcs::broadened_histogram(dist, cfg.histogram->sigma, cfg.histogram->w_min,
                                         cfg.histogram->w_max, cfg.histogram->n_points);
    }

    const auto bundle = cfg.engine == Engine::ising ? ising_scalars(cfg, spec)
                                                    : generic_scalars(cfg, spec);
    for (auto kind : cfg.outputs) {
        switch (kind) {
            case OutputKind::average_work: out.scalars.push_back(*bundle.average_work); break;
            case OutputKind::fluctuation: out.scalars.push_back(*bundle.fluctuation); break;
            case OutputKind::fluctuation_relation:
                out.scalars.push_back(*bundle.fluctuation_relation);
                break;
            case OutputKind::delta_f: out.scalars.push_back(*bundle.delta_f); break;
            case OutputKind::w_irr: out.scalars.push_back(*bundle.w_irr); break;
            case OutputKind::decomposition: {
                const auto& dd = *bundle.decomposition;
                out.scalars.insert(out.scalars.end(),
                                   {dd.w_in_indep, dd.w_in_dep, dd.w_coherent, dd.m2_in,
                                    dd.m2_coherent});
                break;
            }
            case OutputKind::distribution:
            case OutputKind::histogram: break;
        }
    }
    return out;
}

}  // namespace detail

struct ExperimentResult {
    std::optional<ResultTable> scalars;
    std::optional<ResultTable> distribution;
    std::optional<ResultTable> histogram;
};

// Executes the sweep lattice (lexicographic over the declared axes), in
// parallel across points when COHWORK_THREADS allows. Row order is defined
// by the lattice, not by completion order.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    // Resolve the lattice.
    std::vector<std::vector<double>> points;  // one entry per point: axis values
    if (cfg.sweep.empty()) {
        points.push_back({});
    } else if (cfg.sweep.size() == 1) {
        for (double v : cfg.sweep[0].values) points.push_back({v});
    } else {
        for (double a : cfg.sweep[0].values)
            for (double b : cfg.sweep[1].values) points.push_back({a, b});
    }

    std::vector<detail::PointResult> results(points.size());
    std::vector<std::string> errors(points.size());
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&](unsigned start, unsigned stride) {
        for (std::size_t i = start; i < points.size(); i += stride) {
            ising::IsingQuenchSpec spec = cfg.base;
            for (std::size_t a = 0; a < cfg.sweep.size(); ++a)
                detail::apply_param(spec, cfg.sweep[a].param, points[i][a]);
            try {
                results[i] = detail::compute_point(cfg, spec);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    std::ostringstream at;
                    at << "at sweep point (";
                    for (std::size_t a = 0; a < cfg.sweep.size(); ++a)
                        at << (a ? ", " : "") << cfg.sweep[a].param << " = " << points[i][a];
                    at << ")";
                    try {
                        throw;
                    } catch (const CapacityError& e) {
                        first_error = std::make_exception_ptr(
                            CapacityError(std::string(e.what()) + " " + at.str()));
                    } catch (const std::exception& e) {
                        first_error = std::make_exception_ptr(
                            ConfigError(std::string(e.what()) + " " + at.str()));
                    }
                }
            }
        }
    };

    const unsigned n_threads = detail::thread_budget(points.size());
    if (n_threads <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) threads.emplace_back(worker, t, n_threads);
        for (auto& th : threads) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    Json metadata;
    metadata["config"] = config_to_json(cfg);
    metadata["engine_version"] = kVersion;
    metadata["timestamp"] = detail::utc_timestamp();
    metadata["conventions"] = {
        {"initial_state_eigenvalues",
         "explicit 2x2 diagonalization; closed form uses denominator 2 cosh(beta eps0 / 2)"},
        {"exp_beta_work", "exact product over mode pairs of atom sums"}};

    std::vector<std::string> axis_names;
    for (const auto& axis : cfg.sweep) axis_names.push_back(axis.param);

    ExperimentResult out;

    std::vector<std::string> scalar_columns = axis_names;
    for (auto kind : cfg.outputs) {
        switch (kind) {
            case OutputKind::distribution:
            case OutputKind::histogram: break;
            case OutputKind::decomposition:
                scalar_columns.insert(scalar_columns.end(),
                                      {"w_in_indep", "w_in_dep", "w_coherent", "m2_in",
                                       "m2_coherent"});
                break;
            default: scalar_columns.push_back(to_string(kind));
        }
    }
    if (scalar_columns.size() > axis_names.size()) {
        ResultTable table;
        table.columns = scalar_columns;
        table.metadata = metadata;
        table.metadata["table"] = "scalars";
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::vector<double> row = points[i];
            row.insert(row.end(), results[i].scalars.begin(), results[i].scalars.end());
            table.rows.push_back(std::move(row));
        }
        out.scalars = std::move(table);
    }

    if (cfg.wants(OutputKind::distribution)) {
        ResultTable table;
        table.columns = axis_names;
        table.columns.insert(table.columns.end(), {"w", "weight"});
        table.metadata = metadata;
        table.metadata["table"] = "distribution";
        for (std::size_t i = 0; i < points.size(); ++i)
            for (const auto& atom : results[i].distribution) {
                std::vector<double> row = points[i];
                row.push_back(atom.w);
                row.push_back(atom.weight);
                table.rows.push_back(std::move(row));
            }
        out.distribution = std::move(table);
    }

    if (cfg.wants(OutputKind::histogram)) {
        ResultTable table;
        table.columns = axis_names;
        table.columns.insert(table.columns.end(), {"w", "density"});
        table.metadata = metadata;
        table.metadata["table"] = "histogram";
        for (std::size_t i = 0; i < points.size(); ++i)
            for (const auto& pt : results[i].histogram) {
                std::vector<double> row = points[i];
                row.push_back(pt.w);
                row.push_back(pt.density);
                table.rows.push_back(std::move(row));
            }
        out.histogram = std::move(table);
    }
    return out;
}

// Randomized equivalence check between the closed-form per-mode distribution
// and the dense-engine evaluation of the matching 4-dim mode system. Returns
// the largest atom-wise deviation over the requested number of trials.
inline double oracle_max_deviation(int trials, unsigned long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const std::array<int, 6> sizes = {2, 4, 8, 10, 50, 100};

    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        ising::IsingQuenchSpec spec;
        spec.chain_length = sizes[static_cast<std::size_t>(rng() % sizes.size())];
        do {
            spec.field_initial = 3.0 * u01(rng);
            spec.quench_amplitude = -0.5 + 1.5 * u01(rng);
        } while (spec.field_final() < 0.0);
        spec.temperature = std::pow(10.0, -2.0 + 4.0 * u01(rng));  // log-uniform on [0.01, 100]
        spec.coherent_weight = u01(rng);
        spec.relative_phase = 2.0 * M_PI * u01(rng);

        const auto grid = ising::mode_grid(spec.chain_length);
        const double k = grid[static_cast<std::size_t>(rng() % grid.size())];

        const auto closed = ising::mode_quasidistribution(spec, k).merged();
        const auto sys = ising::oracle_mode_system(spec, k);
        const auto dense = fcs::quasidistribution(sys.rho0, sys.h0, sys.h_tau, sys.u);

        // Walk both sorted atom lists; an atom missing from one side counts
        // with its full weight.
        const auto& a = closed.atoms();
        const auto& b = dense.atoms();
        std::size_t i = 0, j = 0;
        double dev = 0.0;
        while (i < a.size() || j < b.size()) {
            if (i < a.size() && j < b.size() && std::abs(a[i].w - b[j].w) <= 1e-6) {
                dev = std::max(dev, std::abs(a[i].weight - b[j].weight));
                ++i, ++j;
            } else if (j >= b.size() || (i < a.size() && a[i].w < b[j].w)) {
                dev = std::max(dev, std::abs(a[i].weight));
                ++i;
            } else {
                dev = std::max(dev, std::abs(b[j].weight));
                ++j;
            }
        }
        worst = std::max(worst, dev);
    }
    return worst;
}

}  // namespace cohwork::sweep
