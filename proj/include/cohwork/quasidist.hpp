#pragma once

#include "cohwork/linalg.hpp"

#include <algorithm>
#include <sstream>
#include <utility>
#include <vector>

namespace cohwork::fcs {

struct WorkAtom {
    double w = 0.0;       // work value
    double weight = 0.0;  // real weight; may be negative
};

// Normalized atomic measure over work values. Atoms are sorted ascending and
// no two atoms lie closer than the merge tolerance; weights may be negative.
class WorkQuasiDistribution {
  public:
    // Collects raw (value, weight) contributions: sorts, merges clusters of
    // values closer than merge_tolerance by weight addition, drops merged
    // atoms with |weight| <= prune_threshold (exact zeros always go; pruning
    // never looks at sign), and checks normalization.
    static WorkQuasiDistribution from_contributions(std::vector<WorkAtom> contributions,
                                                    double merge_tolerance,
                                                    double prune_threshold = 0.0) {
        if (merge_tolerance <= 0.0)
            throw std::domain_error("WorkQuasiDistribution: merge tolerance must be positive");
        std::sort(contributions.begin(), contributions.end(),
                  [](const WorkAtom& a, const WorkAtom& b) {
                      return a.w != b.w ? a.w < b.w : a.weight < b.weight;
                  });
        std::vector<WorkAtom> atoms;
        atoms.reserve(contributions.size());
        std::size_t i = 0;
        while (i < contributions.size()) {
            std::size_t j = i + 1;
            while (j < contributions.size() &&
                   contributions[j].w - contributions[j - 1].w <= merge_tolerance)
                ++j;
            double weight = 0.0, abs_weight = 0.0, pos = 0.0;
            for (std::size_t t = i; t < j; ++t) {
                weight += contributions[t].weight;
                abs_weight += std::abs(contributions[t].weight);
                pos += std::abs(contributions[t].weight) * contributions[t].w;
            }
            // Representative work value: |weight|-weighted mean of the cluster.
            double w = abs_weight > 1e-300
                           ? pos / abs_weight
                           : (contributions[i].w + contributions[j - 1].w) / 2.0;
            if (std::abs(weight) > prune_threshold) atoms.push_back({w, weight});
            i = j;
        }
        return WorkQuasiDistribution(std::move(atoms), merge_tolerance);
    }

    const std::vector<WorkAtom>& atoms() const { return atoms_; }
    double merge_tolerance() const { return merge_tolerance_; }

    double total_weight() const {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.weight;
        return s;
    }

    double min_weight() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& a : atoms_) m = std::min(m, a.weight);
        return m;
    }

    // n-th moment sum_j w_j^n * weight_j.
    double moment(int n) const {
        double s = 0.0;
        for (const auto& a : atoms_) s += std::pow(a.w, n) * a.weight;
        return s;
    }

    double max_abs_work() const {
        double m = 0.0;
        for (const auto& a : atoms_) m = std::max(m, std::abs(a.w));
        return m;
    }

    // sum_j weight_j * exp(-beta * w_j) with sign tracking in log space.
    SignedLog exp_weighted_sum_log(double beta) const {
        std::vector<double> xs, ws;
        xs.reserve(atoms_.size());
        ws.reserve(atoms_.size());
        for (const auto& a : atoms_) {
            xs.push_back(-beta * a.w);
            ws.push_back(a.weight);
        }
        return signed_log_sum_exp(xs, ws);
    }

  private:
    WorkQuasiDistribution(std::vector<WorkAtom> atoms, double merge_tolerance)
        : atoms_(std::move(atoms)), merge_tolerance_(merge_tolerance) {
        const double total = total_weight();
        if (std::abs(total - 1.0) > 1e-10) {
            std::ostringstream msg;
            msg << "WorkQuasiDistribution: weights sum to " << total;
            throw std::invalid_argument(msg.str());
        }
    }

    std::vector<WorkAtom> atoms_;
    double merge_tolerance_;
};

struct HistogramPoint {
    double w = 0.0;
    double density = 0.0;
};

// Gaussian broadening of the atom comb onto a regular grid, for plotting:
// density(w) = sum_j weight_j * N(w - w_j; sigma).
inline std::vector<HistogramPoint> broadened_histogram(const WorkQuasiDistribution& dist,
                                                       double sigma, double w_min,
                                                       double w_max, int n_points) {
    if (sigma <= 0.0) throw std::domain_error("broadened_histogram: sigma must be positive");
    if (n_points < 2 || !(w_max > w_min))
        throw std::domain_error("broadened_histogram: degenerate grid");
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
    const double step = (w_max - w_min) / (n_points - 1);
    std::vector<HistogramPoint> out(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        const double w = w_min + i * step;
        double density = 0.0;
        for (const auto& a : dist.atoms()) {
            const double t = (w - a.w) / sigma;
            density += a.weight * norm * std::exp(-0.5 * t * t);
        }
        out[static_cast<std::size_t>(i)] = {w, density};
    }
    return out;
}

}  // namespace cohwork::fcs
