#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ridepool/core.hpp"

namespace ridepool {

// One latent behavioral class: value of time (currency/hour) and penalty
// for sharing (multiplier), each normally distributed with zero covariance.
struct BehavioralClass {
    double mean_vot = 0.0;
    double std_vot = 0.0;
    double mean_pfs = 1.0;
    double std_pfs = 0.0;
    double share = 1.0;
};

enum class Marginal { ValueOfTime, PenaltyForSharing };

// Lower truncation bounds for the traits. A value of time below zero or a
// sharing penalty below one is clamped onto the bound.
struct TraitBounds {
    double min_vot = 0.0;
    double min_pfs = 1.0;

    double bound(Marginal m) const {
        return m == Marginal::ValueOfTime ? min_vot : min_pfs;
    }
};

class BehavioralMixture {
  public:
    explicit BehavioralMixture(std::vector<BehavioralClass> classes,
                               TraitBounds bounds = {})
        : classes_(std::move(classes)), bounds_(bounds) {
        if (classes_.empty())
            throw std::invalid_argument("mixture needs at least one class");
        double total = 0.0;
        for (const auto& c : classes_) {
            if (c.std_vot <= 0.0 || c.std_pfs <= 0.0)
                throw std::invalid_argument("class stddev must be positive");
            if (c.share <= 0.0 || c.share > 1.0)
                throw std::invalid_argument("class share must be in (0, 1]");
            total += c.share;
        }
        if (std::fabs(total - 1.0) > 1e-9)
            throw std::invalid_argument("class shares must sum to 1");
    }

    const std::vector<BehavioralClass>& classes() const { return classes_; }
    const TraitBounds& bounds() const { return bounds_; }

    // Mixture cdf of the clamped marginal. Right-continuous; the mass of
    // draws below the truncation bound sits as an atom on the bound.
    double cdf(Marginal m, double x) const {
        if (x < bounds_.bound(m)) return 0.0;
        double p = 0.0;
        for (const auto& c : classes_)
            p += c.share * detail::normal_cdf(x, mean_of(c, m), std_of(c, m));
        return p;
    }

    double mean(Marginal m) const {
        double v = 0.0;
        for (const auto& c : classes_) v += c.share * mean_of(c, m);
        return v;
    }

    // Table preset used throughout the experiments: four latent classes.
    static BehavioralMixture nyc_4class() {
        return BehavioralMixture({
            {16.98, 0.318, 1.220, 0.082, 0.29},
            {14.02, 0.201, 1.135, 0.071, 0.28},
            {26.25, 5.777, 1.049, 0.060, 0.24},
            {7.78, 1.000, 1.180, 0.076, 0.19},
        });
    }

  private:
    static double mean_of(const BehavioralClass& c, Marginal m) {
        return m == Marginal::ValueOfTime ? c.mean_vot : c.mean_pfs;
    }
    static double std_of(const BehavioralClass& c, Marginal m) {
        return m == Marginal::ValueOfTime ? c.std_vot : c.std_pfs;
    }

    std::vector<BehavioralClass> classes_;
    TraitBounds bounds_;
};

// Quantile of a mixture marginal, found by bracketing and bisection on the
// analytic mixture cdf, then clamped at the truncation bound.
inline double mixture_quantile(const BehavioralMixture& mix, Marginal m,
                               double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("quantile level must be in (0, 1)");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& c : mix.classes()) {
        const double mean = m == Marginal::ValueOfTime ? c.mean_vot : c.mean_pfs;
        const double sd = m == Marginal::ValueOfTime ? c.std_vot : c.std_pfs;
        lo = std::min(lo, mean - 12.0 * sd);
        hi = std::max(hi, mean + 12.0 * sd);
    }
    double untruncated = 0.0;
    {
        const auto cdf = [&](double x) {
            double p = 0.0;
            for (const auto& c : mix.classes()) {
                const double mean =
                    m == Marginal::ValueOfTime ? c.mean_vot : c.mean_pfs;
                const double sd =
                    m == Marginal::ValueOfTime ? c.std_vot : c.std_pfs;
                p += c.share * detail::normal_cdf(x, mean, sd);
            }
            return p;
        };
        untruncated = detail::invert_cdf(cdf, alpha, lo, hi);
    }
    return std::max(untruncated, mix.bounds().bound(m));
}

// Finite joint support of the behavioral traits. joint_weights is row-major
// over (vot index, pfs index) and sums to one.
struct DiscretizedGrid {
    std::vector<double> vot_points;
    std::vector<double> pfs_points;
    std::vector<double> joint_weights;

    std::size_t n_vot() const { return vot_points.size(); }
    std::size_t n_pfs() const { return pfs_points.size(); }

    double weight(std::size_t i, std::size_t j) const {
        return joint_weights[i * pfs_points.size() + j];
    }
    double& weight(std::size_t i, std::size_t j) {
        return joint_weights[i * pfs_points.size() + j];
    }
};

namespace detail {

// Merges a value into a sorted atom list, coalescing near-duplicates.
inline std::size_t insert_atom(std::vector<double>& atoms, double x) {
    auto it = std::lower_bound(atoms.begin(), atoms.end(), x - 1e-12);
    if (it != atoms.end() && std::fabs(*it - x) <= 1e-12)
        return static_cast<std::size_t>(it - atoms.begin());
    return static_cast<std::size_t>(atoms.insert(it, x) - atoms.begin());
}

}  // namespace detail

// Per-class equal-probability quantile midpoints (q = (j - 0.5) / n), merged
// across classes. Joint weights are per-dimension products scaled by class
// shares; within a class the two traits are independent.
inline DiscretizedGrid discretize(const BehavioralMixture& mix,
                                  std::size_t n_per_class_vot,
                                  std::size_t n_per_class_pfs) {
    if (n_per_class_vot < 1 || n_per_class_pfs < 1)
        throw std::invalid_argument("grid counts must be >= 1");

    const auto class_atoms = [&](const BehavioralClass& c, Marginal m,
                                 std::size_t n) {
        std::vector<double> out(n);
        const double mean = m == Marginal::ValueOfTime ? c.mean_vot : c.mean_pfs;
        const double sd = m == Marginal::ValueOfTime ? c.std_vot : c.std_pfs;
        for (std::size_t j = 0; j < n; ++j) {
            const double q = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
            out[j] = std::max(detail::normal_quantile(q, mean, sd),
                              mix.bounds().bound(m));
        }
        return out;
    };

    DiscretizedGrid grid;
    for (const auto& cls : mix.classes()) {
        for (double v : class_atoms(cls, Marginal::ValueOfTime, n_per_class_vot))
            detail::insert_atom(grid.vot_points, v);
        for (double s :
             class_atoms(cls, Marginal::PenaltyForSharing, n_per_class_pfs))
            detail::insert_atom(grid.pfs_points, s);
    }
    grid.joint_weights.assign(grid.n_vot() * grid.n_pfs(), 0.0);
    for (std::size_t c = 0; c < mix.classes().size(); ++c) {
        const auto& cls = mix.classes()[c];
        const double w = cls.share / (static_cast<double>(n_per_class_vot) *
                                      static_cast<double>(n_per_class_pfs));
        for (double v : class_atoms(cls, Marginal::ValueOfTime, n_per_class_vot)) {
            const auto vi = static_cast<std::size_t>(
                std::lower_bound(grid.vot_points.begin(), grid.vot_points.end(),
                                 v - 1e-12) -
                grid.vot_points.begin());
            for (double s : class_atoms(cls, Marginal::PenaltyForSharing,
                                        n_per_class_pfs)) {
                const auto si = static_cast<std::size_t>(
                    std::lower_bound(grid.pfs_points.begin(),
                                     grid.pfs_points.end(), s - 1e-12) -
                    grid.pfs_points.begin());
                grid.weight(vi, si) += w;
            }
        }
    }
    return grid;
}

// Extension of the sharing penalty to rides with k - 1 co-travellers:
// beta_{s,k} = 1 + (beta_s - 1) * (1 + epsilon * (k - 2)). At k = 2 this is
// beta_s itself; a traveller with no penalty (beta_s = 1) stays unaffected.
struct SharingPenaltyRule {
    double epsilon = 0.1;

    double operator()(double beta_s, int degree) const {
        if (degree < 2)
            throw std::domain_error("sharing penalty defined for degree >= 2");
        return 1.0 + (beta_s - 1.0) * (1.0 + epsilon * (degree - 2));
    }
};

inline double pfs_for_degree(double beta_s, int degree,
                             const SharingPenaltyRule& rule = {}) {
    return rule(beta_s, degree);
}

}  // namespace ridepool
