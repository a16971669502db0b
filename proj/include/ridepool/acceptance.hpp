#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ridepool/core.hpp"
#include "ridepool/population.hpp"
#include "ridepool/shareability.hpp"

namespace ridepool {

// Non-decreasing right-continuous step function: discount -> probability
// that the traveller accepts the shared ride. Constant on [bp_j, bp_{j+1}),
// base_prob below the first breakpoint.
class AcceptanceCurve {
  public:
    AcceptanceCurve(double base_prob, std::vector<double> breakpoints,
                    std::vector<double> cum_probs)
        : base_prob_(base_prob),
          breakpoints_(std::move(breakpoints)),
          cum_probs_(std::move(cum_probs)) {
        if (breakpoints_.size() != cum_probs_.size())
            throw std::invalid_argument("breakpoint/probability size mismatch");
    }

    double operator()(double lambda) const {
        auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), lambda);
        if (it == breakpoints_.begin()) return base_prob_;
        return cum_probs_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
    }

    double base_prob() const { return base_prob_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& cum_probs() const { return cum_probs_; }

    std::string to_json() const {
        std::string s = "{\"base_prob\":" + format_double(base_prob_) +
                        ",\"breakpoints\":[";
        for (std::size_t i = 0; i < breakpoints_.size(); ++i)
            s += (i ? "," : "") + format_double(breakpoints_[i]);
        s += "],\"cum_probs\":[";
        for (std::size_t i = 0; i < cum_probs_.size(); ++i)
            s += (i ? "," : "") + format_double(cum_probs_[i]);
        return s + "]}";
    }

  private:
    double base_prob_;
    std::vector<double> breakpoints_;
    std::vector<double> cum_probs_;
};

// Net time disutility of the shared ride for a grid atom. Derived from the
// utility difference: the traveller accepts at discount lambda iff
//   beta_t * (beta_{s,k} (that_i + tp_i) - t_i) <= lambda * rho * d_i,
// with beta_t in currency/hour and the ride times in seconds.
inline double atom_disutility(double beta_t, double beta_sk, double private_time_s,
                              double shared_time_s, double pickup_delay_s) {
    return beta_t *
           (beta_sk * (shared_time_s + pickup_delay_s) - private_time_s) /
           kSecondsPerHour;
}

// Acceptance curve of one member of a shared ride over the grid
// distribution. Atoms that accept at any non-negative discount form the
// base probability; the rest contribute breakpoints at Y / (rho d_i).
inline AcceptanceCurve build_curve(const ShareableRide& ride,
                                   std::size_t member_index,
                                   const DiscretizedGrid& grid, double rho,
                                   const SharingPenaltyRule& rule = {}) {
    if (member_index >= ride.members.size())
        throw std::invalid_argument("member index out of range");
    const double d = ride.private_distance_km[member_index];
    const double t = ride.private_time_s[member_index];
    const double t_shared =
        ride.shared_time_s[member_index] + ride.pickup_delay_s[member_index];

    double base = 0.0;
    std::vector<std::pair<double, double>> atoms;  // (lambda, weight)
    atoms.reserve(grid.n_vot() * grid.n_pfs());
    for (std::size_t i = 0; i < grid.n_vot(); ++i) {
        for (std::size_t j = 0; j < grid.n_pfs(); ++j) {
            const double w = grid.weight(i, j);
            if (w == 0.0) continue;
            const double beta_sk = rule(grid.pfs_points[j], ride.degree());
            const double y = atom_disutility(grid.vot_points[i], beta_sk, t,
                                             ride.shared_time_s[member_index],
                                             ride.pickup_delay_s[member_index]);
            const double lambda = y / (rho * d);
            if (lambda <= 0.0)
                base += w;
            else
                atoms.emplace_back(lambda, w);
        }
    }
    std::sort(atoms.begin(), atoms.end());

    std::vector<double> breakpoints, cum_probs;
    double cum = base;
    for (const auto& [lambda, w] : atoms) {
        cum += w;
        if (!breakpoints.empty() && lambda - breakpoints.back() <= 1e-12) {
            cum_probs.back() = cum;
        } else {
            breakpoints.push_back(lambda);
            cum_probs.push_back(cum);
        }
    }
    return AcceptanceCurve(base, std::move(breakpoints), std::move(cum_probs));
}

// Probability the whole ride is accepted: members decide simultaneously and
// independently, so the product of per-member probabilities.
inline double ride_acceptance(std::span<const AcceptanceCurve> curves,
                              std::span<const double> discounts) {
    if (curves.size() != discounts.size())
        throw std::invalid_argument("curve/discount count mismatch");
    double p = 1.0;
    for (std::size_t i = 0; i < curves.size(); ++i) p *= curves[i](discounts[i]);
    return p;
}

// Finite candidate set for the discount optimizer: the guaranteed discount
// plus all curve breakpoints above it, truncated at saturation. Candidates
// beyond lambda_cap collapse onto the cap. When thinning is positive and the
// set is larger, breakpoints are kept at roughly equal acceptance-probability
// increments; the first candidate, the saturation point and the nearest
// breakpoint below each anchor are always retained.
inline std::vector<double> candidate_discounts(
    const AcceptanceCurve& curve, double lambda_hat, std::size_t thinning,
    double lambda_cap = 1.0, std::span<const double> anchors = {}) {
    if (thinning == 1)
        throw std::invalid_argument("thinning must be 0 (off) or >= 2");
    std::vector<double> full{lambda_hat};
    if (curve(lambda_hat) < 1.0) {
        for (double bp : curve.breakpoints()) {
            if (bp <= lambda_hat) continue;
            if (bp > lambda_cap) {
                if (full.back() < lambda_cap) full.push_back(lambda_cap);
                break;
            }
            full.push_back(bp);
            if (curve(bp) >= 1.0) break;
        }
    }
    if (thinning == 0 || full.size() <= thinning) return full;

    std::vector<bool> keep(full.size(), false);
    keep.front() = keep.back() = true;
    for (double a : anchors) {
        // Retain the last candidate <= anchor; evaluating the curve there
        // gives the same acceptance as at the anchor itself.
        auto it = std::upper_bound(full.begin(), full.end(), a);
        if (it != full.begin())
            keep[static_cast<std::size_t>(it - full.begin()) - 1] = true;
    }
    const double p0 = curve(full.front());
    const double p1 = curve(full.back());
    std::size_t cursor = 0;
    for (std::size_t slot = 1; slot + 1 < thinning; ++slot) {
        const double target =
            p0 + (p1 - p0) * static_cast<double>(slot) /
                     static_cast<double>(thinning - 1);
        while (cursor + 1 < full.size() && curve(full[cursor]) < target) ++cursor;
        keep[cursor] = true;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < full.size(); ++i)
        if (keep[i]) out.push_back(full[i]);
    return out;
}

}  // namespace ridepool
