#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ridepool/acceptance.hpp"
#include "ridepool/core.hpp"
#include "ridepool/shareability.hpp"

namespace ridepool {

// Weighted objective: alpha0 * gamma/psi + alpha1 * gamma - alpha2 * psi - C.
// The default (1, 0, 0, 0) is pure expected profitability.
struct ObjectiveWeights {
    double profitability = 1.0;
    double revenue = 0.0;
    double distance_cost = 0.0;
    double flat_cost = 0.0;
};

struct PricingConfig {
    double rho = 1.5;            // fare, currency per km
    double lambda_hat = 0.05;    // guaranteed discount
    ObjectiveWeights shared_weights{};
    ObjectiveWeights private_weights{};
    double lambda_cap = 1.0;
    // Discount levels whose nearest lower breakpoint survives thinning, so
    // the optimum weakly dominates the corresponding flat vectors.
    std::vector<double> anchor_discounts{};

    void validate() const {
        if (rho <= 0.0) throw ConfigError("fare must be positive");
        if (lambda_hat < 0.0 || lambda_hat >= 1.0)
            throw ConfigError("guaranteed discount must be in [0, 1)");
    }
};

// A ride with its chosen discount vector and expected-value evaluation.
struct PricedRide {
    std::int64_t ride_id = -1;
    int degree = 0;
    std::vector<double> discounts;
    double expected_revenue = 0.0;     // gamma
    double expected_distance = 0.0;    // psi
    double profitability = 0.0;        // Gamma = gamma / psi
    double objective = 0.0;            // O = score * degree
    double accept_prob = 0.0;
};

inline double revenue(double distance_km, double lambda, const PricingConfig& cfg) {
    if (lambda < 0.0 || lambda > 1.0)
        throw std::domain_error("discount must be in [0, 1]");
    return cfg.rho * (1.0 - lambda) * distance_km;
}

// Expected revenue over all accept/reject configurations, factored per
// member: with p_j the member acceptance and P the product over members,
//   gamma = sum_j [ P R_j(lam_j) + (p_j - P) R_j(lambda_hat) + (1-p_j) R_j(0) ].
// A member who accepts but whose ride collapses keeps the guaranteed
// discount; one who rejects pays the full fare.
inline double expected_revenue(const ShareableRide& ride,
                               std::span<const AcceptanceCurve> curves,
                               std::span<const double> discounts,
                               const PricingConfig& cfg) {
    const double p_all = ride_acceptance(curves, discounts);
    double gamma = 0.0;
    for (std::size_t j = 0; j < curves.size(); ++j) {
        const double p_j = curves[j](discounts[j]);
        const double d_j = ride.private_distance_km[j];
        gamma += p_all * revenue(d_j, discounts[j], cfg) +
                 (p_j - p_all) * revenue(d_j, cfg.lambda_hat, cfg) +
                 (1.0 - p_j) * revenue(d_j, 0.0, cfg);
    }
    return gamma;
}

// Expected vehicle mileage: shared distance if everyone accepts, otherwise
// the sum of the private distances.
inline double expected_distance(const ShareableRide& ride,
                                std::span<const AcceptanceCurve> curves,
                                std::span<const double> discounts) {
    const double p_all = ride_acceptance(curves, discounts);
    double sum_private = 0.0;
    for (double d : ride.private_distance_km) sum_private += d;
    return p_all * ride.shared_distance_km + (1.0 - p_all) * sum_private;
}

inline double expected_profitability(const ShareableRide& ride,
                                     std::span<const AcceptanceCurve> curves,
                                     std::span<const double> discounts,
                                     const PricingConfig& cfg) {
    return expected_revenue(ride, curves, discounts, cfg) /
           expected_distance(ride, curves, discounts);
}

inline double apply_weights(const ObjectiveWeights& w, double gamma, double psi) {
    return w.profitability * gamma / psi + w.revenue * gamma -
           w.distance_cost * psi - w.flat_cost;
}

inline double generalized_objective(const ShareableRide& ride,
                                    std::span<const AcceptanceCurve> curves,
                                    std::span<const double> discounts,
                                    const PricingConfig& cfg) {
    return apply_weights(cfg.shared_weights,
                         expected_revenue(ride, curves, discounts, cfg),
                         expected_distance(ride, curves, discounts));
}

// Degree-1 pricing: the private ride is always realised, so gamma is the
// discounted fare, psi the trip length and Gamma = rho (1 - lambda).
inline PricedRide price_private(const ShareableRide& ride,
                                const PricingConfig& cfg, double lambda) {
    if (ride.degree() != 1)
        throw std::invalid_argument("private pricing requires a degree-1 ride");
    PricedRide out;
    out.ride_id = ride.ride_id;
    out.degree = 1;
    out.discounts = {lambda};
    out.expected_revenue = revenue(ride.private_distance_km[0], lambda, cfg);
    out.expected_distance = ride.private_distance_km[0];
    out.profitability = out.expected_revenue / out.expected_distance;
    out.objective = apply_weights(cfg.private_weights, out.expected_revenue,
                                  out.expected_distance);
    out.accept_prob = 1.0;
    return out;
}

// Evaluates a shared ride at a fixed discount vector.
inline PricedRide price_at(const ShareableRide& ride,
                           std::span<const AcceptanceCurve> curves,
                           std::vector<double> discounts,
                           const PricingConfig& cfg) {
    PricedRide out;
    out.ride_id = ride.ride_id;
    out.degree = ride.degree();
    out.expected_revenue = expected_revenue(ride, curves, discounts, cfg);
    out.expected_distance = expected_distance(ride, curves, discounts);
    out.profitability = out.expected_revenue / out.expected_distance;
    out.objective = apply_weights(cfg.shared_weights, out.expected_revenue,
                                  out.expected_distance) *
                    ride.degree();
    out.accept_prob = ride_acceptance(curves, discounts);
    out.discounts = std::move(discounts);
    return out;
}

// Exhaustive search over the Cartesian product of per-member candidate
// discounts. Ties are broken by lower total discount, then lexicographic
// vector order, so the result is independent of candidate-list ordering.
inline PricedRide optimize_discounts(const ShareableRide& ride,
                                     std::span<const AcceptanceCurve> curves,
                                     const PricingConfig& cfg,
                                     std::size_t thinning) {
    if (ride.degree() < 2)
        throw std::invalid_argument("discount optimization requires degree >= 2");
    const std::size_t k = curves.size();
    std::vector<std::vector<double>> candidates(k);
    for (std::size_t i = 0; i < k; ++i)
        candidates[i] = candidate_discounts(curves[i], cfg.lambda_hat, thinning,
                                            cfg.lambda_cap, cfg.anchor_discounts);

    std::vector<std::size_t> idx(k, 0);
    std::vector<double> current(k), best_vec;
    double best_score = -std::numeric_limits<double>::infinity();
    double best_total = 0.0;
    bool done = false;
    while (!done) {
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            current[i] = candidates[i][idx[i]];
            total += current[i];
        }
        const double score = apply_weights(
            cfg.shared_weights, expected_revenue(ride, curves, current, cfg),
            expected_distance(ride, curves, current));
        const bool better =
            score > best_score ||
            (score == best_score &&
             (total < best_total || (total == best_total && current < best_vec)));
        if (better) {
            best_score = score;
            best_total = total;
            best_vec = current;
        }
        done = true;
        for (std::size_t i = k; i-- > 0;) {
            if (++idx[i] < candidates[i].size()) {
                done = false;
                break;
            }
            idx[i] = 0;
        }
    }
    return price_at(ride, curves, std::move(best_vec), cfg);
}

// Direct 2^k sum over accept/reject configurations; the reference for the
// factored expected revenue and distance.
inline std::pair<double, double> enumeration_oracle(
    const ShareableRide& ride, std::span<const AcceptanceCurve> curves,
    std::span<const double> discounts, const PricingConfig& cfg) {
    const std::size_t k = curves.size();
    if (k > 20) throw std::invalid_argument("enumeration limited to degree 20");
    std::vector<double> p(k);
    for (std::size_t i = 0; i < k; ++i) p[i] = curves[i](discounts[i]);
    double sum_private = 0.0;
    for (double d : ride.private_distance_km) sum_private += d;

    double gamma = 0.0, psi = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
        double prob = 1.0, rev = 0.0;
        const bool all = mask == (1u << k) - 1;
        for (std::size_t i = 0; i < k; ++i) {
            const bool accepts = mask & (1u << i);
            prob *= accepts ? p[i] : 1.0 - p[i];
            const double d_i = ride.private_distance_km[i];
            if (all)
                rev += revenue(d_i, discounts[i], cfg);
            else
                rev += accepts ? revenue(d_i, cfg.lambda_hat, cfg)
                               : revenue(d_i, 0.0, cfg);
        }
        gamma += prob * rev;
        psi += prob * (all ? ride.shared_distance_km : sum_private);
    }
    return {gamma, psi};
}

// Statistical reference: draws behavioral atoms per member, applies the
// accept/reject realisation scheme and averages revenue and mileage.
inline std::pair<double, double> monte_carlo_oracle(
    const ShareableRide& ride, const DiscretizedGrid& grid,
    std::span<const double> discounts, const PricingConfig& cfg,
    std::size_t n_draws, std::uint64_t seed, const SharingPenaltyRule& rule = {}) {
    const std::size_t k = ride.members.size();
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> atom(grid.joint_weights.begin(),
                                                 grid.joint_weights.end());
    double sum_private = 0.0;
    for (double d : ride.private_distance_km) sum_private += d;

    double rev_total = 0.0, dist_total = 0.0;
    for (std::size_t n = 0; n < n_draws; ++n) {
        bool all = true;
        double rev_accept = 0.0, rev_collapse = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t a = atom(rng);
            const double beta_t = grid.vot_points[a / grid.n_pfs()];
            const double beta_s = grid.pfs_points[a % grid.n_pfs()];
            const double y =
                atom_disutility(beta_t, rule(beta_s, ride.degree()),
                                ride.private_time_s[i], ride.shared_time_s[i],
                                ride.pickup_delay_s[i]);
            const double d_i = ride.private_distance_km[i];
            if (y <= discounts[i] * cfg.rho * d_i) {
                rev_accept += revenue(d_i, discounts[i], cfg);
                rev_collapse += revenue(d_i, cfg.lambda_hat, cfg);
            } else {
                all = false;
                rev_collapse += revenue(d_i, 0.0, cfg);
            }
        }
        rev_total += all ? rev_accept : rev_collapse;
        dist_total += all ? ride.shared_distance_km : sum_private;
    }
    return {rev_total / static_cast<double>(n_draws),
            dist_total / static_cast<double>(n_draws)};
}

inline void write_priced_csv(const std::string& path,
                             const std::vector<PricedRide>& priced) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write priced file: " + path);
    out << "ride_id,degree,discounts,gamma,psi,Gamma,O,accept_prob\n";
    for (const auto& r : priced) {
        std::string disc;
        for (double d : r.discounts) {
            if (!disc.empty()) disc += ';';
            disc += format_double(d);
        }
        out << r.ride_id << ',' << r.degree << ',' << disc << ','
            << format_double(r.expected_revenue) << ','
            << format_double(r.expected_distance) << ','
            << format_double(r.profitability) << ',' << format_double(r.objective)
            << ',' << format_double(r.accept_prob) << "\n";
    }
}

}  // namespace ridepool
