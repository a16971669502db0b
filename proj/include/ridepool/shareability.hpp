#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <type_traits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ridepool/core.hpp"
#include "ridepool/demand.hpp"
#include "ridepool/population.hpp"

namespace ridepool {

struct Stop {
    std::size_t member = 0;  // index into ShareableRide::members
    bool pickup = true;

    bool operator==(const Stop&) const = default;
};

// A feasible pooled ride: members in pickup order, the interleaved stop
// sequence, and the per-member metrics needed for utilities. Degree 1
// encodes the private ride.
struct ShareableRide {
    std::int64_t ride_id = -1;
    std::vector<std::int64_t> members;
    std::vector<Stop> sequence;
    double shared_distance_km = 0.0;           // d_s
    std::vector<double> shared_time_s;         // in-vehicle time per member
    std::vector<double> pickup_delay_s;        // wait at origin per member
    std::vector<double> private_distance_km;   // d_i
    std::vector<double> private_time_s;        // t_i

    int degree() const { return static_cast<int>(members.size()); }

    std::string sequence_string() const {
        std::string s;
        for (const auto& stop : sequence) {
            if (!s.empty()) s += ';';
            s += (stop.pickup ? 'P' : 'D');
            s += std::to_string(members[stop.member]);
        }
        return s;
    }
};

struct ShareabilityGraph {
    std::vector<ShareableRide> rides;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> rides_by_traveller;
};

struct GraphParams {
    double alpha = 0.2;
    double lambda0 = 0.4;
    int max_degree = 4;
    double max_pickup_delay_s = 600.0;
};

// Value of time is currency per hour while ride metrics are in seconds.
inline constexpr double kSecondsPerHour = 3600.0;

// Shared utility at the optimistic flat parameters beats the private one
// for every member:
//   -(1 - lambda0) rho d_i - beta_t0 beta_s0 (that_i + tp_i)
//     >= -rho d_i - beta_t0 t_i
inline bool exmas_feasible(const ShareableRide& ride, double beta_t0,
                           double beta_s0, double lambda0, double rho) {
    for (std::size_t i = 0; i < ride.members.size(); ++i) {
        const double shared =
            -(1.0 - lambda0) * rho * ride.private_distance_km[i] -
            beta_t0 * beta_s0 *
                (ride.shared_time_s[i] + ride.pickup_delay_s[i]) /
                kSecondsPerHour;
        const double priv = -rho * ride.private_distance_km[i] -
                            beta_t0 * ride.private_time_s[i] / kSecondsPerHour;
        if (shared < priv) return false;
    }
    return true;
}

namespace detail {

// Builds ride metrics for the given member subset (indices into `requests`)
// and stop sequence. The vehicle start time is the latest one that leaves
// no traveller picked up before their request; the slack becomes the
// pickup delay of the others.
inline ShareableRide make_ride(const std::vector<TripRequest>& requests,
                               const TravelTimeProvider& provider,
                               const std::vector<std::size_t>& member_idx,
                               const std::vector<Stop>& sequence) {
    const std::size_t k = member_idx.size();
    ShareableRide ride;
    ride.members.reserve(k);
    for (auto idx : member_idx) ride.members.push_back(requests[idx].id);
    ride.sequence = sequence;
    ride.shared_time_s.assign(k, 0.0);
    ride.pickup_delay_s.assign(k, 0.0);
    ride.private_distance_km.assign(k, 0.0);
    ride.private_time_s.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const auto [d, t] = private_metrics(requests[member_idx[i]], provider);
        ride.private_distance_km[i] = d;
        ride.private_time_s[i] = t;
    }

    std::vector<double> pickup_elapsed(k, 0.0), dropoff_elapsed(k, 0.0);
    double elapsed = 0.0, dist = 0.0;
    Coord prev{};
    for (std::size_t e = 0; e < sequence.size(); ++e) {
        const auto& stop = sequence[e];
        const auto& req = requests[member_idx[stop.member]];
        const Coord here = stop.pickup ? req.origin : req.destination;
        if (e > 0) {
            elapsed += provider.travel_time_s(prev, here);
            dist += provider.distance_km(prev, here);
        }
        (stop.pickup ? pickup_elapsed : dropoff_elapsed)[stop.member] = elapsed;
        prev = here;
    }
    ride.shared_distance_km = k == 1 ? ride.private_distance_km[0] : dist;

    double start = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i)
        start = std::max(start,
                         requests[member_idx[i]].request_time_s - pickup_elapsed[i]);
    for (std::size_t i = 0; i < k; ++i) {
        ride.shared_time_s[i] = dropoff_elapsed[i] - pickup_elapsed[i];
        ride.pickup_delay_s[i] = start + pickup_elapsed[i] -
                                 requests[member_idx[i]].request_time_s;
    }
    return ride;
}

// All interleavings of k pickups and drop-offs with each pickup preceding
// its own drop-off, generated in a deterministic order.
inline void enumerate_sequences(std::size_t k, std::vector<Stop>& prefix,
                                std::vector<bool>& picked,
                                std::vector<bool>& dropped,
                                const std::function<void(const std::vector<Stop>&)>& yield) {
    if (prefix.size() == 2 * k) {
        yield(prefix);
        return;
    }
    for (std::size_t m = 0; m < k; ++m) {
        if (!picked[m]) {
            picked[m] = true;
            prefix.push_back({m, true});
            enumerate_sequences(k, prefix, picked, dropped, yield);
            prefix.pop_back();
            picked[m] = false;
        }
    }
    for (std::size_t m = 0; m < k; ++m) {
        if (picked[m] && !dropped[m]) {
            dropped[m] = true;
            prefix.push_back({m, false});
            enumerate_sequences(k, prefix, picked, dropped, yield);
            prefix.pop_back();
            dropped[m] = false;
        }
    }
}

inline void for_each_sequence(std::size_t k,
                              const std::function<void(const std::vector<Stop>&)>& yield) {
    std::vector<Stop> prefix;
    std::vector<bool> picked(k, false), dropped(k, false);
    prefix.reserve(2 * k);
    enumerate_sequences(k, prefix, picked, dropped, yield);
}

// Per-member utility surplus of the shared ride over the private one under
// the flat graph-construction parameters.
inline double flat_surplus(const ShareableRide& ride, std::size_t i,
                           double beta_t0, double beta_s0, double lambda0,
                           double rho) {
    return lambda0 * rho * ride.private_distance_km[i] -
           beta_t0 *
               (beta_s0 * (ride.shared_time_s[i] + ride.pickup_delay_s[i]) -
                ride.private_time_s[i]) /
               kSecondsPerHour;
}

// Exhaustive search over all stop sequences of the member set; returns the
// feasible ride with the largest total surplus, if any.
inline std::optional<ShareableRide> best_ride_for_set(
    const std::vector<TripRequest>& requests, const TravelTimeProvider& provider,
    const std::vector<std::size_t>& member_idx, double beta_t0, double beta_s0,
    const GraphParams& params, double rho) {
    std::optional<ShareableRide> best;
    double best_surplus = 0.0;
    for_each_sequence(member_idx.size(), [&](const std::vector<Stop>& seq) {
        ShareableRide ride = make_ride(requests, provider, member_idx, seq);
        for (double delay : ride.pickup_delay_s)
            if (delay > params.max_pickup_delay_s) return;
        double surplus = 0.0;
        for (std::size_t i = 0; i < member_idx.size(); ++i) {
            const double s =
                flat_surplus(ride, i, beta_t0, beta_s0, params.lambda0, rho);
            if (s < 0.0) return;
            surplus += s;
        }
        if (!best || surplus > best_surplus + 1e-12) {
            best = std::move(ride);
            best_surplus = surplus;
        }
    });
    return best;
}

// Pickup-order member list: reorders members so members[i] is the i-th
// traveller picked up, remapping the stop sequence accordingly.
inline void normalize_member_order(ShareableRide& ride) {
    std::vector<std::size_t> order;
    for (const auto& stop : ride.sequence)
        if (stop.pickup) order.push_back(stop.member);
    std::vector<std::size_t> inverse(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) inverse[order[i]] = i;

    const auto permute = [&](auto& v) {
        auto copy = v;
        for (std::size_t i = 0; i < order.size(); ++i) copy[i] = v[order[i]];
        v = std::move(copy);
    };
    permute(ride.members);
    permute(ride.shared_time_s);
    permute(ride.pickup_delay_s);
    permute(ride.private_distance_km);
    permute(ride.private_time_s);
    for (auto& stop : ride.sequence) stop.member = inverse[stop.member];
}

}  // namespace detail

// Hierarchical construction: feasible pairs first, degree-k candidates only
// from feasible degree-(k-1) sets. Ride ids are assigned after sorting by
// canonical key, so the graph is independent of construction order.
inline ShareabilityGraph build_graph(const std::vector<TripRequest>& requests,
                                     const TravelTimeProvider& provider,
                                     const BehavioralMixture& mix,
                                     const GraphParams& params, double rho) {
    if (params.max_degree < 1)
        throw std::invalid_argument("max_degree must be >= 1");
    const double beta_t0 = mixture_quantile(mix, Marginal::ValueOfTime, params.alpha);
    const double beta_s0 =
        mixture_quantile(mix, Marginal::PenaltyForSharing, params.alpha);

    std::vector<ShareableRide> rides;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        ShareableRide ride = detail::make_ride(requests, provider, {i},
                                               {{0, true}, {0, false}});
        rides.push_back(std::move(ride));
    }

    // Feasible member sets of the previous level, as sorted index vectors.
    std::map<std::vector<std::size_t>, bool> level;
    std::map<std::vector<std::size_t>, bool> prev_level;
    for (int k = 2; k <= params.max_degree; ++k) {
        level.clear();
        const auto candidates = [&](const std::function<void(std::vector<std::size_t>)>& yield) {
            if (k == 2) {
                for (std::size_t a = 0; a < requests.size(); ++a)
                    for (std::size_t b = a + 1; b < requests.size(); ++b)
                        yield({a, b});
                return;
            }
            // Dropping the last-picked member of a feasible ride always
            // leaves a feasible ride, so growing every feasible set by one
            // traveller reaches every feasible set of the next level.
            for (const auto& [set, feasible] : prev_level) {
                if (!feasible) continue;
                for (std::size_t t = 0; t < requests.size(); ++t) {
                    if (std::binary_search(set.begin(), set.end(), t)) continue;
                    std::vector<std::size_t> candidate = set;
                    candidate.insert(std::lower_bound(candidate.begin(),
                                                      candidate.end(), t),
                                     t);
                    yield(std::move(candidate));
                }
            }
        };
        candidates([&](std::vector<std::size_t> set) {
            if (level.count(set)) return;  // reached from another subset
            auto best = detail::best_ride_for_set(requests, provider, set, beta_t0,
                                                  beta_s0, params, rho);
            level[set] = best.has_value();
            if (best) {
                detail::normalize_member_order(*best);
                rides.push_back(std::move(*best));
            }
        });
        prev_level.swap(level);
        if (prev_level.empty()) break;
    }

    std::sort(rides.begin(), rides.end(),
              [](const ShareableRide& a, const ShareableRide& b) {
                  if (a.degree() != b.degree()) return a.degree() < b.degree();
                  auto ka = a.members, kb = b.members;
                  std::sort(ka.begin(), ka.end());
                  std::sort(kb.begin(), kb.end());
                  if (ka != kb) return ka < kb;
                  return a.sequence_string() < b.sequence_string();
              });

    ShareabilityGraph graph;
    graph.rides = std::move(rides);
    for (std::size_t i = 0; i < graph.rides.size(); ++i) {
        graph.rides[i].ride_id = static_cast<std::int64_t>(i);
        for (auto m : graph.rides[i].members)
            graph.rides_by_traveller[m].push_back(i);
    }
    return graph;
}

inline void write_rides_csv(const std::string& path,
                            const ShareabilityGraph& graph) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write ride file: " + path);
    out << "ride_id,members,sequence,degree,d_s_km,that_s:list,tp_s:list\n";
    const auto join = [](const auto& v) {
        std::string s;
        for (const auto& x : v) {
            if (!s.empty()) s += ';';
            if constexpr (std::is_same_v<std::decay_t<decltype(x)>, double>)
                s += format_double(x);
            else
                s += std::to_string(x);
        }
        return s;
    };
    for (const auto& r : graph.rides) {
        out << r.ride_id << ',' << join(r.members) << ',' << r.sequence_string()
            << ',' << r.degree() << ',' << format_double(r.shared_distance_km)
            << ',' << join(r.shared_time_s) << ',' << join(r.pickup_delay_s)
            << "\n";
    }
}

}  // namespace ridepool
