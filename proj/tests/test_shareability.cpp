#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>

#include "ridepool/shareability.hpp"

using namespace ridepool;

namespace {

BehavioralMixture tight_mixture(double vot, double pfs) {
    return BehavioralMixture({{vot, 1e-9, pfs, 1e-9, 1.0}});
}

std::vector<TripRequest> random_requests(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    std::uniform_real_distribution<double> ut(0.0, 600.0);
    std::vector<TripRequest> out;
    for (std::size_t i = 0; i < n; ++i) {
        Coord o{u(rng), u(rng)}, d{u(rng), u(rng)};
        while (o.x == d.x && o.y == d.y) d = {u(rng), u(rng)};
        out.emplace_back(static_cast<std::int64_t>(i), o, d, ut(rng));
    }
    return out;
}

// Test-side enumeration of all valid stop sequences, kept separate from the
// library's generator.
void all_sequences(std::size_t k, std::vector<Stop>& prefix,
                   std::vector<int>& state,
                   std::vector<std::vector<Stop>>& out) {
    if (prefix.size() == 2 * k) {
        out.push_back(prefix);
        return;
    }
    for (std::size_t m = 0; m < k; ++m) {
        if (state[m] == 2) continue;
        prefix.push_back({m, state[m] == 0});
        ++state[m];
        all_sequences(k, prefix, state, out);
        --state[m];
        prefix.pop_back();
    }
}

struct BruteRide {
    std::set<std::int64_t> members;
    double best_surplus;
};

// Exhaustive reference: every member subset of size 2..max_degree, every
// valid sequence, filtered by the flat-utility inequality and the pickup
// delay cap.
std::vector<BruteRide> brute_force_shared(const std::vector<TripRequest>& reqs,
                                          const TravelTimeProvider& provider,
                                          double beta_t0, double beta_s0,
                                          const GraphParams& params, double rho) {
    std::vector<BruteRide> out;
    const std::size_t n = reqs.size();
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) idx.push_back(i);
        const std::size_t k = idx.size();
        if (k < 2 || k > static_cast<std::size_t>(params.max_degree)) continue;

        std::vector<std::vector<Stop>> seqs;
        std::vector<Stop> prefix;
        std::vector<int> state(k, 0);
        all_sequences(k, prefix, state, seqs);

        double best = -1e300;
        bool feasible = false;
        for (const auto& seq : seqs) {
            ShareableRide ride = detail::make_ride(reqs, provider, idx, seq);
            bool ok = exmas_feasible(ride, beta_t0, beta_s0, params.lambda0, rho);
            for (double delay : ride.pickup_delay_s)
                ok = ok && delay <= params.max_pickup_delay_s;
            if (!ok) continue;
            feasible = true;
            double surplus = 0.0;
            for (std::size_t i = 0; i < k; ++i)
                surplus +=
                    detail::flat_surplus(ride, i, beta_t0, beta_s0,
                                         params.lambda0, rho);
            best = std::max(best, surplus);
        }
        if (feasible) {
            BruteRide r;
            for (auto i : idx) r.members.insert(reqs[i].id);
            r.best_surplus = best;
            out.push_back(r);
        }
    }
    return out;
}

std::set<std::set<std::int64_t>> shared_member_sets(const ShareabilityGraph& g) {
    std::set<std::set<std::int64_t>> out;
    for (const auto& r : g.rides)
        if (r.degree() >= 2)
            out.insert(std::set<std::int64_t>(r.members.begin(), r.members.end()));
    return out;
}

}  // namespace

TEST_CASE("perfectly overlapping requests form a feasible pair") {
    std::vector<TripRequest> reqs{{0, {0, 0}, {2, 0}, 0.0},
                                  {1, {0, 0}, {2, 0}, 0.0}};
    TravelTimeProvider provider;
    const auto graph = build_graph(reqs, provider, tight_mixture(15.0, 1.0),
                                   {0.2, 0.4, 2, 600.0}, 1.5);
    REQUIRE(graph.rides.size() == 3);  // two privates plus the pair
    const auto& pair = graph.rides.back();
    CHECK(pair.degree() == 2);
    CHECK(pair.shared_time_s[0] == Catch::Approx(pair.private_time_s[0]));
    CHECK(pair.pickup_delay_s[0] == Catch::Approx(0.0));
}

TEST_CASE("opposite directions are infeasible") {
    std::vector<TripRequest> reqs{{0, {0, 0}, {5, 0}, 0.0},
                                  {1, {5, 0}, {0, 0}, 0.0}};
    TravelTimeProvider provider;
    const auto graph = build_graph(reqs, provider, tight_mixture(15.0, 1.2),
                                   {0.2, 0.2, 2, 600.0}, 1.5);
    CHECK(graph.rides.size() == 2);  // privates only
}

TEST_CASE("single request yields exactly one private ride") {
    std::vector<TripRequest> reqs{{0, {0, 0}, {1, 1}, 0.0}};
    const auto graph = build_graph(reqs, TravelTimeProvider{},
                                   BehavioralMixture::nyc_4class(), {}, 1.5);
    REQUIRE(graph.rides.size() == 1);
    CHECK(graph.rides[0].degree() == 1);
    CHECK(graph.rides[0].shared_distance_km ==
          Catch::Approx(graph.rides[0].private_distance_km[0]));
}

TEST_CASE("hostile quantiles with zero discount leave privates only") {
    const auto reqs = random_requests(6, 3);
    const auto graph =
        build_graph(reqs, TravelTimeProvider{}, tight_mixture(500.0, 3.0),
                    {0.99, 0.0, 3, 600.0}, 1.5);
    for (const auto& r : graph.rides) CHECK(r.degree() == 1);
}

TEST_CASE("feasibility flags match the exhaustive sequence search") {
    const auto reqs = random_requests(5, 17);
    TravelTimeProvider provider;
    const auto mix = tight_mixture(15.0, 1.1);
    const GraphParams params{0.2, 0.4, 3, 600.0};
    const double bt0 = mixture_quantile(mix, Marginal::ValueOfTime, params.alpha);
    const double bs0 =
        mixture_quantile(mix, Marginal::PenaltyForSharing, params.alpha);

    const auto graph = build_graph(reqs, provider, mix, params, 1.5);
    for (const auto& r : graph.rides)
        CHECK(exmas_feasible(r, bt0, bs0, params.lambda0, 1.5));

    const auto brute =
        brute_force_shared(reqs, provider, bt0, bs0, params, 1.5);
    std::set<std::set<std::int64_t>> brute_sets;
    for (const auto& b : brute) brute_sets.insert(b.members);
    CHECK(shared_member_sets(graph) == brute_sets);
}

TEST_CASE("hierarchical construction is lossless on 8-request instances") {
    for (std::uint64_t seed : {101, 202, 303}) {
        const auto reqs = random_requests(8, seed);
        TravelTimeProvider provider;
        const auto mix = BehavioralMixture::nyc_4class();
        const GraphParams params{0.25, 0.5, 3, 600.0};
        const double bt0 =
            mixture_quantile(mix, Marginal::ValueOfTime, params.alpha);
        const double bs0 =
            mixture_quantile(mix, Marginal::PenaltyForSharing, params.alpha);

        const auto graph = build_graph(reqs, provider, mix, params, 1.5);
        const auto brute =
            brute_force_shared(reqs, provider, bt0, bs0, params, 1.5);
        std::set<std::set<std::int64_t>> brute_sets;
        for (const auto& b : brute) brute_sets.insert(b.members);
        CHECK(shared_member_sets(graph) == brute_sets);

        // chosen sequences achieve the brute-force best surplus
        for (const auto& r : graph.rides) {
            if (r.degree() < 2) continue;
            std::set<std::int64_t> key(r.members.begin(), r.members.end());
            const auto it = std::find_if(brute.begin(), brute.end(),
                                         [&](const BruteRide& b) {
                                             return b.members == key;
                                         });
            REQUIRE(it != brute.end());
            double surplus = 0.0;
            for (std::size_t i = 0; i < r.members.size(); ++i)
                surplus += detail::flat_surplus(r, i, bt0, bs0, params.lambda0,
                                                1.5);
            CHECK(surplus == Catch::Approx(it->best_surplus).margin(1e-9));
        }
    }
}

TEST_CASE("graph grows with the flat discount") {
    const auto reqs = random_requests(8, 5);
    TravelTimeProvider provider;
    const auto mix = BehavioralMixture::nyc_4class();
    const auto g_small =
        build_graph(reqs, provider, mix, {0.2, 0.2, 3, 600.0}, 1.5);
    const auto g_big =
        build_graph(reqs, provider, mix, {0.2, 0.5, 3, 600.0}, 1.5);
    const auto small_sets = shared_member_sets(g_small);
    const auto big_sets = shared_member_sets(g_big);
    for (const auto& s : small_sets) CHECK(big_sets.count(s) == 1);
}

TEST_CASE("graph grows as the quantile level drops") {
    const auto reqs = random_requests(8, 6);
    TravelTimeProvider provider;
    const auto mix = BehavioralMixture::nyc_4class();
    const auto g_low =
        build_graph(reqs, provider, mix, {0.05, 0.4, 3, 600.0}, 1.5);
    const auto g_high =
        build_graph(reqs, provider, mix, {0.5, 0.4, 3, 600.0}, 1.5);
    for (const auto& s : shared_member_sets(g_high))
        CHECK(shared_member_sets(g_low).count(s) == 1);
}

TEST_CASE("pooled leg times are consistent with the metric") {
    const auto reqs = random_requests(6, 8);
    TravelTimeProvider provider;
    const auto graph = build_graph(reqs, provider, tight_mixture(10.0, 1.05),
                                   {0.2, 0.5, 3, 900.0}, 1.5);
    for (const auto& r : graph.rides) {
        for (std::size_t i = 0; i < r.members.size(); ++i) {
            CHECK(r.shared_time_s[i] >= r.private_time_s[i] - 1e-9);
            CHECK(r.pickup_delay_s[i] >= -1e-9);
        }
        CHECK(r.shared_distance_km > 0.0);
    }
}
