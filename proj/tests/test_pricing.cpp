#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ridepool/pricing.hpp"
#include "test_helpers.hpp"

using namespace ridepool;
using namespace ridepool::testing;

namespace {

PricingConfig config_15() {
    PricingConfig cfg;
    cfg.rho = 1.5;
    cfg.lambda_hat = 0.05;
    return cfg;
}

// The worked two-traveller ride: trips 3.6 and 3.2 km, shared 4.8 km,
// acceptance 0.7 / 0.95 at a 20% discount.
ShareableRide example_ride() {
    return synthetic_ride({3.6, 3.2}, {432.0, 384.0}, {500.0, 450.0},
                          {0.0, 0.0}, 4.8);
}

std::vector<AcceptanceCurve> example_curves() {
    return {AcceptanceCurve(0.0, {0.2}, {0.7}),
            AcceptanceCurve(0.0, {0.2}, {0.95})};
}

std::vector<AcceptanceCurve> curves_for(const ShareableRide& ride,
                                        const DiscretizedGrid& grid,
                                        double rho) {
    std::vector<AcceptanceCurve> out;
    for (std::size_t m = 0; m < ride.members.size(); ++m)
        out.push_back(build_curve(ride, m, grid, rho));
    return out;
}

}  // namespace

TEST_CASE("per-trip revenue") {
    const auto cfg = config_15();
    CHECK(revenue(3.2, 0.05, cfg) == Catch::Approx(4.56));
    CHECK(revenue(3.2, 0.0, cfg) == Catch::Approx(4.8));
    CHECK(revenue(3.2, 1.0, cfg) == Catch::Approx(0.0));
    CHECK_THROWS_AS(revenue(3.2, -0.1, cfg), std::domain_error);
    CHECK_THROWS_AS(revenue(3.2, 1.1, cfg), std::domain_error);
}

TEST_CASE("worked example: expected revenue, distance, profitability") {
    const auto ride = example_ride();
    const auto curves = example_curves();
    const auto cfg = config_15();
    const std::vector<double> flat{0.2, 0.2};
    CHECK(expected_revenue(ride, curves, flat, cfg) ==
          Catch::Approx(8.76555).margin(1e-12));
    CHECK(expected_distance(ride, curves, flat) ==
          Catch::Approx(5.47).margin(1e-12));
    CHECK(expected_profitability(ride, curves, flat, cfg) ==
          Catch::Approx(8.76555 / 5.47).margin(1e-12));
}

TEST_CASE("degenerate acceptance limits") {
    const auto ride = example_ride();
    const auto cfg = config_15();
    const std::vector<double> flat{0.2, 0.2};

    const std::vector<AcceptanceCurve> always{AcceptanceCurve(1.0, {}, {}),
                                              AcceptanceCurve(1.0, {}, {})};
    CHECK(expected_revenue(ride, always, flat, cfg) ==
          Catch::Approx(revenue(3.6, 0.2, cfg) + revenue(3.2, 0.2, cfg)));
    CHECK(expected_distance(ride, always, flat) == Catch::Approx(4.8));

    const std::vector<AcceptanceCurve> never{AcceptanceCurve(0.0, {}, {}),
                                             AcceptanceCurve(0.0, {}, {})};
    CHECK(expected_revenue(ride, never, flat, cfg) ==
          Catch::Approx(revenue(3.6, 0.0, cfg) + revenue(3.2, 0.0, cfg)));
    CHECK(expected_distance(ride, never, flat) == Catch::Approx(6.8));
}

TEST_CASE("private ride profitability constants") {
    const auto cfg = config_15();
    const auto ride = synthetic_ride({2.7}, {324.0}, {324.0}, {0.0}, 2.7);
    CHECK(price_private(ride, cfg, 0.05).profitability == Catch::Approx(1.425));
    CHECK(price_private(ride, cfg, 0.0).profitability == Catch::Approx(1.5));
    // constant regardless of trip length
    const auto longer = synthetic_ride({9.9}, {1188.0}, {1188.0}, {0.0}, 9.9);
    CHECK(price_private(longer, cfg, 0.05).profitability ==
          Catch::Approx(1.425));
}

TEST_CASE("generalized objective reductions") {
    const auto ride = example_ride();
    const auto curves = example_curves();
    auto cfg = config_15();
    const std::vector<double> flat{0.2, 0.2};

    cfg.shared_weights = {1.0, 0.0, 0.0, 0.0};
    CHECK(generalized_objective(ride, curves, flat, cfg) ==
          Catch::Approx(8.76555 / 5.47).margin(1e-12));

    cfg.shared_weights = {0.0, 1.0, 0.0, 0.0};
    CHECK(generalized_objective(ride, curves, flat, cfg) ==
          Catch::Approx(8.76555).margin(1e-12));

    cfg.shared_weights = {0.0, 0.0, 1.0, 5.0};
    CHECK(generalized_objective(ride, curves, flat, cfg) ==
          Catch::Approx(-5.47 - 5.0).margin(1e-12));
}

TEST_CASE("enumeration oracle reproduces the worked example") {
    const auto ride = example_ride();
    const auto curves = example_curves();
    const std::vector<double> flat{0.2, 0.2};
    const auto [gamma, psi] =
        enumeration_oracle(ride, curves, flat, config_15());
    CHECK(gamma == Catch::Approx(8.76555).margin(1e-12));
    CHECK(psi == Catch::Approx(5.47).margin(1e-12));
}

TEST_CASE("factored form equals the 2^k enumeration") {
    std::mt19937_64 rng(2024);
    const auto cfg = config_15();
    std::uniform_int_distribution<std::size_t> udeg(2, 6);
    std::uniform_real_distribution<double> ul(0.05, 0.9);
    for (int trial = 0; trial < 500; ++trial) {
        const auto degree = udeg(rng);
        const auto ride = random_ride(rng, degree);
        const auto grid = random_grid(rng, 4, 3);
        const auto curves = curves_for(ride, grid, cfg.rho);
        std::vector<double> lam(degree);
        for (auto& l : lam) l = ul(rng);
        const auto [gamma, psi] = enumeration_oracle(ride, curves, lam, cfg);
        CHECK(expected_revenue(ride, curves, lam, cfg) ==
              Catch::Approx(gamma).margin(1e-9));
        CHECK(expected_distance(ride, curves, lam) ==
              Catch::Approx(psi).margin(1e-9));
    }
}

TEST_CASE("expected distance stays between shared and private totals") {
    std::mt19937_64 rng(31);
    const auto cfg = config_15();
    for (int trial = 0; trial < 100; ++trial) {
        const auto ride = random_ride(rng, 3);
        const auto grid = random_grid(rng, 5, 4);
        const auto curves = curves_for(ride, grid, cfg.rho);
        std::uniform_real_distribution<double> ul(0.05, 0.9);
        const std::vector<double> lam{ul(rng), ul(rng), ul(rng)};
        const double psi = expected_distance(ride, curves, lam);
        double sum_private = 0.0;
        for (double d : ride.private_distance_km) sum_private += d;
        CHECK(psi >= std::min(ride.shared_distance_km, sum_private) - 1e-12);
        CHECK(psi <= std::max(ride.shared_distance_km, sum_private) + 1e-12);
    }
}

TEST_CASE("optimizer returns the guaranteed vector when everyone accepts") {
    const auto ride = example_ride();
    const std::vector<AcceptanceCurve> always{AcceptanceCurve(1.0, {}, {}),
                                              AcceptanceCurve(1.0, {}, {})};
    const auto priced = optimize_discounts(ride, always, config_15(), 0);
    REQUIRE(priced.discounts.size() == 2);
    CHECK(priced.discounts[0] == Catch::Approx(0.05));
    CHECK(priced.discounts[1] == Catch::Approx(0.05));
    CHECK(priced.accept_prob == Catch::Approx(1.0));
}

TEST_CASE("optimizer equals brute force over the full candidate grid") {
    std::mt19937_64 rng(77);
    const auto cfg = config_15();
    for (int trial = 0; trial < 30; ++trial) {
        const auto ride = random_ride(rng, 2);
        const auto grid = random_grid(rng, 3, 2);  // at most 6 breakpoints
        const auto curves = curves_for(ride, grid, cfg.rho);
        const auto priced = optimize_discounts(ride, curves, cfg, 0);

        double best = -1e300;
        for (double a :
             candidate_discounts(curves[0], cfg.lambda_hat, 0, cfg.lambda_cap))
            for (double b : candidate_discounts(curves[1], cfg.lambda_hat, 0,
                                                cfg.lambda_cap)) {
                const std::vector<double> lam{a, b};
                const auto [gamma, psi] =
                    enumeration_oracle(ride, curves, lam, cfg);
                best = std::max(best, gamma / psi);
            }
        CHECK(priced.profitability == Catch::Approx(best).margin(1e-9));
    }
}

TEST_CASE("optimized profitability weakly dominates flat vectors") {
    std::mt19937_64 rng(88);
    auto cfg = config_15();
    cfg.anchor_discounts = {0.15, 0.2};
    std::uniform_int_distribution<std::size_t> udeg(2, 3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto ride = random_ride(rng, udeg(rng));
        const auto grid = random_grid(rng, 6, 6);
        const auto curves = curves_for(ride, grid, cfg.rho);
        const auto priced = optimize_discounts(ride, curves, cfg, 20);
        for (double flat : {0.15, 0.2}) {
            const std::vector<double> lam(ride.members.size(),
                                          std::max(flat, cfg.lambda_hat));
            CHECK(priced.profitability >=
                  expected_profitability(ride, curves, lam, cfg) - 1e-9);
        }
    }
}

TEST_CASE("thinned optimizer retains at least 99% of the full value") {
    std::mt19937_64 rng(404);
    const auto cfg = config_15();
    for (int trial = 0; trial < 100; ++trial) {
        const auto ride = random_ride(rng, 2);
        const auto grid = random_grid(rng, 14, 14);  // ~196 breakpoints
        const auto curves = curves_for(ride, grid, cfg.rho);
        const double full = optimize_discounts(ride, curves, cfg, 0).profitability;
        const double thin =
            optimize_discounts(ride, curves, cfg, 20).profitability;
        CHECK(thin >= 0.99 * full);
    }
}

TEST_CASE("optimizer is deterministic") {
    std::mt19937_64 rng(55);
    const auto cfg = config_15();
    const auto ride = random_ride(rng, 3);
    const auto grid = random_grid(rng, 5, 5);
    const auto curves = curves_for(ride, grid, cfg.rho);
    const auto a = optimize_discounts(ride, curves, cfg, 10);
    const auto b = optimize_discounts(ride, curves, cfg, 10);
    CHECK(a.discounts == b.discounts);
    CHECK(a.profitability == b.profitability);
}

TEST_CASE("monte carlo oracle: degenerate all-accept grid is exact") {
    const auto ride = example_ride();
    DiscretizedGrid grid;
    grid.vot_points = {10.0};
    grid.pfs_points = {1.0};
    grid.joint_weights = {1.0};
    // no detour, so every draw accepts
    const auto easy = synthetic_ride({3.6, 3.2}, {432.0, 384.0}, {432.0, 384.0},
                                     {0.0, 0.0}, 4.8);
    const auto cfg = config_15();
    const std::vector<double> lam{0.2, 0.2};
    const auto [rev, dist] = monte_carlo_oracle(easy, grid, lam, cfg, 1000, 1);
    CHECK(rev == Catch::Approx(revenue(3.6, 0.2, cfg) + revenue(3.2, 0.2, cfg)));
    CHECK(dist == Catch::Approx(4.8));
    (void)ride;
}

TEST_CASE("monte carlo oracle hits the worked example within 3 sigma") {
    // Two-point grid: acceptance 0.7 depends only on beta_t, 0.95 only on
    // beta_s, reproducing the worked probabilities at a 20% discount.
    DiscretizedGrid grid;
    grid.vot_points = {1.0, 3.0};
    grid.pfs_points = {1.0, 2.0};
    grid.joint_weights = {0.7 * 0.95, 0.7 * 0.05, 0.3 * 0.95, 0.3 * 0.05};
    const auto ride = synthetic_ride({3.6, 3.2}, {360.0, 3600.0},
                                     {1800.0, 3600.0}, {0.0, 0.0}, 4.8);
    const auto cfg = config_15();

    // the grid reproduces the intended per-member probabilities exactly
    const auto curves = curves_for(ride, grid, cfg.rho);
    CHECK(curves[0](0.2) == Catch::Approx(0.7));
    CHECK(curves[1](0.2) == Catch::Approx(0.95));

    const std::vector<double> lam{0.2, 0.2};
    const std::size_t n = 200'000;
    const auto [rev, dist] = monte_carlo_oracle(ride, grid, lam, cfg, n, 7);
    // conservative per-draw spreads: revenue within [8.16, 10.2], distance
    // in {4.8, 6.8}
    const double se_rev = 1.1 / std::sqrt(static_cast<double>(n));
    const double se_dist = 1.0 / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(rev - 8.76555) <= 3.0 * se_rev);
    CHECK(std::fabs(dist - 5.47) <= 3.0 * se_dist);
}

TEST_CASE("monte carlo oracle agrees with the enumeration oracle") {
    std::mt19937_64 rng(909);
    const auto cfg = config_15();
    for (int trial = 0; trial < 5; ++trial) {
        const auto ride = random_ride(rng, 2 + trial % 2);
        const auto grid = random_grid(rng, 4, 4);
        const auto curves = curves_for(ride, grid, cfg.rho);
        std::uniform_real_distribution<double> ul(0.05, 0.6);
        std::vector<double> lam(ride.members.size());
        for (auto& l : lam) l = ul(rng);
        const auto [gamma, psi] = enumeration_oracle(ride, curves, lam, cfg);
        const std::size_t n = 200'000;
        const auto [rev, dist] =
            monte_carlo_oracle(ride, grid, lam, cfg, n, 1234 + trial);
        double span_rev = 0.0, span_dist = 0.0;
        for (double d : ride.private_distance_km) {
            span_rev += cfg.rho * d;
            span_dist += d;
        }
        const double se = 1.0 / std::sqrt(static_cast<double>(n));
        CHECK(std::fabs(rev - gamma) <= 3.0 * span_rev * se);
        CHECK(std::fabs(dist - psi) <= 3.0 * span_dist * se);
    }
}

TEST_CASE("enumeration refuses oversized rides") {
    std::mt19937_64 rng(3);
    const auto ride = random_ride(rng, 21);
    const std::vector<AcceptanceCurve> curves(21, AcceptanceCurve(1.0, {}, {}));
    const std::vector<double> lam(21, 0.05);
    CHECK_THROWS_AS(enumeration_oracle(ride, curves, lam, config_15()),
                    std::invalid_argument);
}
