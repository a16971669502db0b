#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ridepool/acceptance.hpp"
#include "ridepool/core.hpp"
#include "ridepool/demand.hpp"
#include "ridepool/matching.hpp"
#include "ridepool/population.hpp"
#include "ridepool/pricing.hpp"
#include "ridepool/shareability.hpp"

namespace ridepool {

struct Strategy {
    enum class Kind { Personalised, Flat, Private };

    Kind kind = Kind::Personalised;
    double flat_level = 0.0;

    static Strategy parse(const std::string& s) {
        if (s == "personalised") return {Kind::Personalised, 0.0};
        if (s == "private") return {Kind::Private, 0.0};
        if (s.rfind("flat:", 0) == 0) {
            try {
                return {Kind::Flat, std::stod(s.substr(5))};
            } catch (const std::exception&) {
            }
        }
        throw ConfigError("unknown strategy: " + s);
    }

    std::string name() const {
        switch (kind) {
            case Kind::Personalised:
                return "personalised";
            case Kind::Private:
                return "private";
            case Kind::Flat:
                return "flat:" + format_double(flat_level);
        }
        return {};
    }

    // Filesystem-safe variant of name().
    std::string slug() const {
        std::string s = name();
        for (char& c : s)
            if (c == ':' || c == '.') c = '_';
        return s;
    }
};

struct DemandParams {
    bool generate = true;
    std::string path;                // request CSV when generate is false
    double rate_per_hour = 300.0;
    double batch_minutes = 30.0;
    double area_width_km = 10.0;
    double area_height_km = 10.0;
    double min_trip_km = 0.5;
};

struct ScenarioConfig {
    PricingConfig pricing{};
    GraphParams graph{};
    std::size_t n_vot = 10;
    std::size_t n_pfs = 10;
    std::size_t thinning = 20;
    SharingPenaltyRule penalty_rule{};
    std::vector<BehavioralClass> classes;   // empty -> preset
    std::string preset = "nyc-4class";
    DemandParams demand{};
    TravelTimeProvider::Mode metric = TravelTimeProvider::Mode::Euclidean;
    std::string matrix_path;
    double speed_kmh = 30.0;
    std::vector<Strategy> strategies{{Strategy::Kind::Personalised, 0.0}};
    std::uint64_t seed = 42;
    int threads = 1;

    BehavioralMixture mixture() const {
        if (!classes.empty()) return BehavioralMixture(classes);
        if (preset == "nyc-4class") return BehavioralMixture::nyc_4class();
        throw ConfigError("unknown behavioral preset: " + preset);
    }

    TravelTimeProvider provider() const {
        if (metric == TravelTimeProvider::Mode::Matrix)
            return TravelTimeProvider::load_matrix(matrix_path, speed_kmh);
        return TravelTimeProvider(metric, speed_kmh);
    }
};

// Flat sectioned key-value scenario file. Unknown sections or keys are
// errors; `class` may repeat inside [population].
inline ScenarioConfig parse_config(std::istream& in) {
    ScenarioConfig cfg;
    std::vector<double> flat_anchors;
    bool strategies_set = false;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t");
        line = line.substr(first, last - first + 1);
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("bad section header at line " +
                                  std::to_string(lineno));
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " +
                              std::to_string(lineno));
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto trim = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
        };
        trim(key);
        trim(value);
        const auto num = [&](const std::string& v) {
            try {
                return std::stod(v);
            } catch (const std::exception&) {
                throw ConfigError("bad numeric value for " + key + " at line " +
                                  std::to_string(lineno));
            }
        };
        const auto nums = [&](const std::string& v) {
            std::vector<double> out;
            std::istringstream ss(v);
            std::string tok;
            while (ss >> tok) out.push_back(num(tok));
            return out;
        };
        const std::string full = section + "." + key;

        if (full == "population.preset") {
            cfg.preset = value;
        } else if (full == "population.class") {
            const auto v = nums(value);
            if (v.size() != 5)
                throw ConfigError("class needs 5 values at line " +
                                  std::to_string(lineno));
            cfg.classes.push_back({v[0], v[1], v[2], v[3], v[4]});
        } else if (full == "population.pfs_epsilon") {
            cfg.penalty_rule.epsilon = num(value);
        } else if (full == "pricing.rho") {
            cfg.pricing.rho = num(value);
        } else if (full == "pricing.lambda_hat") {
            cfg.pricing.lambda_hat = num(value);
        } else if (full == "pricing.lambda_cap") {
            cfg.pricing.lambda_cap = num(value);
        } else if (full == "pricing.weights_shared" ||
                   full == "pricing.weights_private") {
            const auto v = nums(value);
            if (v.size() != 4)
                throw ConfigError("weights need 4 values at line " +
                                  std::to_string(lineno));
            auto& w = full == "pricing.weights_shared"
                          ? cfg.pricing.shared_weights
                          : cfg.pricing.private_weights;
            w = {v[0], v[1], v[2], v[3]};
        } else if (full == "graph.alpha") {
            cfg.graph.alpha = num(value);
        } else if (full == "graph.lambda0") {
            cfg.graph.lambda0 = num(value);
        } else if (full == "graph.max_degree") {
            cfg.graph.max_degree = static_cast<int>(num(value));
        } else if (full == "graph.max_pickup_delay_s") {
            cfg.graph.max_pickup_delay_s = num(value);
        } else if (full == "grid.n_vot") {
            cfg.n_vot = static_cast<std::size_t>(num(value));
        } else if (full == "grid.n_pfs") {
            cfg.n_pfs = static_cast<std::size_t>(num(value));
        } else if (full == "grid.thinning") {
            cfg.thinning = static_cast<std::size_t>(num(value));
        } else if (full == "demand.source") {
            if (value == "generate")
                cfg.demand.generate = true;
            else if (value == "file")
                cfg.demand.generate = false;
            else
                throw ConfigError("demand source must be generate or file");
        } else if (full == "demand.path") {
            cfg.demand.path = value;
        } else if (full == "demand.rate_per_hour") {
            cfg.demand.rate_per_hour = num(value);
        } else if (full == "demand.batch_minutes") {
            cfg.demand.batch_minutes = num(value);
        } else if (full == "demand.area_km") {
            const auto v = nums(value);
            if (v.size() != 2)
                throw ConfigError("area_km needs 2 values at line " +
                                  std::to_string(lineno));
            cfg.demand.area_width_km = v[0];
            cfg.demand.area_height_km = v[1];
        } else if (full == "demand.min_trip_km") {
            cfg.demand.min_trip_km = num(value);
        } else if (full == "demand.metric") {
            if (value == "euclidean")
                cfg.metric = TravelTimeProvider::Mode::Euclidean;
            else if (value == "manhattan")
                cfg.metric = TravelTimeProvider::Mode::Manhattan;
            else if (value == "haversine")
                cfg.metric = TravelTimeProvider::Mode::Haversine;
            else if (value == "matrix")
                cfg.metric = TravelTimeProvider::Mode::Matrix;
            else
                throw ConfigError("unknown metric: " + value);
        } else if (full == "demand.matrix_path") {
            cfg.matrix_path = value;
        } else if (full == "demand.speed_kmh") {
            cfg.speed_kmh = num(value);
        } else if (full == "run.strategies") {
            cfg.strategies.clear();
            std::istringstream ss(value);
            std::string tok;
            while (ss >> tok) cfg.strategies.push_back(Strategy::parse(tok));
            strategies_set = true;
        } else if (full == "run.seed") {
            cfg.seed = static_cast<std::uint64_t>(num(value));
        } else if (full == "run.threads") {
            cfg.threads = static_cast<int>(num(value));
        } else {
            throw ConfigError("unknown key '" + key + "' in section [" + section +
                              "] at line " + std::to_string(lineno));
        }
    }
    if (strategies_set && cfg.strategies.empty())
        throw ConfigError("strategy list must not be empty");
    cfg.pricing.validate();
    for (const auto& s : cfg.strategies)
        if (s.kind == Strategy::Kind::Flat) flat_anchors.push_back(s.flat_level);
    cfg.pricing.anchor_discounts = flat_anchors;
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

// Uniform origins and destinations over the configured rectangle, with a
// minimum trip-length filter and request times uniform over the batch
// window. Deterministic for a fixed seed.
inline std::vector<TripRequest> generate_demand(const DemandParams& params,
                                                std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(std::llround(
        params.rate_per_hour * params.batch_minutes / 60.0));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, params.area_width_km);
    std::uniform_real_distribution<double> uy(0.0, params.area_height_km);
    std::uniform_real_distribution<double> ut(0.0, params.batch_minutes * 60.0);
    std::vector<TripRequest> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Coord origin{ux(rng), uy(rng)};
        Coord dest{ux(rng), uy(rng)};
        while (std::hypot(dest.x - origin.x, dest.y - origin.y) <
               params.min_trip_km)
            dest = {ux(rng), uy(rng)};
        out.emplace_back(static_cast<std::int64_t>(i), origin, dest, ut(rng));
    }
    return out;
}

// One ride's evaluation under a strategy, for the plot-ready exports.
struct RideRecord {
    std::int64_t ride_id = -1;
    int degree = 0;
    std::vector<double> discounts;
    double profitability = 0.0;
    double expected_distance = 0.0;
    double accept_prob = 0.0;
    double distance_saved = 0.0;   // 1 - d_s / sum(d_i)
    bool in_offer = false;
};

struct StrategyReport {
    std::string name;
    double avg_profitability = 0.0;       // sum O over offer / traveller count
    double total_expected_distance = 0.0; // sum psi over offer
    double avg_discount = 0.0;            // mean shared discount in the offer
    std::map<int, std::pair<std::size_t, std::size_t>> degree_hist;  // offer
    std::vector<RideRecord> rides;        // graph scope, offer flagged
    std::vector<PricedRide> priced;
    Offer offer;
};

namespace detail {

inline RideRecord record_of(const ShareableRide& ride, const PricedRide& p) {
    RideRecord rec;
    rec.ride_id = p.ride_id;
    rec.degree = p.degree;
    rec.discounts = p.discounts;
    rec.profitability = p.profitability;
    rec.expected_distance = p.expected_distance;
    rec.accept_prob = p.accept_prob;
    double sum_private = 0.0;
    for (double d : ride.private_distance_km) sum_private += d;
    rec.distance_saved = 1.0 - ride.shared_distance_km / sum_private;
    return rec;
}

}  // namespace detail

// Prices the whole graph under one strategy and selects the offer.
inline StrategyReport run_strategy(
    const Strategy& strategy, const ShareabilityGraph& graph,
    const std::vector<std::vector<AcceptanceCurve>>& curves,
    const PricingConfig& pricing, std::size_t thinning,
    std::size_t traveller_count, int threads) {
    StrategyReport report;
    report.name = strategy.name();

    std::vector<PricedRide> priced(graph.rides.size());
    parallel_for(graph.rides.size(), threads, [&](std::size_t r) {
        const auto& ride = graph.rides[r];
        if (ride.degree() == 1) {
            // flat strategies discount every ride, private rides included;
            // the private-only baseline keeps the full fare
            double lam = pricing.lambda_hat;
            if (strategy.kind == Strategy::Kind::Private)
                lam = 0.0;
            else if (strategy.kind == Strategy::Kind::Flat)
                lam = std::max(strategy.flat_level, pricing.lambda_hat);
            priced[r] = price_private(ride, pricing, lam);
            return;
        }
        if (strategy.kind == Strategy::Kind::Private) return;  // skipped
        if (strategy.kind == Strategy::Kind::Personalised) {
            priced[r] = optimize_discounts(ride, curves[r], pricing, thinning);
        } else {
            const double lam = std::max(strategy.flat_level, pricing.lambda_hat);
            priced[r] = price_at(ride, curves[r],
                                 std::vector<double>(ride.members.size(), lam),
                                 pricing);
        }
    });
    if (strategy.kind == Strategy::Kind::Private) {
        std::vector<PricedRide> privates;
        for (std::size_t r = 0; r < graph.rides.size(); ++r)
            if (graph.rides[r].degree() == 1) privates.push_back(priced[r]);
        priced = std::move(privates);
    }

    report.offer = solve_offer(graph, priced);
    report.priced = priced;

    std::unordered_map<std::int64_t, const PricedRide*> priced_by_id;
    for (const auto& p : priced) priced_by_id[p.ride_id] = &p;
    std::unordered_map<std::int64_t, const ShareableRide*> ride_by_id;
    for (const auto& r : graph.rides) ride_by_id[r.ride_id] = &r;

    double total_objective = 0.0, discount_sum = 0.0;
    std::size_t discount_count = 0;
    for (auto ride_id : report.offer.selected) {
        const auto* p = priced_by_id.at(ride_id);
        total_objective += p->objective;
        report.total_expected_distance += p->expected_distance;
        auto& [ride_count, traveller_total] = report.degree_hist[p->degree];
        ++ride_count;
        traveller_total += static_cast<std::size_t>(p->degree);
        if (p->degree >= 2)
            for (double d : p->discounts) {
                discount_sum += d;
                ++discount_count;
            }
    }
    report.avg_profitability =
        total_objective / static_cast<double>(traveller_count);
    report.avg_discount =
        discount_count ? discount_sum / static_cast<double>(discount_count) : 0.0;

    for (const auto& p : priced) {
        auto rec = detail::record_of(*ride_by_id.at(p.ride_id), p);
        rec.in_offer = std::binary_search(report.offer.selected.begin(),
                                          report.offer.selected.end(), p.ride_id);
        report.rides.push_back(std::move(rec));
    }
    return report;
}

struct PipelineResult {
    std::vector<TripRequest> requests;
    ShareabilityGraph graph;
    std::vector<StrategyReport> reports;
};

// Full study: demand, graph, acceptance curves (shared across strategies),
// per-strategy pricing and matching.
inline PipelineResult run_pipeline(const ScenarioConfig& cfg) {
    if (cfg.strategies.empty()) throw ConfigError("no strategies configured");
    PipelineResult result;
    result.requests = cfg.demand.generate
                          ? generate_demand(cfg.demand, cfg.seed)
                          : load_requests(cfg.demand.path);
    const auto provider = cfg.provider();
    const auto mixture = cfg.mixture();
    result.graph =
        build_graph(result.requests, provider, mixture, cfg.graph, cfg.pricing.rho);
    const DiscretizedGrid grid = discretize(mixture, cfg.n_vot, cfg.n_pfs);

    std::vector<std::vector<AcceptanceCurve>> curves(result.graph.rides.size());
    parallel_for(result.graph.rides.size(), cfg.threads, [&](std::size_t r) {
        const auto& ride = result.graph.rides[r];
        if (ride.degree() < 2) return;
        curves[r].reserve(ride.members.size());
        for (std::size_t m = 0; m < ride.members.size(); ++m)
            curves[r].push_back(
                build_curve(ride, m, grid, cfg.pricing.rho, cfg.penalty_rule));
    });

    for (const auto& strategy : cfg.strategies)
        result.reports.push_back(run_strategy(strategy, result.graph, curves,
                                              cfg.pricing, cfg.thinning,
                                              result.requests.size(),
                                              cfg.threads));
    return result;
}

}  // namespace ridepool
