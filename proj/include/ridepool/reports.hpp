#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ridepool/core.hpp"
#include "ridepool/experiment.hpp"

namespace ridepool {

// Discount and acceptance histograms use 5% bins.
inline constexpr double kDiscountBinWidth = 0.05;
inline constexpr double kAcceptanceBinWidth = 0.05;
inline constexpr double kSavingsBinWidth = 0.05;
inline constexpr double kProfitabilityBinWidth = 0.05;

namespace detail {

inline double bin_low(double v, double width) {
    return std::floor(v / width + 1e-12) * width;
}

}  // namespace detail

// Writes the aggregate KPI table and the per-figure datasets. All files have
// a stable column order and deterministic float formatting.
inline void emit_reports(const std::vector<StrategyReport>& reports,
                         const std::string& out_dir) {
    if (reports.empty()) throw ConfigError("no strategy reports to emit");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto path = [&](const char* name) {
        return (fs::path(out_dir) / name).string();
    };

    {
        nlohmann::ordered_json kpis = nlohmann::ordered_json::array();
        for (const auto& r : reports) {
            std::size_t travellers = 0, rides = 0;
            for (const auto& [degree, counts] : r.degree_hist) {
                rides += counts.first;
                travellers += counts.second;
            }
            nlohmann::ordered_json row;
            row["strategy"] = r.name;
            row["avg_expected_profitability"] = r.avg_profitability;
            row["total_expected_distance"] = r.total_expected_distance;
            row["avg_discount"] = r.avg_discount;
            row["offer_ride_count"] = rides;
            row["traveller_count"] = travellers;
            row["avg_degree"] = rides ? static_cast<double>(travellers) /
                                            static_cast<double>(rides)
                                      : 0.0;
            kpis.push_back(row);
        }
        std::ofstream out(path("kpis.json"));
        if (!out) throw DataError("cannot write kpis.json");
        out << kpis.dump(2) << "\n";
    }

    {
        std::ofstream out(path("discount_hist.csv"));
        out << "strategy,scope,bin_low,count\n";
        for (const auto& r : reports) {
            for (const char* scope : {"graph", "offer"}) {
                std::map<double, std::size_t> bins;
                for (const auto& rec : r.rides) {
                    if (rec.degree < 2) continue;
                    if (std::string(scope) == "offer" && !rec.in_offer) continue;
                    for (double d : rec.discounts)
                        ++bins[detail::bin_low(d, kDiscountBinWidth)];
                }
                for (const auto& [low, count] : bins)
                    out << r.name << ',' << scope << ',' << format_double(low)
                        << ',' << count << "\n";
            }
        }
    }

    {
        std::ofstream out(path("degree_hist.csv"));
        out << "strategy,degree,ride_count,traveller_count\n";
        for (const auto& r : reports)
            for (const auto& [degree, counts] : r.degree_hist)
                out << r.name << ',' << degree << ',' << counts.first << ','
                    << counts.second << "\n";
    }

    {
        std::ofstream out(path("profitability_per_ride.csv"));
        out << "strategy,ride_id,degree,Gamma,in_offer\n";
        for (const auto& r : reports)
            for (const auto& rec : r.rides)
                out << r.name << ',' << rec.ride_id << ',' << rec.degree << ','
                    << format_double(rec.profitability) << ','
                    << (rec.in_offer ? 1 : 0) << "\n";
    }

    {
        std::ofstream out(path("savings_vs_profitability.csv"));
        out << "strategy,ride_id,degree,distance_saved,Gamma,in_offer\n";
        for (const auto& r : reports)
            for (const auto& rec : r.rides) {
                if (rec.degree < 2) continue;
                out << r.name << ',' << rec.ride_id << ',' << rec.degree << ','
                    << format_double(rec.distance_saved) << ','
                    << format_double(rec.profitability) << ','
                    << (rec.in_offer ? 1 : 0) << "\n";
            }
    }

    {
        std::ofstream out(path("acceptance_hist.csv"));
        out << "strategy,scope,bin_low,count\n";
        for (const auto& r : reports) {
            for (const char* scope : {"graph", "offer"}) {
                std::map<double, std::size_t> bins;
                for (const auto& rec : r.rides) {
                    if (rec.degree < 2) continue;
                    if (std::string(scope) == "offer" && !rec.in_offer) continue;
                    ++bins[detail::bin_low(rec.accept_prob, kAcceptanceBinWidth)];
                }
                for (const auto& [low, count] : bins)
                    out << r.name << ',' << scope << ',' << format_double(low)
                        << ',' << count << "\n";
            }
        }
    }

    {
        std::ofstream out(path("heatmap_bins.csv"));
        out << "strategy,savings_bin_low,profitability_bin_low,count,"
               "mean_acceptance\n";
        for (const auto& r : reports) {
            std::map<std::pair<double, double>, std::pair<std::size_t, double>>
                bins;
            for (const auto& rec : r.rides) {
                if (rec.degree < 2) continue;
                auto& cell =
                    bins[{detail::bin_low(rec.distance_saved, kSavingsBinWidth),
                          detail::bin_low(rec.profitability,
                                          kProfitabilityBinWidth)}];
                ++cell.first;
                cell.second += rec.accept_prob;
            }
            for (const auto& [key, cell] : bins)
                out << r.name << ',' << format_double(key.first) << ','
                    << format_double(key.second) << ',' << cell.first << ','
                    << format_double(cell.second /
                                     static_cast<double>(cell.first))
                    << "\n";
        }
    }
}

}  // namespace ridepool
