#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ridepool/core.hpp"

namespace ridepool {

struct Coord {
    double x = 0.0;
    double y = 0.0;
};

// One traveller's demand: where from, where to, and when.
struct TripRequest {
    std::int64_t id = 0;
    Coord origin;
    Coord destination;
    double request_time_s = 0.0;

    TripRequest(std::int64_t id_, Coord o, Coord d, double t)
        : id(id_), origin(o), destination(d), request_time_s(t) {
        if (o.x == d.x && o.y == d.y)
            throw std::invalid_argument("origin equals destination for request " +
                                        std::to_string(id_));
        if (t < 0.0)
            throw std::invalid_argument("negative request time for request " +
                                        std::to_string(id_));
    }
};

// Deterministic travel time/distance source. Metric modes derive time from
// distance at a constant speed; matrix mode looks up precomputed seconds
// between integer node ids (the x coordinate) and derives distance back
// from the same speed.
class TravelTimeProvider {
  public:
    enum class Mode { Euclidean, Manhattan, Haversine, Matrix };

    explicit TravelTimeProvider(Mode mode = Mode::Euclidean,
                                double speed_kmh = 30.0)
        : mode_(mode), speed_kmh_(speed_kmh) {
        if (speed_kmh <= 0.0)
            throw std::invalid_argument("speed must be positive");
    }

    static TravelTimeProvider from_matrix(std::vector<double> seconds,
                                          std::size_t n, double speed_kmh = 30.0) {
        TravelTimeProvider p(Mode::Matrix, speed_kmh);
        if (seconds.size() != n * n)
            throw std::invalid_argument("travel time matrix must be square");
        p.matrix_ = std::move(seconds);
        p.matrix_n_ = n;
        return p;
    }

    static TravelTimeProvider load_matrix(const std::string& path,
                                          double speed_kmh = 30.0);

    Mode mode() const { return mode_; }
    double speed_kmh() const { return speed_kmh_; }

    double distance_km(Coord a, Coord b) const {
        switch (mode_) {
            case Mode::Euclidean:
                return std::hypot(b.x - a.x, b.y - a.y);
            case Mode::Manhattan:
                return std::fabs(b.x - a.x) + std::fabs(b.y - a.y);
            case Mode::Haversine:
                return haversine_km(a, b);
            case Mode::Matrix:
                return travel_time_s(a, b) / 3600.0 * speed_kmh_;
        }
        return 0.0;
    }

    double travel_time_s(Coord a, Coord b) const {
        if (mode_ == Mode::Matrix) {
            const auto i = node_of(a);
            const auto j = node_of(b);
            return matrix_[i * matrix_n_ + j];
        }
        return distance_km(a, b) / speed_kmh_ * 3600.0;
    }

  private:
    std::size_t node_of(Coord c) const {
        const auto n = static_cast<long long>(std::llround(c.x));
        if (n < 0 || static_cast<std::size_t>(n) >= matrix_n_)
            throw DataError("node " + std::to_string(n) +
                            " missing from travel time matrix");
        return static_cast<std::size_t>(n);
    }

    static double haversine_km(Coord a, Coord b) {
        constexpr double kEarthRadiusKm = 6371.0088;
        constexpr double kDeg = 3.14159265358979323846 / 180.0;
        const double dlat = (b.y - a.y) * kDeg;
        const double dlon = (b.x - a.x) * kDeg;
        const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                         std::cos(a.y * kDeg) * std::cos(b.y * kDeg) *
                             std::sin(dlon / 2) * std::sin(dlon / 2);
        return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
    }

    Mode mode_;
    double speed_kmh_;
    std::vector<double> matrix_;
    std::size_t matrix_n_ = 0;
};

// Distance (km) and travel time (s) of the private, unshared trip.
inline std::pair<double, double> private_metrics(const TripRequest& req,
                                                 const TravelTimeProvider& p) {
    return {p.distance_km(req.origin, req.destination),
            p.travel_time_s(req.origin, req.destination)};
}

inline constexpr const char* kRequestCsvHeader =
    "id,origin_x,origin_y,dest_x,dest_y,request_time_s";

inline std::vector<TripRequest> load_requests(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open request file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != kRequestCsvHeader)
        throw DataError("request file header mismatch in " + path);

    std::vector<TripRequest> out;
    std::unordered_set<std::int64_t> seen;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        double v[6];
        for (int i = 0; i < 6; ++i) {
            if (!std::getline(ss, field, ','))
                throw DataError("malformed row " + std::to_string(row) + " in " +
                                path);
            try {
                v[i] = std::stod(field);
            } catch (const std::exception&) {
                throw DataError("malformed row " + std::to_string(row) + " in " +
                                path);
            }
            if (!std::isfinite(v[i]))
                throw DataError("non-finite value in row " + std::to_string(row) +
                                " of " + path);
        }
        const auto id = static_cast<std::int64_t>(v[0]);
        if (!seen.insert(id).second)
            throw DataError("duplicate request id " + std::to_string(id) + " in " +
                            path);
        try {
            out.emplace_back(id, Coord{v[1], v[2]}, Coord{v[3], v[4]}, v[5]);
        } catch (const std::invalid_argument& e) {
            throw DataError(std::string(e.what()) + " (row " +
                            std::to_string(row) + " of " + path + ")");
        }
    }
    return out;
}

inline void write_requests(const std::string& path,
                           const std::vector<TripRequest>& requests) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write request file: " + path);
    out << kRequestCsvHeader << "\n";
    for (const auto& r : requests) {
        out << r.id << ',' << format_double(r.origin.x) << ','
            << format_double(r.origin.y) << ',' << format_double(r.destination.x)
            << ',' << format_double(r.destination.y) << ','
            << format_double(r.request_time_s) << "\n";
    }
}

// Square CSV of seconds; header row/column carry the node ids 0..n-1.
inline TravelTimeProvider TravelTimeProvider::load_matrix(
    const std::string& path, double speed_kmh) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open matrix file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty matrix file: " + path);
    std::size_t n = 0;
    {
        std::istringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');  // corner cell
        while (std::getline(ss, field, ',')) ++n;
    }
    std::vector<double> seconds;
    seconds.reserve(n * n);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');  // row id
        std::size_t cols = 0;
        while (std::getline(ss, field, ',')) {
            seconds.push_back(std::stod(field));
            ++cols;
        }
        if (cols != n) throw DataError("ragged matrix row in " + path);
    }
    if (seconds.size() != n * n)
        throw DataError("matrix is not square in " + path);
    return from_matrix(std::move(seconds), n, speed_kmh);
}

}  // namespace ridepool
