#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "distrag/detail/strings.hpp"
#include "distrag/errors.hpp"

namespace distrag {

inline constexpr double kEarthRadiusKm = 6371.0088;

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    GeoPoint() = default;
    GeoPoint(double lat_deg, double lon_deg) : lat(lat_deg), lon(lon_deg) {
        if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 || lat > 90.0 ||
            lon < -180.0 || lon > 180.0) {
            fail(ErrorCode::InvalidCoordinate,
                 "lat/lon out of range: (" + std::to_string(lat_deg) + ", " +
                     std::to_string(lon_deg) + ")");
        }
    }

    bool operator==(const GeoPoint&) const = default;
};

// Canonical key: lowercased display name with spaces turned into underscores.
// "Newcastle, NSW" -> "newcastle,_nsw". Keys join SPARQL identifiers back to
// display names, so the transform must be reversible for underscore-free names.
inline std::string canonical_key(std::string_view display_name) {
    return detail::to_lower(detail::replace_all(detail::trim(display_name), ' ', '_'));
}

struct City {
    std::string name;           // display form, e.g. "Newcastle, NSW"
    std::string key;            // canonical_key(name)
    GeoPoint point;
    std::optional<long long> population;
};

class Gazetteer {
public:
    void add(City city) {
        if (index_.count(city.key)) {
            fail(ErrorCode::DuplicateCity, city.key);
        }
        index_.emplace(city.key, cities_.size());
        cities_.push_back(std::move(city));
    }

    const City* find(std::string_view key) const {
        auto it = index_.find(std::string(key));
        return it == index_.end() ? nullptr : &cities_[it->second];
    }

    const std::vector<City>& cities() const { return cities_; }
    size_t size() const { return cities_.size(); }
    bool empty() const { return cities_.empty(); }

private:
    std::vector<City> cities_;               // stable file order
    std::map<std::string, size_t> index_;    // canonical_key -> position
};

// Great-circle distance on the mean-radius sphere. The haversine form keeps
// short distances numerically stable; the argument order is canonicalized so
// the result is bitwise symmetric in (a, b).
inline double geodesic_km(GeoPoint a, GeoPoint b) {
    if (std::tie(b.lat, b.lon) < std::tie(a.lat, a.lon)) std::swap(a, b);
    constexpr double deg = 3.14159265358979323846 / 180.0;
    const double phi1 = a.lat * deg;
    const double phi2 = b.lat * deg;
    const double dphi = (b.lat - a.lat) * deg;
    const double dlam = (b.lon - a.lon) * deg;
    const double sp = std::sin(dphi / 2.0);
    const double sl = std::sin(dlam / 2.0);
    double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
    if (h < 0.0) h = 0.0;
    if (h > 1.0) h = 1.0;
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

namespace detail {

inline std::string compose_display_name(std::string_view name, std::string_view region) {
    std::string n = trim(name);
    std::string r = trim(region);
    if (r.empty()) return n;
    return n + ", " + r;
}

// display part before the trailing ", <region>" suffix, if any
inline std::string name_part(std::string_view display) {
    size_t pos = display.rfind(", ");
    if (pos == std::string_view::npos) return std::string(display);
    return std::string(display.substr(0, pos));
}

inline std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    try {
        size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

} // namespace detail

inline constexpr std::string_view kGazetteerHeader = "name,region,lat,lon,population";

// CSV schema: name,region,lat,lon,population (population may be blank).
inline Gazetteer load_gazetteer_text(std::string_view text) {
    auto lines = detail::split_lines(text);
    if (lines.empty() || detail::trim(lines[0]) != kGazetteerHeader) {
        fail(ErrorCode::MalformedRow, "line 1: expected header '" + std::string(kGazetteerHeader) + "'");
    }
    Gazetteer g;
    for (size_t i = 1; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split(line, ',');
        if (fields.size() != 5) {
            fail(ErrorCode::MalformedRow, "line " + std::to_string(i + 1) + ": expected 5 fields");
        }
        auto lat = detail::parse_double(detail::trim(fields[2]));
        auto lon = detail::parse_double(detail::trim(fields[3]));
        if (!lat || !lon) {
            fail(ErrorCode::MalformedRow, "line " + std::to_string(i + 1) + ": unparseable coordinates");
        }
        City c;
        c.name = detail::compose_display_name(fields[0], fields[1]);
        c.key = canonical_key(c.name);
        try {
            c.point = GeoPoint(*lat, *lon);
        } catch (const Error&) {
            fail(ErrorCode::MalformedRow, "line " + std::to_string(i + 1) + ": coordinates out of range");
        }
        std::string pop = detail::trim(fields[4]);
        if (!pop.empty()) {
            try {
                c.population = std::stoll(pop);
            } catch (const std::exception&) {
                fail(ErrorCode::MalformedRow, "line " + std::to_string(i + 1) + ": bad population");
            }
        }
        g.add(std::move(c));
    }
    if (g.empty()) fail(ErrorCode::EmptyGazetteer, "no city rows");
    return g;
}

inline Gazetteer load_gazetteer(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::MissingFile, path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_gazetteer_text(buf.str());
}

inline std::string gazetteer_to_csv(const Gazetteer& g) {
    std::ostringstream out;
    out << kGazetteerHeader << "\n";
    for (const City& c : g.cities()) {
        size_t pos = c.name.rfind(", ");
        std::string name = pos == std::string::npos ? c.name : c.name.substr(0, pos);
        std::string region = pos == std::string::npos ? "" : c.name.substr(pos + 2);
        out << name << ',' << region << ',' << c.point.lat << ',' << c.point.lon << ',';
        if (c.population) out << *c.population;
        out << "\n";
    }
    return out.str();
}

inline void save_gazetteer(const Gazetteer& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << gazetteer_to_csv(g);
}

// Lookup by canonical key after normalizing the input: trim, strip trailing
// periods, lowercase, spaces and underscores treated as equivalent. Inputs
// without a region suffix match on the bare name when it is unambiguous.
inline std::optional<City> geocode(std::string_view name, const Gazetteer& g) {
    std::string s = detail::trim(name);
    while (!s.empty() && s.back() == '.') s.pop_back();
    if (s.empty()) return std::nullopt;
    std::string key = canonical_key(s);
    if (const City* c = g.find(key)) return *c;
    if (key.find(',') == std::string::npos) {
        const City* unique = nullptr;
        for (const City& c : g.cities()) {
            if (canonical_key(detail::name_part(c.name)) == key) {
                if (unique) return std::nullopt;  // ambiguous
                unique = &c;
            }
        }
        if (unique) return *unique;
    }
    return std::nullopt;
}

} // namespace distrag
