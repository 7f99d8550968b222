#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "distrag/detail/hash.hpp"
#include "distrag/errors.hpp"
#include "distrag/geo.hpp"

namespace distrag {

// Client for a place-extraction service:
//   GET <base>/places?region=<name>
//   -> {"places": [{"name": ..., "region": ..., "lat": ..., "lon": ..., "population": ...}]}
// Responses are cached as gazetteer CSV so later runs work offline.
struct PlacesClientConfig {
    std::string base_url;                      // falls back to DISTRAG_PLACES_URL
    std::string path = "/places";
    int timeout_s = 60;
    std::filesystem::path cache_dir = ".distrag-cache";

    std::string resolved_url() const {
        if (!base_url.empty()) return base_url;
        const char* env = std::getenv("DISTRAG_PLACES_URL");
        if (!env || !*env) fail(ErrorCode::BadConfig, "DISTRAG_PLACES_URL not set");
        return env;
    }
};

class PlacesClient {
public:
    explicit PlacesClient(PlacesClientConfig cfg) : cfg_(std::move(cfg)) {}

    std::filesystem::path cache_file(const std::string& region) const {
        std::string key = detail::sha256_hex(cfg_.resolved_url() + "|" + region);
        return cfg_.cache_dir / (key + ".csv");
    }

    Gazetteer fetch(const std::string& region) const {
        std::filesystem::path cached = cache_file(region);
        if (std::filesystem::exists(cached)) {
            return load_gazetteer(cached);
        }
        Gazetteer g = fetch_uncached(region);
        std::error_code ec;
        std::filesystem::create_directories(cfg_.cache_dir, ec);
        save_gazetteer(g, cached);
        return g;
    }

    Gazetteer fetch_uncached(const std::string& region) const {
        httplib::Client cli(cfg_.resolved_url());
        cli.set_connection_timeout(cfg_.timeout_s);
        cli.set_read_timeout(cfg_.timeout_s);
        httplib::Params params{{"region", region}};
        auto res = cli.Get(cfg_.path, params, httplib::Headers{});
        if (!res) fail(ErrorCode::NetworkError, "place service unreachable");
        if (res->status == 429) {
            std::string retry = res->get_header_value("Retry-After");
            fail(ErrorCode::RateLimited, retry.empty() ? "retry later" : "retry after " + retry + "s");
        }
        if (res->status != 200) {
            fail(ErrorCode::NetworkError, "place service returned " + std::to_string(res->status));
        }
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
            fail(ErrorCode::NetworkError, "place service response is not JSON");
        }
        if (!parsed.contains("places") || !parsed["places"].is_array()) {
            fail(ErrorCode::NetworkError, "place service response missing 'places'");
        }
        Gazetteer g;
        for (const auto& p : parsed["places"]) {
            if (!p.contains("name") || !p.contains("lat") || !p.contains("lon")) {
                fail(ErrorCode::NetworkError, "place entry missing fields");
            }
            City c;
            c.name = detail::compose_display_name(p["name"].get<std::string>(),
                                                  p.value("region", std::string{}));
            c.key = canonical_key(c.name);
            try {
                c.point = GeoPoint(p["lat"].get<double>(), p["lon"].get<double>());
            } catch (const Error&) {
                fail(ErrorCode::NetworkError, "place entry has bad coordinates");
            }
            if (p.contains("population") && p["population"].is_number_integer()) {
                c.population = p["population"].get<long long>();
            }
            g.add(std::move(c));
        }
        if (g.empty()) fail(ErrorCode::EmptyResult, "no places for region '" + region + "'");
        return g;
    }

private:
    PlacesClientConfig cfg_;
};

inline Gazetteer fetch_places_remote(const std::string& region, const PlacesClient& client) {
    return client.fetch(region);
}

} // namespace distrag
