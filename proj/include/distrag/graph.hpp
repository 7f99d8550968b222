#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "distrag/detail/rng.hpp"
#include "distrag/errors.hpp"
#include "distrag/geo.hpp"

namespace distrag {

struct EdgePolicy {
    enum class Kind { Complete, KNearest, Radius };
    Kind kind = Kind::Complete;
    int param = 0;  // k for KNearest, r_km for Radius

    static EdgePolicy complete() { return {Kind::Complete, 0}; }
    static EdgePolicy k_nearest(int k) {
        if (k <= 0) fail(ErrorCode::BadConfig, "k must be positive");
        return {Kind::KNearest, k};
    }
    static EdgePolicy radius(int r_km) {
        if (r_km <= 0) fail(ErrorCode::BadConfig, "radius must be positive");
        return {Kind::Radius, r_km};
    }
};

// One undirected edge rendered as the knowledge-store triple string.
struct TripleText {
    std::string subject;  // lexicographically smaller display name
    std::string object;
    int distance_km = 0;

    std::string predicate_text() const { return std::to_string(distance_km) + " km"; }

    std::string render() const {
        return "(\"" + subject + "\", \"" + object + "\", \"" + predicate_text() + "\")";
    }

    bool operator==(const TripleText&) const = default;
};

// Undirected weighted graph over canonical city keys. Edge weights are
// integer kilometres; endpoints are stored as an ordered (min, max) pair.
class SpatialGraph {
public:
    using EdgeKey = std::pair<std::string, std::string>;

    void add_node(std::string key, std::string display) {
        display_.emplace(std::move(key), std::move(display));
    }

    void add_city(const std::string& display) { add_node(canonical_key(display), display); }

    void add_edge(const std::string& a, const std::string& b, int km) {
        if (!has_node(a)) fail(ErrorCode::UnknownCity, a);
        if (!has_node(b)) fail(ErrorCode::UnknownCity, b);
        if (a == b) fail(ErrorCode::BadConfig, "self-edge on " + a);
        if (km < 0) fail(ErrorCode::BadConfig, "negative distance");
        edges_[ordered(a, b)] = km;
    }

    bool has_node(const std::string& key) const { return display_.count(key) != 0; }

    const std::string& display_name(const std::string& key) const {
        auto it = display_.find(key);
        if (it == display_.end()) fail(ErrorCode::UnknownCity, key);
        return it->second;
    }

    std::optional<int> edge_distance(const std::string& a, const std::string& b) const {
        if (!has_node(a)) fail(ErrorCode::UnknownCity, a);
        if (!has_node(b)) fail(ErrorCode::UnknownCity, b);
        if (a == b) return std::nullopt;
        auto it = edges_.find(ordered(a, b));
        if (it == edges_.end()) return std::nullopt;
        return it->second;
    }

    // Incident edges ascending by distance, ties by canonical key.
    std::vector<std::pair<std::string, int>> neighbors(const std::string& a) const {
        if (!has_node(a)) fail(ErrorCode::UnknownCity, a);
        std::vector<std::pair<std::string, int>> out;
        for (const auto& [key, km] : edges_) {
            if (key.first == a) out.emplace_back(key.second, km);
            else if (key.second == a) out.emplace_back(key.first, km);
        }
        std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
            return std::tie(x.second, x.first) < std::tie(y.second, y.first);
        });
        return out;
    }

    const std::map<std::string, std::string>& nodes() const { return display_; }
    const std::map<EdgeKey, int>& edges() const { return edges_; }
    size_t node_count() const { return display_.size(); }
    size_t edge_count() const { return edges_.size(); }

    bool operator==(const SpatialGraph&) const = default;

private:
    static EdgeKey ordered(const std::string& a, const std::string& b) {
        return a < b ? EdgeKey{a, b} : EdgeKey{b, a};
    }

    std::map<std::string, std::string> display_;  // key -> display name
    std::map<EdgeKey, int> edges_;
};

namespace detail {

// round half away from zero; distances are nonnegative
inline int round_km(double km) { return static_cast<int>(std::llround(km)); }

} // namespace detail

inline SpatialGraph build_graph(const Gazetteer& g, EdgePolicy policy = EdgePolicy::complete()) {
    if (g.size() < 2) fail(ErrorCode::TooFewCities, "need at least 2 cities");
    SpatialGraph gr;
    for (const City& c : g.cities()) gr.add_node(c.key, c.name);

    const auto& cities = g.cities();
    auto dist = [&](size_t i, size_t j) {
        return detail::round_km(geodesic_km(cities[i].point, cities[j].point));
    };

    switch (policy.kind) {
        case EdgePolicy::Kind::Complete:
            for (size_t i = 0; i < cities.size(); ++i)
                for (size_t j = i + 1; j < cities.size(); ++j)
                    gr.add_edge(cities[i].key, cities[j].key, dist(i, j));
            break;
        case EdgePolicy::Kind::Radius:
            for (size_t i = 0; i < cities.size(); ++i)
                for (size_t j = i + 1; j < cities.size(); ++j) {
                    int d = dist(i, j);
                    if (d <= policy.param) gr.add_edge(cities[i].key, cities[j].key, d);
                }
            break;
        case EdgePolicy::Kind::KNearest: {
            // union of each node's k nearest, symmetrized
            for (size_t i = 0; i < cities.size(); ++i) {
                std::vector<std::pair<int, std::string>> cand;
                std::vector<size_t> idx;
                for (size_t j = 0; j < cities.size(); ++j) {
                    if (j == i) continue;
                    cand.emplace_back(dist(i, j), cities[j].key);
                    idx.push_back(j);
                }
                std::vector<size_t> order(cand.size());
                for (size_t t = 0; t < order.size(); ++t) order[t] = t;
                std::sort(order.begin(), order.end(),
                          [&](size_t x, size_t y) { return cand[x] < cand[y]; });
                size_t take = std::min<size_t>(static_cast<size_t>(policy.param), order.size());
                for (size_t t = 0; t < take; ++t)
                    gr.add_edge(cities[i].key, cand[order[t]].second, cand[order[t]].first);
            }
            break;
        }
    }
    return gr;
}

// Removes floor(sparsity * |E|) edges chosen uniformly without replacement.
// For a fixed seed the removed sets are nested across sparsity levels, since
// the selection order depends only on the edge list and the seed.
inline SpatialGraph sparsify(const SpatialGraph& gr, double sparsity, uint64_t seed) {
    if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
        fail(ErrorCode::BadConfig, "sparsity must be in [0,1]");
    }
    const size_t total = gr.edge_count();
    const size_t remove = static_cast<size_t>(std::floor(sparsity * static_cast<double>(total)));

    std::vector<SpatialGraph::EdgeKey> order;
    order.reserve(total);
    for (const auto& [key, km] : gr.edges()) order.push_back(key);
    detail::Rng rng(seed);
    rng.partial_shuffle(order, remove);

    std::set<SpatialGraph::EdgeKey> removed(order.begin(), order.begin() + static_cast<long>(remove));
    SpatialGraph out;
    for (const auto& [key, display] : gr.nodes()) out.add_node(key, display);
    for (const auto& [key, km] : gr.edges()) {
        if (!removed.count(key)) out.add_edge(key.first, key.second, km);
    }
    return out;
}

// One triple per undirected edge, subject = smaller display name,
// list ordered lexicographically by (subject, object).
inline std::vector<TripleText> to_triple_texts(const SpatialGraph& gr) {
    std::vector<TripleText> out;
    out.reserve(gr.edge_count());
    for (const auto& [key, km] : gr.edges()) {
        std::string da = gr.display_name(key.first);
        std::string db = gr.display_name(key.second);
        if (db < da) std::swap(da, db);
        out.push_back(TripleText{std::move(da), std::move(db), km});
    }
    std::sort(out.begin(), out.end(), [](const TripleText& x, const TripleText& y) {
        return std::tie(x.subject, x.object) < std::tie(y.subject, y.object);
    });
    return out;
}

inline std::string triple_lines(const SpatialGraph& gr) {
    std::string out;
    for (const TripleText& t : to_triple_texts(gr)) {
        out += t.render();
        out += '\n';
    }
    return out;
}

inline SpatialGraph parse_triple_lines(std::string_view text) {
    SpatialGraph gr;
    auto lines = detail::split_lines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
        std::string line = detail::trim(lines[i]);
        if (line.empty()) continue;
        // ("A", "B", "d km")
        auto bad = [&] {
            fail(ErrorCode::MalformedRow, "triple line " + std::to_string(i + 1));
        };
        if (line.front() != '(' || line.back() != ')') bad();
        std::vector<std::string> parts;
        size_t pos = 0;
        while (parts.size() < 3) {
            size_t q1 = line.find('"', pos);
            if (q1 == std::string::npos) bad();
            size_t q2 = line.find('"', q1 + 1);
            if (q2 == std::string::npos) bad();
            parts.push_back(line.substr(q1 + 1, q2 - q1 - 1));
            pos = q2 + 1;
        }
        const std::string& pred = parts[2];
        if (pred.size() < 4 || pred.substr(pred.size() - 3) != " km") bad();
        int km = 0;
        try {
            km = std::stoi(pred.substr(0, pred.size() - 3));
        } catch (const std::exception&) {
            bad();
        }
        gr.add_city(parts[0]);
        gr.add_city(parts[1]);
        gr.add_edge(canonical_key(parts[0]), canonical_key(parts[1]), km);
    }
    return gr;
}

} // namespace distrag
