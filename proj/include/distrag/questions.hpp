#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "distrag/detail/rng.hpp"
#include "distrag/errors.hpp"
#include "distrag/graph.hpp"
#include "distrag/question_text.hpp"

namespace distrag {

struct DistanceGold {
    long long km = 0;
    bool operator==(const DistanceGold&) const = default;
};

struct ClosestGold {
    std::string key;
    long long km = 0;
    bool operator==(const ClosestGold&) const = default;
};

struct SimilarGold {
    long long target_km = 0;     // the A-B distance the answer must approximate
    std::string best_key;
    long long best_gap_km = 0;   // |d(C, best) - target|
    bool operator==(const SimilarGold&) const = default;
};

using GoldAnswer = std::variant<DistanceGold, ClosestGold, SimilarGold>;

struct Question {
    std::string id;
    Difficulty difficulty = Difficulty::Easy;
    std::string text;
    std::vector<std::string> cities;  // canonical keys: (A,B), (A), or (A,B,C)
    GoldAnswer gold;

    bool operator==(const Question&) const = default;
};

// Brute-force ground truth. This is the oracle the rest of the system is
// checked against, so it stays a plain scan with no shortcuts.
inline GoldAnswer gold_answer(const SpatialGraph& gr, Difficulty difficulty,
                              const std::vector<std::string>& cities) {
    switch (difficulty) {
        case Difficulty::Easy: {
            auto d = gr.edge_distance(cities.at(0), cities.at(1));
            if (!d) fail(ErrorCode::MissingEdge, cities[0] + " -- " + cities[1]);
            return DistanceGold{*d};
        }
        case Difficulty::Medium: {
            auto nbrs = gr.neighbors(cities.at(0));
            if (nbrs.empty()) fail(ErrorCode::NoCandidates, cities[0] + " is isolated");
            std::optional<std::pair<long long, std::string>> best;  // (km, key)
            for (const auto& [key, km] : nbrs) {
                std::pair<long long, std::string> cand{km, key};
                if (!best || cand < *best) best = cand;
            }
            return ClosestGold{best->second, best->first};
        }
        case Difficulty::Difficult: {
            const std::string& a = cities.at(0);
            const std::string& b = cities.at(1);
            const std::string& c = cities.at(2);
            auto x = gr.edge_distance(a, b);
            if (!x) fail(ErrorCode::MissingEdge, a + " -- " + b);
            std::optional<std::pair<long long, std::string>> best;  // (gap, key)
            for (const auto& [key, km] : gr.neighbors(c)) {
                if (key == a || key == b || key == c) continue;
                long long gap = km > *x ? km - *x : *x - km;
                std::pair<long long, std::string> cand{gap, key};
                if (!best || cand < *best) best = cand;
            }
            if (!best) fail(ErrorCode::NoCandidates, c + " has no eligible neighbors");
            return SimilarGold{*x, best->second, best->first};
        }
    }
    fail(ErrorCode::BadConfig, "bad difficulty");
}

namespace detail {

inline std::vector<std::string> display_names(const SpatialGraph& gr,
                                              const std::vector<std::string>& keys) {
    std::vector<std::string> out;
    out.reserve(keys.size());
    for (const std::string& k : keys) out.push_back(gr.display_name(k));
    return out;
}

} // namespace detail

// Seeded, reproducible sampling. The two-hop family is constructed so that an
// exact integer-km match always exists: sample the (C, X) edge first, then
// look for a disjoint (A, B) pair at exactly that distance.
inline std::vector<Question> generate_questions(const SpatialGraph& gr, Difficulty difficulty,
                                                int n, uint64_t seed) {
    if (n < 1) fail(ErrorCode::BadConfig, "n must be >= 1");
    detail::Rng rng(seed);
    std::vector<Question> out;
    auto make = [&](const std::vector<std::string>& keys, size_t index) {
        Question q;
        q.id = std::string(to_string(difficulty)) + "-" + std::to_string(index + 1);
        q.difficulty = difficulty;
        q.cities = keys;
        q.text = format_question(difficulty, detail::display_names(gr, keys));
        q.gold = gold_answer(gr, difficulty, keys);
        return q;
    };

    switch (difficulty) {
        case Difficulty::Easy: {
            std::vector<SpatialGraph::EdgeKey> pairs;
            for (const auto& [key, km] : gr.edges()) pairs.push_back(key);
            if (pairs.size() < static_cast<size_t>(n)) {
                fail(ErrorCode::InsufficientGraph, "not enough connected pairs");
            }
            rng.partial_shuffle(pairs, static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                auto [a, b] = pairs[static_cast<size_t>(i)];
                if (rng.coin()) std::swap(a, b);
                out.push_back(make({a, b}, static_cast<size_t>(i)));
            }
            break;
        }
        case Difficulty::Medium: {
            std::vector<std::string> nodes;
            for (const auto& [key, display] : gr.nodes()) {
                if (!gr.neighbors(key).empty()) nodes.push_back(key);
            }
            if (nodes.size() < static_cast<size_t>(n)) {
                fail(ErrorCode::InsufficientGraph, "not enough connected cities");
            }
            rng.partial_shuffle(nodes, static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                out.push_back(make({nodes[static_cast<size_t>(i)]}, static_cast<size_t>(i)));
            }
            break;
        }
        case Difficulty::Difficult: {
            // distance -> pairs at that distance, in canonical order
            std::map<int, std::vector<SpatialGraph::EdgeKey>> by_distance;
            std::vector<std::pair<std::string, std::string>> cx;  // ordered (C, X)
            for (const auto& [key, km] : gr.edges()) {
                by_distance[km].push_back(key);
                cx.emplace_back(key.first, key.second);
                cx.emplace_back(key.second, key.first);
            }
            rng.shuffle(cx);
            for (const auto& [c, x] : cx) {
                if (out.size() == static_cast<size_t>(n)) break;
                int d = *gr.edge_distance(c, x);
                const auto& candidates = by_distance[d];
                const SpatialGraph::EdgeKey* found = nullptr;
                for (const auto& pair : candidates) {
                    if (pair.first == c || pair.first == x || pair.second == c ||
                        pair.second == x) {
                        continue;
                    }
                    found = &pair;
                    break;
                }
                if (!found) continue;  // no disjoint exact match, discard candidate
                out.push_back(make({found->first, found->second, c}, out.size()));
            }
            if (out.size() < static_cast<size_t>(n)) {
                fail(ErrorCode::InsufficientGraph,
                     "only " + std::to_string(out.size()) + " exact-match questions exist");
            }
            break;
        }
    }
    return out;
}

// --- JSON Lines persistence (stable field order) ---

inline nlohmann::ordered_json question_to_json(const Question& q) {
    nlohmann::ordered_json j;
    j["id"] = q.id;
    j["difficulty"] = to_string(q.difficulty);
    j["text"] = q.text;
    j["cities"] = q.cities;
    nlohmann::ordered_json gold;
    if (const auto* d = std::get_if<DistanceGold>(&q.gold)) {
        gold["kind"] = "distance_km";
        gold["km"] = d->km;
    } else if (const auto* c = std::get_if<ClosestGold>(&q.gold)) {
        gold["kind"] = "closest_city";
        gold["key"] = c->key;
        gold["km"] = c->km;
    } else if (const auto* s = std::get_if<SimilarGold>(&q.gold)) {
        gold["kind"] = "similar_city";
        gold["target_km"] = s->target_km;
        gold["best_key"] = s->best_key;
        gold["best_gap_km"] = s->best_gap_km;
    }
    j["gold"] = std::move(gold);
    return j;
}

inline Question question_from_json(const nlohmann::json& j) {
    Question q;
    q.id = j.at("id").get<std::string>();
    q.difficulty = difficulty_from_string(j.at("difficulty").get<std::string>());
    q.text = j.at("text").get<std::string>();
    q.cities = j.at("cities").get<std::vector<std::string>>();
    const auto& gold = j.at("gold");
    std::string kind = gold.at("kind").get<std::string>();
    if (kind == "distance_km") {
        q.gold = DistanceGold{gold.at("km").get<long long>()};
    } else if (kind == "closest_city") {
        q.gold = ClosestGold{gold.at("key").get<std::string>(), gold.at("km").get<long long>()};
    } else if (kind == "similar_city") {
        q.gold = SimilarGold{gold.at("target_km").get<long long>(),
                             gold.at("best_key").get<std::string>(),
                             gold.at("best_gap_km").get<long long>()};
    } else {
        fail(ErrorCode::BadConfig, "unknown gold kind '" + kind + "'");
    }
    return q;
}

inline std::string questions_to_jsonl(const std::vector<Question>& questions) {
    std::string out;
    for (const Question& q : questions) {
        out += question_to_json(q).dump();
        out += '\n';
    }
    return out;
}

inline void write_questions_jsonl(const std::vector<Question>& questions,
                                  const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << questions_to_jsonl(questions);
}

inline std::vector<Question> read_questions_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::MissingFile, path.string());
    std::vector<Question> out;
    std::string line;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        out.push_back(question_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

} // namespace distrag
