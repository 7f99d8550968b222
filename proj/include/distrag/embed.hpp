#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <queue>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "distrag/detail/hash.hpp"
#include "distrag/detail/strings.hpp"
#include "distrag/errors.hpp"
#include "distrag/graph.hpp"

namespace distrag {

// Deterministic character n-gram embedder. Places share long substrings with
// the questions that mention them, which is exactly the signal retrieval needs.
struct LexicalHashEmbedder {
    int dim = 4096;
    int ngram = 3;

    void validate() const {
        if (dim < 64) fail(ErrorCode::BadConfig, "embedder dim must be >= 64");
        if (ngram < 2 || ngram > 5) fail(ErrorCode::BadConfig, "ngram must be in [2,5]");
    }
};

// POST {"input": [...strings]} -> {"vectors": [[floats]]}
struct RemoteEmbedder {
    std::string base_url;  // falls back to DISTRAG_EMBED_URL
    std::string path = "/embed";
    int dim = 0;           // expected dimension, 0 = accept whatever comes back
    int timeout_s = 30;

    std::string resolved_url() const {
        if (!base_url.empty()) return base_url;
        const char* env = std::getenv("DISTRAG_EMBED_URL");
        if (!env || !*env) fail(ErrorCode::BadConfig, "DISTRAG_EMBED_URL not set");
        return env;
    }
};

using Embedder = std::variant<LexicalHashEmbedder, RemoteEmbedder>;

namespace detail {

inline void l2_normalize(std::vector<float>& v) {
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (float& x : v) x = static_cast<float>(x / norm);
    }
}

inline std::vector<float> lexical_hash_embed(const std::string& text, const LexicalHashEmbedder& e) {
    e.validate();
    std::vector<float> v(static_cast<size_t>(e.dim), 0.0f);
    // '\x02'/'\x03' mark the string boundaries so edge n-grams are distinct
    std::string padded = "\x02" + to_lower(text) + "\x03";
    const size_t n = static_cast<size_t>(e.ngram);
    if (padded.size() < n) return v;  // all-zero for empty text
    std::map<std::string_view, int> counts;
    for (size_t i = 0; i + n <= padded.size(); ++i) {
        counts[std::string_view(padded).substr(i, n)]++;
    }
    for (const auto& [gram, count] : counts) {
        size_t bucket = static_cast<size_t>(fnv1a64(gram) % static_cast<uint64_t>(e.dim));
        v[bucket] += static_cast<float>(count / std::sqrt(1.0 + count));
    }
    l2_normalize(v);
    return v;
}

inline std::vector<std::vector<float>> remote_embed_batch(const std::vector<std::string>& texts,
                                                          const RemoteEmbedder& e) {
    httplib::Client cli(e.resolved_url());
    cli.set_connection_timeout(e.timeout_s);
    cli.set_read_timeout(e.timeout_s);
    nlohmann::json body;
    body["input"] = texts;
    auto res = cli.Post(e.path, body.dump(), "application/json");
    if (!res) fail(ErrorCode::NetworkError, "embed endpoint unreachable");
    if (res->status != 200) {
        fail(ErrorCode::NetworkError, "embed endpoint returned " + std::to_string(res->status));
    }
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::NetworkError, "embed response is not JSON");
    }
    if (!parsed.contains("vectors") || !parsed["vectors"].is_array() ||
        parsed["vectors"].size() != texts.size()) {
        fail(ErrorCode::NetworkError, "embed response missing vectors");
    }
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& arr : parsed["vectors"]) {
        if (!arr.is_array()) fail(ErrorCode::NetworkError, "embed vector is not an array");
        std::vector<float> v;
        v.reserve(arr.size());
        for (const auto& x : arr) v.push_back(x.get<float>());
        if (e.dim > 0 && v.size() != static_cast<size_t>(e.dim)) {
            fail(ErrorCode::BadDimension,
                 "expected " + std::to_string(e.dim) + ", got " + std::to_string(v.size()));
        }
        l2_normalize(v);
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace detail

inline std::vector<float> embed_text(const std::string& text, const Embedder& e) {
    if (const auto* lex = std::get_if<LexicalHashEmbedder>(&e)) {
        return detail::lexical_hash_embed(text, *lex);
    }
    return detail::remote_embed_batch({text}, std::get<RemoteEmbedder>(e)).front();
}

struct VectorIndex {
    std::vector<TripleText> triples;
    std::vector<std::vector<float>> vectors;  // unit vectors, same order
    size_t size() const { return triples.size(); }
    bool empty() const { return triples.empty(); }
};

inline VectorIndex build_index(const std::vector<TripleText>& triples, const Embedder& e) {
    VectorIndex idx;
    idx.triples = triples;
    if (const auto* remote = std::get_if<RemoteEmbedder>(&e)) {
        std::vector<std::string> texts;
        texts.reserve(triples.size());
        for (const TripleText& t : triples) texts.push_back(t.render());
        if (!texts.empty()) idx.vectors = detail::remote_embed_batch(texts, *remote);
    } else {
        idx.vectors.reserve(triples.size());
        for (const TripleText& t : triples) idx.vectors.push_back(embed_text(t.render(), e));
    }
    return idx;
}

struct RetrievalConfig {
    int k = 10;
};

struct ScoredTriple {
    TripleText triple;
    double score = 0.0;
    size_t index = 0;  // position in the index, used for tie ordering
};

inline double cosine(std::span<const float> a, std::span<const float> b) {
    double dot = 0.0;
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) dot += static_cast<double>(a[i]) * b[i];
    return dot;  // inputs are unit vectors
}

// Exact top-k by cosine similarity; ties keep index order.
inline std::vector<ScoredTriple> query_top_k(const VectorIndex& idx, const std::string& question,
                                             const Embedder& e, RetrievalConfig cfg = {}) {
    if (idx.empty()) fail(ErrorCode::EmptyIndex, "index has no entries");
    if (cfg.k < 1) fail(ErrorCode::BadConfig, "k must be >= 1");
    std::vector<float> q = embed_text(question, e);
    const size_t k = std::min<size_t>(static_cast<size_t>(cfg.k), idx.size());

    // heap keeps the current top-k with the worst entry on top
    using HeapItem = std::pair<double, size_t>;
    auto better = [](const HeapItem& x, const HeapItem& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second < y.second;  // among equal scores the earlier index wins
    };
    std::priority_queue<HeapItem, std::vector<HeapItem>, decltype(better)> heap(better);
    for (size_t i = 0; i < idx.size(); ++i) {
        double s = cosine(q, idx.vectors[i]);
        if (heap.size() < k) {
            heap.push({s, i});
        } else if (s > heap.top().first) {
            heap.pop();
            heap.push({s, i});
        }
    }
    std::vector<ScoredTriple> out(heap.size());
    for (size_t slot = heap.size(); slot-- > 0;) {
        auto [s, i] = heap.top();
        heap.pop();
        out[slot] = ScoredTriple{idx.triples[i], s, i};
    }
    return out;
}

// One sentence per retrieved triple, in rank order.
inline std::string render_context(std::span<const ScoredTriple> results) {
    std::string out;
    for (size_t i = 0; i < results.size(); ++i) {
        const TripleText& t = results[i].triple;
        if (i > 0) out += '\n';
        out += "The distance between " + t.subject + " and " + t.object + " is " +
               std::to_string(t.distance_km) + " km.";
    }
    return out;
}

} // namespace distrag
