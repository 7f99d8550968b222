#pragma once

#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "distrag/errors.hpp"
#include "distrag/graph.hpp"

namespace distrag {

inline constexpr std::string_view kCitiesNamespace = "http://example.org/cities#";

// Turtle local name for a city: display name with spaces as underscores.
inline std::string turtle_key(std::string_view display_name) {
    return detail::replace_all(std::string(display_name), ' ', '_');
}

inline std::string display_from_turtle_key(std::string_view local) {
    return detail::replace_all(std::string(local), '_', ' ');
}

// Emits the dialect the SPARQL prompt template describes: one block per city,
// every incident edge listed under both endpoints, destinations ascending by
// distance. Cities are ordered by canonical key.
inline std::string serialize_turtle(const SpatialGraph& gr) {
    std::ostringstream out;
    out << "@prefix ns1: <" << kCitiesNamespace << "> .\n";
    for (const auto& [key, display] : gr.nodes()) {
        out << "\nns1:" << turtle_key(display) << " a ns1:City";
        auto nbrs = gr.neighbors(key);
        if (nbrs.empty()) {
            out << " .\n";
            continue;
        }
        out << " ;\n    ns1:distanceTo ";
        for (size_t i = 0; i < nbrs.size(); ++i) {
            if (i > 0) out << ",\n        ";
            out << "[ ns1:destination ns1:" << turtle_key(gr.display_name(nbrs[i].first))
                << " ; ns1:distance " << nbrs[i].second << " ]";
        }
        out << " .\n";
    }
    return out.str();
}

namespace detail {

struct TurtleToken {
    std::string text;
    int line;
};

inline bool is_turtle_punct(char c) {
    return c == '[' || c == ']' || c == ';' || c == ',' || c == '.';
}

// Local names may contain commas and periods ("Newcastle,_NSW"), so tokens are
// whitespace-separated first and punctuation is only split off the ends.
inline std::vector<TurtleToken> turtle_tokenize(std::string_view text) {
    std::vector<TurtleToken> tokens;
    int line = 1;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::string_view word = text.substr(start, i - start);
        size_t lead = 0;
        while (lead < word.size() && is_turtle_punct(word[lead])) {
            tokens.push_back({std::string(1, word[lead]), line});
            ++lead;
        }
        size_t tail = word.size();
        while (tail > lead && is_turtle_punct(word[tail - 1])) --tail;
        if (tail > lead) tokens.push_back({std::string(word.substr(lead, tail - lead)), line});
        for (size_t t = tail; t < word.size(); ++t) {
            tokens.push_back({std::string(1, word[t]), line});
        }
    }
    return tokens;
}

class TurtleParser {
public:
    explicit TurtleParser(std::string_view text) : tokens_(turtle_tokenize(text)) {}

    SpatialGraph parse() {
        parse_prefix();
        while (!at_end()) parse_statement();
        for (const auto& [pair, km] : pending_) {
            graph_.add_edge(pair.first, pair.second, km);
        }
        return std::move(graph_);
    }

private:
    [[noreturn]] void err(const std::string& what) {
        int line = at_end() ? (tokens_.empty() ? 1 : tokens_.back().line) : tokens_[pos_].line;
        fail(ErrorCode::TurtleSyntax, "line " + std::to_string(line) + ": " + what);
    }

    bool at_end() const { return pos_ >= tokens_.size(); }

    const std::string& peek() {
        if (at_end()) err("unexpected end of document");
        return tokens_[pos_].text;
    }

    std::string take() {
        std::string t = peek();
        ++pos_;
        return t;
    }

    void expect(std::string_view t) {
        if (peek() != t) err("expected '" + std::string(t) + "', got '" + peek() + "'");
        ++pos_;
    }

    void parse_prefix() {
        if (at_end()) err("empty document");
        expect("@prefix");
        std::string pname = take();
        if (pname.empty() || pname.back() != ':') err("bad prefix name");
        prefix_ = pname.substr(0, pname.size() - 1);
        std::string iri = take();
        if (iri.size() < 2 || iri.front() != '<' || iri.back() != '>') err("bad namespace IRI");
        expect(".");
    }

    // token of form "<prefix>:<local>", returns local name
    std::string parse_city_ref() {
        std::string t = take();
        std::string want = prefix_ + ":";
        if (!starts_with(t, want) || t.size() == want.size()) err("expected city, got '" + t + "'");
        return t.substr(want.size());
    }

    std::string note_city(const std::string& local) {
        std::string display = display_from_turtle_key(local);
        std::string key = canonical_key(display);
        if (!graph_.has_node(key)) graph_.add_node(key, display);
        return key;
    }

    void parse_statement() {
        std::string subject = note_city(parse_city_ref());
        bool saw_clause = false;
        while (true) {
            std::string t = peek();
            if (t == "a") {
                ++pos_;
                std::string cls = take();
                if (cls != prefix_ + ":City") err("expected " + prefix_ + ":City");
                saw_clause = true;
            } else if (t == prefix_ + ":distanceTo") {
                ++pos_;
                parse_destination_list(subject);
                saw_clause = true;
            } else {
                err("expected 'a' or '" + prefix_ + ":distanceTo'");
            }
            if (peek() == ";") {
                ++pos_;
                continue;
            }
            break;
        }
        if (!saw_clause) err("empty statement");
        expect(".");
    }

    void parse_destination_list(const std::string& subject) {
        while (true) {
            expect("[");
            expect(prefix_ + ":destination");
            std::string object = note_city(parse_city_ref());
            expect(";");
            expect(prefix_ + ":distance");
            std::string num = take();
            int km = 0;
            try {
                size_t used = 0;
                km = std::stoi(num, &used);
                if (used != num.size() || km < 0) err("bad distance '" + num + "'");
            } catch (const Error&) {
                throw;
            } catch (const std::exception&) {
                err("bad distance '" + num + "'");
            }
            expect("]");
            if (subject == object) err("self-edge on " + subject);
            record_edge(subject, object, km);
            if (!at_end() && peek() == ",") {
                ++pos_;
                continue;
            }
            break;
        }
    }

    void record_edge(const std::string& a, const std::string& b, int km) {
        auto pair = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
        auto it = pending_.find(pair);
        if (it != pending_.end()) {
            if (it->second != km) {
                fail(ErrorCode::ConflictingDistance,
                     pair.first + " / " + pair.second + ": " + std::to_string(it->second) +
                         " vs " + std::to_string(km));
            }
            return;
        }
        pending_.emplace(std::move(pair), km);
    }

    std::vector<TurtleToken> tokens_;
    size_t pos_ = 0;
    std::string prefix_ = "ns1";
    SpatialGraph graph_;
    std::map<std::pair<std::string, std::string>, int> pending_;
};

} // namespace detail

// Accepts the serialize_turtle dialect. Edges listed in one direction only are
// symmetrized; two directions with different distances are an error.
inline SpatialGraph parse_turtle(std::string_view text) {
    return detail::TurtleParser(text).parse();
}

} // namespace distrag
