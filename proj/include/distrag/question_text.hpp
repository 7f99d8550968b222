#pragma once

#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "distrag/detail/strings.hpp"
#include "distrag/errors.hpp"

namespace distrag {

enum class Difficulty { Easy, Medium, Difficult };

inline const char* to_string(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Medium: return "medium";
        case Difficulty::Difficult: return "difficult";
    }
    return "easy";
}

inline Difficulty difficulty_from_string(std::string_view s) {
    std::string lower = detail::to_lower(s);
    if (lower == "easy") return Difficulty::Easy;
    if (lower == "medium") return Difficulty::Medium;
    if (lower == "difficult" || lower == "hard") return Difficulty::Difficult;
    fail(ErrorCode::BadConfig, "unknown difficulty '" + std::string(s) + "'");
}

// The three question families, with display names substituted verbatim.
inline std::string format_question(Difficulty d, const std::vector<std::string>& names) {
    switch (d) {
        case Difficulty::Easy:
            return "What is the distance between " + names.at(0) + " and " + names.at(1) + "?";
        case Difficulty::Medium:
            return "What is the distance between " + names.at(0) + " and its closest city?";
        case Difficulty::Difficult:
            return "The distance from " + names.at(0) + " to " + names.at(1) +
                   " is similar to the distance from " + names.at(2) +
                   " to what other city or town?";
    }
    return "";
}

struct ParsedQuestion {
    Difficulty difficulty;
    std::vector<std::string> names;  // display names as written in the question
};

// Inverse of format_question. Medium is tried before Easy since the Easy
// pattern would also match it with B = "its closest city".
inline std::optional<ParsedQuestion> parse_question_text(const std::string& text) {
    static const std::regex medium_re(R"(^What is the distance between (.+) and its closest city\?$)");
    static const std::regex easy_re(R"(^What is the distance between (.+?) and (.+)\?$)");
    static const std::regex difficult_re(
        R"(^The distance from (.+?) to (.+?) is similar to the distance from (.+?) to what other city or town\?$)");

    std::string s = detail::trim(text);
    std::smatch m;
    if (std::regex_match(s, m, medium_re)) {
        return ParsedQuestion{Difficulty::Medium, {m[1].str()}};
    }
    if (std::regex_match(s, m, difficult_re)) {
        return ParsedQuestion{Difficulty::Difficult, {m[1].str(), m[2].str(), m[3].str()}};
    }
    if (std::regex_match(s, m, easy_re)) {
        return ParsedQuestion{Difficulty::Easy, {m[1].str(), m[2].str()}};
    }
    return std::nullopt;
}

} // namespace distrag
