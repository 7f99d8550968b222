#pragma once

#include <cctype>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "distrag/detail/strings.hpp"
#include "distrag/errors.hpp"
#include "distrag/sparql/ast.hpp"

namespace distrag::sparql {

namespace detail {

using distrag::detail::to_lower;

struct Token {
    enum class Kind { Word, PName, PNameNS, Var, Int, IriRef, Blank, Punct, End };
    Kind kind = Kind::End;
    std::string text;   // Word: as written; PName: "pfx:Local"; PNameNS: prefix; Punct: operator
    long long value = 0;
    size_t offset = 0;
};

// SPARQL features that are recognized so they can be rejected loudly instead
// of being silently misread as identifiers.
inline bool is_unsupported_keyword(const std::string& lower) {
    static const std::set<std::string> kUnsupported = {
        "optional", "union", "group", "having", "distinct", "reduced", "construct",
        "ask", "describe", "service", "minus", "bind", "values", "exists", "offset",
        "graph", "insert", "delete", "describe",
    };
    return kUnsupported.count(lower) != 0;
}

inline bool is_name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

inline bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            Token t = next();
            bool end = t.kind == Token::Kind::End;
            out.push_back(std::move(t));
            if (end) break;
        }
        return out;
    }

private:
    [[noreturn]] void err(const std::string& what) {
        fail(ErrorCode::SparqlSyntax, "at offset " + std::to_string(pos_) + ": " + what);
    }

    char peek(size_t ahead = 0) const {
        return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
    }

    Token next() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        size_t start = pos_;
        if (pos_ >= text_.size()) return {Token::Kind::End, "", 0, start};
        char c = text_[pos_];

        if (c == '?' && is_name_start(peek(1))) {
            ++pos_;
            return {Token::Kind::Var, lex_name(), 0, start};
        }
        if (c == '_' && peek(1) == ':' && is_name_start(peek(2))) {
            pos_ += 2;
            return {Token::Kind::Blank, lex_name(), 0, start};
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            long long v = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                v = v * 10 + (text_[pos_] - '0');
                ++pos_;
            }
            return {Token::Kind::Int, "", v, start};
        }
        if (c == '<') {
            // IRIREF when a '>' closes it before any whitespace
            size_t j = pos_ + 1;
            while (j < text_.size() && !std::isspace(static_cast<unsigned char>(text_[j])) &&
                   text_[j] != '>')
                ++j;
            if (j < text_.size() && text_[j] == '>' && j > pos_ + 1) {
                std::string iri(text_.substr(pos_ + 1, j - pos_ - 1));
                pos_ = j + 1;
                return {Token::Kind::IriRef, std::move(iri), 0, start};
            }
            ++pos_;
            if (peek() == '=') {
                ++pos_;
                return {Token::Kind::Punct, "<=", 0, start};
            }
            return {Token::Kind::Punct, "<", 0, start};
        }
        if (is_name_start(c)) return lex_word_or_pname(start);

        switch (c) {
            case '{': case '}': case '(': case ')': case '[': case ']':
            case ';': case ',': case '.': case '*': case '+': case '-': case '=':
                ++pos_;
                return {Token::Kind::Punct, std::string(1, c), 0, start};
            case '>':
                ++pos_;
                if (peek() == '=') {
                    ++pos_;
                    return {Token::Kind::Punct, ">=", 0, start};
                }
                return {Token::Kind::Punct, ">", 0, start};
            case '!':
                ++pos_;
                if (peek() == '=') {
                    ++pos_;
                    return {Token::Kind::Punct, "!=", 0, start};
                }
                err("unexpected '!'");
            case '&':
                if (peek(1) == '&') {
                    pos_ += 2;
                    return {Token::Kind::Punct, "&&", 0, start};
                }
                err("unexpected '&'");
            case '|':
                if (peek(1) == '|') {
                    pos_ += 2;
                    return {Token::Kind::Punct, "||", 0, start};
                }
                err("unexpected '|'");
            default:
                err(std::string("unexpected character '") + c + "'");
        }
    }

    std::string lex_name() {
        size_t start = pos_;
        while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    // City local names may contain ',' and '.' ("Newcastle,_NSW"); those
    // characters stay in the name only when the next character continues it.
    std::string lex_local() {
        size_t start = pos_;
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (is_name_char(c) || c == '\'') {
                ++pos_;
                continue;
            }
            if ((c == ',' || c == '.') && pos_ + 1 < text_.size() && is_name_char(text_[pos_ + 1])) {
                pos_ += 2;
                continue;
            }
            break;
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    Token lex_word_or_pname(size_t start) {
        std::string word = lex_name();
        if (peek() == ':') {
            ++pos_;
            std::string local = lex_local();
            if (local.empty()) return {Token::Kind::PNameNS, word, 0, start};
            return {Token::Kind::PName, word + ":" + local, 0, start};
        }
        std::string lower = to_lower(word);
        if (is_unsupported_keyword(lower)) {
            fail(ErrorCode::UnsupportedFeature, word);
        }
        return {Token::Kind::Word, std::move(word), 0, start};
    }

    std::string_view text_;
    size_t pos_ = 0;
};

class Parser {
public:
    explicit Parser(std::string_view text) : tokens_(Lexer(text).run()) {
        for (const Token& t : tokens_) {
            if (t.kind == Token::Kind::Blank) used_blanks_.insert(t.text);
        }
    }

    Query parse() {
        while (is_keyword("PREFIX")) parse_prefix();
        parse_select();
        parse_where();
        parse_modifiers();
        if (!at(Token::Kind::End)) err("expected end of query");
        validate_variables();
        return std::move(q_);
    }

private:
    [[noreturn]] void err(const std::string& expected) {
        fail(ErrorCode::SparqlSyntax,
             "at offset " + std::to_string(cur().offset) + ": " + expected);
    }

    const Token& cur() const { return tokens_[pos_]; }
    bool at(Token::Kind k) const { return cur().kind == k; }

    bool at_punct(std::string_view p) const {
        return cur().kind == Token::Kind::Punct && cur().text == p;
    }

    bool is_keyword(std::string_view kw) const {
        return cur().kind == Token::Kind::Word && to_lower(cur().text) == to_lower(kw);
    }

    void expect_punct(std::string_view p) {
        if (!at_punct(p)) err("expected '" + std::string(p) + "'");
        ++pos_;
    }

    void expect_keyword(std::string_view kw) {
        if (!is_keyword(kw)) err("expected " + std::string(kw));
        ++pos_;
    }

    void parse_prefix() {
        ++pos_;  // PREFIX
        if (!at(Token::Kind::PNameNS)) err("expected prefix name ending in ':'");
        std::string name = cur().text;
        ++pos_;
        if (!at(Token::Kind::IriRef)) err("expected IRI after prefix name");
        q_.prefixes[name] = cur().text;
        ++pos_;
    }

    void parse_select() {
        expect_keyword("SELECT");
        if (at_punct("*")) {
            q_.select_all = true;
            ++pos_;
            return;
        }
        while (at(Token::Kind::Var)) {
            q_.select_vars.push_back(cur().text);
            ++pos_;
        }
        if (q_.select_vars.empty()) err("expected '*' or variables after SELECT");
    }

    void parse_where() {
        if (is_keyword("WHERE")) ++pos_;
        expect_punct("{");
        while (!at_punct("}")) {
            if (at(Token::Kind::End)) err("expected '}'");
            if (is_keyword("FILTER")) {
                ++pos_;
                expect_punct("(");
                q_.filters.push_back(parse_expr());
                expect_punct(")");
                if (at_punct(".")) ++pos_;
                continue;
            }
            parse_triples_block();
            if (at_punct(".")) ++pos_;
        }
        ++pos_;  // }
    }

    void parse_triples_block() {
        Term subject = parse_term(/*allow_literal=*/false);
        parse_property_list(subject);
    }

    void parse_property_list(const Term& subject) {
        while (true) {
            Term predicate = parse_verb();
            while (true) {
                Term object = parse_term(/*allow_literal=*/true);
                q_.patterns.push_back({subject, predicate, object});
                if (at_punct(",")) {
                    ++pos_;
                    continue;
                }
                break;
            }
            if (at_punct(";")) {
                ++pos_;
                if (at_punct(".") || at_punct("}") || at_punct("]")) break;  // trailing ';'
                continue;
            }
            break;
        }
    }

    Term parse_verb() {
        if (cur().kind == Token::Kind::Word && cur().text == "a") {
            ++pos_;
            return Term::iri(std::string(kRdfType));
        }
        if (at(Token::Kind::PName)) return Term::iri(expand_pname());
        if (at(Token::Kind::IriRef)) {
            Term t = Term::iri(cur().text);
            ++pos_;
            return t;
        }
        if (at(Token::Kind::Var)) {
            Term t = Term::var(cur().text);
            ++pos_;
            return t;
        }
        err("expected predicate");
    }

    Term parse_term(bool allow_literal) {
        switch (cur().kind) {
            case Token::Kind::PName:
                return Term::iri(expand_pname());
            case Token::Kind::IriRef: {
                Term t = Term::iri(cur().text);
                ++pos_;
                return t;
            }
            case Token::Kind::Var: {
                Term t = Term::var(cur().text);
                ++pos_;
                return t;
            }
            case Token::Kind::Blank: {
                Term t = Term::blank(cur().text);
                ++pos_;
                return t;
            }
            case Token::Kind::Int: {
                if (!allow_literal) err("integer literal not allowed here");
                Term t = Term::integer(cur().value);
                ++pos_;
                return t;
            }
            case Token::Kind::Punct:
                if (cur().text == "[") {
                    ++pos_;
                    Term blank = Term::blank(fresh_blank());
                    parse_property_list(blank);
                    expect_punct("]");
                    return blank;
                }
                [[fallthrough]];
            default:
                err("expected term");
        }
    }

    std::string expand_pname() {
        const std::string& pname = cur().text;
        size_t colon = pname.find(':');
        std::string prefix = pname.substr(0, colon);
        std::string local = pname.substr(colon + 1);
        auto it = q_.prefixes.find(prefix);
        if (it == q_.prefixes.end()) {
            fail(ErrorCode::UnknownPrefix, prefix);
        }
        ++pos_;
        return it->second + local;
    }

    std::string fresh_blank() {
        while (true) {
            std::string label = "b" + std::to_string(next_blank_++);
            if (!used_blanks_.count(label)) {
                used_blanks_.insert(label);
                return label;
            }
        }
    }

    void parse_modifiers() {
        if (is_keyword("ORDER")) {
            ++pos_;
            expect_keyword("BY");
            OrderKey key;
            if (is_keyword("ASC") || is_keyword("DESC")) {
                key.ascending = is_keyword("ASC");
                ++pos_;
                expect_punct("(");
                key.expr = parse_expr();
                expect_punct(")");
            } else {
                key.expr = parse_expr();
            }
            q_.order_by = std::move(key);
        }
        if (is_keyword("LIMIT")) {
            ++pos_;
            if (!at(Token::Kind::Int) || cur().value <= 0) err("expected positive LIMIT");
            q_.limit = cur().value;
            ++pos_;
        }
    }

    // precedence: || < && < comparison < additive < multiplicative < unary
    Expr parse_expr() { return parse_or(); }

    Expr parse_or() {
        Expr lhs = parse_and();
        while (at_punct("||")) {
            ++pos_;
            lhs = Expr::binary(Expr::Op::Or, std::move(lhs), parse_and());
        }
        return lhs;
    }

    Expr parse_and() {
        Expr lhs = parse_relational();
        while (at_punct("&&")) {
            ++pos_;
            lhs = Expr::binary(Expr::Op::And, std::move(lhs), parse_relational());
        }
        return lhs;
    }

    Expr parse_relational() {
        Expr lhs = parse_additive();
        static const std::pair<const char*, Expr::Op> ops[] = {
            {"=", Expr::Op::Eq},  {"!=", Expr::Op::Ne}, {"<=", Expr::Op::Le},
            {">=", Expr::Op::Ge}, {"<", Expr::Op::Lt},  {">", Expr::Op::Gt},
        };
        for (const auto& [sym, op] : ops) {
            if (at_punct(sym)) {
                ++pos_;
                return Expr::binary(op, std::move(lhs), parse_additive());
            }
        }
        return lhs;
    }

    Expr parse_additive() {
        Expr lhs = parse_multiplicative();
        while (at_punct("+") || at_punct("-")) {
            Expr::Op op = at_punct("+") ? Expr::Op::Add : Expr::Op::Sub;
            ++pos_;
            lhs = Expr::binary(op, std::move(lhs), parse_multiplicative());
        }
        return lhs;
    }

    Expr parse_multiplicative() {
        Expr lhs = parse_unary();
        while (at_punct("*")) {
            ++pos_;
            lhs = Expr::binary(Expr::Op::Mul, std::move(lhs), parse_unary());
        }
        return lhs;
    }

    Expr parse_unary() {
        if (at_punct("-")) {
            ++pos_;
            Expr inner = parse_unary();
            if (inner.op == Expr::Op::Int) return Expr::integer(-inner.int_value);
            return Expr::unary(Expr::Op::Neg, std::move(inner));
        }
        if (is_keyword("ABS")) {
            ++pos_;
            expect_punct("(");
            Expr inner = parse_expr();
            expect_punct(")");
            return Expr::unary(Expr::Op::Abs, std::move(inner));
        }
        if (at_punct("(")) {
            ++pos_;
            Expr inner = parse_expr();
            expect_punct(")");
            return inner;
        }
        if (at(Token::Kind::Var)) {
            Expr e = Expr::variable(cur().text);
            ++pos_;
            return e;
        }
        if (at(Token::Kind::Int)) {
            Expr e = Expr::integer(cur().value);
            ++pos_;
            return e;
        }
        if (at(Token::Kind::PName)) return Expr::iri(expand_pname());
        if (at(Token::Kind::IriRef)) {
            Expr e = Expr::iri(cur().text);
            ++pos_;
            return e;
        }
        err("expected expression");
    }

    void collect_expr_vars(const Expr& e, std::set<std::string>& out) const {
        if (e.op == Expr::Op::Var) out.insert(e.text);
        for (const Expr& a : e.args) collect_expr_vars(a, out);
    }

    void validate_variables() {
        std::set<std::string> bound;
        for (const TriplePattern& p : q_.patterns) {
            for (const Term* t : {&p.subject, &p.predicate, &p.object}) {
                if (t->kind == Term::Kind::Var) bound.insert(t->text);
            }
        }
        auto check = [&](const std::string& v, const char* where) {
            if (!bound.count(v)) {
                fail(ErrorCode::SparqlSyntax,
                     "variable ?" + v + " in " + where + " does not appear in any pattern");
            }
        };
        for (const std::string& v : q_.select_vars) check(v, "SELECT");
        std::set<std::string> used;
        for (const Expr& f : q_.filters) collect_expr_vars(f, used);
        for (const std::string& v : used) check(v, "FILTER");
        used.clear();
        if (q_.order_by) collect_expr_vars(q_.order_by->expr, used);
        for (const std::string& v : used) check(v, "ORDER BY");
    }

    std::vector<Token> tokens_;
    size_t pos_ = 0;
    Query q_;
    std::set<std::string> used_blanks_;
    int next_blank_ = 0;
};

} // namespace detail

inline Query parse_query(std::string_view text) { return detail::Parser(text).parse(); }

namespace detail {

inline std::string print_term(const Query& q, const Term& t);

inline std::string compress_iri(const Query& q, const std::string& iri) {
    if (iri == kRdfType) return "a";
    for (const auto& [prefix, ns] : q.prefixes) {
        if (distrag::detail::starts_with(iri, ns)) {
            return prefix + ":" + iri.substr(ns.size());
        }
    }
    return "<" + iri + ">";
}

inline std::string print_term(const Query& q, const Term& t) {
    switch (t.kind) {
        case Term::Kind::Iri: return compress_iri(q, t.text);
        case Term::Kind::Var: return "?" + t.text;
        case Term::Kind::Blank: return "_:" + t.text;
        case Term::Kind::Int: return std::to_string(t.value);
    }
    return "";
}

inline std::string print_expr(const Query& q, const Expr& e) {
    using Op = Expr::Op;
    auto binop = [&](const char* sym) {
        return "(" + print_expr(q, e.args[0]) + " " + sym + " " + print_expr(q, e.args[1]) + ")";
    };
    switch (e.op) {
        case Op::Var: return "?" + e.text;
        case Op::Int: return std::to_string(e.int_value);
        case Op::Iri: return compress_iri(q, e.text);
        case Op::Add: return binop("+");
        case Op::Sub: return binop("-");
        case Op::Mul: return binop("*");
        case Op::Eq: return binop("=");
        case Op::Ne: return binop("!=");
        case Op::Lt: return binop("<");
        case Op::Le: return binop("<=");
        case Op::Gt: return binop(">");
        case Op::Ge: return binop(">=");
        case Op::And: return binop("&&");
        case Op::Or: return binop("||");
        case Op::Neg: return "-" + print_expr(q, e.args[0]);
        case Op::Abs: return "ABS(" + print_expr(q, e.args[0]) + ")";
    }
    return "";
}

} // namespace detail

// Canonical text form; parse(print_query(parse(text))) == parse(text).
inline std::string print_query(const Query& q) {
    std::ostringstream out;
    for (const auto& [prefix, iri] : q.prefixes) {
        out << "PREFIX " << prefix << ": <" << iri << ">\n";
    }
    out << "SELECT";
    if (q.select_all) {
        out << " *";
    } else {
        for (const std::string& v : q.select_vars) out << " ?" << v;
    }
    out << "\nWHERE {\n";
    for (const TriplePattern& p : q.patterns) {
        out << "  " << detail::print_term(q, p.subject) << " " << detail::print_term(q, p.predicate)
            << " " << detail::print_term(q, p.object) << " .\n";
    }
    for (const Expr& f : q.filters) {
        out << "  FILTER(" << detail::print_expr(q, f) << ") .\n";
    }
    out << "}";
    if (q.order_by) {
        out << "\nORDER BY " << (q.order_by->ascending ? "ASC" : "DESC") << "("
            << detail::print_expr(q, q.order_by->expr) << ")";
    }
    if (q.limit) out << "\nLIMIT " << *q.limit;
    out << "\n";
    return out.str();
}

// Pulls the query text out of a model response: prefers fenced code blocks,
// otherwise starts at the first PREFIX/SELECT keyword, and stops after the
// WHERE group plus any trailing ORDER BY / LIMIT clauses. Empty result means
// there is nothing query-like, which downstream treats as an abstention.
inline std::string extract_query_block(std::string_view llm_output) {
    using distrag::detail::to_lower;
    std::string text(llm_output);

    // strip markdown fences, keeping the first fenced block that looks like a query
    size_t fence = text.find("```");
    while (fence != std::string::npos) {
        size_t body_start = text.find('\n', fence);
        if (body_start == std::string::npos) break;
        size_t close = text.find("```", body_start);
        std::string body = text.substr(body_start + 1, close == std::string::npos
                                                           ? std::string::npos
                                                           : close - body_start - 1);
        std::string lower = to_lower(body);
        if (lower.find("select") != std::string::npos || lower.find("prefix") != std::string::npos) {
            text = body;
            break;
        }
        fence = close == std::string::npos ? std::string::npos : text.find("```", close + 3);
    }

    std::string lower = to_lower(text);
    auto find_keyword = [&](const std::string& kw) -> size_t {
        size_t from = 0;
        while (true) {
            size_t p = lower.find(kw, from);
            if (p == std::string::npos) return std::string::npos;
            bool left_ok = p == 0 || !std::isalnum(static_cast<unsigned char>(lower[p - 1]));
            size_t after = p + kw.size();
            bool right_ok =
                after >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[after]));
            if (left_ok && right_ok) return p;
            from = p + 1;
        }
    };
    size_t start = std::min(find_keyword("prefix"), find_keyword("select"));
    if (start == std::string::npos) return "";

    // walk to the close of the brace group, then absorb trailing modifiers
    size_t depth = 0;
    size_t end = std::string::npos;
    for (size_t i = start; i < text.size(); ++i) {
        if (text[i] == '{') ++depth;
        if (text[i] == '}') {
            if (depth > 0) --depth;
            if (depth == 0) {
                end = i + 1;
                break;
            }
        }
    }
    if (end == std::string::npos) {
        return distrag::detail::trim(text.substr(start));
    }
    size_t tail = end;
    while (true) {
        size_t probe = tail;
        while (probe < text.size() && std::isspace(static_cast<unsigned char>(text[probe]))) ++probe;
        std::string rest_lower = to_lower(text.substr(probe, 8));
        if (distrag::detail::starts_with(rest_lower, "order")) {
            size_t line_end = text.find('\n', probe);
            // ORDER BY runs to end of line (or to LIMIT on the same line)
            size_t stop = line_end == std::string::npos ? text.size() : line_end;
            tail = stop;
            continue;
        }
        if (distrag::detail::starts_with(rest_lower, "limit")) {
            size_t p = probe + 5;
            while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
            while (p < text.size() && std::isdigit(static_cast<unsigned char>(text[p]))) ++p;
            tail = p;
            continue;
        }
        break;
    }
    return distrag::detail::trim(text.substr(start, tail - start));
}

} // namespace distrag::sparql
