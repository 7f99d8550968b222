#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace distrag::sparql {

inline constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

// A term in a triple pattern. Iri text is the full expanded IRI.
struct Term {
    enum class Kind { Iri, Var, Blank, Int };
    Kind kind = Kind::Iri;
    std::string text;       // IRI, variable name (no '?'), or blank label (no '_:')
    long long value = 0;    // Kind::Int

    static Term iri(std::string t) { return {Kind::Iri, std::move(t), 0}; }
    static Term var(std::string name) { return {Kind::Var, std::move(name), 0}; }
    static Term blank(std::string label) { return {Kind::Blank, std::move(label), 0}; }
    static Term integer(long long v) { return {Kind::Int, {}, v}; }

    bool operator==(const Term&) const = default;
};

struct TriplePattern {
    Term subject, predicate, object;
    bool operator==(const TriplePattern&) const = default;
};

// Expression grammar: variables, integers, arithmetic, comparisons,
// boolean connectives, ABS(...).
struct Expr {
    enum class Op {
        Var, Int, Iri,
        Add, Sub, Mul, Neg, Abs,
        Eq, Ne, Lt, Le, Gt, Ge,
        And, Or,
    };
    Op op = Op::Int;
    long long int_value = 0;
    std::string text;          // Var name or Iri
    std::vector<Expr> args;

    static Expr variable(std::string name) { return {Op::Var, 0, std::move(name), {}}; }
    static Expr integer(long long v) { return {Op::Int, v, {}, {}}; }
    static Expr iri(std::string t) { return {Op::Iri, 0, std::move(t), {}}; }
    static Expr unary(Op o, Expr a) { return {o, 0, {}, {std::move(a)}}; }
    static Expr binary(Op o, Expr a, Expr b) { return {o, 0, {}, {std::move(a), std::move(b)}}; }

    bool operator==(const Expr&) const = default;
};

struct OrderKey {
    Expr expr;
    bool ascending = true;
    bool operator==(const OrderKey&) const = default;
};

struct Query {
    std::map<std::string, std::string> prefixes;  // prefix -> IRI
    bool select_all = false;
    std::vector<std::string> select_vars;         // empty when select_all
    std::vector<TriplePattern> patterns;          // blank-node lists desugared
    std::vector<Expr> filters;
    std::optional<OrderKey> order_by;
    std::optional<long long> limit;

    bool operator==(const Query&) const = default;
};

} // namespace distrag::sparql
