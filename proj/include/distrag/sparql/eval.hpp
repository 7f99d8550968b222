#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "distrag/errors.hpp"
#include "distrag/graph.hpp"
#include "distrag/sparql/ast.hpp"
#include "distrag/turtle.hpp"

namespace distrag::sparql {

// A bound value. IRIs carry a canonical identity (namespace + canonical_key
// of the local name) used for matching and ordering, plus the display local
// name used for output.
struct Value {
    enum class Kind { Int, Iri, Blank };
    Kind kind = Kind::Int;
    long long i = 0;
    std::string canon;    // Iri identity
    std::string display;  // Iri local name as shown to users
    int blank_id = 0;

    static Value integer(long long v) {
        Value out;
        out.kind = Kind::Int;
        out.i = v;
        return out;
    }
    static Value iri(std::string canon, std::string display) {
        Value out;
        out.kind = Kind::Iri;
        out.canon = std::move(canon);
        out.display = std::move(display);
        return out;
    }
    static Value blank(int id) {
        Value out;
        out.kind = Kind::Blank;
        out.blank_id = id;
        return out;
    }

    bool equals(const Value& other) const {
        if (kind != other.kind) return false;
        switch (kind) {
            case Kind::Int: return i == other.i;
            case Kind::Iri: return canon == other.canon;
            case Kind::Blank: return blank_id == other.blank_id;
        }
        return false;
    }

    // deterministic total order: integers, then IRIs, then blanks
    bool less(const Value& other) const {
        if (kind != other.kind) return static_cast<int>(kind) < static_cast<int>(other.kind);
        switch (kind) {
            case Kind::Int: return i < other.i;
            case Kind::Iri: return canon < other.canon;
            case Kind::Blank: return blank_id < other.blank_id;
        }
        return false;
    }
};

// IRI identity: city IRIs collapse case and space/underscore differences so a
// query written with any casing joins against the graph's nodes.
inline std::string iri_canon(const std::string& full_iri) {
    if (distrag::detail::starts_with(full_iri, kCitiesNamespace)) {
        return std::string(kCitiesNamespace) +
               canonical_key(display_from_turtle_key(full_iri.substr(kCitiesNamespace.size())));
    }
    return full_iri;
}

inline Value value_from_iri(const std::string& full_iri) {
    std::string display = full_iri;
    if (distrag::detail::starts_with(full_iri, kCitiesNamespace)) {
        display = full_iri.substr(kCitiesNamespace.size());
    }
    return Value::iri(iri_canon(full_iri), std::move(display));
}

struct StoreTriple {
    Value subject, predicate, object;
};

// The graph as the triple set its Turtle serialization denotes: a type triple
// per city and, per directed edge, a blank node with destination and distance.
// Blank ids are assigned in (source key, destination key) order so that the
// default row order ties back to canonical key order.
inline std::vector<StoreTriple> graph_to_triples(const SpatialGraph& gr) {
    const std::string ns(kCitiesNamespace);
    auto city_value = [&](const std::string& key) {
        return Value::iri(ns + key, turtle_key(gr.display_name(key)));
    };
    const Value type_pred = Value::iri(std::string(kRdfType), "a");
    const Value city_class = Value::iri(ns + "city", "City");
    const Value distance_to = Value::iri(ns + "distanceto", "distanceTo");
    const Value destination = Value::iri(ns + "destination", "destination");
    const Value distance = Value::iri(ns + "distance", "distance");

    std::vector<StoreTriple> out;
    int blank_id = 0;
    for (const auto& [key, display] : gr.nodes()) {
        out.push_back({city_value(key), type_pred, city_class});
    }
    for (const auto& [src, display] : gr.nodes()) {
        auto nbrs = gr.neighbors(src);
        std::sort(nbrs.begin(), nbrs.end());  // by destination key
        for (const auto& [dst, km] : nbrs) {
            Value b = Value::blank(blank_id++);
            out.push_back({city_value(src), distance_to, b});
            out.push_back({b, destination, city_value(dst)});
            out.push_back({b, distance, Value::integer(km)});
        }
    }
    return out;
}

struct ResultTable {
    std::vector<std::string> columns;           // variable names, no '?'
    std::vector<std::vector<Value>> rows;

    bool empty() const { return rows.empty(); }
};

inline std::string format_value(const Value& v) {
    switch (v.kind) {
        case Value::Kind::Int: return std::to_string(v.i);
        case Value::Kind::Iri:
            return distrag::detail::starts_with(v.canon, kCitiesNamespace) ? "ns1:" + v.display
                                                                           : "<" + v.canon + ">";
        case Value::Kind::Blank: return "_:e" + std::to_string(v.blank_id);
    }
    return "";
}

inline std::string to_tsv(const ResultTable& table) {
    std::ostringstream out;
    for (size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out << '\t';
        out << '?' << table.columns[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << '\t';
            out << format_value(row[i]);
        }
        out << '\n';
    }
    return out.str();
}

namespace detail {

// binding variables: named query variables plus blank-node join points,
// keyed "?name" / "_:label" to keep the two namespaces apart
using Binding = std::map<std::string, Value>;

inline std::optional<std::string> binding_key(const Term& t) {
    if (t.kind == Term::Kind::Var) return "?" + t.text;
    if (t.kind == Term::Kind::Blank) return "_:" + t.text;
    return std::nullopt;
}

inline bool term_matches(const Term& t, const Value& v, Binding& binding) {
    switch (t.kind) {
        case Term::Kind::Iri: return v.kind == Value::Kind::Iri && v.canon == iri_canon(t.text);
        case Term::Kind::Int: return v.kind == Value::Kind::Int && v.i == t.value;
        case Term::Kind::Var:
        case Term::Kind::Blank: {
            std::string key = *binding_key(t);
            auto it = binding.find(key);
            if (it != binding.end()) return it->second.equals(v);
            binding.emplace(std::move(key), v);
            return true;
        }
    }
    return false;
}

struct ExprValue {
    enum class Kind { Int, Bool, Node };
    Kind kind = Kind::Int;
    long long i = 0;
    bool b = false;
    Value node;

    static ExprValue integer(long long v) { return {Kind::Int, v, false, {}}; }
    static ExprValue boolean(bool v) { return {Kind::Bool, 0, v, {}}; }
    static ExprValue from_node(Value v) { return {Kind::Node, 0, false, std::move(v)}; }
};

[[noreturn]] inline void type_error(const std::string& what) {
    fail(ErrorCode::SparqlType, what);
}

inline ExprValue eval_expr(const Expr& e, const Binding& binding) {
    using Op = Expr::Op;
    auto as_int = [](const ExprValue& v) -> long long {
        if (v.kind == ExprValue::Kind::Int) return v.i;
        if (v.kind == ExprValue::Kind::Node && v.node.kind == Value::Kind::Int) return v.node.i;
        type_error("expected integer operand");
    };
    auto as_bool = [](const ExprValue& v) -> bool {
        if (v.kind != ExprValue::Kind::Bool) type_error("expected boolean operand");
        return v.b;
    };

    switch (e.op) {
        case Op::Int: return ExprValue::integer(e.int_value);
        case Op::Iri: return ExprValue::from_node(value_from_iri(e.text));
        case Op::Var: {
            auto it = binding.find("?" + e.text);
            if (it == binding.end()) type_error("unbound variable ?" + e.text);
            if (it->second.kind == Value::Kind::Int) return ExprValue::integer(it->second.i);
            return ExprValue::from_node(it->second);
        }
        case Op::Neg: return ExprValue::integer(-as_int(eval_expr(e.args[0], binding)));
        case Op::Abs: {
            long long v = as_int(eval_expr(e.args[0], binding));
            return ExprValue::integer(v < 0 ? -v : v);
        }
        case Op::Add:
        case Op::Sub:
        case Op::Mul: {
            long long a = as_int(eval_expr(e.args[0], binding));
            long long b = as_int(eval_expr(e.args[1], binding));
            if (e.op == Op::Add) return ExprValue::integer(a + b);
            if (e.op == Op::Sub) return ExprValue::integer(a - b);
            return ExprValue::integer(a * b);
        }
        case Op::And:
            return ExprValue::boolean(as_bool(eval_expr(e.args[0], binding)) &&
                                      as_bool(eval_expr(e.args[1], binding)));
        case Op::Or:
            return ExprValue::boolean(as_bool(eval_expr(e.args[0], binding)) ||
                                      as_bool(eval_expr(e.args[1], binding)));
        case Op::Eq:
        case Op::Ne: {
            ExprValue a = eval_expr(e.args[0], binding);
            ExprValue b = eval_expr(e.args[1], binding);
            bool a_node = a.kind == ExprValue::Kind::Node && a.node.kind != Value::Kind::Int;
            bool b_node = b.kind == ExprValue::Kind::Node && b.node.kind != Value::Kind::Int;
            bool eq;
            if (a_node && b_node) {
                if (a.node.kind != b.node.kind) type_error("cannot compare IRI with blank node");
                eq = a.node.equals(b.node);
            } else if (!a_node && !b_node) {
                eq = as_int(a) == as_int(b);
            } else {
                type_error("comparison mixes IRI and integer operands");
            }
            return ExprValue::boolean(e.op == Op::Eq ? eq : !eq);
        }
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge: {
            long long a = as_int(eval_expr(e.args[0], binding));
            long long b = as_int(eval_expr(e.args[1], binding));
            switch (e.op) {
                case Op::Lt: return ExprValue::boolean(a < b);
                case Op::Le: return ExprValue::boolean(a <= b);
                case Op::Gt: return ExprValue::boolean(a > b);
                default: return ExprValue::boolean(a >= b);
            }
        }
    }
    type_error("unreachable expression");
}

inline void join_patterns(const std::vector<TriplePattern>& patterns, size_t idx,
                          const std::vector<StoreTriple>& store, Binding& binding,
                          std::vector<Binding>& out) {
    if (idx == patterns.size()) {
        out.push_back(binding);
        return;
    }
    const TriplePattern& p = patterns[idx];
    for (const StoreTriple& t : store) {
        Binding attempt = binding;
        if (term_matches(p.subject, t.subject, attempt) &&
            term_matches(p.predicate, t.predicate, attempt) &&
            term_matches(p.object, t.object, attempt)) {
            join_patterns(patterns, idx + 1, store, attempt, out);
        }
    }
}

// variables (and blank join points) in order of first appearance
inline std::vector<std::string> binding_order(const Query& q) {
    std::vector<std::string> order;
    std::set<std::string> seen;
    for (const TriplePattern& p : q.patterns) {
        for (const Term* t : {&p.subject, &p.predicate, &p.object}) {
            auto key = binding_key(*t);
            if (key && seen.insert(*key).second) order.push_back(*key);
        }
    }
    return order;
}

} // namespace detail

// Basic graph pattern evaluation: join the patterns in order, apply filters,
// put rows into a deterministic order (the full binding tuple, variables in
// first-appearance order), apply ORDER BY as a stable sort, LIMIT, project.
// Unknown city IRIs simply fail to join, yielding an empty table.
inline ResultTable evaluate_query(const Query& q, const SpatialGraph& gr) {
    const std::vector<StoreTriple> store = graph_to_triples(gr);

    std::vector<detail::Binding> bindings;
    detail::Binding empty;
    detail::join_patterns(q.patterns, 0, store, empty, bindings);

    std::vector<detail::Binding> kept;
    kept.reserve(bindings.size());
    for (const auto& b : bindings) {
        bool pass = true;
        for (const Expr& f : q.filters) {
            detail::ExprValue v = detail::eval_expr(f, b);
            if (v.kind != detail::ExprValue::Kind::Bool) {
                detail::type_error("FILTER expression is not boolean");
            }
            if (!v.b) {
                pass = false;
                break;
            }
        }
        if (pass) kept.push_back(b);
    }

    const std::vector<std::string> order = detail::binding_order(q);
    auto tuple_less = [&](const detail::Binding& a, const detail::Binding& b) {
        for (const std::string& key : order) {
            const Value& va = a.at(key);
            const Value& vb = b.at(key);
            if (va.less(vb)) return true;
            if (vb.less(va)) return false;
        }
        return false;
    };
    std::sort(kept.begin(), kept.end(), tuple_less);

    if (q.order_by) {
        std::vector<detail::ExprValue> keys;
        keys.reserve(kept.size());
        for (const auto& b : kept) {
            detail::ExprValue v = detail::eval_expr(q.order_by->expr, b);
            if (v.kind == detail::ExprValue::Kind::Bool) {
                detail::type_error("ORDER BY expression is boolean");
            }
            keys.push_back(std::move(v));
        }
        auto key_less = [&](const detail::ExprValue& a, const detail::ExprValue& b) {
            bool a_int = a.kind == detail::ExprValue::Kind::Int ||
                         (a.kind == detail::ExprValue::Kind::Node && a.node.kind == Value::Kind::Int);
            bool b_int = b.kind == detail::ExprValue::Kind::Int ||
                         (b.kind == detail::ExprValue::Kind::Node && b.node.kind == Value::Kind::Int);
            if (a_int != b_int) detail::type_error("ORDER BY mixes IRI and integer values");
            if (a_int) {
                long long av = a.kind == detail::ExprValue::Kind::Int ? a.i : a.node.i;
                long long bv = b.kind == detail::ExprValue::Kind::Int ? b.i : b.node.i;
                return av < bv;
            }
            return a.node.less(b.node);
        };
        std::vector<size_t> idx(kept.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](size_t x, size_t y) {
            return q.order_by->ascending ? key_less(keys[x], keys[y]) : key_less(keys[y], keys[x]);
        });
        std::vector<detail::Binding> sorted;
        sorted.reserve(kept.size());
        for (size_t i : idx) sorted.push_back(std::move(kept[i]));
        kept = std::move(sorted);
    }

    if (q.limit && kept.size() > static_cast<size_t>(*q.limit)) {
        kept.resize(static_cast<size_t>(*q.limit));
    }

    ResultTable table;
    if (q.select_all) {
        for (const std::string& key : order) {
            if (distrag::detail::starts_with(key, "?")) table.columns.push_back(key.substr(1));
        }
    } else {
        table.columns = q.select_vars;
    }
    for (const auto& b : kept) {
        std::vector<Value> row;
        row.reserve(table.columns.size());
        for (const std::string& col : table.columns) {
            row.push_back(b.at("?" + col));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace distrag::sparql
