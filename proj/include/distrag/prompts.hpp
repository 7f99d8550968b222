#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "distrag/detail/strings.hpp"
#include "distrag/errors.hpp"

namespace distrag {

enum class TemplateId { Vector, Sparql, Baseline };

inline const char* template_filename(TemplateId id) {
    switch (id) {
        case TemplateId::Vector: return "vector.txt";
        case TemplateId::Sparql: return "sparql.txt";
        case TemplateId::Baseline: return "baseline.txt";
    }
    return "";
}

struct PromptTemplate {
    TemplateId id = TemplateId::Baseline;
    std::string body;
    std::set<std::string> slots;  // names found as {slot} in the body
};

namespace detail {

inline std::set<std::string> scan_slots(const std::string& body) {
    std::set<std::string> out;
    size_t pos = 0;
    while ((pos = body.find('{', pos)) != std::string::npos) {
        size_t end = body.find('}', pos + 1);
        if (end == std::string::npos) break;
        std::string name = body.substr(pos + 1, end - pos - 1);
        bool word = !name.empty();
        for (char c : name) {
            if (!(std::islower(static_cast<unsigned char>(c)) || c == '_')) word = false;
        }
        if (word) out.insert(name);
        pos = end + 1;
    }
    return out;
}

} // namespace detail

// Templates live as plain text resource files so the exact prompt wording is
// data, not code.
inline std::filesystem::path default_template_dir() {
    if (const char* env = std::getenv("DISTRAG_TEMPLATE_DIR"); env && *env) return env;
#ifdef DISTRAG_RESOURCE_DIR
    return std::filesystem::path(DISTRAG_RESOURCE_DIR) / "prompts";
#else
    return std::filesystem::path("resources") / "prompts";
#endif
}

class PromptLibrary {
public:
    static PromptLibrary load(const std::filesystem::path& dir = default_template_dir()) {
        PromptLibrary lib;
        for (TemplateId id : {TemplateId::Vector, TemplateId::Sparql, TemplateId::Baseline}) {
            std::filesystem::path file = dir / template_filename(id);
            std::ifstream in(file, std::ios::binary);
            if (!in) fail(ErrorCode::MissingFile, file.string());
            std::ostringstream buf;
            buf << in.rdbuf();
            PromptTemplate t;
            t.id = id;
            t.body = buf.str();
            t.slots = detail::scan_slots(t.body);
            lib.templates_.emplace(id, std::move(t));
        }
        return lib;
    }

    const PromptTemplate& get(TemplateId id) const { return templates_.at(id); }

private:
    std::map<TemplateId, PromptTemplate> templates_;
};

// Byte-exact substitution: every slot must be bound, every binding must name a
// slot, and no {slot} may survive in the output. Single pass, so slot-shaped
// text inside a binding value is never re-substituted.
inline std::string render_prompt(const PromptTemplate& t,
                                 const std::map<std::string, std::string>& bindings) {
    for (const auto& [name, value] : bindings) {
        if (!t.slots.count(name)) fail(ErrorCode::UnknownSlot, name);
    }
    for (const std::string& slot : t.slots) {
        if (!bindings.count(slot)) fail(ErrorCode::MissingSlot, slot);
    }
    std::string out;
    out.reserve(t.body.size());
    size_t pos = 0;
    while (pos < t.body.size()) {
        size_t open = t.body.find('{', pos);
        if (open == std::string::npos) {
            out.append(t.body, pos, std::string::npos);
            break;
        }
        out.append(t.body, pos, open - pos);
        size_t close = t.body.find('}', open + 1);
        std::string name =
            close == std::string::npos ? "" : t.body.substr(open + 1, close - open - 1);
        if (auto it = bindings.find(name); it != bindings.end()) {
            out += it->second;
            pos = close + 1;
        } else {
            out += '{';
            pos = open + 1;
        }
    }
    return out;
}

} // namespace distrag
