#pragma once

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "distrag/embed.hpp"
#include "distrag/errors.hpp"
#include "distrag/geo.hpp"
#include "distrag/graph.hpp"
#include "distrag/llm_client.hpp"
#include "distrag/prompts.hpp"
#include "distrag/questions.hpp"
#include "distrag/sparql.hpp"

namespace distrag {

// --- answers ---------------------------------------------------------------

struct DistanceAnswer {
    double km = 0.0;
};
struct CityAnswer {
    std::string name;
};
struct AbstainAnswer {
    std::string reason;
};
using Answer = std::variant<DistanceAnswer, CityAnswer, AbstainAnswer>;

// Trims, drops a trailing period, tolerates a km/kilometers suffix despite the
// prompt's instructions, and maps refusal phrasing to an abstention. Anything
// left is taken as a city name.
inline Answer parse_answer(std::string_view raw) {
    std::string s = detail::trim(raw);
    while (!s.empty() && s.back() == '.') {
        s.pop_back();
        s = detail::trim(s);
    }
    if (s.empty()) return AbstainAnswer{"empty response"};

    static const std::regex number_re(
        R"(^([+-]?\d+(?:\.\d+)?)\s*(?:km|kilometers|kilometres)?$)", std::regex::icase);
    std::smatch m;
    if (std::regex_match(s, m, number_re)) {
        return DistanceAnswer{std::fabs(std::stod(m[1].str()))};
    }
    for (const char* phrase : {"cannot", "unable", "don't know", "no answer", "not possible"}) {
        if (detail::contains_ci(s, phrase)) return AbstainAnswer{s};
    }
    return CityAnswer{s};
}

inline std::string answer_kind(const Answer& a) {
    if (std::holds_alternative<DistanceAnswer>(a)) return "distance";
    if (std::holds_alternative<CityAnswer>(a)) return "city";
    return "abstain";
}

// --- residuals and aggregates ------------------------------------------------

struct Residual {
    std::string question_id;
    Difficulty difficulty = Difficulty::Easy;
    double y = 0.0;                     // true value, km
    std::optional<double> y_hat;        // absent on abstention
    std::string abstain_reason;         // set when y_hat is absent
    double latency_ms = 0.0;

    std::optional<double> error() const {
        if (!y_hat) return std::nullopt;
        return y - *y_hat;
    }
    bool abstained() const { return !y_hat.has_value(); }
};

// Fig-style bins: [0,100), [100,200), ..., [600,700), then a terminal bin for
// errors of 700 km or more, which also absorbs abstentions.
struct Histogram {
    static constexpr size_t kBins = 8;
    std::array<long, kBins> counts{};

    static size_t bin_of(std::optional<double> error) {
        if (!error) return kBins - 1;
        double mag = std::fabs(*error);
        if (mag >= 700.0) return kBins - 1;
        return static_cast<size_t>(mag / 100.0);
    }

    static std::string label(size_t bin) {
        if (bin == kBins - 1) return ">700 km incl. abstain";
        return "[" + std::to_string(bin * 100) + "," + std::to_string((bin + 1) * 100) + ")";
    }

    void add(const Residual& r) { counts[bin_of(r.error())]++; }

    long total() const {
        long t = 0;
        for (long c : counts) t += c;
        return t;
    }
};

inline std::optional<double> compute_mse(const std::vector<Residual>& residuals) {
    double sum = 0.0;
    long n = 0;
    for (const Residual& r : residuals) {
        if (auto e = r.error()) {
            sum += *e * *e;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

// Table-style scientific notation with 3 significant digits: 0 -> "0.00e0",
// 30400 -> "3.04e4". Absent values render as "-".
inline std::string format_mse(std::optional<double> mse) {
    if (!mse) return "-";
    double v = *mse;
    if (v == 0.0) return "0.00e0";
    int exp = static_cast<int>(std::floor(std::log10(v)));
    double mant = v / std::pow(10.0, exp);
    // rounding can carry the mantissa to 10.00
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", mant);
    if (std::string(buf) == "10.00") {
        mant = 1.0;
        ++exp;
        std::snprintf(buf, sizeof(buf), "%.2f", mant);
    }
    return std::string(buf) + "e" + std::to_string(exp);
}

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

enum class Pipeline { Baseline, Vector, Sparql };

inline const char* to_string(Pipeline p) {
    switch (p) {
        case Pipeline::Baseline: return "baseline";
        case Pipeline::Vector: return "vector";
        case Pipeline::Sparql: return "sparql";
    }
    return "baseline";
}

inline Pipeline pipeline_from_string(std::string_view s) {
    std::string lower = detail::to_lower(s);
    if (lower == "baseline") return Pipeline::Baseline;
    if (lower == "vector") return Pipeline::Vector;
    if (lower == "sparql") return Pipeline::Sparql;
    fail(ErrorCode::BadConfig, "unknown pipeline '" + std::string(s) + "'");
}

struct RunReport {
    std::string pipeline;
    std::vector<Residual> residuals;   // question order
    std::optional<double> mse;         // over answered questions only
    long abstain_count = 0;
    double total_latency_ms = 0.0;
    Histogram histogram;
};

// --- scoring -----------------------------------------------------------------

namespace detail {

// Predicted distance from `ref_key` to the geocoded answer city: the graph
// edge when both are nodes and connected, otherwise the rounded geodesic.
inline std::optional<double> predicted_distance(const SpatialGraph& gr, const Gazetteer& g,
                                                const std::string& ref_key, const City& answer) {
    if (gr.has_node(ref_key) && gr.has_node(answer.key)) {
        if (auto km = gr.edge_distance(ref_key, answer.key)) return static_cast<double>(*km);
    }
    auto ref_city = geocode(gr.display_name(ref_key), g);
    if (!ref_city) return std::nullopt;
    return static_cast<double>(round_km(geodesic_km(ref_city->point, answer.point)));
}

} // namespace detail

// Maps an answer onto a signed residual. Every failure path (wrong answer
// kind, geocoding miss, unscorable city) collapses to an abstention with the
// reason kept for the transcript.
inline Residual score_answer(const Question& q, const Answer& a, const SpatialGraph& gr,
                             const Gazetteer& g) {
    Residual r;
    r.question_id = q.id;
    r.difficulty = q.difficulty;

    auto abstain = [&](std::string reason) {
        r.y_hat.reset();
        r.abstain_reason = std::move(reason);
        return r;
    };

    switch (q.difficulty) {
        case Difficulty::Easy: {
            r.y = static_cast<double>(std::get<DistanceGold>(q.gold).km);
            if (const auto* d = std::get_if<DistanceAnswer>(&a)) {
                r.y_hat = d->km;
                return r;
            }
            if (const auto* ab = std::get_if<AbstainAnswer>(&a)) return abstain(ab->reason);
            return abstain("expected a distance, got a city name");
        }
        case Difficulty::Medium: {
            const auto& gold = std::get<ClosestGold>(q.gold);
            r.y = static_cast<double>(gold.km);
            if (const auto* d = std::get_if<DistanceAnswer>(&a)) {
                r.y_hat = d->km;
                return r;
            }
            if (const auto* c = std::get_if<CityAnswer>(&a)) {
                auto city = geocode(c->name, g);
                if (!city) return abstain("cannot geocode '" + c->name + "'");
                auto pred = detail::predicted_distance(gr, g, q.cities.at(0), *city);
                if (!pred) return abstain("cannot score '" + c->name + "'");
                r.y_hat = *pred;
                return r;
            }
            return abstain(std::get<AbstainAnswer>(a).reason);
        }
        case Difficulty::Difficult: {
            const auto& gold = std::get<SimilarGold>(q.gold);
            r.y = static_cast<double>(gold.target_km);
            if (const auto* c = std::get_if<CityAnswer>(&a)) {
                auto city = geocode(c->name, g);
                if (!city) return abstain("cannot geocode '" + c->name + "'");
                auto pred = detail::predicted_distance(gr, g, q.cities.at(2), *city);
                if (!pred) return abstain("cannot score '" + c->name + "'");
                r.y_hat = *pred;
                return r;
            }
            if (const auto* ab = std::get_if<AbstainAnswer>(&a)) return abstain(ab->reason);
            return abstain("expected a city name, got a distance");
        }
    }
    return abstain("bad difficulty");
}

// --- pipeline execution --------------------------------------------------------

struct EvalConfig {
    RetrievalConfig retrieval{};
    Embedder embedder = LexicalHashEmbedder{};
    std::optional<QueryTemplateHint> hint;       // sparql pipeline only
    std::filesystem::path transcript_path;       // empty = no transcript written
};

namespace detail {

struct TranscriptWriter {
    std::ofstream out;

    explicit TranscriptWriter(const std::filesystem::path& path) {
        if (path.empty()) return;
        out.open(path, std::ios::binary);
        if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    }

    void log(const std::string& question_id, const std::string& prompt,
             const std::string& response, const std::optional<std::string>& extracted_query,
             const Answer& answer, double latency_ms) {
        if (!out.is_open()) return;
        nlohmann::ordered_json j;
        j["question_id"] = question_id;
        j["prompt"] = prompt;
        j["response"] = response;
        if (extracted_query) j["extracted_query"] = *extracted_query;
        else j["extracted_query"] = nullptr;
        nlohmann::ordered_json pa;
        pa["kind"] = answer_kind(answer);
        if (const auto* d = std::get_if<DistanceAnswer>(&answer)) pa["value"] = d->km;
        if (const auto* c = std::get_if<CityAnswer>(&answer)) pa["value"] = c->name;
        if (const auto* a = std::get_if<AbstainAnswer>(&answer)) pa["value"] = a->reason;
        j["parsed_answer"] = std::move(pa);
        j["latency_ms"] = latency_ms;
        out << j.dump() << "\n";
    }
};

inline bool is_run_level_error(const Error& e) {
    switch (e.code()) {
        case ErrorCode::ReplayMiss:
        case ErrorCode::AuthError:
        case ErrorCode::BadConfig:
        case ErrorCode::MissingFile:
        case ErrorCode::IoError:
            return true;
        default:
            return false;
    }
}

} // namespace detail

// Drives a single pipeline: prompt assembly, model call, answer extraction.
// The vector index is built once up front (a knowledge-store cost, excluded
// from per-question latencies).
class PipelineRunner {
public:
    struct Outcome {
        std::string prompt;
        std::string response;
        std::optional<std::string> extracted_query;
        Answer answer = AbstainAnswer{"not attempted"};
        double latency_ms = 0.0;
    };

    PipelineRunner(Pipeline pipeline, const SpatialGraph& gr, ModelClient& client,
                   const PromptLibrary& prompts, const EvalConfig& cfg)
        : pipeline_(pipeline), gr_(gr), client_(client), prompts_(prompts), cfg_(cfg) {
        if (pipeline_ == Pipeline::Vector) {
            index_ = build_index(to_triple_texts(gr_), cfg_.embedder);
        }
    }

    Pipeline pipeline() const { return pipeline_; }

    // Per-question model or query failures become abstentions; client
    // configuration problems propagate.
    Outcome answer_question(const std::string& question_text,
                            std::optional<Difficulty> difficulty) {
        detail::StopWatch watch;
        Outcome out;
        try {
            switch (pipeline_) {
                case Pipeline::Baseline: {
                    out.prompt = render_prompt(prompts_.get(TemplateId::Baseline),
                                               {{"question", question_text}});
                    out.response = client_.complete(out.prompt).text;
                    out.answer = parse_answer(out.response);
                    break;
                }
                case Pipeline::Vector: {
                    auto top = query_top_k(index_, question_text, cfg_.embedder, cfg_.retrieval);
                    out.prompt = render_prompt(
                        prompts_.get(TemplateId::Vector),
                        {{"question", question_text}, {"graph_context", render_context(top)}});
                    out.response = client_.complete(out.prompt).text;
                    out.answer = parse_answer(out.response);
                    break;
                }
                case Pipeline::Sparql: {
                    run_sparql(question_text, difficulty, out);
                    break;
                }
            }
        } catch (const Error& e) {
            if (detail::is_run_level_error(e)) throw;
            out.answer = AbstainAnswer{std::string("model error: ") + e.what()};
        }
        out.latency_ms = watch.elapsed_ms();
        return out;
    }

private:
    void run_sparql(const std::string& question_text, std::optional<Difficulty> difficulty,
                    Outcome& out) {
        out.prompt = render_prompt(prompts_.get(TemplateId::Sparql), {{"question", question_text}});
        if (cfg_.hint && difficulty) {
            if (const auto& skel = cfg_.hint->for_difficulty(*difficulty)) {
                out.prompt += "\n";
                out.prompt += kQueryTemplateHeading;
                out.prompt += "\n" + *skel;
            }
        }
        out.response = client_.complete(out.prompt).text;
        out.extracted_query = sparql::extract_query_block(out.response);
        if (out.extracted_query->empty()) {
            out.answer =
                AbstainAnswer{"no query in response: " + std::string(detail::trim(out.response))};
            return;
        }
        try {
            sparql::Query query = sparql::parse_query(*out.extracted_query);
            sparql::ResultTable table = sparql::evaluate_query(query, gr_);
            if (table.rows.empty() || table.columns.empty()) {
                out.answer = AbstainAnswer{"query returned no rows"};
                return;
            }
            std::string cell = sparql::format_value(table.rows[0][0]);
            if (detail::starts_with(cell, "ns1:")) cell = cell.substr(4);
            out.answer = parse_answer(cell);
        } catch (const Error& e) {
            out.answer = AbstainAnswer{std::string("query failed: ") + e.what()};
        }
    }

    Pipeline pipeline_;
    const SpatialGraph& gr_;
    ModelClient& client_;
    const PromptLibrary& prompts_;
    EvalConfig cfg_;
    VectorIndex index_;
};

// Runs one pipeline over the question list. Residuals come back in question
// order.
inline RunReport run_pipeline(const std::vector<Question>& questions, Pipeline pipeline,
                              const SpatialGraph& gr, const Gazetteer& g, ModelClient& client,
                              const PromptLibrary& prompts, const EvalConfig& cfg = {}) {
    if (questions.empty()) fail(ErrorCode::BadConfig, "no questions to run");

    RunReport report;
    report.pipeline = to_string(pipeline);
    detail::TranscriptWriter transcript(cfg.transcript_path);
    PipelineRunner runner(pipeline, gr, client, prompts, cfg);

    for (const Question& q : questions) {
        PipelineRunner::Outcome outcome = runner.answer_question(q.text, q.difficulty);
        Residual r = score_answer(q, outcome.answer, gr, g);
        r.latency_ms = outcome.latency_ms;
        transcript.log(q.id, outcome.prompt, outcome.response, outcome.extracted_query,
                       outcome.answer, outcome.latency_ms);
        report.residuals.push_back(std::move(r));
    }

    report.mse = compute_mse(report.residuals);
    for (const Residual& r : report.residuals) {
        if (r.abstained()) ++report.abstain_count;
        report.total_latency_ms += r.latency_ms;
        report.histogram.add(r);
    }
    return report;
}

// --- ablation -------------------------------------------------------------------

struct QuestionsConfig {
    Difficulty difficulty = Difficulty::Easy;
    int n = 20;
    uint64_t seed = 7;
};

struct AblationLevel {
    double sparsity = 0.0;
    RunReport report;
    std::map<std::string, double> response_rate;  // difficulty -> answered/total
};

struct AblationReport {
    std::vector<AblationLevel> levels;
};

inline std::map<std::string, double> response_rates(const RunReport& report) {
    std::map<std::string, long> total, answered;
    for (const Residual& r : report.residuals) {
        std::string d = to_string(r.difficulty);
        total[d]++;
        if (!r.abstained()) answered[d]++;
    }
    std::map<std::string, double> out;
    for (const auto& [d, t] : total) {
        out[d] = static_cast<double>(answered[d]) / static_cast<double>(t);
    }
    return out;
}

// Questions come from the full graph; each level re-sparsifies the full graph
// with the same seed, so removed edge sets are nested as sparsity grows.
inline AblationReport run_ablation(const SpatialGraph& gr, const std::vector<double>& levels,
                                   const QuestionsConfig& qcfg, Pipeline pipeline,
                                   const Gazetteer& g, ModelClient& client,
                                   const PromptLibrary& prompts, uint64_t seed,
                                   const EvalConfig& cfg = {}) {
    AblationReport out;
    if (levels.empty()) return out;
    std::vector<Question> questions = generate_questions(gr, qcfg.difficulty, qcfg.n, qcfg.seed);
    for (double level : levels) {
        SpatialGraph sparse = sparsify(gr, level, seed);
        AblationLevel entry;
        entry.sparsity = level;
        entry.report = run_pipeline(questions, pipeline, sparse, g, client, prompts, cfg);
        entry.response_rate = response_rates(entry.report);
        out.levels.push_back(std::move(entry));
    }
    return out;
}

// --- report files ------------------------------------------------------------------

namespace detail {

struct DifficultyAggregate {
    std::vector<Residual> residuals;
    long abstains = 0;
    double latency_ms = 0.0;
};

inline std::map<std::string, DifficultyAggregate> by_difficulty(const RunReport& report) {
    std::map<std::string, DifficultyAggregate> out;
    for (const Residual& r : report.residuals) {
        auto& agg = out[to_string(r.difficulty)];
        agg.residuals.push_back(r);
        if (r.abstained()) ++agg.abstains;
        agg.latency_ms += r.latency_ms;
    }
    return out;
}

} // namespace detail

inline nlohmann::ordered_json report_to_json(const RunReport& report,
                                             const std::optional<AblationReport>& ablation) {
    nlohmann::ordered_json j;
    j["pipeline"] = report.pipeline;
    if (report.mse) j["mse"] = *report.mse;
    else j["mse"] = nullptr;
    j["abstain_count"] = report.abstain_count;
    j["total_latency_ms"] = report.total_latency_ms;

    nlohmann::ordered_json per_difficulty = nlohmann::ordered_json::object();
    for (const auto& [difficulty, agg] : detail::by_difficulty(report)) {
        nlohmann::ordered_json d;
        auto mse = compute_mse(agg.residuals);
        if (mse) d["mse"] = *mse;
        else d["mse"] = nullptr;
        d["mse_table"] = format_mse(mse);
        d["abstains"] = agg.abstains;
        d["total"] = agg.residuals.size();
        d["total_latency_ms"] = agg.latency_ms;
        per_difficulty[difficulty] = std::move(d);
    }
    j["per_difficulty"] = std::move(per_difficulty);

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const Residual& r : report.residuals) {
        nlohmann::ordered_json row;
        row["question_id"] = r.question_id;
        row["difficulty"] = to_string(r.difficulty);
        row["y"] = r.y;
        if (r.y_hat) row["y_hat"] = *r.y_hat;
        else row["y_hat"] = nullptr;
        if (auto e = r.error()) row["error"] = *e;
        else row["error"] = nullptr;
        row["bin"] = Histogram::label(Histogram::bin_of(r.error()));
        if (r.abstained()) row["abstain_reason"] = r.abstain_reason;
        row["latency_ms"] = r.latency_ms;
        rows.push_back(std::move(row));
    }
    j["residuals"] = std::move(rows);

    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (size_t b = 0; b < Histogram::kBins; ++b) {
        hist.push_back({{"bin", Histogram::label(b)}, {"count", report.histogram.counts[b]}});
    }
    j["histogram"] = std::move(hist);

    if (ablation) {
        nlohmann::ordered_json levels = nlohmann::ordered_json::array();
        for (const AblationLevel& level : ablation->levels) {
            nlohmann::ordered_json l;
            l["sparsity"] = level.sparsity;
            l["response_rate"] = level.response_rate;
            l["abstain_count"] = level.report.abstain_count;
            if (level.report.mse) l["mse"] = *level.report.mse;
            else l["mse"] = nullptr;
            levels.push_back(std::move(l));
        }
        j["ablation"] = std::move(levels);
    }
    return j;
}

// Writes results.csv, residuals.csv, histogram.csv, ablation.csv and
// report.json under `out_dir`.
inline void emit_report(const RunReport& report, const std::optional<AblationReport>& ablation,
                        const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    auto open = [&](const char* name) {
        std::ofstream out(out_dir / name, std::ios::binary);
        if (!out) fail(ErrorCode::IoError, "cannot write " + (out_dir / name).string());
        return out;
    };

    {
        auto out = open("results.csv");
        out << "pipeline,difficulty,mse,abstains,total_latency_ms\n";
        for (const auto& [difficulty, agg] : detail::by_difficulty(report)) {
            out << report.pipeline << ',' << difficulty << ',' << format_mse(compute_mse(agg.residuals))
                << ',' << agg.abstains << ',' << format_double(agg.latency_ms) << "\n";
        }
    }
    {
        auto out = open("residuals.csv");
        out << "question_id,y,y_hat,error,bin\n";
        for (const Residual& r : report.residuals) {
            out << r.question_id << ',' << format_double(r.y) << ',';
            if (r.y_hat) out << format_double(*r.y_hat);
            out << ',';
            if (auto e = r.error()) out << format_double(*e);
            out << ',' << Histogram::label(Histogram::bin_of(r.error())) << "\n";
        }
    }
    {
        auto out = open("histogram.csv");
        out << "bin,count\n";
        for (size_t b = 0; b < Histogram::kBins; ++b) {
            out << Histogram::label(b) << ',' << report.histogram.counts[b] << "\n";
        }
    }
    {
        auto out = open("ablation.csv");
        out << "level,difficulty,response_rate\n";
        if (ablation) {
            for (const AblationLevel& level : ablation->levels) {
                for (const auto& [difficulty, rate] : level.response_rate) {
                    out << format_double(level.sparsity) << ',' << difficulty << ','
                        << format_double(rate) << "\n";
                }
            }
        }
    }
    {
        auto out = open("report.json");
        out << report_to_json(report, ablation).dump(2) << "\n";
    }
}

// Replay file from a recorded transcript, for offline re-scoring.
inline ReplayClient replay_from_transcript(const std::filesystem::path& transcript_path,
                                           bool strict = true) {
    std::ifstream in(transcript_path, std::ios::binary);
    if (!in) fail(ErrorCode::MissingFile, transcript_path.string());
    ReplayClient client(strict);
    std::string line;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        client.add(j.at("prompt").get<std::string>(), j.at("response").get<std::string>(),
                   j.value("latency_ms", 0.0));
    }
    return client;
}

} // namespace distrag
