#pragma once

#include <stdexcept>
#include <string>

namespace distrag {

enum class ErrorCode {
    // gazetteer / geo
    MissingFile,
    MalformedRow,
    DuplicateCity,
    EmptyGazetteer,
    InvalidCoordinate,
    // graph
    TooFewCities,
    UnknownCity,
    TurtleSyntax,
    ConflictingDistance,
    // retrieval
    EmptyIndex,
    BadDimension,
    // sparql
    SparqlSyntax,
    UnknownPrefix,
    UnsupportedFeature,
    SparqlType,
    // clients
    NetworkError,
    RateLimited,
    EmptyResult,
    AuthError,
    ReplayMiss,
    // prompts
    MissingSlot,
    UnknownSlot,
    // questions / evaluation
    InsufficientGraph,
    MissingEdge,
    NoCandidates,
    IoError,
    // config
    BadConfig,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::MalformedRow: return "MalformedRow";
        case ErrorCode::DuplicateCity: return "DuplicateCity";
        case ErrorCode::EmptyGazetteer: return "EmptyGazetteer";
        case ErrorCode::InvalidCoordinate: return "InvalidCoordinate";
        case ErrorCode::TooFewCities: return "TooFewCities";
        case ErrorCode::UnknownCity: return "UnknownCity";
        case ErrorCode::TurtleSyntax: return "TurtleSyntax";
        case ErrorCode::ConflictingDistance: return "ConflictingDistance";
        case ErrorCode::EmptyIndex: return "EmptyIndex";
        case ErrorCode::BadDimension: return "BadDimension";
        case ErrorCode::SparqlSyntax: return "SparqlSyntax";
        case ErrorCode::UnknownPrefix: return "UnknownPrefix";
        case ErrorCode::UnsupportedFeature: return "UnsupportedFeature";
        case ErrorCode::SparqlType: return "SparqlType";
        case ErrorCode::NetworkError: return "NetworkError";
        case ErrorCode::RateLimited: return "RateLimited";
        case ErrorCode::EmptyResult: return "EmptyResult";
        case ErrorCode::AuthError: return "AuthError";
        case ErrorCode::ReplayMiss: return "ReplayMiss";
        case ErrorCode::MissingSlot: return "MissingSlot";
        case ErrorCode::UnknownSlot: return "UnknownSlot";
        case ErrorCode::InsufficientGraph: return "InsufficientGraph";
        case ErrorCode::MissingEdge: return "MissingEdge";
        case ErrorCode::NoCandidates: return "NoCandidates";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::BadConfig: return "BadConfig";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace distrag
