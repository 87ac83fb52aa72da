#include "redrug/error.hpp"

namespace redrug {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::MissingPmid: return "MissingPmid";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Http: return "Http";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyTermList: return "EmptyTermList";
    case ErrorCode::InvalidTerm: return "InvalidTerm";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySentence: return "EmptySentence";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::SingleClassDataset: return "SingleClassDataset";
    case ErrorCode::AllFieldsEmpty: return "AllFieldsEmpty";
    case ErrorCode::TooFewDocuments: return "TooFewDocuments";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line, std::optional<int> status)
    : std::runtime_error(decorate(code, message, line)),
      code_(code),
      line_(line),
      status_(status) {}

}  // namespace redrug
