#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace redrug {

enum class ErrorCode {
  MalformedXml,
  MissingPmid,
  UnknownLabel,
  DuplicateKey,
  Io,
  Parse,
  Http,
  RateLimited,
  MalformedResponse,
  InvalidConfig,
  EmptyTermList,
  InvalidTerm,
  DimensionMismatch,
  EmptySentence,
  EmptyCorpus,
  HeaderMismatch,
  SingleClassDataset,
  AllFieldsEmpty,
  TooFewDocuments,
  ModeMismatch,
  UnsupportedVersion,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library surfaces as an Error carrying a
// code. `line` is set for file-format errors, `status` for HTTP failures.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt,
        std::optional<int> status = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  std::optional<int> status() const noexcept { return status_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
  std::optional<int> status_;
};

}  // namespace redrug
