#pragma once

#include <stdexcept>
#include <string>

namespace llmcast {

/// Root of every error the library throws. CLI exit codes are derived from
/// the concrete subclass (see exit_code()).
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: malformed rows, missing artifacts, violated invariants.
class DataError : public Error {
  public:
    using Error::Error;
};

/// Caller violated an operation's precondition.
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// A numerical routine produced a non-finite intermediate.
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// Bad command-line or configuration usage.
class UsageError : public Error {
  public:
    using Error::Error;
};

/// Network/transport failure talking to an LLM endpoint.
class TransportError : public Error {
  public:
    using Error::Error;
};

/// The replay store has no entry for a request.
class ReplayMiss : public Error {
  public:
    explicit ReplayMiss(std::string hash)
        : Error("replay miss for request " + hash), hash_(std::move(hash)) {}

    [[nodiscard]] const std::string& hash() const noexcept { return hash_; }

  private:
    std::string hash_;
};

/// An LLM reply did not match the expected labelled format.
class ParseError : public Error {
  public:
    enum class Kind { MissingLabel, EmptyField, NoValidBin, BinOutOfScheme, Unparseable };

    ParseError(Kind kind, std::string message, std::string offending)
        : Error(std::move(message)), kind_(kind), offending_(std::move(offending)) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    /// The reply text (or field) that failed to parse.
    [[nodiscard]] const std::string& offending_text() const noexcept { return offending_; }

  private:
    Kind kind_;
    std::string offending_;
};

inline const char* to_string(ParseError::Kind kind) {
    switch (kind) {
    case ParseError::Kind::MissingLabel: return "missing_label";
    case ParseError::Kind::EmptyField: return "empty_field";
    case ParseError::Kind::NoValidBin: return "no_valid_bin";
    case ParseError::Kind::BinOutOfScheme: return "bin_out_of_scheme";
    case ParseError::Kind::Unparseable: return "unparseable";
    }
    return "unknown";
}

/// 1 data, 2 usage, 3 transport.
inline int exit_code(const Error& e) {
    if (dynamic_cast<const UsageError*>(&e) != nullptr) return 2;
    if (dynamic_cast<const TransportError*>(&e) != nullptr) return 3;
    return 1;
}

}  // namespace llmcast
