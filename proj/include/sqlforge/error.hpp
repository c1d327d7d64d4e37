#pragma once

#include <stdexcept>
#include <string>

namespace sqlforge {

// Base for every error the library raises. `kind()` is a stable name used in
// structured CLI error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SQLFORGE_DEFINE_ERROR(Name, Base)                                 \
  class Name : public Base {                                              \
   public:                                                                \
    explicit Name(const std::string& message) : Base(#Name, message) {}   \
                                                                          \
   protected:                                                             \
    Name(std::string kind, const std::string& message)                    \
        : Base(std::move(kind), message) {}                               \
  };

SQLFORGE_DEFINE_ERROR(FileNotFound, Error)
SQLFORGE_DEFINE_ERROR(NotADatabase, Error)
SQLFORGE_DEFINE_ERROR(IoError, Error)
SQLFORGE_DEFINE_ERROR(EmptySchemaList, Error)
SQLFORGE_DEFINE_ERROR(GoldExecutionFailed, Error)
SQLFORGE_DEFINE_ERROR(EmptyVariantSuite, Error)
SQLFORGE_DEFINE_ERROR(CorpusLayoutError, Error)
SQLFORGE_DEFINE_ERROR(UnknownSampleId, Error)
SQLFORGE_DEFINE_ERROR(GoldReferencesUnknownColumn, Error)
SQLFORGE_DEFINE_ERROR(EndpointUnreachable, Error)
SQLFORGE_DEFINE_ERROR(MalformedResponse, Error)
SQLFORGE_DEFINE_ERROR(AuthError, Error)
SQLFORGE_DEFINE_ERROR(MockExhausted, Error)
SQLFORGE_DEFINE_ERROR(InvalidInput, Error)
SQLFORGE_DEFINE_ERROR(ConfigError, Error)

#undef SQLFORGE_DEFINE_ERROR

// Malformed SQL. `position` is a byte offset into the statement, or npos.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error("ParseError", message), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace sqlforge
