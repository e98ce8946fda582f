#pragma once

#include <stdexcept>
#include <string>

namespace seqaug {

/// Coarse error classes; each maps onto one CLI exit code.
enum class ErrorClass { config, data, divergence, missing_artifact };

/// Base for every error raised by the library. `category()` is the
/// machine-readable tag printed by the CLI (e.g. "DomainViolation").
class Error : public std::runtime_error {
 public:
  Error(std::string category, ErrorClass cls, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)), class_(cls) {}

  const std::string& category() const noexcept { return category_; }
  ErrorClass error_class() const noexcept { return class_; }

 private:
  std::string category_;
  ErrorClass class_;
};

#define SEQAUG_DEFINE_ERROR(Name, Class)                                  \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& message) : Error(#Name, Class, message) {} \
  };

SEQAUG_DEFINE_ERROR(SchemaMismatch, ErrorClass::data)
SEQAUG_DEFINE_ERROR(DomainViolation, ErrorClass::data)
SEQAUG_DEFINE_ERROR(RaggedSeries, ErrorClass::data)
SEQAUG_DEFINE_ERROR(ClassInversion, ErrorClass::data)
SEQAUG_DEFINE_ERROR(PoolTooSmall, ErrorClass::data)
SEQAUG_DEFINE_ERROR(WindowTooLong, ErrorClass::data)
SEQAUG_DEFINE_ERROR(SingleClassConditional, ErrorClass::data)
SEQAUG_DEFINE_ERROR(Leakage, ErrorClass::data)
SEQAUG_DEFINE_ERROR(InvalidArgument, ErrorClass::config)
SEQAUG_DEFINE_ERROR(ConfigInvalid, ErrorClass::config)
SEQAUG_DEFINE_ERROR(Diverged, ErrorClass::divergence)
SEQAUG_DEFINE_ERROR(MissingArtifact, ErrorClass::missing_artifact)
SEQAUG_DEFINE_ERROR(BackendUnavailable, ErrorClass::config)
SEQAUG_DEFINE_ERROR(IoError, ErrorClass::data)

#undef SEQAUG_DEFINE_ERROR

}  // namespace seqaug
