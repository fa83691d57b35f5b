#pragma once

#include <stdexcept>
#include <string>

namespace birdxfer {

// Failure categories. The numeric values are the C API status codes.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kValidation = 2,
  kIo = 3,
  kFormat = 4,
  kConfig = 5,
  kNumeric = 6,
  kInternal = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define BIRDXFER_DEFINE_ERROR(Name, Code)                              \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Code, what) {}      \
  };

BIRDXFER_DEFINE_ERROR(InvalidArgument, ErrorCode::kInvalidArgument)
BIRDXFER_DEFINE_ERROR(ValidationError, ErrorCode::kValidation)
BIRDXFER_DEFINE_ERROR(IoError, ErrorCode::kIo)
BIRDXFER_DEFINE_ERROR(FormatError, ErrorCode::kFormat)
BIRDXFER_DEFINE_ERROR(ConfigError, ErrorCode::kConfig)
BIRDXFER_DEFINE_ERROR(NumericError, ErrorCode::kNumeric)

#undef BIRDXFER_DEFINE_ERROR

// Emits "warning: <msg>" on stderr unless warnings are muted.
void warn(const std::string& msg);
void set_warnings_muted(bool muted);

}  // namespace birdxfer
