#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sxai {

enum class Errc {
  unknown_feature,
  unknown_category,
  parse_error,
  invalid_plan,
  unknown_scenario,
  degenerate_class,
  empty_node,
  empty_dataset,
  invalid_alpha,
  invalid_k,
  invalid_argument,
  length_mismatch,
  empty_matrix,
  insufficient_class_count,
  empty_background,
  empty_edit,
  time_regression,
  missing_template,
  vocabulary_mismatch,
  model_format,
  io_error,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::unknown_feature: return "UnknownFeature";
    case Errc::unknown_category: return "UnknownCategory";
    case Errc::parse_error: return "ParseError";
    case Errc::invalid_plan: return "InvalidPlan";
    case Errc::unknown_scenario: return "UnknownScenario";
    case Errc::degenerate_class: return "DegenerateClass";
    case Errc::empty_node: return "EmptyNode";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::invalid_alpha: return "InvalidAlpha";
    case Errc::invalid_k: return "InvalidK";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::empty_matrix: return "EmptyMatrix";
    case Errc::insufficient_class_count: return "InsufficientClassCount";
    case Errc::empty_background: return "EmptyBackground";
    case Errc::empty_edit: return "EmptyEdit";
    case Errc::time_regression: return "TimeRegression";
    case Errc::missing_template: return "MissingTemplate";
    case Errc::vocabulary_mismatch: return "VocabularyMismatch";
    case Errc::model_format: return "ModelFormatError";
    case Errc::io_error: return "IoError";
  }
  return "Error";
}

// Every failure in the library is reported through this type. `feature` and
// `token` are filled for category/feature errors, `line` for parse errors.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Error(Errc code, const std::string& message, std::string feature, std::string token = {},
        long line = 0)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        feature_(std::move(feature)),
        token_(std::move(token)),
        line_(line) {}

  Errc code() const noexcept { return code_; }
  const std::string& feature() const noexcept { return feature_; }
  const std::string& token() const noexcept { return token_; }
  long line() const noexcept { return line_; }

 private:
  Errc code_;
  std::string feature_;
  std::string token_;
  long line_ = 0;
};

inline Error unknown_category(std::string_view feature, std::string_view token) {
  return Error(Errc::unknown_category,
               "'" + std::string(token) + "' is not a valid value for " + std::string(feature),
               std::string(feature), std::string(token));
}

}  // namespace sxai
