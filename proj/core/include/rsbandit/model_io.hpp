#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rsbandit/model.hpp"

namespace rsb {

/// Parsed `key = value ...` text. Blank lines and `#` comments are ignored;
/// keys are unique; values are whitespace-separated tokens.
class KeyValueDocument {
 public:
  static KeyValueDocument parse(std::string_view text);

  bool contains(std::string_view key) const;
  const std::vector<std::string>& tokens(std::string_view key) const;
  std::vector<double> numbers(std::string_view key) const;
  double number(std::string_view key) const;
  long long integer(std::string_view key) const;

 private:
  std::vector<std::pair<std::string, std::vector<std::string>>> entries_;
};

/// Parses a decimal number or an exact-ratio token such as `2/3`.
double parse_number(std::string_view token);

/// Shortest-round-trip-safe rendering used by every file writer.
std::string format_double(double value);

struct ModelFile {
  HmmBanditModel model;
  std::optional<Belief> initial_belief;
};

/// Model file keys: M, I, P (row-major M*M), mu (row-major M*I), optional
/// initial_belief (M values). The model is passed through validate_model.
ModelFile parse_model(std::string_view text);
ModelFile load_model(const std::filesystem::path& path);
std::string format_model(const HmmBanditModel& model, const std::optional<Belief>& initial_belief = std::nullopt);

/// Row-major serialization of a matrix as space-separated values.
std::string format_row_major(const Matrix& m);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace rsb
