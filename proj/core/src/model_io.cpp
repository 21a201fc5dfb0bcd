#include "rsbandit/model_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "rsbandit/errors.hpp"

namespace rsb {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != ',' && s[j] != '\r') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_plain(std::string_view token) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorCode::ParseError, fmt::format("'{}' is not a number", token));
  return value;
}

Matrix reshape(const std::vector<double>& values, long long rows, long long cols, std::string_view key) {
  if (static_cast<long long>(values.size()) != rows * cols)
    throw Error(ErrorCode::ParseError,
                fmt::format("{} has {} values, expected {}x{}", key, values.size(), rows, cols));
  Matrix m(rows, cols);
  for (long long r = 0; r < rows; ++r)
    for (long long c = 0; c < cols; ++c) m(r, c) = values[static_cast<std::size_t>(r * cols + c)];
  return m;
}

}  // namespace

KeyValueDocument KeyValueDocument::parse(std::string_view text) {
  KeyValueDocument doc;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      // Continuation line: more values for the previous key.
      if (doc.entries_.empty())
        throw Error(ErrorCode::ParseError, fmt::format("line {}: expected 'key = value'", line_no));
      auto more = split_tokens(line);
      auto& values = doc.entries_.back().second;
      values.insert(values.end(), more.begin(), more.end());
      continue;
    }
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw Error(ErrorCode::ParseError, fmt::format("line {}: empty key", line_no));
    if (doc.contains(key)) throw Error(ErrorCode::ParseError, fmt::format("line {}: duplicate key '{}'", line_no, key));
    doc.entries_.emplace_back(std::move(key), split_tokens(line.substr(eq + 1)));
  }
  return doc;
}

bool KeyValueDocument::contains(std::string_view key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

const std::vector<std::string>& KeyValueDocument::tokens(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  throw Error(ErrorCode::ParseError, fmt::format("missing key '{}'", key));
}

std::vector<double> KeyValueDocument::numbers(std::string_view key) const {
  std::vector<double> out;
  for (const auto& t : tokens(key)) out.push_back(parse_number(t));
  return out;
}

double KeyValueDocument::number(std::string_view key) const {
  const auto& t = tokens(key);
  if (t.size() != 1) throw Error(ErrorCode::ParseError, fmt::format("key '{}' must hold one value", key));
  return parse_number(t.front());
}

long long KeyValueDocument::integer(std::string_view key) const {
  const double v = number(key);
  const auto n = static_cast<long long>(v);
  if (static_cast<double>(n) != v) throw Error(ErrorCode::ParseError, fmt::format("key '{}' must be an integer", key));
  return n;
}

double parse_number(std::string_view token) {
  if (const auto slash = token.find('/'); slash != std::string_view::npos) {
    const double num = parse_plain(token.substr(0, slash));
    const double den = parse_plain(token.substr(slash + 1));
    if (den == 0.0) throw Error(ErrorCode::ParseError, fmt::format("'{}' divides by zero", token));
    return num / den;
  }
  return parse_plain(token);
}

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

ModelFile parse_model(std::string_view text) {
  const auto doc = KeyValueDocument::parse(text);
  const long long m = doc.integer("M");
  const long long i = doc.integer("I");
  if (m < 1 || i < 1) throw Error(ErrorCode::ParseError, "M and I must be at least 1");
  Matrix p = reshape(doc.numbers("P"), m, m, "P");
  Matrix mu = reshape(doc.numbers("mu"), m, i, "mu");
  ModelFile file{validate_model(std::move(p), std::move(mu)), std::nullopt};
  if (doc.contains("initial_belief")) {
    const auto b = doc.numbers("initial_belief");
    if (static_cast<long long>(b.size()) != m)
      throw Error(ErrorCode::ParseError, "initial_belief must have M entries");
    file.initial_belief = Belief(Eigen::Map<const Vector>(b.data(), m));
  }
  return file;
}

ModelFile load_model(const std::filesystem::path& path) { return parse_model(read_text_file(path)); }

std::string format_row_major(const Matrix& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!out.empty()) out += ' ';
      out += format_double(m(r, c));
    }
  return out;
}

std::string format_model(const HmmBanditModel& model, const std::optional<Belief>& initial_belief) {
  std::string out = fmt::format("M = {}\nI = {}\nP = {}\nmu = {}\n", model.states(), model.arms(),
                                format_row_major(model.transition()), format_row_major(model.means()));
  if (initial_belief) out += fmt::format("initial_belief = {}\n", format_row_major(initial_belief->vector().transpose()));
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, fmt::format("cannot write '{}'", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace rsb
