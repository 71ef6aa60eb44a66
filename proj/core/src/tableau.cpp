#include "dirk/tableau.hpp"

#include "dirk/error.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace dirk {

namespace {

Eigen::VectorXd row_sums(const Eigen::MatrixXd& a) {
  Eigen::VectorXd c(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    // Neumaier summation; rows of the high-order schemes mix magnitudes up to ~8.
    double sum = 0.0;
    double comp = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double x = a(i, j);
      const double t = sum + x;
      comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
      sum = t;
    }
    c(i) = sum + comp;
  }
  return c;
}

}  // namespace

ButcherTableau::ButcherTableau(std::string name, int order, Eigen::MatrixXd a, Eigen::VectorXd b)
    : name_(std::move(name)), order_(order), a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != a_.cols()) {
    throw RangeError("tableau '" + name_ + "': A must be square");
  }
  if (a_.rows() != b_.size()) {
    throw RangeError("tableau '" + name_ + "': A is " + std::to_string(a_.rows()) + "x" +
                     std::to_string(a_.cols()) + " but b has length " + std::to_string(b_.size()));
  }
  if (b_.size() == 0) {
    throw RangeError("tableau '" + name_ + "': at least one stage is required");
  }
  if (order_ < 1) {
    throw RangeError("tableau '" + name_ + "': declared order must be positive");
  }
  c_ = row_sums(a_);
  flags_ = structural_flags(*this);
}

ButcherTableau ButcherTableau::with_coefficients(Eigen::MatrixXd a, Eigen::VectorXd b) const {
  return ButcherTableau(name_, order_, std::move(a), std::move(b));
}

bool ButcherTableau::identical_to(const ButcherTableau& other) const {
  if (name_ != other.name_ || order_ != other.order_ || stages() != other.stages()) return false;
  // Bitwise, so that -0.0 and 0.0 differ and NaNs compare by payload.
  auto same = [](double x, double y) { return std::memcmp(&x, &y, sizeof(double)) == 0; };
  for (int i = 0; i < stages(); ++i) {
    if (!same(b_(i), other.b_(i))) return false;
    for (int j = 0; j < stages(); ++j) {
      if (!same(a_(i, j), other.a_(i, j))) return false;
    }
  }
  return true;
}

StructuralFlags structural_flags(const ButcherTableau& t) {
  const int s = t.stages();
  StructuralFlags f;
  f.is_dirk = true;
  for (int i = 0; i < s && f.is_dirk; ++i) {
    for (int j = i + 1; j < s; ++j) {
      if (t.a(i, j) != 0.0) {
        f.is_dirk = false;
        break;
      }
    }
  }
  f.is_stiffly_accurate = true;
  for (int j = 0; j < s; ++j) {
    if (std::abs(t.a(s - 1, j) - t.b()(j)) > kStifflyAccurateTolerance) {
      f.is_stiffly_accurate = false;
      break;
    }
  }
  for (int i = 0; i < s; ++i) {
    if (t.a(i, i) == 0.0) f.has_zero_diagonal = true;
  }
  return f;
}

ButcherTableau implicit_midpoint() {
  Eigen::MatrixXd a(1, 1);
  a << 0.5;
  Eigen::VectorXd b(1);
  b << 1.0;
  return ButcherTableau("implicit-midpoint", 2, a, b);
}

ButcherTableau explicit_euler() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, 1);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(1);
  return ButcherTableau("explicit-euler", 1, a, b);
}

ButcherTableau backward_euler() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(1, 1);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(1);
  return ButcherTableau("backward-euler", 1, a, b);
}

// ---------------------------------------------------------------------------
// Text format

namespace {

struct Line {
  int number;
  std::string_view text;
};

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\v\f";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

std::vector<Line> content_lines(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  while (!text.empty() || number == 0) {
    ++number;
    const auto nl = text.find('\n');
    std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    raw = trim(raw);
    if (!raw.empty()) lines.push_back({number, raw});
    if (nl == std::string_view::npos) break;
  }
  return lines;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos >= s.size()) break;
    std::size_t end = pos;
    while (end < s.size() && s[end] != ' ' && s[end] != '\t') ++end;
    out.push_back(s.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

double parse_real(std::string_view token, int line) {
  // from_chars rejects a leading '+', which some generators emit.
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(value)) {
    throw ParseError("invalid real number '" + std::string(token) + "'", line);
  }
  return value;
}

int parse_positive_int(std::string_view token, int line) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size() || value < 1) {
    throw ParseError("expected a positive integer, got '" + std::string(token) + "'", line);
  }
  return value;
}

std::string_view keyword_value(const Line& line, std::string_view keyword) {
  const auto& t = line.text;
  if (t.substr(0, keyword.size()) != keyword ||
      (t.size() > keyword.size() && t[keyword.size()] != ' ' && t[keyword.size()] != '\t')) {
    throw ParseError("expected '" + std::string(keyword) + " <value>'", line.number);
  }
  const auto value = trim(t.substr(keyword.size()));
  if (value.empty()) throw ParseError("missing value after '" + std::string(keyword) + "'", line.number);
  return value;
}

std::vector<double> parse_row(const Line& line, int expected, std::string_view what) {
  const auto tokens = split_ws(line.text);
  if (static_cast<int>(tokens.size()) != expected) {
    throw ParseError(std::string(what) + " has " + std::to_string(tokens.size()) + " entries, expected " +
                         std::to_string(expected),
                     line.number);
  }
  std::vector<double> row;
  row.reserve(tokens.size());
  for (auto tok : tokens) row.push_back(parse_real(tok, line.number));
  return row;
}

}  // namespace

ButcherTableau parse_tableau(std::string_view text) {
  const auto lines = content_lines(text);
  if (lines.size() < 3) {
    throw ParseError("scheme file needs 'name', 'order' and 'stages' header lines", lines.empty() ? 0 : lines.back().number);
  }
  std::string name(keyword_value(lines[0], "name"));
  const int order = parse_positive_int(keyword_value(lines[1], "order"), lines[1].number);
  const int s = parse_positive_int(keyword_value(lines[2], "stages"), lines[2].number);

  const std::size_t needed = 3 + static_cast<std::size_t>(s) + 1;
  if (lines.size() < needed) {
    const int last = lines.back().number;
    throw ParseError("expected " + std::to_string(s) + " rows of A followed by b, found only " +
                         std::to_string(lines.size() - 3) + " data lines",
                     last);
  }
  if (lines.size() > needed) {
    throw ParseError("unexpected trailing data (A must be " + std::to_string(s) + "x" + std::to_string(s) +
                         " and b a single row)",
                     lines[needed].number);
  }

  Eigen::MatrixXd a(s, s);
  for (int i = 0; i < s; ++i) {
    const auto row = parse_row(lines[3 + i], s, "row " + std::to_string(i + 1) + " of A");
    for (int j = 0; j < s; ++j) a(i, j) = row[j];
  }
  const auto brow = parse_row(lines[3 + s], s, "b");
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(brow.data(), s);
  return ButcherTableau(std::move(name), order, std::move(a), std::move(b));
}

ButcherTableau read_tableau_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open scheme file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_tableau(ss.str());
}

namespace {

std::string format_real(double x) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::scientific, 16);
  return std::string(buf, ptr);
}

}  // namespace

void write_tableau(std::ostream& os, const ButcherTableau& t) {
  const int s = t.stages();
  os << "name " << t.name() << '\n';
  os << "order " << t.order() << '\n';
  os << "stages " << s << '\n';
  os << "# A\n";
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) os << (j ? " " : "") << format_real(t.a(i, j));
    os << '\n';
  }
  os << "# b\n";
  for (int j = 0; j < s; ++j) os << (j ? " " : "") << format_real(t.b()(j));
  os << '\n';
}

std::string serialize_tableau(const ButcherTableau& t) {
  std::ostringstream os;
  write_tableau(os, t);
  return os.str();
}

}  // namespace dirk
