#include "cvarcut/ingest.hpp"

#include "cvarcut/errors.hpp"

#include <spdlog/spdlog.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

namespace cvarcut {

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string_view> tokens;
};

// Splits into non-blank lines of whitespace-separated tokens; '\r' is whitespace.
std::vector<Line> tokenize(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    const auto raw = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    ++number;
    Line line{number, {}};
    std::size_t i = 0;
    while (i < raw.size()) {
      while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t' || raw[i] == '\r')) ++i;
      const auto start = i;
      while (i < raw.size() && !(raw[i] == ' ' || raw[i] == '\t' || raw[i] == '\r')) ++i;
      if (i > start) line.tokens.push_back(raw.substr(start, i - start));
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return lines;
}

double to_double(std::string_view tok, std::size_t line) {
  double value = 0.0;
  const auto* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value))
    throw ParseError(line, "expected a finite number, got '" + std::string(tok) + "'");
  return value;
}

long to_integer(std::string_view tok, std::size_t line) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(line, "expected an integer, got '" + std::string(tok) + "'");
  return value;
}

void append_number(std::string& out, double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  out.append(buf.data(), ptr);
}

void expect_tokens(const Line& line, std::size_t count, const char* what) {
  if (line.tokens.size() != count)
    throw ParseError(line.number, std::string("expected ") + what + " (" + std::to_string(count) + " fields), got " +
                                      std::to_string(line.tokens.size()) + " fields");
}

}  // namespace

void MomentData::validate() const {
  const auto n = mu.size();
  if (sigma.rows() != n || sigma.cols() != n) throw ParameterError("sigma must be N x N with N = len(mu)");
  if (!mu.allFinite() || !sigma.allFinite()) throw ParameterError("moments must be finite");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10) throw ParameterError("sigma must be symmetric");
  if ((sigma.diagonal().array() < 0.0).any()) throw ParameterError("sigma diagonal must be nonnegative");
}

MomentData parse_orlibrary(std::string_view text, double scale) {
  const auto lines = tokenize(text);
  if (lines.empty()) throw ParseError(0, "empty OR-Library file");
  expect_tokens(lines[0], 1, "asset count");
  const long n = to_integer(lines[0].tokens[0], lines[0].number);
  if (n < 1) throw ParseError(lines[0].number, "asset count must be positive");
  if (lines.size() < static_cast<std::size_t>(n) + 1)
    throw ParseError(lines.back().number, "file ends before all " + std::to_string(n) + " mean/stddev lines");

  MomentData m;
  m.mu.resize(n);
  Vector sd(n);
  for (long i = 0; i < n; ++i) {
    const auto& line = lines[static_cast<std::size_t>(i) + 1];
    expect_tokens(line, 2, "'mean stddev'");
    m.mu[i] = to_double(line.tokens[0], line.number) * scale;
    sd[i] = to_double(line.tokens[1], line.number) * scale;
    if (sd[i] < 0.0) throw ParseError(line.number, "negative standard deviation");
  }

  Matrix corr = Matrix::Constant(n, n, std::nan(""));
  for (std::size_t li = static_cast<std::size_t>(n) + 1; li < lines.size(); ++li) {
    const auto& line = lines[li];
    expect_tokens(line, 3, "'i j corr'");
    const long i = to_integer(line.tokens[0], line.number);
    const long j = to_integer(line.tokens[1], line.number);
    const double c = to_double(line.tokens[2], line.number);
    if (i < 1 || i > n || j < 1 || j > n) throw ParseError(line.number, "asset index out of range");
    if (std::abs(c) > 1.0 + 1e-9) throw ParseError(line.number, "correlation magnitude exceeds 1");
    corr(i - 1, j - 1) = c;
    corr(j - 1, i - 1) = c;
  }
  for (long i = 0; i < n; ++i)
    for (long j = i; j < n; ++j)
      if (std::isnan(corr(i, j)))
        throw ParseError(lines.back().number, "missing correlation pair (" + std::to_string(i + 1) + ", " +
                                                  std::to_string(j + 1) + ")");

  m.sigma = sd.asDiagonal() * corr * sd.asDiagonal();
  m.sigma = 0.5 * (m.sigma + m.sigma.transpose()).eval();
  return m;
}

std::string write_orlibrary(const MomentData& moments) {
  moments.validate();
  const auto n = moments.mu.size();
  const Vector sd = moments.sigma.diagonal().cwiseSqrt();
  std::string out = std::to_string(n) + "\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    append_number(out, moments.mu[i]);
    out.push_back(' ');
    append_number(out, sd[i]);
    out.push_back('\n');
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double denom = sd[i] * sd[j];
      const double c = i == j ? 1.0 : (denom > 0.0 ? moments.sigma(i, j) / denom : 0.0);
      out += std::to_string(i + 1) + " " + std::to_string(j + 1) + " ";
      append_number(out, c);
      out.push_back('\n');
    }
  }
  return out;
}

namespace {

// Cholesky that tolerates exactly singular PSD input: a pivot within
// `zero_tol` of zero yields a zero column provided the rest of that column's
// residual also vanishes.
bool try_cholesky(const Matrix& a, Matrix& L) {
  const auto n = a.rows();
  L.setZero(n, n);
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  const double zero_tol = 1e-14 * scale;
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - L.row(j).head(j).squaredNorm();
    if (d < -zero_tol) return false;
    if (d <= zero_tol) {
      for (Eigen::Index i = j + 1; i < n; ++i) {
        const double r = a(i, j) - L.row(i).head(j).dot(L.row(j).head(j));
        if (std::abs(r) > 1e-10 * scale) return false;
      }
      continue;
    }
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i)
      L(i, j) = (a(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / ljj;
  }
  return true;
}

}  // namespace

CholeskyFactor cholesky(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols()) throw ParameterError("cholesky: matrix must be square");
  const Matrix sym = 0.5 * (sigma + sigma.transpose());
  CholeskyFactor out;
  for (double jitter : {0.0, 1e-12, 1e-10, 1e-8}) {
    const Matrix shifted = sym + jitter * Matrix::Identity(sym.rows(), sym.cols());
    if (try_cholesky(shifted, out.L)) {
      out.jitter = jitter;
      if (jitter > 0.0) spdlog::warn("covariance matrix repaired with jitter {:g}", jitter);
      return out;
    }
  }
  throw NotPsdError("covariance matrix is not positive semidefinite (jitter up to 1e-8 failed)");
}

Matrix generate_scenarios(const MomentData& moments, int n_scenarios, std::uint64_t seed) {
  if (n_scenarios < 1) throw ParameterError("scenario count must be at least 1");
  moments.validate();
  const auto factor = cholesky(moments.sigma);
  const auto n = moments.mu.size();

  std::mt19937_64 rng(seed);
  const auto uniform = [&rng] {
    // (0, 1): top 53 bits shifted by half an ulp so log() never sees 0.
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  };
  bool have_spare = false;
  double spare = 0.0;
  const auto normal = [&] {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare = radius * std::sin(angle);
    have_spare = true;
    return radius * std::cos(angle);
  };

  Matrix out(n_scenarios, n);
  Vector g(n);
  for (int s = 0; s < n_scenarios; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) g[i] = normal();
    out.row(s) = (moments.mu + factor.L.triangularView<Eigen::Lower>() * g).transpose();
  }
  return out;
}

ScenarioSet parse_scenarios(std::string_view text) {
  const auto lines = tokenize(text);
  if (lines.empty()) throw ParseError(0, "empty scenario file");
  expect_tokens(lines[0], 2, "'S N' header");
  const long s = to_integer(lines[0].tokens[0], lines[0].number);
  const long n = to_integer(lines[0].tokens[1], lines[0].number);
  if (s < 1 || n < 1) throw ParseError(lines[0].number, "S and N must be positive");
  if (lines.size() != static_cast<std::size_t>(s) + 1)
    throw ParseError(lines.back().number, "expected " + std::to_string(s) + " scenario lines, found " +
                                              std::to_string(lines.size() - 1));
  ScenarioSet out;
  out.returns.resize(s, n);
  for (long i = 0; i < s; ++i) {
    const auto& line = lines[static_cast<std::size_t>(i) + 1];
    expect_tokens(line, static_cast<std::size_t>(n), "one return per asset");
    for (long j = 0; j < n; ++j) out.returns(i, j) = to_double(line.tokens[static_cast<std::size_t>(j)], line.number);
  }
  out.probs = Vector::Constant(s, 1.0 / static_cast<double>(s));
  return out;
}

std::string write_scenarios(const Matrix& returns) {
  std::string out = std::to_string(returns.rows()) + " " + std::to_string(returns.cols()) + "\n";
  out.reserve(out.size() + static_cast<std::size_t>(returns.size()) * 24);
  for (Eigen::Index i = 0; i < returns.rows(); ++i) {
    for (Eigen::Index j = 0; j < returns.cols(); ++j) {
      if (j > 0) out.push_back(' ');
      append_number(out, returns(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << contents;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace cvarcut
