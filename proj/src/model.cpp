#include "clwe/model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "clwe/error.hpp"

namespace clwe {

EmbeddingMatrices init_embeddings(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("embedding dimension must be >= 1");
  EmbeddingMatrices m{Matrix(vocab_size, dim), Matrix(vocab_size, dim)};
  Rng rng(seed);
  const double scale = 1.0 / static_cast<double>(dim);
  for (double& x : m.context.values()) x = (uniform01(rng) - 0.5) * scale;
  return m;
}

void context_vector(const Matrix& context_matrix, std::span<const WordId> context,
                    std::span<double> out) {
  if (context.empty()) throw std::invalid_argument("context vector of an empty context");
  std::fill(out.begin(), out.end(), 0.0);
  for (const WordId c : context) {
    const auto row = context_matrix.row(static_cast<std::size_t>(c));
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += row[j];
  }
  const double n = static_cast<double>(context.size());
  for (double& x : out) x /= n;
}

std::vector<double> context_vector(const Matrix& context_matrix, std::span<const WordId> context) {
  std::vector<double> out(context_matrix.cols());
  context_vector(context_matrix, context, out);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return -std::numeric_limits<double>::infinity();
  return dot(a, b) / (na * nb);
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::u: return "U";
    case Provenance::v: return "V";
    case Provenance::interpolate: return "interpolate";
    case Provenance::concat: return "concat";
    case Provenance::regularized_u: return "regularized+U";
    case Provenance::regularized_v: return "regularized+V";
    case Provenance::regularized_mean: return "regularized+mean";
  }
  return "?";
}

CombinedEmbedding combine_interpolate(const EmbeddingMatrices& m, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in [0, 1]");
  // The endpoints return the matrices untouched rather than 1*V + 0*U, which
  // could differ in the sign of zero.
  if (gamma == 1.0) return {m.context, Provenance::interpolate, gamma};
  if (gamma == 0.0) return {m.word, Provenance::interpolate, gamma};
  Matrix out(m.vocab_size(), m.dim());
  const auto v = m.context.values();
  const auto u = m.word.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = gamma * v[i] + (1.0 - gamma) * u[i];
  return {std::move(out), Provenance::interpolate, gamma};
}

CombinedEmbedding combine_concat(const EmbeddingMatrices& m) {
  const std::size_t d = m.dim();
  Matrix out(m.vocab_size(), 2 * d);
  for (std::size_t w = 0; w < m.vocab_size(); ++w) {
    auto row = out.row(w);
    std::copy_n(m.context.row(w).begin(), d, row.begin());
    std::copy_n(m.word.row(w).begin(), d, row.begin() + static_cast<std::ptrdiff_t>(d));
  }
  return {std::move(out), Provenance::concat, 0.0};
}

CombinedEmbedding select_word(const EmbeddingMatrices& m) { return {m.word, Provenance::u, 0.0}; }

CombinedEmbedding select_context(const EmbeddingMatrices& m) {
  return {m.context, Provenance::v, 0.0};
}

void save_embeddings(const Matrix& vectors, std::span<const std::string> words,
                     const std::filesystem::path& path) {
  if (words.size() != vectors.rows()) {
    throw std::invalid_argument("word list and embedding matrix disagree in size");
  }
  for (const auto& w : words) {
    if (w.empty() || w.find_first_of(" \t\r\n") != std::string::npos) {
      throw DataError("cannot save word '" + w + "': embedding words must be nonempty and contain no whitespace");
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write embedding file: " + path.string());
  out << vectors.rows() << ' ' << vectors.cols() << '\n';
  std::string line;
  char buf[64];
  for (std::size_t i = 0; i < vectors.rows(); ++i) {
    line = words[i];
    for (const double x : vectors.row(i)) {
      auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, 6);
      // Values that round to zero print without a sign.
      const char* begin = buf;
      if (buf[0] == '-' && std::string_view(buf + 1, res.ptr).find_first_not_of("0.") == std::string_view::npos) {
        ++begin;
      }
      line.push_back(' ');
      line.append(begin, static_cast<std::size_t>(res.ptr - begin));
    }
    line.push_back('\n');
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
  if (!out) throw DataError("failed writing embedding file: " + path.string());
}

LoadedEmbeddings load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path.string());
  const std::string file = path.string();
  std::string line;
  if (!std::getline(in, line)) throw DataError(file, 1, "missing header");

  std::size_t count = 0;
  std::size_t dim = 0;
  {
    const char* p = line.data();
    const char* end = p + line.size();
    auto r1 = std::from_chars(p, end, count);
    if (r1.ec != std::errc{} || r1.ptr == end || *r1.ptr != ' ') {
      throw DataError(file, 1, "malformed header, expected '<count> <dim>'");
    }
    auto r2 = std::from_chars(r1.ptr + 1, end, dim);
    if (r2.ec != std::errc{} || dim == 0) {
      throw DataError(file, 1, "malformed header, expected '<count> <dim>'");
    }
    while (r2.ptr != end && (*r2.ptr == ' ' || *r2.ptr == '\r')) ++r2.ptr;
    if (r2.ptr != end) throw DataError(file, 1, "malformed header, expected '<count> <dim>'");
  }

  LoadedEmbeddings result;
  result.words.reserve(count);
  result.vectors = Matrix(count, dim);
  std::size_t row = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row >= count) throw DataError(file, lineno, "more rows than the header count " + std::to_string(count));
    const auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0) throw DataError(file, lineno, "row without values");
    result.words.push_back(line.substr(0, sp));
    auto dest = result.vectors.row(row);
    const char* p = line.data() + sp;
    const char* end = line.data() + line.size();
    std::size_t j = 0;
    while (p != end) {
      while (p != end && *p == ' ') ++p;
      if (p == end) break;
      if (j >= dim) throw DataError(file, lineno, "row has more than " + std::to_string(dim) + " values");
      double v = 0.0;
      auto r = std::from_chars(p, end, v);
      if (r.ec != std::errc{} || (r.ptr != end && *r.ptr != ' ')) {
        throw DataError(file, lineno, "unparsable value");
      }
      dest[j++] = v;
      p = r.ptr;
    }
    if (j != dim) {
      throw DataError(file, lineno, "row has " + std::to_string(j) + " values, expected " + std::to_string(dim));
    }
    ++row;
  }
  if (row != count) {
    throw DataError(file, lineno, "header declares " + std::to_string(count) + " rows, found " + std::to_string(row));
  }
  return result;
}

}  // namespace clwe
