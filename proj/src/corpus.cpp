#include "clwe/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "clwe/error.hpp"

namespace clwe {

namespace {

void split_tokens(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
}

}  // namespace

void ascii_lowercase(std::string& s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
}

TextSource TextSource::from_file(std::filesystem::path path, bool lowercase) {
  if (!std::filesystem::exists(path)) {
    throw DataError("cannot open corpus file: " + path.string());
  }
  TextSource src;
  src.path_ = std::move(path);
  src.lowercase_ = lowercase;
  return src;
}

TextSource TextSource::from_lines(std::vector<std::string> lines, bool lowercase) {
  TextSource src;
  src.lines_ = std::move(lines);
  src.lowercase_ = lowercase;
  return src;
}

void TextSource::for_each_sentence(const SentenceVisitor& visit) const {
  std::vector<std::string_view> tokens;
  std::string buffer;
  auto handle = [&](std::string_view line) {
    if (lowercase_) {
      buffer.assign(line);
      ascii_lowercase(buffer);
      line = buffer;
    }
    split_tokens(line, tokens);
    if (!tokens.empty()) visit(tokens);
  };

  if (path_) {
    std::ifstream in(*path_);
    if (!in) throw DataError("cannot open corpus file: " + path_->string());
    std::string line;
    while (std::getline(in, line)) handle(line);
  } else {
    for (const auto& line : lines_) handle(line);
  }
}

Vocabulary::Vocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.total() == 0) throw DataError("vocabulary entry '" + e.word + "' has zero count");
    if (!index_.emplace(e.word, static_cast<WordId>(i)).second) {
      throw DataError("duplicate vocabulary entry '" + e.word + "'");
    }
    total_e_ += e.count_e;
    total_f_ += e.count_f;
  }
  total_ = total_e_ + total_f_;
}

Vocabulary Vocabulary::from_words(std::span<const std::string> words) {
  std::vector<VocabEntry> entries;
  entries.reserve(words.size());
  for (const auto& w : words) entries.push_back({w, 1, 1});
  return Vocabulary(std::move(entries));
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file: " + path.string());
  for (const auto& e : entries_) out << e.word << '\t' << e.count_e << '\t' << e.count_f << '\n';
  if (!out) throw DataError("failed writing vocabulary file: " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file: " + path.string());
  std::vector<VocabEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw DataError(path.string(), lineno, "expected word<TAB>count_e<TAB>count_f");
    }
    VocabEntry e;
    e.word = line.substr(0, t1);
    try {
      e.count_e = std::stoull(line.substr(t1 + 1, t2 - t1 - 1));
      e.count_f = std::stoull(line.substr(t2 + 1));
    } catch (const std::exception&) {
      throw DataError(path.string(), lineno, "bad count");
    }
    entries.push_back(std::move(e));
  }
  try {
    return Vocabulary(std::move(entries));
  } catch (const DataError& err) {
    throw DataError(path.string() + ": " + err.what());
  }
}

Vocabulary build_vocabulary(const TextSource& corpus_e, const TextSource& corpus_f,
                            std::uint64_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");

  struct Counts {
    std::uint64_t e = 0;
    std::uint64_t f = 0;
  };
  std::unordered_map<std::string, Counts> counts;
  corpus_e.for_each_sentence([&](std::span<const std::string_view> tokens) {
    for (auto tok : tokens) ++counts[std::string(tok)].e;
  });
  corpus_f.for_each_sentence([&](std::span<const std::string_view> tokens) {
    for (auto tok : tokens) ++counts[std::string(tok)].f;
  });

  std::vector<VocabEntry> entries;
  entries.reserve(counts.size());
  for (auto& [word, c] : counts) {
    if (c.e + c.f >= min_count) entries.push_back({word, c.e, c.f});
  }
  if (entries.empty()) throw DataError("empty vocabulary");

  std::sort(entries.begin(), entries.end(), [](const VocabEntry& a, const VocabEntry& b) {
    if (a.total() != b.total()) return a.total() > b.total();
    return a.word < b.word;
  });
  return Vocabulary(std::move(entries));
}

void SentenceStream::add_sentence(std::span<const WordId> ids) {
  tokens_.insert(tokens_.end(), ids.begin(), ids.end());
  offsets_.push_back(tokens_.size());
}

SentenceStream encode_corpus(const TextSource& source, const Vocabulary& vocab, Language lang) {
  SentenceStream stream(lang);
  std::vector<WordId> ids;
  source.for_each_sentence([&](std::span<const std::string_view> tokens) {
    ids.clear();
    for (auto tok : tokens) {
      if (auto id = vocab.find(tok)) ids.push_back(*id);
    }
    if (!ids.empty()) stream.add_sentence(ids);
  });
  return stream;
}

double keep_probability(std::uint64_t word_count, std::uint64_t total_tokens, double t) {
  const double f = static_cast<double>(word_count) / static_cast<double>(total_tokens);
  const double ratio = t / f;
  return std::min(1.0, std::sqrt(ratio) + ratio);
}

NoiseDistribution::NoiseDistribution(const Vocabulary& vocab, double exponent)
    : exponent_(exponent) {
  if (vocab.empty()) throw std::invalid_argument("noise distribution needs a nonempty vocabulary");
  if (!(exponent > 0.0 && exponent <= 1.0)) {
    throw std::invalid_argument("noise exponent must be in (0, 1]");
  }
  std::vector<double> weights(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    weights[i] = std::pow(static_cast<double>(vocab.count(static_cast<WordId>(i))), exponent);
  }
  build(weights);
}

NoiseDistribution::NoiseDistribution(std::span<const double> weights, double exponent)
    : exponent_(exponent) {
  if (weights.empty()) throw std::invalid_argument("noise distribution needs a nonempty vocabulary");
  std::vector<double> w(weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(weights[i] > 0.0)) throw std::invalid_argument("noise weights must be positive");
    w[i] = std::pow(weights[i], exponent);
  }
  build(w);
}

void NoiseDistribution::build(std::span<const double> weights) {
  const std::size_t n = weights.size();
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  probability_.resize(n);
  for (std::size_t i = 0; i < n; ++i) probability_[i] = weights[i] / sum;

  // Vose's construction of the alias table.
  accept_.assign(n, 1.0);
  alias_.resize(n);
  std::iota(alias_.begin(), alias_.end(), WordId{0});
  std::vector<double> scaled(n);
  std::vector<std::size_t> small;
  std::vector<std::size_t> large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = probability_[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    accept_[s] = scaled[s];
    alias_[s] = static_cast<WordId>(l);
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (auto i : small) accept_[i] = 1.0;
  for (auto i : large) accept_[i] = 1.0;
}

void sample_negatives(const NoiseDistribution& noise, Rng& rng, std::span<const WordId> exclude,
                      std::span<WordId> out) {
  std::size_t excludable = 0;
  for (auto id : exclude) {
    if (id != kNoWord) ++excludable;
  }
  if (excludable >= noise.size()) {
    // Duplicates in `exclude` can only make this conservative.
    bool all_excluded = true;
    for (std::size_t w = 0; w < noise.size() && all_excluded; ++w) {
      all_excluded = std::find(exclude.begin(), exclude.end(), static_cast<WordId>(w)) != exclude.end();
    }
    if (all_excluded) throw std::invalid_argument("exclusion set covers the whole vocabulary");
  }
  for (auto& slot : out) {
    WordId id;
    do {
      id = noise.sample(rng);
    } while (std::find(exclude.begin(), exclude.end(), id) != exclude.end());
    slot = id;
  }
}

std::vector<WordId> sample_negatives(const NoiseDistribution& noise, std::size_t count, Rng& rng,
                                     std::span<const WordId> exclude) {
  std::vector<WordId> out(count);
  sample_negatives(noise, rng, exclude, out);
  return out;
}

}  // namespace clwe
