#include "clwe/dictionary.hpp"

#include <algorithm>
#include <fstream>

#include "clwe/error.hpp"

namespace clwe {

namespace {

bool has_inner_space(const std::string& s) { return s.find(' ') != std::string::npos; }

std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

BilingualDictionary BilingualDictionary::from_pairs(std::span<const Pair> pairs,
                                                    const Vocabulary& vocab, bool lowercase) {
  BilingualDictionary dict;
  dict.e_to_f_.resize(vocab.size());
  dict.f_to_e_.resize(vocab.size());
  std::string src;
  std::string tgt;
  for (const auto& [s, t] : pairs) {
    ++dict.stats_.pairs_read;
    src = s;
    tgt = t;
    if (lowercase) {
      ascii_lowercase(src);
      ascii_lowercase(tgt);
    }
    if (has_inner_space(src) || has_inner_space(tgt)) {
      ++dict.stats_.dropped_multiword;
      continue;
    }
    const auto sid = vocab.find(src);
    const auto tid = vocab.find(tgt);
    if (!sid || !tid) {
      ++dict.stats_.dropped_oov;
      continue;
    }
    dict.e_to_f_[static_cast<std::size_t>(*sid)].push_back(*tid);
    dict.f_to_e_[static_cast<std::size_t>(*tid)].push_back(*sid);
  }
  dict.finalize(vocab);
  if (dict.stats_.pairs_kept == 0) throw DataError("dictionary has no usable pairs");
  return dict;
}

BilingualDictionary BilingualDictionary::load(const std::filesystem::path& path,
                                              const Vocabulary& vocab, bool lowercase) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dictionary file: " + path.string());
  std::vector<Pair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(std::move(line));
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw DataError(path.string(), lineno, "expected exactly two tab-separated fields");
    }
    pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  try {
    return from_pairs(pairs, vocab, lowercase);
  } catch (const DataError& err) {
    throw DataError(path.string() + ": " + err.what());
  }
}

void BilingualDictionary::finalize(const Vocabulary& vocab) {
  std::size_t kept = 0;
  for (auto* table : {&e_to_f_, &f_to_e_}) {
    for (auto& list : *table) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
    }
  }
  for (const auto& list : e_to_f_) kept += list.size();
  stats_.pairs_kept = kept;

  auto coverage = [&](const std::vector<std::vector<WordId>>& table, Language lang, double& cov,
                      double& mean) {
    std::size_t attested = 0;
    std::size_t covered = 0;
    std::size_t translations = 0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      if (!vocab.attested_in(static_cast<WordId>(i), lang)) continue;
      ++attested;
      if (!table[i].empty()) {
        ++covered;
        translations += table[i].size();
      }
    }
    cov = attested ? static_cast<double>(covered) / static_cast<double>(attested) : 0.0;
    mean = covered ? static_cast<double>(translations) / static_cast<double>(covered) : 0.0;
  };
  coverage(e_to_f_, Language::e, stats_.coverage_e, stats_.mean_translations_e);
  coverage(f_to_e_, Language::f, stats_.coverage_f, stats_.mean_translations_f);
}

}  // namespace clwe
