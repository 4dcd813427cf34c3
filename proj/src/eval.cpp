#include "clwe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "clwe/error.hpp"
#include "clwe/model.hpp"

namespace clwe {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

template <typename F>
void for_each_data_line(const std::filesystem::path& path, const char* what, F&& handle) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string("cannot open ") + what + " file: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    handle(line, lineno);
  }
}

/// Orders by similarity descending, then id ascending.
bool ranks_before(double sim_a, WordId a, double sim_b, WordId b) {
  if (sim_a != sim_b) return sim_a > sim_b;
  return a < b;
}

}  // namespace

std::vector<Neighbor> nearest_neighbors(const Matrix& emb, const Vocabulary& vocab,
                                        std::string_view query, std::size_t n,
                                        std::optional<Language> filter) {
  const auto qid = vocab.find(query);
  if (!qid) throw DataError("query word '" + std::string(query) + "' is out of vocabulary");
  const auto q = emb.row(static_cast<std::size_t>(*qid));

  std::vector<std::pair<double, WordId>> scored;
  scored.reserve(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto id = static_cast<WordId>(i);
    if (id == *qid) continue;
    if (filter && !vocab.attested_in(id, *filter)) continue;
    scored.emplace_back(cosine(q, emb.row(i)), id);
  }
  const std::size_t take = std::min(n, scored.size());
  auto cmp = [](const auto& a, const auto& b) { return ranks_before(a.first, a.second, b.first, b.second); };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), cmp);

  std::vector<Neighbor> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({scored[i].second, vocab.word(scored[i].second), scored[i].first});
  }
  return out;
}

BliTestSet load_bli_test(const std::filesystem::path& path, Language source, bool lowercase) {
  BliTestSet test;
  test.source = source;
  test.target = other(source);
  for_each_data_line(path, "BLI test", [&](const std::string& line, std::size_t lineno) {
    auto fields = split_tabs(line);
    if (fields.size() != 2) throw DataError(path.string(), lineno, "expected source<TAB>gold");
    if (lowercase) {
      ascii_lowercase(fields[0]);
      ascii_lowercase(fields[1]);
    }
    test.pairs.push_back({std::move(fields[0]), std::move(fields[1])});
  });
  return test;
}

std::size_t rank_of(const Matrix& emb, WordId query, WordId gold, std::span<const WordId> candidates) {
  const auto q = emb.row(static_cast<std::size_t>(query));
  const double gold_sim = cosine(q, emb.row(static_cast<std::size_t>(gold)));
  std::size_t rank = 1;
  for (const WordId c : candidates) {
    if (c == gold) continue;
    if (ranks_before(cosine(q, emb.row(static_cast<std::size_t>(c))), c, gold_sim, gold)) ++rank;
  }
  return rank;
}

BliResult bli_recall(const Matrix& emb, const Vocabulary& vocab, const BliTestSet& test,
                     std::span<const std::size_t> ks) {
  if (ks.empty()) throw std::invalid_argument("bli_recall needs at least one k");

  std::vector<WordId> pool;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab.attested_in(static_cast<WordId>(i), test.target)) pool.push_back(static_cast<WordId>(i));
  }

  BliResult result;
  std::map<std::size_t, std::size_t> hits;
  for (auto k : ks) hits[k] = 0;
  std::vector<WordId> candidates;
  for (const auto& pair : test.pairs) {
    const auto src = vocab.find(pair.source);
    const auto gold = vocab.find(pair.gold);
    if (!src || !gold || !vocab.attested_in(*gold, test.target)) {
      ++result.excluded;
      continue;
    }
    candidates.clear();
    for (const WordId c : pool) {
      if (c != *src || c == *gold) candidates.push_back(c);
    }
    const std::size_t rank = rank_of(emb, *src, *gold, candidates);
    ++result.evaluated;
    for (auto& [k, h] : hits) {
      if (rank <= k) ++h;
    }
  }
  if (result.evaluated == 0) throw DataError("BLI test set has no in-vocabulary pairs");
  for (const auto& [k, h] : hits) {
    result.recall[k] = static_cast<double>(h) / static_cast<double>(result.evaluated);
  }
  return result;
}

SimilarityTestSet load_similarity_test(const std::filesystem::path& path, bool lowercase) {
  SimilarityTestSet test;
  for_each_data_line(path, "similarity test", [&](const std::string& line, std::size_t lineno) {
    auto fields = split_tabs(line);
    if (fields.size() != 3) throw DataError(path.string(), lineno, "expected w1<TAB>w2<TAB>score");
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw DataError(path.string(), lineno, "unparsable score '" + fields[2] + "'");
    }
    if (lowercase) {
      ascii_lowercase(fields[0]);
      ascii_lowercase(fields[1]);
    }
    test.items.push_back({std::move(fields[0]), std::move(fields[1]), score});
  });
  return test;
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) hold ranks i+1..j+1.
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: size mismatch");
  if (a.size() < 2) throw DataError("spearman correlation needs at least two pairs");
  const auto ra = fractional_ranks(a);
  const auto rb = fractional_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw DataError("spearman correlation undefined: all scores on one side are identical");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

SpearmanResult spearman(const Matrix& emb, const Vocabulary& vocab, const SimilarityTestSet& test) {
  SpearmanResult result;
  std::vector<double> human;
  std::vector<double> model;
  for (const auto& item : test.items) {
    const auto a = vocab.find(item.w1);
    const auto b = vocab.find(item.w2);
    if (!a || !b) {
      ++result.excluded;
      continue;
    }
    human.push_back(item.score);
    model.push_back(cosine(emb.row(static_cast<std::size_t>(*a)), emb.row(static_cast<std::size_t>(*b))));
  }
  result.evaluated = human.size();
  result.rho = spearman_correlation(model, human);
  return result;
}

std::vector<Document> load_documents(const std::filesystem::path& path, bool lowercase) {
  std::vector<Document> docs;
  for_each_data_line(path, "document", [&](const std::string& line, std::size_t lineno) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw DataError(path.string(), lineno, "expected label<TAB>tokens");
    Document doc;
    doc.label = line.substr(0, tab);
    std::string body = line.substr(tab + 1);
    if (lowercase) ascii_lowercase(body);
    std::istringstream toks(body);
    std::string tok;
    while (toks >> tok) doc.tokens.push_back(tok);
    docs.push_back(std::move(doc));
  });
  return docs;
}

std::vector<double> compute_idf(std::span<const std::vector<WordId>> docs, std::size_t vocab_size) {
  std::vector<std::size_t> df(vocab_size, 0);
  std::vector<WordId> seen;
  for (const auto& doc : docs) {
    seen.assign(doc.begin(), doc.end());
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (const WordId w : seen) ++df[static_cast<std::size_t>(w)];
  }
  const double n = static_cast<double>(docs.size());
  std::vector<double> idf(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    idf[i] = std::max(0.0, std::log(n / static_cast<double>(df[i] + 1)));
  }
  return idf;
}

std::vector<double> doc_vector(std::span<const WordId> tokens, const Matrix& emb,
                               std::span<const double> idf) {
  if (tokens.empty()) throw std::invalid_argument("doc_vector of a document without in-vocabulary tokens");

  // tf per distinct word, in order of first appearance.
  std::vector<std::pair<WordId, double>> tf;
  for (const WordId w : tokens) {
    auto it = std::find_if(tf.begin(), tf.end(), [w](const auto& p) { return p.first == w; });
    if (it == tf.end()) {
      tf.emplace_back(w, 1.0);
    } else {
      it->second += 1.0;
    }
  }
  std::vector<double> weights(tf.size());
  double total = 0.0;
  for (std::size_t i = 0; i < tf.size(); ++i) {
    weights[i] = tf[i].second * idf[static_cast<std::size_t>(tf[i].first)];
    total += weights[i];
  }
  if (total <= 0.0) {
    total = 0.0;
    for (std::size_t i = 0; i < tf.size(); ++i) total += (weights[i] = tf[i].second);
  }

  std::vector<double> out(emb.cols(), 0.0);
  for (std::size_t i = 0; i < tf.size(); ++i) {
    const double share = weights[i] / total;
    const auto row = emb.row(static_cast<std::size_t>(tf[i].first));
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += share * row[j];
  }
  return out;
}

AveragedPerceptron::AveragedPerceptron(std::size_t classes, std::size_t dim)
    : classes_(classes), dim_(dim), averaged_(classes * (dim + 1), 0.0) {}

void AveragedPerceptron::train(std::span<const std::vector<double>> xs, std::span<const int> labels,
                               std::size_t epochs, std::uint64_t seed) {
  if (xs.size() != labels.size()) throw std::invalid_argument("perceptron: size mismatch");
  const std::size_t width = dim_ + 1;
  std::vector<double> w(classes_ * width, 0.0);
  // Accumulates step-weighted updates; averaged = w - acc / steps.
  std::vector<double> acc(classes_ * width, 0.0);
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  double steps = 1.0;

  auto score = [&](const std::vector<double>& weights, std::span<const double> x, std::size_t c) {
    const double* row = weights.data() + c * width;
    double s = row[dim_];
    for (std::size_t j = 0; j < dim_; ++j) s += row[j] * x[j];
    return s;
  };

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    for (const auto idx : order) {
      const auto& x = xs[idx];
      const auto y = static_cast<std::size_t>(labels[idx]);
      std::size_t pred = 0;
      double best = score(w, x, 0);
      for (std::size_t c = 1; c < classes_; ++c) {
        const double s = score(w, x, c);
        if (s > best) {
          best = s;
          pred = c;
        }
      }
      if (pred != y) {
        double* wy = w.data() + y * width;
        double* wp = w.data() + pred * width;
        double* ay = acc.data() + y * width;
        double* ap = acc.data() + pred * width;
        for (std::size_t j = 0; j < dim_; ++j) {
          wy[j] += x[j];
          wp[j] -= x[j];
          ay[j] += steps * x[j];
          ap[j] -= steps * x[j];
        }
        wy[dim_] += 1.0;
        wp[dim_] -= 1.0;
        ay[dim_] += steps;
        ap[dim_] -= steps;
      }
      steps += 1.0;
    }
  }
  for (std::size_t i = 0; i < w.size(); ++i) averaged_[i] = w[i] - acc[i] / steps;
}

int AveragedPerceptron::predict(std::span<const double> x) const {
  const std::size_t width = dim_ + 1;
  int best_class = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < classes_; ++c) {
    const double* row = averaged_.data() + c * width;
    double s = row[dim_];
    for (std::size_t j = 0; j < dim_; ++j) s += row[j] * x[j];
    if (s > best) {
      best = s;
      best_class = static_cast<int>(c);
    }
  }
  return best_class;
}

CldcResult cldc_run(const Matrix& emb, const Vocabulary& vocab, std::span<const Document> train,
                    std::span<const Document> test, const CldcOptions& options) {
  CldcResult result;

  auto encode = [&](const Document& doc) {
    std::vector<WordId> ids;
    for (const auto& tok : doc.tokens) {
      if (auto id = vocab.find(tok)) ids.push_back(*id);
    }
    return ids;
  };

  std::vector<std::vector<WordId>> train_ids;
  std::vector<std::string> train_labels;
  for (const auto& doc : train) {
    if (train_ids.size() >= options.n_train) break;
    auto ids = encode(doc);
    if (ids.empty()) {
      ++result.skipped_train;
      continue;
    }
    train_ids.push_back(std::move(ids));
    train_labels.push_back(doc.label);
  }

  std::vector<std::string> classes(train_labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw DataError("CLDC training data needs at least two classes");
  auto class_of = [&](const std::string& label) -> int {
    auto it = std::lower_bound(classes.begin(), classes.end(), label);
    return (it != classes.end() && *it == label) ? static_cast<int>(it - classes.begin()) : -1;
  };

  const auto idf = compute_idf(train_ids, vocab.size());
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  for (std::size_t i = 0; i < train_ids.size(); ++i) {
    xs.push_back(doc_vector(train_ids[i], emb, idf));
    ys.push_back(class_of(train_labels[i]));
  }
  result.train_docs = xs.size();

  AveragedPerceptron model(classes.size(), emb.cols());
  model.train(xs, ys, options.epochs, options.seed);

  std::size_t train_correct = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (model.predict(xs[i]) == ys[i]) ++train_correct;
  }
  result.train_accuracy = static_cast<double>(train_correct) / static_cast<double>(xs.size());

  std::size_t correct = 0;
  for (const auto& doc : test) {
    if (result.test_docs >= options.n_test) break;
    const auto ids = encode(doc);
    if (ids.empty()) {
      ++result.skipped_test;
      continue;
    }
    ++result.test_docs;
    const int y = class_of(doc.label);
    if (y < 0) {
      ++result.unseen_label_misses;
      continue;
    }
    if (model.predict(doc_vector(ids, emb, idf)) == y) ++correct;
  }
  if (result.test_docs == 0) throw DataError("CLDC test set has no usable documents");
  result.accuracy = static_cast<double>(correct) / static_cast<double>(result.test_docs);
  return result;
}

}  // namespace clwe
