#include "clwe/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>
#include <thread>

#include "clwe/error.hpp"

namespace clwe {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

Matrix& space_matrix(EmbeddingMatrices& m, Space s) {
  return s == Space::word ? m.word : m.context;
}

}  // namespace

std::string_view to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::mono: return "mono";
    case SelectionMode::random: return "random-selection";
    case SelectionMode::em: return "em-selection";
  }
  return "?";
}

std::string_view to_string(CombineMode m) {
  switch (m) {
    case CombineMode::u: return "U";
    case CombineMode::v: return "V";
    case CombineMode::interpolate: return "interpolate";
    case CombineMode::concat: return "concat";
    case CombineMode::regularize: return "regularize";
  }
  return "?";
}

std::string_view to_string(RegularizedOutput m) {
  switch (m) {
    case RegularizedOutput::u: return "U";
    case RegularizedOutput::v: return "V";
    case RegularizedOutput::mean: return "mean";
  }
  return "?";
}

SelectionMode parse_selection_mode(std::string_view s) {
  if (s == "mono") return SelectionMode::mono;
  if (s == "random-selection" || s == "random") return SelectionMode::random;
  if (s == "em-selection" || s == "em") return SelectionMode::em;
  throw UsageError("unknown mode '" + std::string(s) + "' (mono, random-selection, em-selection)");
}

CombineMode parse_combine_mode(std::string_view s) {
  if (s == "U" || s == "u") return CombineMode::u;
  if (s == "V" || s == "v") return CombineMode::v;
  if (s == "interpolate") return CombineMode::interpolate;
  if (s == "concat") return CombineMode::concat;
  if (s == "regularize") return CombineMode::regularize;
  throw UsageError("unknown combine scheme '" + std::string(s) + "' (U, V, interpolate, concat, regularize)");
}

RegularizedOutput parse_regularized_output(std::string_view s) {
  if (s == "U" || s == "u") return RegularizedOutput::u;
  if (s == "V" || s == "v") return RegularizedOutput::v;
  if (s == "mean") return RegularizedOutput::mean;
  throw UsageError("unknown regularized output '" + std::string(s) + "' (U, V, mean)");
}

double TrainingConfig::effective_alpha() const {
  if (mode == SelectionMode::mono) return 1.0;
  if (!joint) return 0.0;
  return alpha;
}

double TrainingConfig::effective_delta() const {
  return combine == CombineMode::regularize ? delta : 0.0;
}

void TrainingConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw UsageError(msg);
  };
  require(dim >= 1, "dim must be >= 1");
  require(window >= 2, "window (cs) must be >= 2");
  require(negatives >= 1, "negatives must be >= 1");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning rate must be > 0");
  require(subsample >= 0.0, "subsample threshold must be >= 0");
  require(epochs >= 1, "epochs must be >= 1");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must be in [0, 1]");
  require(delta >= 0.0 && std::isfinite(delta), "delta must be >= 0");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must be in [0, 1]");
  require(noise_exponent > 0.0 && noise_exponent <= 1.0, "noise exponent must be in (0, 1]");
  require(min_count >= 1, "min-count must be >= 1");
  require(workers >= 1, "workers must be >= 1");
}

void StepGradients::reset(std::size_t dim) {
  dim_ = dim;
  spaces_.clear();
  rows_.clear();
  values_.clear();
  loss = 0.0;
}

std::span<double> StepGradients::add(Space space, WordId row) {
  spaces_.push_back(space);
  rows_.push_back(row);
  values_.resize(values_.size() + dim_, 0.0);
  return {values_.data() + values_.size() - dim_, dim_};
}

void compute_step_gradients(const EmbeddingMatrices& m, const StepContext& ctx, double alpha,
                            double delta, StepGradients& out, GradientTerms terms) {
  const std::size_t d = m.dim();
  out.reset(d);

  if (terms != GradientTerms::regularizer) {
    auto& h = out.hidden_;
    auto& gh = out.hidden_grad_;
    h.resize(d);
    gh.assign(d, 0.0);
    context_vector(m.context, ctx.context, h);

    auto target = [&](WordId w, double weight, bool positive) {
      const auto u = m.word.row(static_cast<std::size_t>(w));
      const double x = dot(u, h);
      double g;
      if (positive) {
        out.loss += weight * log_sigmoid(x);
        g = weight * (1.0 - sigmoid(x));
      } else {
        out.loss += log_sigmoid(-x);
        g = 0.0 - sigmoid(x);
      }
      auto gu = out.add(Space::word, w);
      for (std::size_t j = 0; j < d; ++j) gu[j] = g * h[j];
      for (std::size_t j = 0; j < d; ++j) gh[j] += g * u[j];
    };

    const bool translated = ctx.translation != kNoWord;
    const double word_weight = translated ? alpha : 1.0;
    if (word_weight != 0.0) target(ctx.centre, word_weight, true);
    if (translated && alpha != 1.0) target(ctx.translation, 1.0 - alpha, true);
    for (const WordId w : ctx.negatives) target(w, 1.0, false);

    const double n = static_cast<double>(ctx.context.size());
    for (const WordId c : ctx.context) {
      auto gv = out.add(Space::context, c);
      for (std::size_t j = 0; j < d; ++j) gv[j] = gh[j] / n;
    }
  }

  if (terms != GradientTerms::likelihood && delta > 0.0) {
    auto& bound = out.bound_;
    bound.clear();
    auto bind = [&](WordId x) {
      if (x != kNoWord && std::find(bound.begin(), bound.end(), x) == bound.end()) bound.push_back(x);
    };
    bind(ctx.centre);
    bind(ctx.translation);
    for (const WordId w : ctx.negatives) bind(w);

    for (const WordId x : bound) {
      const auto u = m.word.row(static_cast<std::size_t>(x));
      const auto v = m.context.row(static_cast<std::size_t>(x));
      auto gu = out.add(Space::word, x);
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = u[j] - v[j];
        sq += diff * diff;
        gu[j] = -2.0 * delta * diff;
      }
      out.loss -= delta * sq;
      auto gv = out.add(Space::context, x);
      for (std::size_t j = 0; j < d; ++j) gv[j] = 2.0 * delta * (u[j] - v[j]);
    }
  }
}

void apply_step(EmbeddingMatrices& m, const StepGradients& grads, double eta) {
  const std::size_t d = grads.dim();
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto row = space_matrix(m, grads.space(i)).row(static_cast<std::size_t>(grads.row(i)));
    const auto g = grads.values(i);
    bool finite = true;
    for (std::size_t j = 0; j < d; ++j) {
      row[j] += eta * g[j];
      finite = finite && std::isfinite(row[j]);
    }
    if (!finite) {
      throw NumericalError("non-finite " + std::string(grads.space(i) == Space::word ? "U" : "V") +
                           " row " + std::to_string(grads.row(i)) + " after update with learning rate " +
                           std::to_string(eta) + "; lower the learning rate");
    }
  }
}

WordId select_translation(const EmbeddingMatrices& m, WordId centre, std::span<const double> hidden,
                          std::span<const WordId> candidates, SelectionMode mode, Rng& rng) {
  if (mode == SelectionMode::mono || candidates.empty()) return kNoWord;
  if (mode == SelectionMode::random) return candidates[uniform_index(rng, candidates.size())];

  const auto vc = m.context.row(static_cast<std::size_t>(centre));
  // s = v_centre + h, cosine computed inline to avoid materializing s.
  double s_norm2 = 0.0;
  for (std::size_t j = 0; j < vc.size(); ++j) {
    const double s = vc[j] + hidden[j];
    s_norm2 += s * s;
  }
  WordId best = candidates.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (const WordId w : candidates) {
    const auto vw = m.context.row(static_cast<std::size_t>(w));
    double num = 0.0;
    double w_norm2 = 0.0;
    for (std::size_t j = 0; j < vw.size(); ++j) {
      num += (vc[j] + hidden[j]) * vw[j];
      w_norm2 += vw[j] * vw[j];
    }
    const double score = (s_norm2 == 0.0 || w_norm2 == 0.0)
                             ? -std::numeric_limits<double>::infinity()
                             : num / (std::sqrt(s_norm2) * std::sqrt(w_norm2));
    if (score > best_score) {
      best_score = score;
      best = w;
    }
  }
  return best;
}

WordId select_translation(const EmbeddingMatrices& m, WordId centre,
                          std::span<const WordId> context, std::span<const WordId> candidates,
                          SelectionMode mode, Rng& rng) {
  if (mode != SelectionMode::em || candidates.empty()) {
    return select_translation(m, centre, std::span<const double>{}, candidates, mode, rng);
  }
  const auto h = context_vector(m.context, context);
  return select_translation(m, centre, h, candidates, mode, rng);
}

namespace {

/// Per-worker training state. Buffers are reused across positions.
struct Worker {
  Rng rng;
  std::vector<WordId> kept;
  std::vector<WordId> context;
  std::vector<WordId> negatives;
  std::vector<double> hidden;
  StepGradients grads;
  std::uint64_t tokens = 0;
  std::uint64_t positions = 0;
  std::uint64_t translated = 0;
  double loss = 0.0;
  std::exception_ptr error;
};

struct Schedule {
  double initial_lr = 0.0;
  std::uint64_t scheduled_tokens = 0;
  std::atomic<std::uint64_t> processed{0};

  double rate() const {
    const double progress = static_cast<double>(processed.load(std::memory_order_relaxed)) /
                            static_cast<double>(scheduled_tokens + 1);
    return initial_lr * std::max(1e-4, 1.0 - progress);
  }
};

constexpr std::uint64_t kReportInterval = 10000;

}  // namespace

Trainer::Trainer(TrainingConfig config, const Vocabulary& vocab, const NoiseDistribution& noise,
                 const BilingualDictionary* dict)
    : config_(std::move(config)), vocab_(vocab), noise_(noise), dict_(dict) {
  config_.validate();
  if (config_.mode != SelectionMode::mono && dict_ == nullptr) {
    throw UsageError(std::string(to_string(config_.mode)) + " needs a bilingual dictionary");
  }
  if (noise_.size() != vocab_.size()) throw std::invalid_argument("noise distribution does not match vocabulary");
  if (dict_ != nullptr && dict_->vocab_size() != vocab_.size()) {
    throw std::invalid_argument("dictionary was built for a different vocabulary");
  }
}

EmbeddingMatrices Trainer::train(std::span<const SentenceStream> streams, const EpochCallback& on_epoch) {
  auto m = init_embeddings(vocab_.size(), config_.dim, config_.seed);
  train(m, streams, on_epoch);
  return m;
}

void Trainer::train(EmbeddingMatrices& m, std::span<const SentenceStream> streams,
                    const EpochCallback& on_epoch) {
  if (m.vocab_size() != vocab_.size() || m.dim() != config_.dim) {
    throw std::invalid_argument("embedding matrices do not match vocabulary size and dimension");
  }
  const auto started = std::chrono::steady_clock::now();

  std::vector<double> keep(vocab_.size(), 1.0);
  if (config_.subsample > 0.0) {
    for (std::size_t i = 0; i < keep.size(); ++i) {
      keep[i] = keep_probability(vocab_.count(static_cast<WordId>(i)), vocab_.total_tokens(), config_.subsample);
    }
  }

  std::uint64_t corpus_tokens = 0;
  for (const auto& s : streams) corpus_tokens += s.num_tokens();

  Schedule schedule;
  schedule.initial_lr = config_.learning_rate;
  schedule.scheduled_tokens = corpus_tokens * config_.epochs;

  const std::size_t n_workers = config_.workers;
  const std::size_t half = config_.half_window();
  const double alpha = config_.effective_alpha();
  const double delta = config_.effective_delta();
  const SelectionMode mode = config_.mode;

  std::vector<Worker> workers(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) {
    workers[w].rng.seed(derive_seed(config_.seed, w));
    workers[w].negatives.resize(config_.negatives);
    workers[w].hidden.resize(config_.dim);
  }

  // Optional per-epoch sentence permutations.
  std::vector<std::vector<std::size_t>> order(streams.size());

  auto train_sentence = [&](Worker& wk, const SentenceStream& stream, std::span<const WordId> sentence,
                            double& lr, std::uint64_t& unreported) {
    wk.kept.clear();
    for (const WordId id : sentence) {
      const double p = keep[static_cast<std::size_t>(id)];
      if (p >= 1.0 || uniform01(wk.rng) < p) wk.kept.push_back(id);
    }
    wk.tokens += sentence.size();
    unreported += sentence.size();
    if (unreported >= kReportInterval) {
      schedule.processed.fetch_add(unreported, std::memory_order_relaxed);
      unreported = 0;
      lr = schedule.rate();
    }

    const Language lang = stream.language();
    const std::size_t len = wk.kept.size();
    for (std::size_t pos = 0; pos < len; ++pos) {
      const std::size_t b = 1 + uniform_index(wk.rng, half);
      wk.context.clear();
      const std::size_t lo = pos >= b ? pos - b : 0;
      const std::size_t hi = std::min(len, pos + b + 1);
      for (std::size_t j = lo; j < hi; ++j) {
        if (j != pos) wk.context.push_back(wk.kept[j]);
      }
      if (wk.context.empty()) continue;

      const WordId centre = wk.kept[pos];
      WordId translation = kNoWord;
      if (mode != SelectionMode::mono) {
        const auto candidates = dict_->translations(centre, lang);
        if (!candidates.empty()) {
          if (mode == SelectionMode::em) context_vector(m.context, wk.context, wk.hidden);
          translation = select_translation(m, centre, wk.hidden, candidates, mode, wk.rng);
        }
      }

      const WordId exclude[2] = {centre, translation};
      sample_negatives(noise_, wk.rng, exclude, wk.negatives);

      const StepContext step{centre, wk.context, translation, wk.negatives, lr};
      compute_step_gradients(m, step, alpha, delta, wk.grads);
      apply_step(m, wk.grads, lr);

      ++wk.positions;
      if (translation != kNoWord) ++wk.translated;
      wk.loss += wk.grads.loss;
    }
  };

  auto run_worker = [&](std::size_t w) {
    Worker& wk = workers[w];
    try {
      double lr = schedule.rate();
      std::uint64_t unreported = 0;
      for (std::size_t s = 0; s < streams.size(); ++s) {
        const auto& stream = streams[s];
        const std::size_t n = stream.num_sentences();
        const std::size_t begin = n * w / n_workers;
        const std::size_t end = n * (w + 1) / n_workers;
        for (std::size_t i = begin; i < end; ++i) {
          const std::size_t idx = order[s].empty() ? i : order[s][i];
          train_sentence(wk, stream, stream.sentence(idx), lr, unreported);
        }
      }
      schedule.processed.fetch_add(unreported, std::memory_order_relaxed);
    } catch (...) {
      wk.error = std::current_exception();
    }
  };

  stats_ = {};
  for (std::size_t epoch = 1; epoch <= config_.epochs; ++epoch) {
    if (config_.shuffle) {
      Rng shuffler(derive_seed(config_.seed, 0x5eed0000ULL + epoch));
      for (std::size_t s = 0; s < streams.size(); ++s) {
        order[s].resize(streams[s].num_sentences());
        std::iota(order[s].begin(), order[s].end(), std::size_t{0});
        for (std::size_t i = order[s].size(); i > 1; --i) {
          std::swap(order[s][i - 1], order[s][uniform_index(shuffler, i)]);
        }
      }
    }
    for (auto& wk : workers) {
      wk.positions = 0;
      wk.loss = 0.0;
    }

    if (n_workers == 1) {
      run_worker(0);
    } else {
      std::vector<std::jthread> threads;
      threads.reserve(n_workers);
      for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(run_worker, w);
    }

    std::uint64_t positions = 0;
    double loss = 0.0;
    for (auto& wk : workers) {
      if (wk.error) std::rethrow_exception(wk.error);
      positions += wk.positions;
      loss += wk.loss;
      stats_.positions_trained += wk.positions;
    }
    stats_.mean_loss = positions ? loss / static_cast<double>(positions) : 0.0;
    if (on_epoch) on_epoch(epoch, m);
  }

  for (const auto& wk : workers) {
    stats_.tokens_seen += wk.tokens;
    stats_.translated_positions += wk.translated;
  }
  stats_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
}

EmbeddingMatrices train(const TrainingConfig& config, const Vocabulary& vocab,
                        std::span<const SentenceStream> streams, const BilingualDictionary* dict,
                        const NoiseDistribution& noise) {
  Trainer trainer(config, vocab, noise, dict);
  return trainer.train(streams);
}

CombinedEmbedding make_output(const EmbeddingMatrices& m, const TrainingConfig& config) {
  switch (config.combine) {
    case CombineMode::u: return select_word(m);
    case CombineMode::v: return select_context(m);
    case CombineMode::interpolate: return combine_interpolate(m, config.gamma);
    case CombineMode::concat: return combine_concat(m);
    case CombineMode::regularize:
      switch (config.output) {
        case RegularizedOutput::u: return {m.word, Provenance::regularized_u, 0.0};
        case RegularizedOutput::v: return {m.context, Provenance::regularized_v, 0.0};
        case RegularizedOutput::mean: {
          auto c = combine_interpolate(m, 0.5);
          c.provenance = Provenance::regularized_mean;
          return c;
        }
      }
  }
  throw std::logic_error("unhandled combine mode");
}

}  // namespace clwe
