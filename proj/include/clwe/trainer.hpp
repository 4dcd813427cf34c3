#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "clwe/corpus.hpp"
#include "clwe/dictionary.hpp"
#include "clwe/model.hpp"
#include "clwe/types.hpp"

namespace clwe {

/// How the translation of a centre word is chosen.
enum class SelectionMode {
  mono,    // no translation term
  random,  // uniform over dict(w)
  em,      // argmax over dict(w) of cos(v_w + h, v_candidate)
};

/// Which embedding is emitted as the final output.
enum class CombineMode { u, v, interpolate, concat, regularize };

/// Output space used with CombineMode::regularize.
enum class RegularizedOutput { u, v, mean };

std::string_view to_string(SelectionMode m);
std::string_view to_string(CombineMode m);
std::string_view to_string(RegularizedOutput m);
SelectionMode parse_selection_mode(std::string_view s);
CombineMode parse_combine_mode(std::string_view s);
RegularizedOutput parse_regularized_output(std::string_view s);

struct TrainingConfig {
  std::size_t dim = 200;
  std::size_t window = 48;  // cs; the half-window k is window / 2
  std::size_t negatives = 25;
  double learning_rate = 0.025;
  double subsample = 1e-4;
  std::size_t epochs = 15;
  double alpha = 0.5;
  double delta = 0.01;
  double gamma = 0.5;
  SelectionMode mode = SelectionMode::em;
  bool joint = true;
  CombineMode combine = CombineMode::regularize;
  RegularizedOutput output = RegularizedOutput::u;
  double noise_exponent = 1.0;
  std::uint64_t min_count = 5;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool shuffle = false;
  bool lowercase = true;

  std::size_t half_window() const { return window / 2; }

  /// Weight of the centre-word term when a translation is present: 1 in
  /// mono mode, 0 for the translation-only (non-joint) model, else alpha.
  double effective_alpha() const;
  /// The cross-space penalty is active only when combining by regularization.
  double effective_delta() const;

  /// Throws UsageError on out-of-range values or contradictory settings.
  void validate() const;
};

/// Everything one gradient step needs besides the parameters.
struct StepContext {
  WordId centre = kNoWord;
  std::span<const WordId> context;
  WordId translation = kNoWord;  // kNoWord when dict(centre) is empty or mode is mono
  std::span<const WordId> negatives;
  double learning_rate = 0.0;
};

enum class Space : std::uint8_t { context, word };

/// Restricts which parts of the objective contribute gradients.
enum class GradientTerms { all, likelihood, regularizer };

/// Sparse gradient of the step objective. Entries may repeat a row; the
/// gradient of a row is the sum of its entries. All entries are evaluated at
/// the parameters before the step.
class StepGradients {
 public:
  void reset(std::size_t dim);

  std::span<double> add(Space space, WordId row);

  std::size_t size() const { return rows_.size(); }
  std::size_t dim() const { return dim_; }
  Space space(std::size_t i) const { return spaces_[i]; }
  WordId row(std::size_t i) const { return rows_[i]; }
  std::span<const double> values(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }

  /// Objective value at the current parameters, for monitoring.
  double loss = 0.0;

 private:
  friend void compute_step_gradients(const EmbeddingMatrices&, const StepContext&, double, double,
                                     StepGradients&, GradientTerms);
  std::size_t dim_ = 0;
  std::vector<Space> spaces_;
  std::vector<WordId> rows_;
  std::vector<double> values_;
  std::vector<double> hidden_;
  std::vector<double> hidden_grad_;
  std::vector<WordId> bound_;
};

/// Gradient (for ascent) of
///   a_w log s(u_c.h) + a_t log s(u_t.h) + sum_j log s(-u_j.h) - delta sum_x |u_x - v_x|^2
/// where a_w = alpha and a_t = 1 - alpha when a translation is present, and
/// a_w = 1 without one. x ranges over the distinct ids among the centre, the
/// translation and the negatives.
void compute_step_gradients(const EmbeddingMatrices& m, const StepContext& ctx, double alpha,
                            double delta, StepGradients& out,
                            GradientTerms terms = GradientTerms::all);

/// theta += eta * gradient on the touched rows. Throws NumericalError if a
/// touched row becomes non-finite.
void apply_step(EmbeddingMatrices& m, const StepGradients& grads, double eta);

/// Picks the translation used for the centre word. `hidden` is the context
/// mean h. Candidates must be sorted ascending; ties go to the lowest id.
WordId select_translation(const EmbeddingMatrices& m, WordId centre, std::span<const double> hidden,
                          std::span<const WordId> candidates, SelectionMode mode, Rng& rng);
WordId select_translation(const EmbeddingMatrices& m, WordId centre,
                          std::span<const WordId> context, std::span<const WordId> candidates,
                          SelectionMode mode, Rng& rng);

struct TrainingStats {
  std::uint64_t tokens_seen = 0;     // before subsampling, summed over epochs
  std::uint64_t positions_trained = 0;
  std::uint64_t translated_positions = 0;
  double seconds = 0.0;
  double mean_loss = 0.0;            // last epoch, per trained position

  double tokens_per_second() const { return seconds > 0 ? static_cast<double>(tokens_seen) / seconds : 0.0; }
};

/// Called after each finished epoch (1-based).
using EpochCallback = std::function<void(std::size_t epoch, const EmbeddingMatrices&)>;

/// Runs the full training loop over the streams in order (all of D_e, then
/// all of D_f, each epoch). `dict` may be null in mono mode.
class Trainer {
 public:
  Trainer(TrainingConfig config, const Vocabulary& vocab, const NoiseDistribution& noise,
          const BilingualDictionary* dict);

  EmbeddingMatrices train(std::span<const SentenceStream> streams, const EpochCallback& on_epoch = {});
  /// Continues training from existing parameters.
  void train(EmbeddingMatrices& m, std::span<const SentenceStream> streams,
             const EpochCallback& on_epoch = {});

  const TrainingStats& stats() const { return stats_; }
  const TrainingConfig& config() const { return config_; }

 private:
  TrainingConfig config_;
  const Vocabulary& vocab_;
  const NoiseDistribution& noise_;
  const BilingualDictionary* dict_;
  TrainingStats stats_;
};

EmbeddingMatrices train(const TrainingConfig& config, const Vocabulary& vocab,
                        std::span<const SentenceStream> streams, const BilingualDictionary* dict,
                        const NoiseDistribution& noise);

/// The embedding selected by config.combine (and config.output / gamma).
CombinedEmbedding make_output(const EmbeddingMatrices& m, const TrainingConfig& config);

}  // namespace clwe
