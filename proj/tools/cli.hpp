#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "clwe/corpus.hpp"
#include "clwe/dictionary.hpp"
#include "clwe/trainer.hpp"

namespace clwe::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataFormat = 2,
  kNumerical = 3,
};

/// Runs the command line `args` (without the program name). Reports go to
/// `out`, diagnostics to `err`. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Input locations for a training run.
struct TrainInputs {
  std::string corpus_e;
  std::string corpus_f;
  std::string dict;
  std::string out_prefix;
  std::string checkpoint_dir;
};

/// Corpora, dictionary and noise table ready for the trainer.
struct PreparedData {
  Vocabulary vocab;
  std::vector<SentenceStream> streams;
  std::optional<BilingualDictionary> dict;
  std::optional<NoiseDistribution> noise;
};

PreparedData prepare_training_data(const TrainingConfig& config, const TrainInputs& inputs,
                                   std::ostream& log);

/// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

nlohmann::json config_to_json(const TrainingConfig& config);
TrainingConfig config_from_json(const nlohmann::json& j);

/// Embedding rows aligned to a vocabulary.
struct EmbeddingSpace {
  Vocabulary vocab;
  Matrix vectors;
};

/// Loads an embedding file. With a vocabulary file the rows are re-indexed to
/// its ids (and per-language attestation becomes available); without one
/// every word counts as attested in both languages.
EmbeddingSpace load_space(const std::filesystem::path& vectors,
                          const std::optional<std::filesystem::path>& vocab);

}  // namespace clwe::cli
