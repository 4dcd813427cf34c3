#include "cli.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "clwe/error.hpp"
#include "clwe/eval.hpp"
#include "clwe/model.hpp"

namespace clwe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kVersion = "0.1.0";

std::string fixed(double x, int precision = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << x;
  return os.str();
}

Language parse_language(const std::string& s) {
  if (s == "e") return Language::e;
  if (s == "f") return Language::f;
  throw UsageError("language must be 'e' or 'f', got '" + s + "'");
}

// ---------------------------------------------------------------------------
// Training options

struct TrainOptionStrings {
  std::string mode;
  std::string combine;
  std::string output;
};

void add_training_options(CLI::App& app, TrainingConfig& cfg, TrainInputs& in,
                          TrainOptionStrings& s) {
  s.mode = std::string(to_string(cfg.mode));
  s.combine = std::string(to_string(cfg.combine));
  s.output = std::string(to_string(cfg.output));

  app.add_option("--corpus-e", in.corpus_e, "Language-e training text, one sentence per line");
  app.add_option("--corpus-f", in.corpus_f, "Language-f training text");
  app.add_option("--dict", in.dict, "Bilingual dictionary, source<TAB>target per line");
  app.add_option("--dim", cfg.dim, "Embedding dimension")->capture_default_str();
  app.add_option("--window", cfg.window, "Full context window size (half on each side)")
      ->capture_default_str();
  app.add_option("--negatives", cfg.negatives, "Negative samples per position")->capture_default_str();
  app.add_option("--lr", cfg.learning_rate, "Initial learning rate")->capture_default_str();
  app.add_option("--subsample", cfg.subsample, "Subsampling threshold t")->capture_default_str();
  app.add_option("--epochs", cfg.epochs, "Passes over the data")->capture_default_str();
  app.add_option("--alpha", cfg.alpha, "Weight of the centre-word term")->capture_default_str();
  app.add_option("--delta", cfg.delta, "Strength of the U/V binding penalty")->capture_default_str();
  app.add_option("--gamma", cfg.gamma, "Interpolation weight of V for --combine interpolate")
      ->capture_default_str();
  app.add_option("--mode", s.mode, "Translation selection: mono, random-selection, em-selection")
      ->capture_default_str();
  app.add_flag("--joint,!--no-joint", cfg.joint, "Predict the centre word as well as its translation")
      ->capture_default_str();
  app.add_option("--combine", s.combine, "Output embedding: U, V, interpolate, concat, regularize")
      ->capture_default_str();
  app.add_option("--output", s.output, "Matrix reported under --combine regularize: U, V, mean")
      ->capture_default_str();
  app.add_option("--noise-exponent", cfg.noise_exponent, "Exponent on counts in the noise distribution")
      ->capture_default_str();
  app.add_option("--min-count", cfg.min_count, "Drop words rarer than this")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app.add_option("--workers", cfg.workers, "Training threads")->capture_default_str();
  app.add_flag("--shuffle,!--no-shuffle", cfg.shuffle, "Shuffle sentence order every epoch")
      ->capture_default_str();
  app.add_flag("--lowercase,!--no-lowercase", cfg.lowercase, "ASCII-lowercase all input")
      ->capture_default_str();
  app.add_option("--checkpoint-dir", in.checkpoint_dir, "Write U and V after every epoch here");
}

void resolve_training_options(TrainingConfig& cfg, const TrainOptionStrings& s) {
  cfg.mode = parse_selection_mode(s.mode);
  cfg.combine = parse_combine_mode(s.combine);
  cfg.output = parse_regularized_output(s.output);
}

void require_inputs(const TrainingConfig& cfg, const TrainInputs& in) {
  if (in.corpus_e.empty()) throw UsageError("--corpus-e is required");
  if (cfg.mode != SelectionMode::mono) {
    if (in.corpus_f.empty()) throw UsageError("--corpus-f is required unless --mode mono");
    if (in.dict.empty()) throw UsageError("--dict is required unless --mode mono");
  }
}

std::vector<std::string> vocab_words(const Vocabulary& vocab) {
  std::vector<std::string> words;
  words.reserve(vocab.size());
  for (const auto& e : vocab.entries()) words.push_back(e.word);
  return words;
}

json stats_json(const DictionaryStats& s) {
  return {{"pairs_read", s.pairs_read},
          {"pairs_kept", s.pairs_kept},
          {"dropped_oov", s.dropped_oov},
          {"dropped_multiword", s.dropped_multiword},
          {"coverage_e", s.coverage_e},
          {"coverage_f", s.coverage_f},
          {"mean_translations_e", s.mean_translations_e},
          {"mean_translations_f", s.mean_translations_f}};
}

json toolchain_json() {
  json j;
#if defined(__clang__)
  j["compiler"] = "clang " __clang_version__;
#elif defined(__GNUC__)
  j["compiler"] = "gcc " __VERSION__;
#else
  j["compiler"] = "unknown";
#endif
  j["cxx_standard"] = static_cast<long>(__cplusplus);
  j["tool_version"] = kVersion;
  return j;
}

json input_json(const std::string& role, const std::string& path) {
  return {{"role", role},
          {"path", path},
          {"bytes", fs::file_size(path)},
          {"sha256", file_sha256(path)}};
}

struct TrainOutcome {
  EmbeddingMatrices matrices;
  CombinedEmbedding output;
  TrainingStats stats;
  PreparedData data;
};

TrainOutcome run_training(const TrainingConfig& cfg, const TrainInputs& in, std::ostream& log) {
  TrainOutcome r{.matrices = {}, .output = {}, .stats = {}, .data = prepare_training_data(cfg, in, log)};
  Trainer trainer(cfg, r.data.vocab, *r.data.noise, r.data.dict ? &*r.data.dict : nullptr);
  const auto words = vocab_words(r.data.vocab);
  EpochCallback on_epoch;
  if (!in.checkpoint_dir.empty()) {
    fs::create_directories(in.checkpoint_dir);
    on_epoch = [&](std::size_t epoch, const EmbeddingMatrices& m) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch-%03zu", epoch);
      const fs::path base = fs::path(in.checkpoint_dir) / name;
      save_embeddings(m.context, words, base.string() + ".V.vec");
      save_embeddings(m.word, words, base.string() + ".U.vec");
      log << "checkpoint epoch=" << epoch << " path=" << base.string() << "\n";
    };
  }
  r.matrices = trainer.train(r.data.streams, on_epoch);
  r.stats = trainer.stats();
  r.output = make_output(r.matrices, cfg);
  return r;
}

// ---------------------------------------------------------------------------
// Reports

void print_bli(std::ostream& out, const BliResult& r, const BliTestSet& test) {
  out << "BLI (" << to_string(test.source) << " -> " << to_string(test.target) << ")\n";
  out << "  evaluated  " << r.evaluated << "\n";
  out << "  excluded   " << r.excluded << "\n";
  for (const auto& [k, v] : r.recall) out << "  recall@" << std::left << std::setw(3) << k << std::right << fixed(v) << "\n";
  for (const auto& [k, v] : r.recall) {
    out << "metric=bli k=" << k << " recall=" << fixed(v, 6) << " evaluated=" << r.evaluated
        << " excluded=" << r.excluded << "\n";
  }
}

void print_ws(std::ostream& out, const SpearmanResult& r) {
  out << "Word similarity\n";
  out << "  evaluated  " << r.evaluated << "\n";
  out << "  excluded   " << r.excluded << "\n";
  out << "  spearman   " << fixed(r.rho) << "\n";
  out << "metric=ws rho=" << fixed(r.rho, 6) << " evaluated=" << r.evaluated
      << " excluded=" << r.excluded << "\n";
}

void print_cldc(std::ostream& out, const CldcResult& r) {
  out << "Crosslingual document classification\n";
  out << "  train docs      " << r.train_docs << " (skipped " << r.skipped_train << ")\n";
  out << "  test docs       " << r.test_docs << " (skipped " << r.skipped_test << ")\n";
  out << "  train accuracy  " << fixed(r.train_accuracy) << "\n";
  out << "  test accuracy   " << fixed(r.accuracy) << "\n";
  out << "metric=cldc accuracy=" << fixed(r.accuracy, 6) << " train_docs=" << r.train_docs
      << " test_docs=" << r.test_docs << " skipped_train=" << r.skipped_train
      << " skipped_test=" << r.skipped_test << " unseen_label_misses=" << r.unseen_label_misses << "\n";
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepTargets {
  std::string bli;
  std::string ws;
  std::string bli_source = "e";
  std::vector<std::size_t> ks{1, 5};
};

void add_sweep_targets(CLI::App& app, SweepTargets& t) {
  app.add_option("--bli", t.bli, "BLI test pairs");
  app.add_option("--ws", t.ws, "Word similarity test set");
  app.add_option("--bli-source", t.bli_source, "Source language of the BLI pairs")->capture_default_str();
  app.add_option("--k", t.ks, "Recall cut-offs")->capture_default_str();
}

struct SweepRow {
  double value = 0.0;
  std::optional<BliResult> bli;
  std::optional<SpearmanResult> ws;
};

SweepRow evaluate_row(double value, const Matrix& emb, const Vocabulary& vocab, const SweepTargets& t,
                      bool lowercase) {
  SweepRow row{.value = value, .bli = std::nullopt, .ws = std::nullopt};
  if (!t.bli.empty()) {
    const auto test = load_bli_test(t.bli, parse_language(t.bli_source), lowercase);
    row.bli = bli_recall(emb, vocab, test, t.ks);
  }
  if (!t.ws.empty()) row.ws = spearman(emb, vocab, load_similarity_test(t.ws, lowercase));
  return row;
}

void print_sweep(std::ostream& out, const std::string& param, const std::vector<SweepRow>& rows,
                 const SweepTargets& t) {
  out << std::left << std::setw(10) << param;
  if (!t.bli.empty()) {
    for (auto k : t.ks) out << std::setw(12) << ("recall@" + std::to_string(k));
  }
  if (!t.ws.empty()) out << std::setw(12) << "spearman";
  out << std::right << "\n";
  for (const auto& row : rows) {
    out << std::left << std::setw(10) << fixed(row.value, 4);
    if (row.bli) {
      for (const auto& [k, v] : row.bli->recall) out << std::setw(12) << fixed(v);
    }
    if (row.ws) out << std::setw(12) << fixed(row.ws->rho);
    out << std::right << "\n";
  }
  for (const auto& row : rows) {
    out << "sweep=" << param << " " << param << "=" << fixed(row.value, 6);
    if (row.bli) {
      for (const auto& [k, v] : row.bli->recall) out << " recall@" << k << "=" << fixed(v, 6);
      out << " bli_evaluated=" << row.bli->evaluated;
    }
    if (row.ws) out << " rho=" << fixed(row.ws->rho, 6) << " ws_evaluated=" << row.ws->evaluated;
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Selftest

// Parses an empty train command line and checks that every resolved default
// matches TrainingConfig{}, and that each advertised default string parses
// back to the same value.
bool selftest(std::ostream& out) {
  const TrainingConfig reference;
  bool ok = true;
  auto check = [&](const std::string& name, bool same) {
    out << (same ? "ok       " : "MISMATCH ") << name << "\n";
    ok = ok && same;
  };

  TrainingConfig parsed;
  TrainInputs in;
  TrainOptionStrings s;
  CLI::App app;
  add_training_options(app, parsed, in, s);
  app.parse(std::vector<std::string>{});
  resolve_training_options(parsed, s);

  check("dim", parsed.dim == reference.dim);
  check("window", parsed.window == reference.window);
  check("negatives", parsed.negatives == reference.negatives);
  check("lr", parsed.learning_rate == reference.learning_rate);
  check("subsample", parsed.subsample == reference.subsample);
  check("epochs", parsed.epochs == reference.epochs);
  check("alpha", parsed.alpha == reference.alpha);
  check("delta", parsed.delta == reference.delta);
  check("gamma", parsed.gamma == reference.gamma);
  check("mode", parsed.mode == reference.mode);
  check("joint", parsed.joint == reference.joint);
  check("combine", parsed.combine == reference.combine);
  check("output", parsed.output == reference.output);
  check("noise-exponent", parsed.noise_exponent == reference.noise_exponent);
  check("min-count", parsed.min_count == reference.min_count);
  check("seed", parsed.seed == reference.seed);
  check("workers", parsed.workers == reference.workers);
  check("shuffle", parsed.shuffle == reference.shuffle);
  check("lowercase", parsed.lowercase == reference.lowercase);

  // Round-trip the displayed defaults.
  std::vector<std::string> argv;
  for (const CLI::Option* opt : app.get_options()) {
    const std::string def = opt->get_default_str();
    if (def.empty() || opt->get_expected_min() == 0) continue;
    argv.push_back(opt->get_name(false, false).substr(0, opt->get_name(false, false).find(',')));
    argv.push_back(def);
  }
  std::reverse(argv.begin(), argv.end());  // CLI11 consumes from the back
  TrainingConfig reparsed;
  TrainInputs in2;
  TrainOptionStrings s2;
  CLI::App app2;
  add_training_options(app2, reparsed, in2, s2);
  app2.parse(argv);
  resolve_training_options(reparsed, s2);
  check("advertised defaults round-trip",
        config_to_json(reparsed) == config_to_json(reference));
  try {
    reference.validate();
    check("defaults validate", true);
  } catch (const UsageError&) {
    check("defaults validate", false);
  }
  out << "selftest=" << (ok ? "pass" : "fail") << "\n";
  return ok;
}

// ---------------------------------------------------------------------------
// Command line

struct Commands {
  // train
  TrainingConfig train_cfg;
  TrainInputs train_in;
  TrainOptionStrings train_s;
  std::string from_manifest;
  std::string config_file;

  // eval (shared)
  std::string vectors;
  std::string vocab;
  std::string test;
  std::string source = "e";
  std::vector<std::size_t> ks{1, 5};
  bool lowercase = true;

  // eval cldc
  std::string cldc_train;
  std::string cldc_test;
  CldcOptions cldc;

  // eval neighbors
  std::string query;
  std::size_t top = 10;
  std::string lang = "all";

  // sweep gamma
  std::vector<double> grid;
  std::string context_vectors;
  std::string word_vectors;
  SweepTargets gamma_targets;

  // sweep delta
  TrainingConfig delta_cfg;
  TrainInputs delta_in;
  TrainOptionStrings delta_s;
  SweepTargets delta_targets;
};

std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

int cmd_train(Commands& c, std::ostream& out, std::ostream& err) {
  TrainingConfig cfg = c.train_cfg;
  TrainInputs in = c.train_in;
  if (!c.from_manifest.empty()) {
    std::ifstream is(c.from_manifest);
    if (!is) throw DataError("cannot open manifest " + c.from_manifest);
    json m;
    try {
      m = json::parse(is);
    } catch (const json::exception& e) {
      throw DataError(c.from_manifest, 0, std::string("malformed manifest: ") + e.what());
    }
    cfg = config_from_json(m.at("config"));
    for (const auto& input : m.at("inputs")) {
      const std::string role = input.at("role");
      const std::string path = input.at("path");
      if (file_sha256(path) != input.at("sha256").get<std::string>()) {
        throw DataError(path + ": contents differ from the manifest digest");
      }
      if (role == "corpus_e") in.corpus_e = path;
      if (role == "corpus_f") in.corpus_f = path;
      if (role == "dict") in.dict = path;
    }
  } else {
    resolve_training_options(cfg, c.train_s);
  }
  if (in.out_prefix.empty()) throw UsageError("--out-prefix is required");
  cfg.validate();
  require_inputs(cfg, in);

  const auto started = std::chrono::steady_clock::now();
  auto r = run_training(cfg, in, err);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const auto words = vocab_words(r.data.vocab);
  const std::string p = in.out_prefix;
  if (const auto parent = fs::path(p).parent_path(); !parent.empty()) fs::create_directories(parent);
  save_embeddings(r.matrices.context, words, p + ".V.vec");
  save_embeddings(r.matrices.word, words, p + ".U.vec");
  save_embeddings(r.output.vectors, words, p + ".vec");
  r.data.vocab.save(p + ".vocab");

  json manifest;
  manifest["command"] = "train";
  manifest["config"] = config_to_json(cfg);
  manifest["effective"] = {{"alpha", cfg.effective_alpha()}, {"delta", cfg.effective_delta()}};
  manifest["seed"] = cfg.seed;
  json inputs = json::array();
  inputs.push_back(input_json("corpus_e", in.corpus_e));
  if (!in.corpus_f.empty()) inputs.push_back(input_json("corpus_f", in.corpus_f));
  if (!in.dict.empty()) inputs.push_back(input_json("dict", in.dict));
  manifest["inputs"] = inputs;
  manifest["toolchain"] = toolchain_json();
  manifest["vocabulary"] = {{"size", r.data.vocab.size()},
                            {"tokens_e", r.data.vocab.tokens_in(Language::e)},
                            {"tokens_f", r.data.vocab.tokens_in(Language::f)}};
  if (r.data.dict) manifest["dictionary"] = stats_json(r.data.dict->stats());
  manifest["stats"] = {{"tokens_seen", r.stats.tokens_seen},
                       {"positions_trained", r.stats.positions_trained},
                       {"translated_positions", r.stats.translated_positions},
                       {"train_seconds", r.stats.seconds},
                       {"wall_seconds", wall},
                       {"tokens_per_second", r.stats.tokens_per_second()},
                       {"mean_loss", r.stats.mean_loss}};
  manifest["outputs"] = {{"context", p + ".V.vec"},
                         {"word", p + ".U.vec"},
                         {"combined", p + ".vec"},
                         {"combined_provenance", to_string(r.output.provenance)},
                         {"vocab", p + ".vocab"}};
  std::ofstream(p + ".manifest.json") << manifest.dump(2) << "\n";

  out << "Training finished\n";
  out << "  vocabulary      " << r.data.vocab.size() << "\n";
  out << "  tokens seen     " << r.stats.tokens_seen << "\n";
  out << "  positions       " << r.stats.positions_trained << " (translated "
      << r.stats.translated_positions << ")\n";
  out << "  seconds         " << fixed(r.stats.seconds, 2) << "\n";
  out << "  tokens/second   " << fixed(r.stats.tokens_per_second(), 0) << "\n";
  out << "  output          " << p << ".vec (" << to_string(r.output.provenance) << ")\n";
  out << "train vocab=" << r.data.vocab.size() << " tokens=" << r.stats.tokens_seen
      << " positions=" << r.stats.positions_trained << " seconds=" << fixed(r.stats.seconds, 3)
      << " tokens_per_second=" << fixed(r.stats.tokens_per_second(), 0)
      << " mean_loss=" << fixed(r.stats.mean_loss, 6) << " prefix=" << p << "\n";
  return kOk;
}

int cmd_eval_bli(Commands& c, std::ostream& out) {
  const auto space = load_space(c.vectors, optional_path(c.vocab));
  const auto test = load_bli_test(c.test, parse_language(c.source), c.lowercase);
  print_bli(out, bli_recall(space.vectors, space.vocab, test, c.ks), test);
  return kOk;
}

int cmd_eval_ws(Commands& c, std::ostream& out) {
  const auto space = load_space(c.vectors, optional_path(c.vocab));
  print_ws(out, spearman(space.vectors, space.vocab, load_similarity_test(c.test, c.lowercase)));
  return kOk;
}

int cmd_eval_cldc(Commands& c, std::ostream& out) {
  const auto space = load_space(c.vectors, optional_path(c.vocab));
  const auto train = load_documents(c.cldc_train, c.lowercase);
  const auto test = load_documents(c.cldc_test, c.lowercase);
  print_cldc(out, cldc_run(space.vectors, space.vocab, train, test, c.cldc));
  return kOk;
}

int cmd_eval_neighbors(Commands& c, std::ostream& out) {
  const auto space = load_space(c.vectors, optional_path(c.vocab));
  std::string query = c.query;
  if (c.lowercase) ascii_lowercase(query);

  auto emit_records = [&](const std::string& lang, const std::vector<Neighbor>& ns) {
    for (std::size_t i = 0; i < ns.size(); ++i) {
      out << "neighbor query=" << query << " lang=" << lang << " rank=" << i + 1 << " word=" << ns[i].word
          << " cosine=" << fixed(ns[i].similarity, 6) << "\n";
    }
  };

  if (c.lang == "both") {
    const auto ne = nearest_neighbors(space.vectors, space.vocab, query, c.top, Language::e);
    const auto nf = nearest_neighbors(space.vectors, space.vocab, query, c.top, Language::f);
    out << std::left << std::setw(6) << "rank" << std::setw(24) << "e" << std::setw(10) << "cosine"
        << std::setw(24) << "f" << "cosine\n";
    for (std::size_t i = 0; i < std::max(ne.size(), nf.size()); ++i) {
      out << std::setw(6) << i + 1;
      if (i < ne.size()) {
        out << std::setw(24) << ne[i].word << std::setw(10) << fixed(ne[i].similarity);
      } else {
        out << std::setw(34) << "";
      }
      if (i < nf.size()) out << std::setw(24) << nf[i].word << fixed(nf[i].similarity);
      out << "\n";
    }
    out << std::right;
    emit_records("e", ne);
    emit_records("f", nf);
    return kOk;
  }

  std::optional<Language> filter;
  if (c.lang != "all") filter = parse_language(c.lang);
  const auto ns = nearest_neighbors(space.vectors, space.vocab, query, c.top, filter);
  out << std::left << std::setw(6) << "rank" << std::setw(24) << "word" << "cosine\n";
  for (std::size_t i = 0; i < ns.size(); ++i) {
    out << std::setw(6) << i + 1 << std::setw(24) << ns[i].word << fixed(ns[i].similarity) << "\n";
  }
  out << std::right;
  emit_records(c.lang, ns);
  return kOk;
}

int cmd_sweep_gamma(Commands& c, std::ostream& out) {
  if (c.grid.empty()) throw UsageError("--grid needs at least one value");
  if (c.gamma_targets.bli.empty() && c.gamma_targets.ws.empty()) {
    throw UsageError("give --bli and/or --ws to evaluate");
  }
  const auto vocab = optional_path(c.vocab);
  auto v = load_space(c.context_vectors, vocab);
  auto u = load_space(c.word_vectors, vocab);
  if (v.vocab.size() != u.vocab.size() || v.vectors.cols() != u.vectors.cols()) {
    throw DataError("context and word vectors differ in shape");
  }
  for (std::size_t i = 0; i < v.vocab.size(); ++i) {
    const auto id = static_cast<WordId>(i);
    if (v.vocab.word(id) != u.vocab.word(id)) {
      throw DataError("context and word vectors list different words at row " + std::to_string(i + 1));
    }
  }
  EmbeddingMatrices m{.context = std::move(v.vectors), .word = std::move(u.vectors)};
  std::vector<SweepRow> rows;
  for (const double g : c.grid) {
    if (!(g >= 0.0 && g <= 1.0)) throw UsageError("gamma values must lie in [0, 1]");
    const auto combined = combine_interpolate(m, g);
    rows.push_back(evaluate_row(g, combined.vectors, v.vocab, c.gamma_targets, c.lowercase));
  }
  print_sweep(out, "gamma", rows, c.gamma_targets);
  return kOk;
}

int cmd_sweep_delta(Commands& c, std::ostream& out, std::ostream& err) {
  if (c.grid.empty()) throw UsageError("--grid needs at least one value");
  if (c.delta_targets.bli.empty() && c.delta_targets.ws.empty()) {
    throw UsageError("give --bli and/or --ws to evaluate");
  }
  TrainingConfig base = c.delta_cfg;
  resolve_training_options(base, c.delta_s);
  base.combine = CombineMode::regularize;
  require_inputs(base, c.delta_in);
  std::vector<SweepRow> rows;
  for (const double d : c.grid) {
    TrainingConfig cfg = base;
    cfg.delta = d;
    cfg.validate();
    err << "sweep delta=" << fixed(d, 6) << "\n";
    auto r = run_training(cfg, c.delta_in, err);
    rows.push_back(evaluate_row(d, r.output.vectors, r.data.vocab, c.delta_targets, cfg.lowercase));
  }
  print_sweep(out, "delta", rows, c.delta_targets);
  return kOk;
}

void add_eval_common(CLI::App& app, Commands& c) {
  app.add_option("--vectors", c.vectors, "Embedding file")->required();
  app.add_option("--vocab", c.vocab, "Vocabulary file written by train (enables language filters)");
  app.add_flag("--lowercase,!--no-lowercase", c.lowercase, "ASCII-lowercase test words")
      ->capture_default_str();
}

}  // namespace

// ---------------------------------------------------------------------------

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

json config_to_json(const TrainingConfig& c) {
  return {{"dim", c.dim},
          {"window", c.window},
          {"negatives", c.negatives},
          {"lr", c.learning_rate},
          {"subsample", c.subsample},
          {"epochs", c.epochs},
          {"alpha", c.alpha},
          {"delta", c.delta},
          {"gamma", c.gamma},
          {"mode", to_string(c.mode)},
          {"joint", c.joint},
          {"combine", to_string(c.combine)},
          {"output", to_string(c.output)},
          {"noise_exponent", c.noise_exponent},
          {"min_count", c.min_count},
          {"seed", c.seed},
          {"workers", c.workers},
          {"shuffle", c.shuffle},
          {"lowercase", c.lowercase}};
}

TrainingConfig config_from_json(const json& j) {
  TrainingConfig c;
  try {
    c.dim = j.at("dim");
    c.window = j.at("window");
    c.negatives = j.at("negatives");
    c.learning_rate = j.at("lr");
    c.subsample = j.at("subsample");
    c.epochs = j.at("epochs");
    c.alpha = j.at("alpha");
    c.delta = j.at("delta");
    c.gamma = j.at("gamma");
    c.mode = parse_selection_mode(j.at("mode").get<std::string>());
    c.joint = j.at("joint");
    c.combine = parse_combine_mode(j.at("combine").get<std::string>());
    c.output = parse_regularized_output(j.at("output").get<std::string>());
    c.noise_exponent = j.at("noise_exponent");
    c.min_count = j.at("min_count");
    c.seed = j.at("seed");
    c.workers = j.at("workers");
    c.shuffle = j.at("shuffle");
    c.lowercase = j.at("lowercase");
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest config: ") + e.what());
  }
  return c;
}

PreparedData prepare_training_data(const TrainingConfig& cfg, const TrainInputs& in, std::ostream& log) {
  const auto src_e = TextSource::from_file(in.corpus_e, cfg.lowercase);
  const auto src_f = in.corpus_f.empty() ? TextSource::none() : TextSource::from_file(in.corpus_f, cfg.lowercase);
  PreparedData d;
  d.vocab = build_vocabulary(src_e, src_f, cfg.min_count);
  d.streams.push_back(encode_corpus(src_e, d.vocab, Language::e));
  if (!in.corpus_f.empty()) d.streams.push_back(encode_corpus(src_f, d.vocab, Language::f));
  if (!in.dict.empty() && cfg.mode != SelectionMode::mono) {
    d.dict = BilingualDictionary::load(in.dict, d.vocab, cfg.lowercase);
    const auto& s = d.dict->stats();
    log << "dictionary pairs_read=" << s.pairs_read << " pairs_kept=" << s.pairs_kept
        << " dropped_oov=" << s.dropped_oov << " dropped_multiword=" << s.dropped_multiword
        << " coverage_e=" << fixed(s.coverage_e, 4) << " coverage_f=" << fixed(s.coverage_f, 4)
        << " mean_translations_e=" << fixed(s.mean_translations_e, 3)
        << " mean_translations_f=" << fixed(s.mean_translations_f, 3) << "\n";
  }
  d.noise.emplace(d.vocab, cfg.noise_exponent);
  log << "vocabulary size=" << d.vocab.size() << " tokens_e=" << d.vocab.tokens_in(Language::e)
      << " tokens_f=" << d.vocab.tokens_in(Language::f) << "\n";
  return d;
}

EmbeddingSpace load_space(const fs::path& vectors, const std::optional<fs::path>& vocab_path) {
  auto loaded = load_embeddings(vectors);
  if (!vocab_path) {
    return {Vocabulary::from_words(loaded.words), std::move(loaded.vectors)};
  }
  auto vocab = Vocabulary::load(*vocab_path);
  std::unordered_map<std::string_view, std::size_t> row_of;
  for (std::size_t i = 0; i < loaded.words.size(); ++i) row_of.emplace(loaded.words[i], i);
  Matrix m(vocab.size(), loaded.vectors.cols());
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    const auto it = row_of.find(vocab.word(static_cast<WordId>(id)));
    if (it == row_of.end()) {
      throw DataError(vectors.string() + ": no vector for vocabulary word '" +
                      vocab.word(static_cast<WordId>(id)) + "'");
    }
    std::ranges::copy(loaded.vectors.row(it->second), m.row(id).begin());
  }
  return {std::move(vocab), std::move(m)};
}

// Replaces `--config FILE` with one `--key=value` argument per file entry
// that the command line does not already set.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  auto at = std::ranges::find_if(args, [](const std::string& a) { return a == "--config" || a.starts_with("--config="); });
  if (at == args.end()) return args;
  std::string path;
  std::vector<std::string> rest(args.begin(), at);
  auto next = at + 1;
  if (*at == "--config") {
    if (next == args.end()) return args;  // let the parser report it
    path = *next++;
  } else {
    path = at->substr(9);
  }
  rest.insert(rest.end(), next, args.end());
  if (!std::filesystem::exists(path)) throw UsageError("config file not found: " + path);

  auto given = [&](const std::string& name) {
    return std::ranges::any_of(rest, [&](const std::string& a) {
      return a == "--" + name || a.starts_with("--" + name + "=") || a == "--no-" + name;
    });
  };
  for (const auto& item : CLI::ConfigTOML().from_file(path)) {
    if (item.name == "++" || item.name == "--" || item.name.empty() || given(item.name)) continue;
    if (item.inputs.size() == 1) {
      rest.push_back("--" + item.name + "=" + item.inputs.front());
    } else {
      rest.push_back("--" + item.name);
      rest.insert(rest.end(), item.inputs.begin(), item.inputs.end());
    }
  }
  return rest;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Commands c;
  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  CLI::App app{"Crosslingual word embeddings: training and evaluation", "clwe"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  auto* train = app.add_subcommand("train", "Train U and V embeddings");
  train->add_option("--config", c.config_file, "TOML/INI file of option values; flags take precedence");
  add_training_options(*train, c.train_cfg, c.train_in, c.train_s);
  train->add_option("--out-prefix", c.train_in.out_prefix, "Write <prefix>.{U,V}.vec, .vec, .vocab, .manifest.json");
  train->add_option("--from-manifest", c.from_manifest, "Repeat the run recorded in a manifest");

  auto* eval = app.add_subcommand("eval", "Evaluate an embedding file");
  eval->require_subcommand(1);
  auto* bli = eval->add_subcommand("bli", "Bilingual lexicon induction recall@k");
  add_eval_common(*bli, c);
  bli->add_option("--test", c.test, "source<TAB>gold pairs")->required();
  bli->add_option("--source", c.source, "Language of the source words: e or f")->capture_default_str();
  bli->add_option("--k", c.ks, "Recall cut-offs")->capture_default_str();
  auto* ws = eval->add_subcommand("ws", "Word similarity (Spearman)");
  add_eval_common(*ws, c);
  ws->add_option("--test", c.test, "w1<TAB>w2<TAB>score lines")->required();
  auto* cldc = eval->add_subcommand("cldc", "Crosslingual document classification");
  add_eval_common(*cldc, c);
  cldc->add_option("--train", c.cldc_train, "Labelled source-language documents")->required();
  cldc->add_option("--test", c.cldc_test, "Labelled target-language documents")->required();
  cldc->add_option("--n-train", c.cldc.n_train, "Training documents used")->capture_default_str();
  cldc->add_option("--n-test", c.cldc.n_test, "Test documents used")->capture_default_str();
  cldc->add_option("--epochs", c.cldc.epochs, "Perceptron epochs")->capture_default_str();
  cldc->add_option("--seed", c.cldc.seed, "Perceptron shuffle seed")->capture_default_str();
  auto* nn = eval->add_subcommand("neighbors", "Nearest neighbours of a word");
  add_eval_common(*nn, c);
  nn->add_option("--query", c.query, "Query word")->required();
  nn->add_option("--top", c.top, "Neighbours to list")->capture_default_str();
  nn->add_option("--lang", c.lang, "Restrict to e, f, both (two columns) or all")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Evaluate across a parameter grid");
  sweep->require_subcommand(1);
  auto* sg = sweep->add_subcommand("gamma", "Interpolate trained V and U for each gamma");
  sg->add_option("--grid", c.grid, "Gamma values")->required();
  sg->add_option("--context-vectors", c.context_vectors, "V embedding file")->required();
  sg->add_option("--word-vectors", c.word_vectors, "U embedding file")->required();
  sg->add_option("--vocab", c.vocab, "Vocabulary file written by train");
  sg->add_flag("--lowercase,!--no-lowercase", c.lowercase, "ASCII-lowercase test words")->capture_default_str();
  add_sweep_targets(*sg, c.gamma_targets);
  auto* sd = sweep->add_subcommand("delta", "Retrain with --combine regularize for each delta");
  sd->add_option("--config", c.config_file, "TOML/INI file of option values; flags take precedence");
  add_training_options(*sd, c.delta_cfg, c.delta_in, c.delta_s);
  sd->add_option("--grid", c.grid, "Delta values")->required();
  add_sweep_targets(*sd, c.delta_targets);

  auto* self = app.add_subcommand("selftest", "Check CLI defaults against the library defaults");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (train->parsed()) return cmd_train(c, out, err);
    if (bli->parsed()) return cmd_eval_bli(c, out);
    if (ws->parsed()) return cmd_eval_ws(c, out);
    if (cldc->parsed()) return cmd_eval_cldc(c, out);
    if (nn->parsed()) return cmd_eval_neighbors(c, out);
    if (sg->parsed()) return cmd_sweep_gamma(c, out);
    if (sd->parsed()) return cmd_sweep_delta(c, out, err);
    if (self->parsed()) return selftest(out) ? kOk : kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataFormat;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataFormat;
  }
  return kUsage;
}

}  // namespace clwe::cli
