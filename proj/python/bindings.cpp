#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "clwe/corpus.hpp"
#include "clwe/dictionary.hpp"
#include "clwe/error.hpp"
#include "clwe/eval.hpp"
#include "clwe/model.hpp"
#include "clwe/trainer.hpp"

namespace py = pybind11;
using namespace clwe;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

Matrix from_numpy(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.values().begin());
  return m;
}

Language parse_language(const std::string& s) {
  if (s == "e") return Language::e;
  if (s == "f") return Language::f;
  throw std::invalid_argument("language must be 'e' or 'f', got '" + s + "'");
}

struct TrainResult {
  EmbeddingMatrices m;
  TrainingStats stats;
  TrainingConfig config;
};

TrainResult train_lines(const TrainingConfig& config, const Vocabulary& vocab, const std::vector<std::string>& corpus_e,
                        const std::vector<std::string>& corpus_f,
                        const std::optional<std::vector<BilingualDictionary::Pair>>& pairs) {
  std::vector<SentenceStream> streams;
  streams.push_back(encode_corpus(TextSource::from_lines(corpus_e, config.lowercase), vocab, Language::e));
  if (!corpus_f.empty()) {
    streams.push_back(encode_corpus(TextSource::from_lines(corpus_f, config.lowercase), vocab, Language::f));
  }
  std::optional<BilingualDictionary> dict;
  if (pairs) dict = BilingualDictionary::from_pairs(*pairs, vocab, config.lowercase);
  const NoiseDistribution noise(vocab, config.noise_exponent);
  TrainResult r{{}, {}, config};
  {
    py::gil_scoped_release release;
    Trainer t(config, vocab, noise, dict ? &*dict : nullptr);
    r.m = t.train(streams);
    r.stats = t.stats();
  }
  return r;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bilingual word embeddings with translation selection: training and evaluation.";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<TrainingConfig>(m, "TrainingConfig")
      .def(py::init<>())
      .def_readwrite("dim", &TrainingConfig::dim)
      .def_readwrite("window", &TrainingConfig::window)
      .def_readwrite("negatives", &TrainingConfig::negatives)
      .def_readwrite("lr", &TrainingConfig::learning_rate)
      .def_readwrite("subsample", &TrainingConfig::subsample)
      .def_readwrite("epochs", &TrainingConfig::epochs)
      .def_readwrite("alpha", &TrainingConfig::alpha)
      .def_readwrite("delta", &TrainingConfig::delta)
      .def_readwrite("gamma", &TrainingConfig::gamma)
      .def_readwrite("joint", &TrainingConfig::joint)
      .def_readwrite("noise_exponent", &TrainingConfig::noise_exponent)
      .def_readwrite("min_count", &TrainingConfig::min_count)
      .def_readwrite("seed", &TrainingConfig::seed)
      .def_readwrite("workers", &TrainingConfig::workers)
      .def_readwrite("shuffle", &TrainingConfig::shuffle)
      .def_readwrite("lowercase", &TrainingConfig::lowercase)
      .def_property(
          "mode", [](const TrainingConfig& c) { return std::string(to_string(c.mode)); },
          [](TrainingConfig& c, const std::string& s) { c.mode = parse_selection_mode(s); })
      .def_property(
          "combine", [](const TrainingConfig& c) { return std::string(to_string(c.combine)); },
          [](TrainingConfig& c, const std::string& s) { c.combine = parse_combine_mode(s); })
      .def_property(
          "output", [](const TrainingConfig& c) { return std::string(to_string(c.output)); },
          [](TrainingConfig& c, const std::string& s) { c.output = parse_regularized_output(s); })
      .def("effective_alpha", &TrainingConfig::effective_alpha)
      .def("effective_delta", &TrainingConfig::effective_delta)
      .def("validate", &TrainingConfig::validate);

  py::class_<Vocabulary>(m, "Vocabulary")
      .def_static(
          "build",
          [](const std::vector<std::string>& corpus_e, const std::vector<std::string>& corpus_f,
             std::uint64_t min_count, bool lowercase) {
            return build_vocabulary(TextSource::from_lines(corpus_e, lowercase),
                                    TextSource::from_lines(corpus_f, lowercase), min_count);
          },
          py::arg("corpus_e"), py::arg("corpus_f") = std::vector<std::string>{}, py::arg("min_count") = 5,
          py::arg("lowercase") = true)
      .def_static("from_words", [](const std::vector<std::string>& words) { return Vocabulary::from_words(words); })
      .def_static("load", &Vocabulary::load)
      .def("save", &Vocabulary::save)
      .def("__len__", &Vocabulary::size)
      .def("word", [](const Vocabulary& v, WordId id) {
        if (id < 0 || static_cast<std::size_t>(id) >= v.size()) throw py::index_error("word id out of range");
        return v.word(id);
      })
      .def("find", [](const Vocabulary& v, const std::string& w) { return v.find(w); })
      .def("__contains__", [](const Vocabulary& v, const std::string& w) { return v.find(w).has_value(); })
      .def("counts", [](const Vocabulary& v, WordId id) {
        const auto& e = v.entry(id);
        return py::make_tuple(e.count_e, e.count_f);
      })
      .def("words", [](const Vocabulary& v) {
        std::vector<std::string> out;
        for (const auto& e : v.entries()) out.push_back(e.word);
        return out;
      })
      .def_property_readonly("total_tokens", &Vocabulary::total_tokens);

  py::class_<TrainResult>(m, "TrainedModel")
      .def_property_readonly("context", [](const TrainResult& r) { return to_numpy(r.m.context); },
                             "V, one row per vocabulary id")
      .def_property_readonly("word", [](const TrainResult& r) { return to_numpy(r.m.word); },
                             "U, one row per vocabulary id")
      .def("output", [](const TrainResult& r) { return to_numpy(make_output(r.m, r.config).vectors); },
           "The embedding selected by the training config's combine setting")
      .def("interpolate", [](const TrainResult& r, double gamma) {
        return to_numpy(combine_interpolate(r.m, gamma).vectors);
      })
      .def("concat", [](const TrainResult& r) { return to_numpy(combine_concat(r.m).vectors); })
      .def_property_readonly("stats", [](const TrainResult& r) {
        py::dict d;
        d["tokens_seen"] = r.stats.tokens_seen;
        d["positions_trained"] = r.stats.positions_trained;
        d["translated_positions"] = r.stats.translated_positions;
        d["seconds"] = r.stats.seconds;
        d["mean_loss"] = r.stats.mean_loss;
        d["tokens_per_second"] = r.stats.tokens_per_second();
        return d;
      });

  m.def("train", &train_lines, py::arg("config"), py::arg("vocab"), py::arg("corpus_e"),
        py::arg("corpus_f") = std::vector<std::string>{}, py::arg("dictionary") = py::none(),
        "Train on in-memory sentences; dictionary is a list of (e_word, f_word) pairs.");

  m.def("cosine", [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("vectors differ in length");
    return cosine(a, b);
  });

  m.def(
      "bli_recall",
      [](const Array& emb, const Vocabulary& vocab, const std::vector<std::pair<std::string, std::string>>& pairs,
         const std::vector<std::size_t>& ks, const std::string& source) {
        BliTestSet test;
        test.source = parse_language(source);
        test.target = other(test.source);
        for (const auto& [s, g] : pairs) test.pairs.push_back({s, g});
        const auto r = bli_recall(from_numpy(emb), vocab, test, ks);
        py::dict d;
        d["recall"] = r.recall;
        d["evaluated"] = r.evaluated;
        d["excluded"] = r.excluded;
        return d;
      },
      py::arg("embeddings"), py::arg("vocab"), py::arg("pairs"), py::arg("ks") = std::vector<std::size_t>{1, 5},
      py::arg("source") = "e");

  m.def(
      "spearman",
      [](const Array& emb, const Vocabulary& vocab, const std::vector<std::tuple<std::string, std::string, double>>& items) {
        SimilarityTestSet test;
        for (const auto& [a, b, s] : items) test.items.push_back({a, b, s});
        const auto r = spearman(from_numpy(emb), vocab, test);
        py::dict d;
        d["rho"] = r.rho;
        d["evaluated"] = r.evaluated;
        d["excluded"] = r.excluded;
        return d;
      },
      py::arg("embeddings"), py::arg("vocab"), py::arg("items"));

  m.def("spearman_correlation", [](const std::vector<double>& a, const std::vector<double>& b) {
    return spearman_correlation(a, b);
  });

  m.def(
      "nearest_neighbors",
      [](const Array& emb, const Vocabulary& vocab, const std::string& query, std::size_t n,
         const std::optional<std::string>& lang) {
        std::optional<Language> filter;
        if (lang) filter = parse_language(*lang);
        std::vector<std::pair<std::string, double>> out;
        for (const auto& nb : nearest_neighbors(from_numpy(emb), vocab, query, n, filter)) {
          out.emplace_back(nb.word, nb.similarity);
        }
        return out;
      },
      py::arg("embeddings"), py::arg("vocab"), py::arg("query"), py::arg("n") = 10, py::arg("lang") = py::none());

  m.def(
      "cldc",
      [](const Array& emb, const Vocabulary& vocab,
         const std::vector<std::pair<std::string, std::vector<std::string>>>& train,
         const std::vector<std::pair<std::string, std::vector<std::string>>>& test, std::size_t n_train,
         std::size_t n_test, std::size_t epochs, std::uint64_t seed) {
        auto docs = [](const auto& in) {
          std::vector<Document> out;
          for (const auto& [label, tokens] : in) out.push_back({label, tokens});
          return out;
        };
        const auto r = cldc_run(from_numpy(emb), vocab, docs(train), docs(test), {n_train, n_test, epochs, seed});
        py::dict d;
        d["accuracy"] = r.accuracy;
        d["train_docs"] = r.train_docs;
        d["test_docs"] = r.test_docs;
        d["skipped_train"] = r.skipped_train;
        d["skipped_test"] = r.skipped_test;
        return d;
      },
      py::arg("embeddings"), py::arg("vocab"), py::arg("train"), py::arg("test"), py::arg("n_train") = 1000,
      py::arg("n_test") = 5000, py::arg("epochs") = 10, py::arg("seed") = 1);

  m.def("load_embeddings", [](const std::filesystem::path& path) {
    auto loaded = load_embeddings(path);
    return py::make_tuple(loaded.words, to_numpy(loaded.vectors));
  });
  m.def("save_embeddings", [](const Array& emb, const std::vector<std::string>& words,
                              const std::filesystem::path& path) { save_embeddings(from_numpy(emb), words, path); });
}
