#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "clwe/dictionary.hpp"
#include "clwe/error.hpp"
#include "doctest.h"

using namespace clwe;
using Pair = BilingualDictionary::Pair;

namespace {

Vocabulary bank_vocab() {
  return build_vocabulary(TextSource::from_lines({"bank river"}), TextSource::from_lines({"banca sponda fiume"}), 1);
}

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_CASE("translations of a polysemous word") {
  const auto v = bank_vocab();
  const std::vector<Pair> pairs{{"bank", "banca"}, {"bank", "sponda"}};
  const auto d = BilingualDictionary::from_pairs(pairs, v);
  const WordId bank = *v.find("bank");
  const WordId banca = *v.find("banca");
  const WordId sponda = *v.find("sponda");

  const auto t = d.translations(bank, Language::e);
  REQUIRE(t.size() == 2);
  CHECK(t[0] == std::min(banca, sponda));
  CHECK(t[1] == std::max(banca, sponda));
  CHECK(std::is_sorted(t.begin(), t.end()));

  const auto back = d.translations(banca, Language::f);
  REQUIRE(back.size() == 1);
  CHECK(back[0] == bank);

  CHECK(d.translations(*v.find("river"), Language::e).empty());
  CHECK(d.translations(*v.find("fiume"), Language::f).empty());
}

TEST_CASE("out-of-vocabulary and multiword pairs are dropped and counted") {
  const auto v = build_vocabulary(TextSource::from_lines({"bank"}), TextSource::from_lines({"sponda"}), 1);
  const std::vector<Pair> pairs{{"bank", "banca"}, {"bank", "sponda"}, {"bank", "riva del fiume"}};
  const auto d = BilingualDictionary::from_pairs(pairs, v);
  CHECK(d.stats().pairs_read == 3);
  CHECK(d.stats().dropped_oov == 1);
  CHECK(d.stats().dropped_multiword == 1);
  CHECK(d.stats().pairs_kept == 1);
}

TEST_CASE("duplicates collapse and case folds") {
  const auto v = bank_vocab();
  const std::vector<Pair> pairs{{"Bank", "BANCA"}, {"bank", "banca"}};
  const auto d = BilingualDictionary::from_pairs(pairs, v);
  CHECK(d.translations(*v.find("bank"), Language::e).size() == 1);
  CHECK(d.stats().pairs_kept == 1);
}

TEST_CASE("no usable pairs is a data error") {
  const auto v = bank_vocab();
  const std::vector<Pair> pairs{{"nothing", "here"}};
  CHECK_THROWS_AS(BilingualDictionary::from_pairs(pairs, v), DataError);
}

TEST_CASE("file loading reports the offending line") {
  const auto v = bank_vocab();
  const auto good = write_temp("clwe_dict_good.tsv", "# comment\n\nbank\tbanca\r\nbank\tsponda\n");
  const auto d = BilingualDictionary::load(good, v);
  CHECK(d.translations(*v.find("bank"), Language::e).size() == 2);

  const auto bad = write_temp("clwe_dict_bad.tsv", "bank\tbanca\nbank banca\n");
  try {
    BilingualDictionary::load(bad, v);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 2);
  }
  const auto three = write_temp("clwe_dict_three.tsv", "a\tb\tc\n");
  CHECK_THROWS_AS(BilingualDictionary::load(three, v), DataError);
  std::filesystem::remove(good);
  std::filesystem::remove(bad);
  std::filesystem::remove(three);
}

TEST_CASE("mean translations match a recount") {
  std::mt19937_64 rng(9);
  std::vector<std::string> le;
  std::vector<std::string> lf;
  for (int i = 0; i < 300; ++i) le.push_back("s" + std::to_string(i));
  for (int i = 0; i < 400; ++i) lf.push_back("t" + std::to_string(i));
  const auto v = build_vocabulary(TextSource::from_lines(le), TextSource::from_lines(lf), 1);

  std::uniform_int_distribution<int> s(0, 299);
  std::uniform_int_distribution<int> t(0, 399);
  std::vector<Pair> pairs;
  std::map<std::string, std::set<std::string>> forward;
  std::map<std::string, std::set<std::string>> backward;
  for (int i = 0; i < 1000; ++i) {
    Pair p{"s" + std::to_string(s(rng)), "t" + std::to_string(t(rng))};
    forward[p.first].insert(p.second);
    backward[p.second].insert(p.first);
    pairs.push_back(p);
  }
  const auto d = BilingualDictionary::from_pairs(pairs, v);

  double sum_e = 0;
  for (const auto& [w, ts] : forward) sum_e += static_cast<double>(ts.size());
  double sum_f = 0;
  for (const auto& [w, ts] : backward) sum_f += static_cast<double>(ts.size());
  CHECK(d.stats().mean_translations_e == doctest::Approx(sum_e / static_cast<double>(forward.size())));
  CHECK(d.stats().mean_translations_f == doctest::Approx(sum_f / static_cast<double>(backward.size())));
  CHECK(d.stats().coverage_e == doctest::Approx(static_cast<double>(forward.size()) / 300.0));
  CHECK(d.stats().coverage_f == doctest::Approx(static_cast<double>(backward.size()) / 400.0));
  CHECK(d.stats().pairs_kept == static_cast<std::size_t>(sum_e));

  for (const auto& [w, ts] : forward) {
    const auto got = d.translations(*v.find(w), Language::e);
    CHECK(got.size() == ts.size());
    for (WordId id : got) CHECK(ts.count(v.word(id)) == 1);
  }
}
