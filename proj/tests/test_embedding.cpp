#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "textclf/data.hpp"
#include "textclf/embedding.hpp"
#include "textclf/errors.hpp"
#include "textclf/rng.hpp"

using namespace textclf;

namespace {

EmbeddingTable toy_table() {
  EmbeddingTable t(3);
  t.add("east", {1.0, 0.0, 0.0});
  t.add("north", {0.0, 1.0, 0.0});
  t.add("up", {0.0, 0.0, 1.0});
  t.add("eastish", {0.9, 0.1, 0.0});
  t.add("northish", {0.1, 0.9, 0.0});
  return t;
}

}  // namespace

TEST_CASE("embedding file with header parses") {
  testsup::TempDir tmp("emb");
  std::string path = tmp.file("v.vec");
  testsup::write_file(path, "2 3\ncat 1 0 0\ndog 0.5 0.5 0\n");
  EmbeddingTable t = load_embeddings(path);
  CHECK(t.dim() == 3);
  CHECK(t.size() == 2);
  REQUIRE(t.find("dog").has_value());
  const double* v = t.vector_of(*t.find("dog"));
  CHECK(v[0] == 0.5);
  CHECK(v[1] == 0.5);
  CHECK(v[2] == 0.0);
  CHECK(t.warnings().empty());
}

TEST_CASE("embedding file without header parses") {
  testsup::TempDir tmp("emb");
  std::string path = tmp.file("v.vec");
  testsup::write_file(path, "cat 1 0\ndog 0 1\n");
  EmbeddingTable t = load_embeddings(path);
  CHECK(t.dim() == 2);
  CHECK(t.size() == 2);
}

TEST_CASE("embedding loader errors name the file and line") {
  testsup::TempDir tmp("emb");

  std::string mism = tmp.file("m.vec");
  testsup::write_file(mism, "cat 1 0 0\ndog 1 0\n");
  CHECK_THROWS_WITH_AS(load_embeddings(mism),
                       doctest::Contains((mism + ":2").c_str()), DataError);

  std::string nonnum = tmp.file("n.vec");
  testsup::write_file(nonnum, "cat 1 0\ndog x 1\n");
  CHECK_THROWS_WITH_AS(load_embeddings(nonnum),
                       doctest::Contains((nonnum + ":2").c_str()), DataError);

  std::string bare = tmp.file("b.vec");
  testsup::write_file(bare, "cat 1 0\nlonely\n");
  CHECK_THROWS_WITH_AS(load_embeddings(bare),
                       doctest::Contains((bare + ":2").c_str()), DataError);

  std::string empty = tmp.file("e.vec");
  testsup::write_file(empty, "");
  CHECK_THROWS_AS(load_embeddings(empty), DataError);

  CHECK_THROWS_AS(load_embeddings(tmp.file("missing.vec")), DataError);
}

TEST_CASE("expected dimension is enforced") {
  testsup::TempDir tmp("emb");
  std::string path = tmp.file("v.vec");
  testsup::write_file(path, "cat 1 0 0\n");
  CHECK(load_embeddings(path, 3).dim() == 3);
  CHECK_THROWS_AS(load_embeddings(path, 5), DataError);
}

TEST_CASE("duplicate words keep the first vector and warn") {
  testsup::TempDir tmp("emb");
  std::string path = tmp.file("v.vec");
  testsup::write_file(path, "cat 1 0\ncat 0 1\ndog 0 1\n");
  EmbeddingTable t = load_embeddings(path);
  CHECK(t.size() == 2);
  CHECK(t.vector_of(*t.find("cat"))[0] == 1.0);
  REQUIRE(t.warnings().size() == 1);
  CHECK(t.warnings()[0].find("duplicate word 'cat'") != std::string::npos);
}

TEST_CASE("cosine similarity hand values") {
  double a[] = {1.0, 0.0};
  double b[] = {0.0, 1.0};
  double c[] = {1.0, 1.0};
  double z[] = {0.0, 0.0};
  CHECK(cosine_similarity(a, b, 2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine_similarity(a, a, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_similarity(a, c, 2) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  double d[] = {-1.0, 0.0};
  CHECK(cosine_similarity(a, d, 2) == doctest::Approx(-1.0).epsilon(1e-12));
  // zero-norm vectors score 0 by convention
  CHECK(cosine_similarity(a, z, 2) == 0.0);
  CHECK(cosine_similarity(z, z, 2) == 0.0);
}

TEST_CASE("cosine scan: parallel is bitwise equal to serial") {
  RngStream rng(31337, 0);
  EmbeddingTable t(16);
  for (int w = 0; w < 400; ++w) {
    std::vector<double> v(16);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    t.add("w" + std::to_string(w), std::move(v));
  }
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> q(16);
    for (double& x : q) x = rng.uniform(-1.0, 1.0);
    std::vector<double> s = cosine_scores_serial(t, q.data());
    std::vector<double> p = cosine_scores_parallel(t, q.data());
    CHECK(s == p);
  }
}

TEST_CASE("nearest neighbors: hand case, ties, exclusion, errors") {
  EmbeddingTable t = toy_table();

  std::vector<Neighbor> nn = nearest_neighbors("east", t, 2);
  REQUIRE(nn.size() == 2);
  CHECK(nn[0].word == "eastish");
  CHECK(nn[0].cosine == doctest::Approx(0.9 / std::sqrt(0.82)).epsilon(1e-12));
  CHECK(nn[1].word == "northish");
  // the query itself never appears
  for (const Neighbor& n : nn) CHECK(n.word != "east");

  // exact ties order by word ascending
  EmbeddingTable ties(2);
  ties.add("q", {1.0, 0.0});
  ties.add("bbb", {2.0, 0.0});
  ties.add("aaa", {3.0, 0.0});
  std::vector<Neighbor> tn = nearest_neighbors("q", ties, 2);
  REQUIRE(tn.size() == 2);
  CHECK(tn[0].word == "aaa");
  CHECK(tn[1].word == "bbb");
  CHECK(tn[0].cosine == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(nearest_neighbors("east", t, 0).empty());
  CHECK(nearest_neighbors("east", t, 100).size() == t.size() - 1);
  CHECK_THROWS_AS(nearest_neighbors("ghost", t, 1), DataError);
}

TEST_CASE("nearest neighbors agree with a brute-force oracle") {
  RngStream rng(777, 0);
  EmbeddingTable t(6);
  std::vector<std::string> words;
  for (int w = 0; w < 60; ++w) {
    std::vector<double> v(6);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    words.push_back("t" + std::to_string(w));
    t.add(words.back(), std::move(v));
  }
  for (int trial = 0; trial < 10; ++trial) {
    const std::string& q = words[rng.index(words.size())];
    std::size_t k = 1 + rng.index(8);
    std::vector<Neighbor> got = nearest_neighbors(q, t, k);

    // independent oracle: full sort by (cosine desc, word asc)
    const double* qv = t.vector_of(*t.find(q));
    std::vector<Neighbor> all;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.words()[i] == q) continue;
      all.push_back({t.words()[i], cosine_similarity(qv, t.vector_of(i), 6)});
    }
    std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
      if (a.cosine != b.cosine) return a.cosine > b.cosine;
      return a.word < b.word;
    });
    REQUIRE(got.size() == k);
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(got[i].word == all[i].word);
      CHECK(got[i].cosine == all[i].cosine);
    }
  }
}

namespace {

Dataset corpus_of(const std::vector<std::pair<std::string, std::string>>& rows) {
  Dataset d(LabelSchema::for_task('A'), true);
  int n = 0;
  for (const auto& [text, label] : rows)
    d.append({"r" + std::to_string(++n), text, label});
  return d;
}

}  // namespace

TEST_CASE("synonym table honors budget and threshold") {
  EmbeddingTable t = toy_table();
  // frequencies: east 3, north 2, up 1
  Dataset corpus = corpus_of({{"east north east", "OFF"},
                              {"east north up", "NOT"}});

  SynonymTable all = build_synonym_table(corpus, t, 10, 0.7);
  // east -> eastish, north -> northish; "up" has no neighbor above 0.7
  CHECK(all.size() == 2);
  REQUIRE(all.contains("east"));
  CHECK(all.entries.at("east").replacement == "eastish");
  CHECK(all.entries.at("east").cosine == doctest::Approx(0.9 / std::sqrt(0.82)).epsilon(1e-12));
  CHECK(all.contains("north"));
  CHECK_FALSE(all.contains("up"));

  // budget 1 keeps only the most frequent corpus token
  SynonymTable one = build_synonym_table(corpus, t, 1, 0.7);
  CHECK(one.size() == 1);
  CHECK(one.contains("east"));

  // a stricter threshold empties the table
  CHECK(build_synonym_table(corpus, t, 10, 0.9999).size() == 0);

  // frequency ties break by ascending word: with budget 1 over equal counts
  Dataset tie = corpus_of({{"north east", "OFF"}});
  SynonymTable tt = build_synonym_table(tie, t, 1, 0.7);
  CHECK(tt.size() == 1);
  CHECK(tt.contains("east"));

  CHECK_THROWS_AS(build_synonym_table(Dataset(LabelSchema::for_task('A'), true), t, 5, 0.7),
                  DataError);
}

TEST_CASE("synonym table file format") {
  EmbeddingTable t = toy_table();
  Dataset corpus = corpus_of({{"east north", "OFF"}});
  SynonymTable s = build_synonym_table(corpus, t, 10, 0.7);
  testsup::TempDir tmp("syn");
  std::string path = tmp.file("syn.tsv");
  write_synonym_table(s, path);
  std::string body = testsup::read_file(path);
  char expect[64];
  std::snprintf(expect, sizeof(expect), "east\teastish\t%.6f\n", 0.9 / std::sqrt(0.82));
  std::string first = body.substr(0, body.find('\n') + 1);
  CHECK(first == expect);
  CHECK(body.find("north\tnorthish\t") != std::string::npos);
}

TEST_CASE("augmentation: replace_all swaps every occurrence") {
  SynonymTable syn;
  syn.entries["east"] = {"eastish", 0.99};
  syn.entries["north"] = {"northish", 0.98};
  Dataset d = corpus_of({{"east north east", "OFF"},
                         {"up up", "NOT"},
                         {"north", "NOT"}});
  RngStream rng(1, 0);
  Dataset aug = augment_corpus(d, syn, AugmentPolicy::replace_all(), rng);
  REQUIRE(aug.size() == 2);  // the all-"up" record has no source word
  CHECK(aug.records()[0].id == "r1-aug");
  CHECK(aug.records()[0].text == "eastish northish eastish");
  CHECK(aug.records()[0].label == "OFF");
  CHECK(aug.records()[1].id == "r3-aug");
  CHECK(aug.records()[1].text == "northish");
  CHECK(aug.records()[1].label == "NOT");
}

TEST_CASE("augmentation: per_tweet_max(1) changes exactly one token") {
  SynonymTable syn;
  syn.entries["east"] = {"eastish", 0.99};
  syn.entries["north"] = {"northish", 0.98};
  Dataset d = corpus_of({{"east north east north", "OFF"}});

  RngStream rng(9, 0);
  Dataset aug = augment_corpus(d, syn, AugmentPolicy::per_tweet_max(1), rng);
  REQUIRE(aug.size() == 1);
  std::vector<std::string> orig{"east", "north", "east", "north"};
  std::istringstream is(aug.records()[0].text);
  std::vector<std::string> got;
  std::string tok;
  while (is >> tok) got.push_back(tok);
  REQUIRE(got.size() == orig.size());  // token counts preserved
  int changed = 0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (got[i] != orig[i]) {
      ++changed;
      CHECK((got[i] == "eastish" || got[i] == "northish"));
    }
  }
  CHECK(changed == 1);

  // same seed, same choice
  RngStream rng2(9, 0);
  Dataset again = augment_corpus(d, syn, AugmentPolicy::per_tweet_max(1), rng2);
  CHECK(again.records()[0].text == aug.records()[0].text);
}

TEST_CASE("augmentation output is deterministic per seed") {
  SynonymTable syn;
  syn.entries["east"] = {"eastish", 0.99};
  Dataset d = corpus_of({{"east up east", "OFF"}, {"east", "NOT"}});
  RngStream a(5, 2), b(5, 2);
  Dataset x = augment_corpus(d, syn, AugmentPolicy::replace_all(), a);
  Dataset y = augment_corpus(d, syn, AugmentPolicy::replace_all(), b);
  REQUIRE(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(x.records()[i].id == y.records()[i].id);
    CHECK(x.records()[i].text == y.records()[i].text);
  }
}
