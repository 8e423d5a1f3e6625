#include <doctest.h>

#include <cmath>
#include <set>

#include "rdes/error.hpp"
#include "rdes/featurize.hpp"
#include "rdes/rng.hpp"
#include "test_util.hpp"

using namespace rdes;

namespace {

Dataset two_doc_corpus() {
  // "aa" appears in both documents, "bb"/"cc" in one each.
  return Dataset("mini", {{0, "aa bb", "x"}, {1, "aa cc", "y"}});
}

constexpr double kIdfDfOne = 1.4054651081081645;  // ln(3/2) + 1

}  // namespace

TEST_CASE("tokenize lowercases, splits on non-alnum, drops short tokens") {
  CHECK(tokenize("Hello, world! a B2") == std::vector<std::string>{"hello", "world", "b2"});
  CHECK(tokenize("...") == std::vector<std::string>{});
  CHECK(tokenize("don't stop") == std::vector<std::string>{"don", "stop"});
}

TEST_CASE("fit_tfidf computes smoothed idf") {
  const auto m = TfidfModel::fit(two_doc_corpus(), 10);
  REQUIRE(m.dim() == 3);
  CHECK(m.vocabulary() == std::vector<std::string>{"aa", "bb", "cc"});
  CHECK(m.idf()[0] == doctest::Approx(1.0).epsilon(1e-12));          // df = N = 2
  CHECK(m.idf()[1] == doctest::Approx(kIdfDfOne).epsilon(1e-12));    // df = 1
  CHECK(m.idf()[2] == doctest::Approx(kIdfDfOne).epsilon(1e-12));
}

TEST_CASE("fit_tfidf keeps the most frequent tokens, ties lexicographic") {
  const auto m = TfidfModel::fit(two_doc_corpus(), 1);
  CHECK(m.vocabulary() == std::vector<std::string>{"aa"});

  const auto m2 = TfidfModel::fit(two_doc_corpus(), 2);
  CHECK(m2.vocabulary() == std::vector<std::string>{"aa", "bb"});
}

TEST_CASE("fit_tfidf rejects token-free corpora") {
  const Dataset d("dots", {{0, "..", "x"}, {1, "!!", "y"}});
  CHECK_THROWS_AS(TfidfModel::fit(d, 4), Error);
}

TEST_CASE("transform of a single in-vocab token is a unit vector") {
  const auto m = TfidfModel::fit(two_doc_corpus(), 10);
  const auto v = m.transform("bb");
  REQUIRE(v.entries.size() == 1);
  CHECK(v.entries[0].second == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v.dim == 3);
}

TEST_CASE("transform drops OOV tokens and keeps the dimension") {
  const auto m = TfidfModel::fit(two_doc_corpus(), 10);
  const auto v = m.transform("zz qq unseen");
  CHECK(v.is_zero());
  CHECK(v.dim == 3);
}

TEST_CASE("transform matches hand-computed tf-idf weights") {
  const auto m = TfidfModel::fit(two_doc_corpus(), 10);
  const auto v = m.transform("aa aa bb");
  // tf*idf = (2*1.0, 1*idf1), then L2-normalized.
  const double w0 = 2.0;
  const double w1 = kIdfDfOne;
  const double norm = std::sqrt(w0 * w0 + w1 * w1);
  REQUIRE(v.entries.size() == 2);
  CHECK(v.entries[0].first == 0);
  CHECK(v.entries[0].second == doctest::Approx(w0 / norm).epsilon(1e-12));
  CHECK(v.entries[1].first == 1);
  CHECK(v.entries[1].second == doctest::Approx(w1 / norm).epsilon(1e-12));
}

TEST_CASE("transform norm is always 0 or 1") {
  Rng rng(42);
  std::vector<Example> ex;
  for (int i = 0; i < 12; ++i) {
    std::string text;
    const int words = 1 + rng.next_index(6);
    for (int w = 0; w < words; ++w) {
      text += "tok" + std::to_string(rng.next_index(9)) + " ";
    }
    ex.push_back({i, text, "l"});
  }
  ex.push_back({12, "anchor words", "l"});
  const auto m = TfidfModel::fit(Dataset("rand", ex), 50);
  for (const auto& e : ex) {
    const double n = m.transform(e.text).norm();
    CHECK((n == 0.0 || std::fabs(n - 1.0) < 1e-9));
  }
  CHECK(m.transform("totally unseen qqq").norm() == 0.0);
}

TEST_CASE("transform agrees with the brute-force oracle") {
  const auto docs = std::vector<std::string>{"alpha beta gamma", "beta beta delta",
                                             "gamma delta epsilon", "alpha alpha alpha beta"};
  std::vector<Example> ex;
  for (std::size_t i = 0; i < docs.size(); ++i) ex.push_back({static_cast<int>(i), docs[i], "l"});
  const auto m = TfidfModel::fit(Dataset("oracle", ex), 100);
  const auto brute = testutil::BruteTfidf::fit(docs);
  REQUIRE(m.vocabulary() == brute.vocab);  // both sorted, all tokens kept
  for (const auto& doc : docs) {
    const auto dense = m.transform(doc).to_dense();
    const auto expect = brute.transform(doc);
    REQUIRE(dense.size() == expect.size());
    for (std::size_t i = 0; i < dense.size(); ++i) {
      CHECK(dense[i] == doctest::Approx(expect[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("cosine basics") {
  const auto m = TfidfModel::fit(two_doc_corpus(), 10);
  const auto u = m.transform("aa bb");
  CHECK(cosine(u, u) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine(m.transform("bb"), m.transform("cc")) == 0.0);
  CHECK(cosine(u, m.transform("zz")) == 0.0);

  SparseVector a{{{0, 1.0 / std::sqrt(2.0)}, {1, 1.0 / std::sqrt(2.0)}}, 2};
  SparseVector b{{{0, 1.0}}, 2};
  CHECK(cosine(a, b) == doctest::Approx(0.7071067811865476).epsilon(1e-9));

  SparseVector wrong{{{0, 1.0}}, 3};
  CHECK_THROWS_AS(cosine(a, wrong), Error);
}

TEST_CASE("cosine is symmetric") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    SparseVector a{{}, 8};
    SparseVector b{{}, 8};
    for (int i = 0; i < 8; ++i) {
      if (rng.next_double() < 0.4) a.entries.emplace_back(i, rng.next_double());
      if (rng.next_double() < 0.4) b.entries.emplace_back(i, rng.next_double());
    }
    CHECK(cosine(a, b) == doctest::Approx(cosine(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("aggregate_demos averages demo vectors") {
  const auto m = TfidfModel::fit(two_doc_corpus(), 10);

  CHECK(aggregate_demos(m, {}) == std::vector<double>(3, 0.0));

  const Example solo{0, "bb", "x"};
  const auto one = aggregate_demos(m, {solo});
  CHECK(one[1] == doctest::Approx(1.0).epsilon(1e-12));

  const Example other{1, "cc", "y"};
  const auto two = aggregate_demos(m, {solo, other});
  CHECK(two[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(two[2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("encode_state initial state and diversity") {
  const auto m = TfidfModel::fit(two_doc_corpus(), 10);
  const std::vector<std::string> labels{"x", "y"};

  const auto s0 = encode_state(m, "aa", {}, std::nullopt, labels, 4);
  CHECK(s0.demo_part == std::vector<double>(3, 0.0));
  CHECK(s0.pred_part == std::vector<double>(2, 0.0));
  CHECK(s0.diversity_part == 0.0);
  CHECK(s0.dim() == 3 + 3 + 2 + 1);

  const std::vector<Example> demos{{0, "aa bb", "x"}, {1, "aa cc", "y"}};
  const auto s1 = encode_state(m, "aa", demos, std::optional<std::string>("y"), labels, 4);
  CHECK(s1.diversity_part == doctest::Approx(0.5));
  CHECK(s1.pred_part == std::vector<double>{0.0, 1.0});

  CHECK_THROWS_AS(encode_state(m, "aa", demos, std::optional<std::string>("zz"), labels, 4),
                  Error);
}

TEST_CASE("encode_state dimension identity over random inputs") {
  // 2*d_x + |labels| + 1; e.g. the BANKING77-scale numbers: 512+512+77+1.
  CHECK(512 + 512 + 77 + 1 == 1102);
  const auto m = TfidfModel::fit(two_doc_corpus(), 10);
  Rng rng(3);
  const std::vector<std::string> labels{"x", "y"};
  for (int trial = 0; trial < 50; ++trial) {
    std::string text = rng.next_double() < 0.5 ? "aa" : "bb cc aa";
    std::vector<Example> demos;
    const int n = rng.next_index(3);
    for (int i = 0; i < n; ++i) demos.push_back({i, "aa", i % 2 ? "x" : "y"});
    const auto s = encode_state(m, text, demos, std::nullopt, labels, 4);
    CHECK(s.dim() == 2 * m.dim() + static_cast<int>(labels.size()) + 1);
    CHECK(static_cast<int>(s.to_dense().size()) == s.dim());
  }
}

TEST_CASE("discretize keys") {
  const auto m = TfidfModel::fit(two_doc_corpus(), 10);
  const std::vector<std::string> labels{"x", "y"};
  const auto s = encode_state(m, "aa bb", {}, std::nullopt, labels, 4);

  SUBCASE("deterministic") {
    const auto k1 = discretize(s, 8, 16);
    for (int i = 0; i < 1000; ++i) CHECK(discretize(s, 8, 16) == k1);
  }
  SUBCASE("prediction label feeds the key") {
    const std::vector<Example> demos{{0, "aa", "x"}};
    const auto sx = encode_state(m, "aa bb", demos, std::optional<std::string>("x"), labels, 4);
    const auto sy = encode_state(m, "aa bb", demos, std::optional<std::string>("y"), labels, 4);
    CHECK(!(discretize(sx, 8, 16) == discretize(sy, 8, 16)));
  }
  SUBCASE("equal-width buckets split at the boundary") {
    StateEmbedding a;
    a.input_part = SparseVector{{{0, 0.49}}, 2};
    StateEmbedding b;
    b.input_part = SparseVector{{{0, 0.51}}, 2};
    CHECK(!(discretize(a, 2, 4) == discretize(b, 2, 4)));
  }
  SUBCASE("diversity bucket feeds the key") {
    StateEmbedding a;
    a.input_part = SparseVector{{}, 2};
    StateEmbedding b = a;
    a.diversity_part = 0.1;
    b.diversity_part = 0.9;
    CHECK(!(discretize(a, 8, 4) == discretize(b, 8, 4)));
  }
  SUBCASE("parameter validation") {
    CHECK_THROWS_AS(discretize(s, 1, 16), Error);
    CHECK_THROWS_AS(discretize(s, 8, 0), Error);
  }
}

TEST_CASE("tfidf checkpoint round trip") {
  const auto m = TfidfModel::fit(two_doc_corpus(), 10);
  const auto back = TfidfModel::from_json(m.to_json());
  CHECK(back.vocabulary() == m.vocabulary());
  CHECK(back.idf() == m.idf());
  const auto v1 = m.transform("aa aa bb");
  const auto v2 = back.transform("aa aa bb");
  CHECK(v1.entries == v2.entries);

  CHECK_THROWS_AS(TfidfModel::from_json("{\"version\": \"tfidf-v9\"}"), CheckpointError);
}
