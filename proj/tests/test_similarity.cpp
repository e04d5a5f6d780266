#include <doctest.h>

#include <algorithm>
#include <random>

#include "support.hpp"

using namespace pslvqa;

namespace {

EmbeddingStore store(const std::string& text, const std::string& name = "s") {
  return parse_embeddings(text, name);
}

}  // namespace

TEST_CASE("load embeddings") {
  auto s = store("2 3\nman 1 0 0\ndog 0 1 0\n");
  CHECK(s.size() == 2);
  CHECK(s.dimension == 3);
  CHECK(*s.find("MAN") == std::vector<double>{1, 0, 0});

  auto no_header = store("man 1 0 0\ndog 0 1 0\n");
  CHECK(no_header.size() == 2);

  CHECK_THROWS_WITH_AS(store("man 1 0 0\ndog 0 1\n"), "line 2: expected 3 values, found 2", Error);
  CHECK_THROWS_AS(store(""), Error);
  CHECK_THROWS_AS(store("\n\n"), Error);

  std::vector<std::string> warnings;
  auto dup = parse_embeddings("man 1 0\nman 0 1\ncat x 1\n", "d", &warnings);
  CHECK(*dup.find("man") == std::vector<double>{0, 1});
  CHECK(dup.malformed_lines == 1);
  CHECK(warnings.size() == 2);
}

TEST_CASE("phrase vectors are token means") {
  auto s = store("a 1 0\nb 0 1\n");
  CHECK(*phrase_vector(s, tokenize("a b")) == std::vector<double>{0.5, 0.5});
  CHECK(*phrase_vector(s, tokenize("a")) == std::vector<double>{1, 0});
  CHECK(*phrase_vector(s, tokenize("a zzz")) == std::vector<double>{1, 0});
  CHECK_FALSE(phrase_vector(s, tokenize("zzz yyy")));
}

TEST_CASE("phrase similarity") {
  SimilarityOracle o;
  o.add_store(store("a 1 0\nb 0 1\nc -1 0\n"));
  CHECK(o.similarity("a b", "a b") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(o.similarity("a", "b") == 0.0);
  CHECK(o.similarity("a", "c") == 0.0);  // negative cosine clamps
  CHECK(o.similarity("A", "a") == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two stores average their cosines") {
  // cos = 0.8 in the first store and 0.6 in the second.
  SimilarityOracle o;
  o.add_store(store("p 1 0\nq 0.8 0.6\n", "first"));
  o.add_store(store("p 1 0\nq 0.6 0.8\n", "second"));
  CHECK(o.similarity("p", "q") == doctest::Approx(0.7).epsilon(1e-12));

  SimilarityOracle partial;  // q unknown to the second store
  partial.add_store(store("p 1 0\nq 0.8 0.6\n", "first"));
  partial.add_store(store("p 1 0\nr 0 1\n", "second"));
  CHECK(partial.similarity("p", "q") == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_THROWS_AS(partial.add_store(store("p 1\n")), Error);
}

TEST_CASE("out-of-vocabulary policy") {
  SimilarityOracle o;
  o.add_store(store("a 1 0\n"));
  CHECK(o.similarity("zzz", "zzz") == 1.0);
  CHECK(o.similarity("zzz", "yyy") == 0.0);
  CHECK(o.similarity("a", "yyy") == 0.0);
  CHECK_FALSE(o.covers(o.prepare("zzz")));
  CHECK(o.covers(o.prepare("a zzz")));
}

TEST_CASE("stub table wins and is symmetric") {
  StubTable t = StubTable::parse("# comment\nbarn | horses | 0.6\nStanding  Near | near | 0.9\n");
  CHECK(t.size() == 2);
  CHECK(*t.find("horses", "barn") == 0.6);
  CHECK(*t.find("standing near", "NEAR") == 0.9);
  CHECK_FALSE(t.find("barn", "church"));
  CHECK_THROWS_AS(StubTable::parse("a | b\n"), Error);
  CHECK_THROWS_AS(StubTable::parse("a | b | 1.5\n"), Error);

  SimilarityOracle o;
  o.add_store(store("barn 1 0\nhorses 1 0\n"));
  o.set_stub(t);
  CHECK(o.similarity("barn", "horses") == 0.6);
  CHECK(o.similarity("horses", "barn") == 0.6);
  CHECK(o.covers(o.prepare("standing near")));
}

TEST_CASE("similarity properties on random phrases") {
  std::mt19937 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::string text;
  std::vector<std::string> words;
  for (int w = 0; w < 30; ++w) {
    words.push_back("w" + std::to_string(w));
    text += words.back();
    for (int d = 0; d < 8; ++d) text += " " + std::to_string(g(rng));
    text += "\n";
  }
  SimilarityOracle o;
  o.add_store(store(text, "one"));
  o.add_store(store(text, "two"));
  std::uniform_int_distribution<int> pick(0, 34), len(1, 4);  // 30..34 are out of vocabulary
  auto phrase = [&] {
    std::vector<std::string> p;
    for (int k = len(rng); k > 0; --k) p.push_back("w" + std::to_string(pick(rng)));
    return p;
  };
  auto join = [](const std::vector<std::string>& p) {
    std::string s;
    for (const auto& t : p) s += (s.empty() ? "" : " ") + t;
    return s;
  };
  for (int k = 0; k < 300; ++k) {
    auto a = phrase(), b = phrase();
    double ab = o.similarity(join(a), join(b));
    CHECK(ab == o.similarity(join(b), join(a)));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    auto shuffled = a;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(o.similarity(join(shuffled), join(b)) == ab);
  }
}
