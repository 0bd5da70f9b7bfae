#include <algorithm>
#include <set>

#include "azlab/random.hpp"
#include "azlab/synthetic.hpp"
#include "azlab/text.hpp"
#include "doctest.h"

using namespace azlab;
using nlohmann::json;

namespace {

json one_paragraph(json qas, std::string context = "Denver won the game.") {
  return {{"version", "1.1"},
          {"data", json::array({{{"title", "t"}, {"paragraphs", json::array({{{"context", context}, {"qas", qas}}})}}})}};
}

SquadExample make_example(std::string question, std::string context, std::string answer = "",
                          std::size_t answer_byte = 0) {
  SquadExample ex;
  ex.qas_id = "q";
  ex.question = std::move(question);
  ex.context = std::move(context);
  if (!answer.empty()) {
    ex.answers.push_back({answer, answer_byte, answer_byte, ex.context.compare(answer_byte, answer.size(), answer) == 0});
  }
  return ex;
}

Vocab vocab_of(std::initializer_list<std::string> words) {
  std::vector<std::string> tokens{"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  tokens.insert(tokens.end(), words.begin(), words.end());
  return Vocab::from_tokens(tokens);
}

}  // namespace

TEST_CASE("load_squad: minimal document") {
  const auto ex = load_squad(one_paragraph(
      json::array({{{"id", "abc"}, {"question", "Who won?"}, {"answers", json::array({{{"text", "Denver"}, {"answer_start", 0}}})}}})));
  REQUIRE(ex.size() == 1);
  CHECK(ex[0].qas_id == "abc");
  CHECK(ex[0].question == "Who won?");
  CHECK(ex[0].trainable());
}

TEST_CASE("load_squad: all gold answers are kept") {
  const auto ex = load_squad(one_paragraph(json::array({{{"id", "x"},
                                                         {"question", "q"},
                                                         {"answers", json::array({{{"text", "Denver"}, {"answer_start", 0}},
                                                                                  {{"text", "the game"}, {"answer_start", 11}},
                                                                                  {{"text", "won"}, {"answer_start", 7}}})}}})));
  REQUIRE(ex.size() == 1);
  CHECK(ex[0].answers.size() == 3);
  CHECK(ex[0].answers[1].text == "the game");
  for (const auto& a : ex[0].answers) CHECK(a.consistent);
}

TEST_CASE("load_squad: inconsistent answer_start loads but is not trainable") {
  const auto ex = load_squad(one_paragraph(
      json::array({{{"id", "x"}, {"question", "q"}, {"answers", json::array({{{"text", "Denver"}, {"answer_start", 3}}})}}})));
  REQUIRE(ex.size() == 1);
  CHECK_FALSE(ex[0].answers[0].consistent);
  CHECK_FALSE(ex[0].trainable());
}

TEST_CASE("load_squad: answer_start counts code points, not bytes") {
  const auto ex = load_squad(one_paragraph(
      json::array({{{"id", "x"}, {"question", "q"}, {"answers", json::array({{{"text", "won"}, {"answer_start", 7}}})}}}),
      "Dénvér won"));
  REQUIRE(ex.size() == 1);
  CHECK(ex[0].answers[0].byte_start == 9);
  CHECK(ex[0].trainable());
}

TEST_CASE("load_squad: errors name the offending node") {
  auto message = [](const json& doc) {
    try {
      load_squad(doc);
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message(json{{"version", "1.1"}}).find("'data'") != std::string::npos);
  const std::string m = message(one_paragraph(json::array({{{"id", "x"}, {"answers", json::array()}}})));
  CHECK(m.find("$.data[0].paragraphs[0].qas[0]") != std::string::npos);
  CHECK(m.find("question") != std::string::npos);
}

TEST_CASE("build_vocab examples") {
  SUBCASE("frequency order") {
    const std::vector<std::string> corpus{"a b b"};
    const Vocab v = build_vocab(corpus, 10);
    REQUIRE(v.contains("a"));
    REQUIRE(v.contains("b"));
    CHECK(v.id("b") < v.id("a"));
    CHECK(v.token(0) == "[PAD]");
  }
  SUBCASE("size cap includes reserved tokens") {
    const std::vector<std::string> corpus{"t0 t1 t2 t3 t4 t5 t6 t7 t8 t9"};
    CHECK(build_vocab(corpus, 5).size() == 5);
  }
  SUBCASE("ties at the cutoff are broken lexicographically") {
    const std::vector<std::string> corpus{"y x"};
    const Vocab v = build_vocab(corpus, 5);
    CHECK(v.contains("x"));
    CHECK_FALSE(v.contains("y"));
  }
  SUBCASE("empty corpus yields only reserved tokens") {
    CHECK(build_vocab(std::vector<std::string>{}, 10).size() == Vocab::kNumReserved);
  }
  SUBCASE("max_size must leave room beyond reserved tokens") {
    CHECK_THROWS_AS(build_vocab(std::vector<std::string>{"a"}, 4), std::invalid_argument);
  }
}

TEST_CASE("tokenize examples") {
  const Vocab v = vocab_of({"the", "cat", "."});
  const auto toks = tokenize("The cat.", v);
  REQUIRE(toks.size() == 3);
  CHECK(toks[0].id == v.id("the"));
  CHECK(toks[1].id == v.id("cat"));
  CHECK(toks[2].id == v.id("."));
  CHECK(toks[0].span == CharSpan{0, 3});
  CHECK(toks[1].span == CharSpan{4, 7});
  CHECK(toks[2].span == CharSpan{7, 8});
  CHECK(tokenize("", v).empty());
  const auto unk = tokenize("zzz", v);
  REQUIRE(unk.size() == 1);
  CHECK(unk[0].id == Vocab::kUnk);
  CHECK(unk[0].span == CharSpan{0, 3});
}

TEST_CASE("tokenize spans are ordered and cover every non-whitespace byte once") {
  Rng rng(17);
  const std::string alphabet = "ab ,.\t\nZé!";
  const Vocab v = vocab_of({"ab"});
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const std::size_t n = rng.below(30);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = rng.below(alphabet.size() - 1);
      // keep the two-byte é intact
      if (alphabet[k] == '\xc3' || alphabet[k] == '\xa9') {
        text += "é";
      } else {
        text += alphabet[k];
      }
    }
    std::vector<int> covered(text.size(), 0);
    std::size_t prev_end = 0;
    for (const auto& t : tokenize(text, v)) {
      CHECK(t.span.begin >= prev_end);
      CHECK(t.span.begin < t.span.end);
      prev_end = t.span.end;
      for (std::size_t b = t.span.begin; b < t.span.end; ++b) ++covered[b];
    }
    for (std::size_t b = 0; b < text.size(); ++b) {
      const bool ws = text[b] == ' ' || text[b] == '\t' || text[b] == '\n';
      CHECK(covered[b] == (ws ? 0 : 1));
    }
  }
}

TEST_CASE("featurize examples") {
  const Vocab v = vocab_of({"q", "p"});
  SUBCASE("short passage fits one padded window") {
    const auto fs = featurize(make_example("q", "p p p p"), v, {.max_seq_length = 10, .doc_stride = 2, .max_query_length = 1});
    REQUIRE(fs.size() == 1);
    CHECK(fs[0].layout.passage.size() == 4);
    CHECK_FALSE(fs[0].layout.pad.empty());
  }
  SUBCASE("sliding windows advance by the stride") {
    // 1 question token + 3 specials + 4 passage slots = 8
    const auto fs =
        featurize(make_example("q", "p p p p p p p p p p"), v, {.max_seq_length = 8, .doc_stride = 2, .max_query_length = 1});
    REQUIRE(fs.size() == 4);
    std::vector<std::size_t> starts;
    for (const auto& f : fs) starts.push_back(f.passage_spans.front().begin / 2);
    CHECK(starts == std::vector<std::size_t>{0, 2, 4, 6});
  }
  SUBCASE("stride larger than capacity still terminates and covers the passage") {
    const auto fs =
        featurize(make_example("q", "p p p p p p p p p p"), v, {.max_seq_length = 8, .doc_stride = 50, .max_query_length = 1});
    REQUIRE(fs.size() == 3);
    CHECK(fs.back().passage_spans.back().end == 19);
  }
  SUBCASE("empty passage is rejected") {
    CHECK_THROWS_AS(featurize(make_example("q", "   "), v, {}), std::invalid_argument);
  }
  SUBCASE("long questions are truncated and flagged") {
    const auto fs = featurize(make_example("q q q q q q", "p"), v, {.max_seq_length = 16, .doc_stride = 4, .max_query_length = 3});
    REQUIRE(fs.size() == 1);
    CHECK(fs[0].layout.question.size() == 3);
    CHECK(fs[0].question_truncated);
  }
}

TEST_CASE("featurize invariants on random examples") {
  Rng rng(23);
  const std::vector<std::string> words{"alpha", "beta", "gamma", ",", "delta", "."};
  std::vector<std::string> corpus;
  for (int trial = 0; trial < 100; ++trial) {
    std::string context, question;
    const std::size_t n = 1 + rng.below(40);
    for (std::size_t i = 0; i < n; ++i) context += words[rng.below(words.size())] + (rng.below(3) ? " " : "  ");
    for (std::size_t i = 0, q = 1 + rng.below(8); i < q; ++i) question += words[rng.below(words.size())] + " ";
    corpus = {context, question};
    const Vocab v = build_vocab(corpus, 8);
    const FeaturizeConfig cfg{.max_seq_length = 8 + rng.below(16), .doc_stride = 1 + rng.below(6), .max_query_length = 1 + rng.below(4)};
    const SquadExample ex = make_example(question, context);
    const auto fs = featurize(ex, v, cfg);
    CHECK(fs == featurize(ex, v, cfg));
    const std::size_t passage_tokens = tokenize(context, v).size();
    std::set<std::size_t> seen;
    for (const auto& f : fs) {
      CHECK(f.input_ids.size() == cfg.max_seq_length);
      CHECK(f.segment_ids.size() == cfg.max_seq_length);
      CHECK(f.layout.valid());
      CHECK(f.layout.length() == cfg.max_seq_length);
      for (std::size_t i = f.layout.passage.begin; i < f.layout.passage.end; ++i) {
        const CharSpan s = *f.token_span(i);
        const std::string piece = context.substr(s.begin, s.end - s.begin);
        CHECK(piece.find(' ') == std::string::npos);
        CHECK_FALSE(piece.empty());
        seen.insert(s.begin);
      }
    }
    CHECK(seen.size() == passage_tokens);
  }
}

namespace {

// Minimal token interval of the window whose spans cover every non-whitespace
// byte of the trimmed answer, by enumerating all intervals.
std::optional<std::pair<std::size_t, std::size_t>> brute_force_cover(const Feature& f, const std::string& context,
                                                                     std::size_t begin, std::size_t end) {
  std::vector<std::size_t> needed;
  for (std::size_t b = begin; b < end; ++b)
    if (context[b] != ' ') needed.push_back(b);
  if (needed.empty()) return std::nullopt;
  std::optional<std::pair<std::size_t, std::size_t>> best;
  const std::size_t n = f.passage_spans.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const bool covers = std::all_of(needed.begin(), needed.end(), [&](std::size_t b) {
        for (std::size_t t = i; t <= j; ++t)
          if (f.passage_spans[t].begin <= b && b < f.passage_spans[t].end) return true;
        return false;
      });
      if (covers && (!best || j - i < best->second - best->first)) best = {i, j};
    }
  }
  if (best) {
    best->first += f.layout.passage.begin;
    best->second += f.layout.passage.begin;
  }
  return best;
}

}  // namespace

TEST_CASE("map_answer_span examples") {
  const Vocab v = vocab_of({"a", "b", "c", "d", "e", "f", "g"});
  const SquadExample ex = make_example("a", "a b c d e f g");
  const auto fs = featurize(ex, v, {.max_seq_length = 10, .doc_stride = 2, .max_query_length = 1});
  REQUIRE(fs.size() == 2);
  const Feature& f = fs[0];  // passage tokens a..f
  CHECK(map_answer_span(f, 0, "a") == std::make_pair(f.layout.passage.begin, f.layout.passage.begin));
  CHECK(map_answer_span(f, 6, "d e f") == std::make_pair(f.layout.passage.begin + 3, f.layout.passage.begin + 5));
  CHECK_FALSE(map_answer_span(f, 12, "g").has_value());
  CHECK_FALSE(map_answer_span(f, 10, "f g").has_value());
  CHECK(map_answer_span(fs[1], 12, "g").has_value());
}

TEST_CASE("map_answer_span matches a brute-force minimal cover") {
  Rng rng(31);
  const std::vector<std::string> words{"ab", "c", "dde", ",", "f."};
  for (int trial = 0; trial < 300; ++trial) {
    std::string context;
    const std::size_t n = 1 + rng.below(15);
    for (std::size_t i = 0; i < n; ++i) context += words[rng.below(words.size())] + std::string(1 + rng.below(2), ' ');
    const std::vector<std::string> corpus{context};
    const Vocab v = build_vocab(corpus, 10);
    const auto fs = featurize(make_example("ab", context), v, {.max_seq_length = 5 + rng.below(6), .doc_stride = 1 + rng.below(3), .max_query_length = 1});
    const std::size_t begin = rng.below(context.size());
    const std::size_t end = begin + 1 + rng.below(context.size() - begin);
    const std::string answer = context.substr(begin, end - begin);
    for (const auto& f : fs) {
      std::size_t b = begin, e = end;
      while (b < e && context[b] == ' ') ++b;
      while (e > b && context[e - 1] == ' ') --e;
      INFO("context='" << context << "' answer='" << answer << "'");
      CHECK(map_answer_span(f, begin, answer) == brute_force_cover(f, context, b, e));
    }
  }
}

TEST_CASE("key-value corpus answers point at the value bound to the asked key") {
  for (bool bound : {false, true}) {
    const auto examples = load_squad(generate_keyvalue_squad(
        {.num_passages = 50, .questions_per_passage = 2, .num_keys = 8, .num_values = 5, .min_pairs = 2, .max_pairs = 5, .bind_values = bound, .seed = 3}));
    REQUIRE(examples.size() == 100);
    for (const auto& ex : examples) {
      REQUIRE(ex.trainable());
      const std::string key = ex.question.substr(8, ex.question.size() - 10);  // "what is kN ?"
      const auto& a = ex.answers.front();
      CHECK(ex.context.substr(a.byte_start - key.size() - 4, key.size() + 4) == key + " is ");
      CHECK(std::count(ex.context.begin(), ex.context.end(), '.') >= 2);
      if (bound) CHECK(a.text == "v" + key.substr(1));
    }
  }
  CHECK(generate_keyvalue_squad({.seed = 4}) == generate_keyvalue_squad({.seed = 4}));
  CHECK_THROWS(generate_keyvalue_squad({.num_keys = 3, .min_pairs = 2, .max_pairs = 4}));
}
