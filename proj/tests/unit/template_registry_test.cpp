#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "stmt/error.hpp"
#include "stmt/rng.hpp"
#include "stmt/statement_builder.hpp"
#include "stmt/template_registry.hpp"

using namespace stmt;

namespace {

const TemplateRegistry& pack() {
  static const TemplateRegistry r = load_template_pack(default_template_pack());
  return r;
}

StatementTemplate make(std::string id, std::string task, std::string pattern, std::optional<std::string> slot,
                       Polarity pol = Polarity::affirmative) {
  StatementTemplate t;
  t.template_id = std::move(id);
  t.task_id = std::move(task);
  t.pattern = std::move(pattern);
  t.candidate_slot = std::move(slot);
  t.polarity = pol;
  return t;
}

}  // namespace

TEST_CASE("default pack row counts per task") {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : pack().all()) ++counts[t.task_id];
  CHECK(counts["xlwic"] == 12);
  CHECK(counts["sib200"] == 42);
  CHECK(counts["pawsx"] == 14);
  CHECK(counts["belebele"] == 24);
  CHECK(counts["xcopa"] == 5);
  CHECK(counts["xcodah"] == 18);
  CHECK(counts["xcsqa"] == 15);
  CHECK(pack().size() == 197);
  CHECK(pack().for_task("xlwic").size() == 12);
}

TEST_CASE("every shipped template validates against its schema") {
  const auto& catalog = TaskCatalog::builtin();
  for (const auto& t : pack().all()) {
    const auto v = validate_template(t, catalog.get(t.task_id));
    INFO(t.template_id);
    CHECK(v.empty());
  }
}

TEST_CASE("word-in-context example template renders byte-exactly") {
  const auto* t = pack().find("xlwic-01");
  REQUIRE(t != nullptr);
  CHECK(t->pattern == "\"{{target_word}}\" means the same in \"{{context_1}}\" and \"{{context_2}}\"");
  CHECK(validate_template(*t, TaskCatalog::builtin().get("xlwic")).empty());
  FieldMap ex{{"target_word", "bank"}, {"context_1", "river bank"}, {"context_2", "bank loan"}};
  const auto r = render(*t, ex, std::nullopt, std::nullopt, "en");
  CHECK(r.text == "\"bank\" means the same in \"river bank\" and \"bank loan\"");
  CHECK(r.template_id == "xlwic-01");
  CHECK_FALSE(r.candidate.has_value());
}

TEST_CASE("pack parsing edge cases") {
  CHECK(parse_template_pack("").empty());
  CHECK(parse_template_pack("  \n").empty());
  CHECK(parse_template_pack("[]").empty());

  const std::string dup = R"([
  {"template_id": "a", "task_id": "pawsx", "language_tag": "en", "polarity": "affirmative", "candidate_slot": null, "pattern": "{{text1}} {{text2}}"},
  {"template_id": "a", "task_id": "pawsx", "language_tag": "en", "polarity": "negated", "candidate_slot": null, "pattern": "{{text1}} not {{text2}}"}
])";
  try {
    parse_template_pack(dup);
    FAIL("duplicate accepted");
  } catch (const MalformedPackError& e) {
    CHECK(e.line() == 3);
  }

  const std::string unknown = R"([
  {"template_id": "z", "task_id": "no_such_task", "language_tag": "en", "polarity": "affirmative", "candidate_slot": null, "pattern": "x"}
])";
  CHECK_THROWS_AS(parse_template_pack(unknown), UnknownTaskError);

  const std::string broken = "[\n  {\"template_id\": \"a\",\n   \"task_id\": }\n]";
  try {
    parse_template_pack(broken);
    FAIL("broken JSON accepted");
  } catch (const MalformedPackError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("validate_template reports violations") {
  const auto& sentiment = TaskCatalog::builtin().get("multilingual_sentiments");
  auto typo = make("t1", "multilingual_sentiments", "{{typo_field}} is good", std::nullopt);
  auto v = validate_template(typo, sentiment);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::unknown_placeholder);
  CHECK(v[0].message() == "unknown placeholder \"typo_field\"");

  auto twice = make("t2", "multilingual_sentiments", "{{text}} is {{label}} or {{label}}", "label");
  v = validate_template(twice, sentiment);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::candidate_slot_multiplicity);
}

TEST_CASE("render substitution rules") {
  auto id = make("id", "multilingual_sentiments", "{{text}}", std::nullopt);
  CHECK(render(id, {{"text", "x"}}, std::nullopt).text == "x");

  auto missing = make("m", "multilingual_sentiments", "{{text}} / {{absent}}", std::nullopt);
  try {
    render(missing, {{"text", "x"}}, std::nullopt);
    FAIL("missing field rendered");
  } catch (const RenderError& e) {
    CHECK(e.field() == "absent");
  }

  auto slot = make("s", "multilingual_sentiments", "{{text}} is {{label}}", "label");
  CHECK_THROWS_AS(render(slot, {{"text", "x"}}, std::nullopt), RenderError);
  CHECK_THROWS_AS(render(id, {{"text", "x"}}, std::string("positive")), RenderError);

  // No trimming, no escaping, UTF-8 untouched.
  const std::string odd = "  \xE4\xBD\xA0\xE5\xA5\xBD {x} \"q\"  ";
  CHECK(render(slot, {{"text", odd}}, std::string("neutral")).text == odd + " is neutral");
}

TEST_CASE("candidate enumeration") {
  const auto& catalog = TaskCatalog::builtin();
  FieldMap copa{{"premise", "p"}, {"choice1", "c1"}, {"choice2", "c2"}, {"label", "1"}};
  CHECK(enumerate_candidates(catalog.get("xcopa"), copa) == std::vector<std::string>{"c1", "c2"});
  CHECK(gold_value(catalog.get("xcopa"), copa) == "c2");

  FieldMap nli{{"text1", "a"}, {"text2", "b"}, {"label", "neutral"}};
  CHECK(enumerate_candidates(catalog.get("xstorycloze"), nli) ==
        std::vector<std::string>{"entailment", "neutral", "contradiction"});

  // Brute-force oracle: gold first, then distractors in column order, first
  // occurrence kept.
  const auto& exams = catalog.get("exams");
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    FieldMap ex{{"question", "q"}};
    const char* pool[] = {"a", "b", "c", "d"};
    ex["answer"] = pool[rng.below(4)];
    for (const char* col : {"distractor1", "distractor2", "distractor3"}) ex[col] = pool[rng.below(4)];
    std::vector<std::string> expect;
    for (const char* col : {"answer", "distractor1", "distractor2", "distractor3"}) {
      const std::string v = ex[col];
      bool seen = false;
      for (const auto& e : expect) seen = seen || e == v;
      if (!seen) expect.push_back(v);
    }
    const auto got = enumerate_candidates(exams, ex);
    CHECK(got == expect);
    CHECK(got.front() == ex["answer"]);
    CHECK(enumerate_candidates(exams, ex) == got);
  }

  FieldMap distinct{{"question", "q"}, {"answer", "g"}, {"distractor1", "x"}, {"distractor2", "y"}, {"distractor3", "z"}};
  CHECK(enumerate_candidates(exams, distinct).size() == 4);
}

TEST_CASE("round trip: placeholder values appear verbatim in rendered text") {
  Rng rng(2024);
  auto random_value = [&] {
    std::string s;
    const std::size_t n = 1 + rng.below(12);
    for (std::size_t i = 0; i < n; ++i) {
      const char alphabet[] = "abcXYZ 019.,;'\"!?{}-";
      char c = alphabet[rng.below(sizeof(alphabet) - 1)];
      if (!s.empty() && ((s.back() == '{' && c == '{') || (s.back() == '}' && c == '}'))) c = 'q';
      s.push_back(c);
    }
    return s;
  };
  for (const auto& t : pack().all()) {
    for (int rep = 0; rep < 5; ++rep) {
      FieldMap ex;
      for (const auto& name : placeholders(t.pattern)) ex[name] = random_value();
      std::optional<std::string> cand, contrast;
      if (t.candidate_slot) cand = random_value();
      if (t.contrast_slot) contrast = random_value();
      const auto r = render(t, ex, cand, contrast);
      const auto again = render(t, ex, cand, contrast);
      CHECK(r == again);
      for (const auto& name : placeholders(t.pattern)) {
        const std::string& v = (t.candidate_slot && name == *t.candidate_slot) ? *cand
                               : (t.contrast_slot && name == *t.contrast_slot) ? *contrast
                                                                              : ex[name];
        CHECK(r.text.find(v) != std::string::npos);
      }
    }
  }
}
