#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "stmt/error.hpp"
#include "stmt/rng.hpp"
#include "stmt/zeroshot_classifier.hpp"

using namespace stmt;

namespace {

class StubScorer : public Scorer {
 public:
  explicit StubScorer(std::function<double(const std::string&)> f) : f_(std::move(f)) {}
  std::vector<double> score(std::span<const std::string> s) override {
    ++calls;
    largest = std::max(largest, s.size());
    std::vector<double> out;
    for (const auto& x : s) out.push_back(f_(x));
    return out;
  }
  std::size_t calls = 0;
  std::size_t largest = 0;

 private:
  std::function<double(const std::string&)> f_;
};

double hashed_probability(const std::string& s) {
  return static_cast<double>(fnv1a64(s) % 1000003) / 1000003.0;
}

TaskSchema topic_schema(std::vector<std::string> labels) {
  TaskSchema s;
  s.task_id = "toy_topic";
  s.field_names = {"text", "label"};
  s.label_space.kind = LabelSpace::Kind::fixed;
  s.label_space.labels = std::move(labels);
  s.label_space.gold_field = "label";
  return s;
}

StatementTemplate slot_template(std::string id, std::string pattern, Polarity pol = Polarity::affirmative) {
  StatementTemplate t;
  t.template_id = std::move(id);
  t.task_id = "toy_topic";
  t.pattern = std::move(pattern);
  t.candidate_slot = "label";
  t.polarity = pol;
  return t;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t at = s.find(from); at != std::string::npos; at = s.find(from, at + to.size())) {
    s.replace(at, from.size(), to);
  }
  return s;
}

}  // namespace

TEST_CASE("argmax over candidates") {
  auto schema = topic_schema({"A", "B"});
  auto t = slot_template("t1", "{{text}} -> {{label}}");
  FieldMap ex{{"text", "x"}, {"label", "A"}};
  StubScorer stub([](const std::string& s) { return s.back() == 'A' ? 0.8 : 0.3; });
  ClassificationRequest r{&ex, &schema, {&t}, Aggregation::mean, &stub};
  auto res = classify(r);
  CHECK(res.predicted == "A");
  CHECK(res.n_candidates == 2);
  CHECK(res.per_candidate_scores.at("B") == 0.3);
  CHECK_FALSE(res.tie);
}

TEST_CASE("mean aggregation over two templates") {
  auto schema = topic_schema({"A", "B"});
  auto t1 = slot_template("t1", "one {{text}} {{label}}");
  auto t2 = slot_template("t2", "two {{text}} {{label}}");
  FieldMap ex{{"text", "x"}, {"label", "A"}};
  const std::map<std::string, double> table{
      {"one x A", 0.6}, {"two x A", 0.4}, {"one x B", 0.7}, {"two x B", 0.9}};
  StubScorer stub([&](const std::string& s) { return table.at(s); });
  ClassificationRequest r{&ex, &schema, {&t1, &t2}, Aggregation::mean, &stub};
  auto res = classify(r);
  CHECK(res.per_candidate_scores.at("A") == doctest::Approx(0.5));
  CHECK(res.per_candidate_scores.at("B") == doctest::Approx(0.8));
  CHECK(res.predicted == "B");
  CHECK(res.per_statement.size() == 4);
  r.aggregation = Aggregation::max;
  CHECK(classify(r).per_candidate_scores.at("A") == doctest::Approx(0.6));
}

TEST_CASE("exact ties go to the first candidate") {
  auto schema = topic_schema({"B", "A", "C"});
  auto t = slot_template("t1", "{{text}} {{label}}");
  FieldMap ex{{"text", "x"}, {"label", "A"}};
  StubScorer stub([](const std::string&) { return 0.5; });
  auto res = classify({&ex, &schema, {&t}, Aggregation::mean, &stub});
  CHECK(res.predicted == "B");
  CHECK(res.tie);
}

TEST_CASE("render failures drop templates with a warning") {
  auto schema = topic_schema({"A", "B"});
  schema.field_names.push_back("extra");
  auto good = slot_template("good", "{{text}} {{label}}");
  auto bad = slot_template("bad", "{{extra}} {{label}}");
  FieldMap ex{{"text", "x"}, {"label", "A"}};
  StubScorer stub(hashed_probability);
  auto res = classify({&ex, &schema, {&bad, &good}, Aggregation::mean, &stub});
  CHECK(res.dropped_templates == 1);
  REQUIRE(res.warnings.size() == 1);
  CHECK(res.warnings[0].find("bad") != std::string::npos);
  CHECK(res.per_statement.size() == 2);
  CHECK_THROWS_AS(classify({&ex, &schema, {&bad}, Aggregation::mean, &stub}), ClassificationError);
  CHECK_THROWS_AS(classify({&ex, &schema, {}, Aggregation::mean, &stub}), InvalidInputError);
}

TEST_CASE("negated templates are excluded unless asked, then complemented") {
  auto schema = topic_schema({"A", "B"});
  auto pos = slot_template("pos", "{{text}} is {{label}}");
  auto neg = slot_template("neg", "{{text}} is not {{label}}", Polarity::negated);
  FieldMap ex{{"text", "x"}, {"label", "A"}};
  StubScorer stub([](const std::string& s) {
    if (s == "x is A") return 0.6;
    if (s == "x is B") return 0.5;
    if (s == "x is not A") return 0.1;
    return 0.9;
  });
  ClassificationRequest r{&ex, &schema, {&pos, &neg}, Aggregation::mean, &stub};
  auto res = classify(r);
  CHECK(res.per_statement.size() == 2);
  r.include_negated = true;
  res = classify(r);
  CHECK(res.per_statement.size() == 4);
  CHECK(res.per_candidate_scores.at("A") == doctest::Approx((0.6 + 0.9) / 2));
  CHECK(res.per_candidate_scores.at("B") == doctest::Approx((0.5 + 0.1) / 2));
  CHECK_THROWS_AS(classify({&ex, &schema, {&neg}, Aggregation::mean, &stub}), ClassificationError);
}

TEST_CASE("pair templates score the positive label and its complement") {
  TaskSchema s;
  s.task_id = "toy_pair";
  s.field_names = {"a", "b", "label"};
  s.label_space.labels = {"yes", "no"};
  s.label_space.gold_field = "label";
  s.label_space.positive_label = "yes";
  StatementTemplate t;
  t.template_id = "p";
  t.task_id = "toy_pair";
  t.pattern = "{{a}} means {{b}}";
  FieldMap ex{{"a", "u"}, {"b", "v"}, {"label", "no"}};
  StubScorer stub([](const std::string&) { return 0.3; });
  auto res = classify({&ex, &s, {&t}, Aggregation::mean, &stub});
  CHECK(res.predicted == "no");
  CHECK(res.per_candidate_scores.at("yes") == doctest::Approx(0.3));
  CHECK(res.per_candidate_scores.at("no") == doctest::Approx(0.7));
}

TEST_CASE("contrast slots take the first competing candidate") {
  TaskSchema s;
  s.task_id = "toy_choice";
  s.field_names = {"q", "c0", "c1", "label"};
  s.label_space.kind = LabelSpace::Kind::choice_columns;
  s.label_space.columns = {"c0", "c1"};
  s.label_space.gold_field = "label";
  StatementTemplate t;
  t.template_id = "c";
  t.task_id = "toy_choice";
  t.pattern = "{{q}}: {{answer}} not {{other}}";
  t.candidate_slot = "answer";
  t.contrast_slot = "other";
  FieldMap ex{{"q", "q"}, {"c0", "red"}, {"c1", "blue"}, {"label", "1"}};
  StubScorer stub([](const std::string& s) { return s == "q: blue not red" ? 0.9 : 0.2; });
  auto res = classify({&ex, &s, {&t}, Aggregation::mean, &stub});
  CHECK(res.predicted == "blue");
  CHECK(res.per_statement[0].statement == "q: red not blue");
}

TEST_CASE("properties: monotone transforms, template order, fan-out") {
  Rng rng(17);
  auto schema = topic_schema({"w", "x", "y", "z"});
  std::vector<StatementTemplate> ts;
  for (int i = 0; i < 5; ++i) ts.push_back(slot_template("t" + std::to_string(i), "v" + std::to_string(i) + " {{text}} {{label}}"));
  StubScorer plain(hashed_probability);
  StubScorer squashed([](const std::string& s) { return std::pow(hashed_probability(s), 3.0) * 0.5 + 0.1; });
  for (int trial = 0; trial < 200; ++trial) {
    FieldMap ex{{"text", std::to_string(rng.next())}, {"label", "w"}};
    std::vector<const StatementTemplate*> tp;
    for (const auto& t : ts) tp.push_back(&t);
    auto a = classify({&ex, &schema, tp, Aggregation::max, &plain});
    auto b = classify({&ex, &schema, tp, Aggregation::max, &squashed});
    CHECK(a.predicted == b.predicted);
    CHECK(a.per_statement.size() == a.n_candidates * tp.size());

    auto m1 = classify({&ex, &schema, tp, Aggregation::mean, &plain});
    rng.shuffle(tp);
    auto m2 = classify({&ex, &schema, tp, Aggregation::mean, &plain});
    for (const auto& [c, v] : m1.per_candidate_scores) CHECK(m2.per_candidate_scores.at(c) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("batched classification equals sequential and a brute-force oracle") {
  Rng rng(99);
  const std::vector<std::string> pool{"alpha", "beta", "gamma", "delta", "eps", "zeta"};
  std::vector<TaskSchema> schemas;
  for (std::size_t n = 2; n <= 5; ++n) schemas.push_back(topic_schema(std::vector<std::string>(pool.begin(), pool.begin() + n)));
  std::vector<StatementTemplate> ts;
  for (int i = 0; i < 4; ++i) ts.push_back(slot_template("t" + std::to_string(i), "[" + std::to_string(i) + "] {{text}} => {{label}}"));

  const std::size_t N = 1000;
  std::vector<FieldMap> examples(N);
  std::vector<ClassificationRequest> reqs;
  StubScorer stub(hashed_probability);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& sc = schemas[rng.below(schemas.size())];
    examples[i] = {{"text", "doc" + std::to_string(rng.next() % 100000)}, {"label", sc.label_space.labels[0]}};
    std::vector<const StatementTemplate*> tp;
    for (const auto& t : ts) {
      if (tp.empty() || rng.below(2)) tp.push_back(&t);
    }
    reqs.push_back({&examples[i], &sc, tp, rng.below(2) ? Aggregation::mean : Aggregation::max, &stub});
  }

  const auto batched = classify_batch(reqs, 64);
  REQUIRE(batched.size() == N);
  CHECK(stub.largest <= 64);
  std::size_t agree_seq = 0, agree_oracle = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const auto seq = classify(reqs[i]);
    agree_seq += seq.predicted == batched[i].predicted;
    for (const auto& [c, v] : seq.per_candidate_scores) CHECK(std::abs(batched[i].per_candidate_scores.at(c) - v) <= 1e-4);

    // Oracle: score every label independently by plain substitution.
    std::string best;
    double best_score = -1;
    for (const auto& label : reqs[i].schema->label_space.labels) {
      double acc = 0, mx = 0;
      for (const auto* t : reqs[i].templates) {
        const auto text = replace_all(replace_all(t->pattern, "{{text}}", examples[i].at("text")), "{{label}}", label);
        const double p = hashed_probability(text);
        acc += p;
        mx = std::max(mx, p);
      }
      const double s = reqs[i].aggregation == Aggregation::mean ? acc / reqs[i].templates.size() : mx;
      if (s > best_score) {
        best_score = s;
        best = label;
      }
    }
    agree_oracle += best == batched[i].predicted;
  }
  CHECK(agree_seq == N);
  CHECK(agree_oracle == N);

  const auto one = classify_batch(std::span(reqs).subspan(0, 1), 64);
  CHECK(one[0].per_candidate_scores == classify(reqs[0]).per_candidate_scores);
  CHECK_THROWS_AS(classify_batch(reqs, 3), InvalidConfigError);
}

TEST_CASE("aggregation names") {
  CHECK(parse_aggregation("max") == Aggregation::max);
  CHECK(to_string(Aggregation::mean) == "mean");
  CHECK_THROWS_AS(parse_aggregation("median"), InvalidConfigError);
}
