#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <filesystem>
#include <functional>

#include "doctest.h"
#include "stmt/digest.hpp"
#include "stmt/error.hpp"
#include "stmt/eval_harness.hpp"
#include "stmt/rng.hpp"

using namespace stmt;
namespace fs = std::filesystem;
using nlohmann::json;
using big = boost::multiprecision::cpp_dec_float_50;

namespace {

class FnScorer : public Scorer {
 public:
  explicit FnScorer(std::function<double(const std::string&)> f) : f_(std::move(f)) {}
  std::vector<double> score(std::span<const std::string> s) override {
    std::vector<double> out;
    for (const auto& x : s) out.push_back(f_(x));
    return out;
  }

 private:
  std::function<double(const std::string&)> f_;
};

TaskSchema binary_schema() {
  TaskSchema s;
  s.task_id = "toy_bin";
  s.field_names = {"text", "label"};
  s.label_space.labels = {"yes", "no"};
  s.label_space.gold_field = "label";
  return s;
}

TemplateRegistry binary_registry() {
  TemplateRegistry reg;
  StatementTemplate t;
  t.template_id = "toy_bin-1";
  t.task_id = "toy_bin";
  t.pattern = "{{text}} gets {{label}}";
  t.candidate_slot = "label";
  reg.add(t);
  return reg;
}

Corpus binary_corpus(std::size_t per_language, std::vector<std::string> langs, std::uint64_t seed) {
  Rng rng(seed);
  Corpus c;
  c.dataset_id = "toy_bin";
  c.task_id = "toy_bin";
  for (const auto& l : langs) {
    for (std::size_t i = 0; i < per_language; ++i) {
      c.rows.push_back({l + std::to_string(i), l, {{"text", l + "#" + std::to_string(i)}, {"label", rng.below(2) ? "yes" : "no"}}});
    }
  }
  return c;
}

big big_geomean(const std::vector<double>& xs) {
  big acc = 0;
  for (double x : xs) acc += boost::multiprecision::log(big(x));
  return boost::multiprecision::exp(acc / xs.size());
}

RunEval fake_run(std::string model, std::uint64_t seed, std::vector<std::pair<std::string, std::vector<LanguageAccuracy>>> tasks) {
  RunEval r;
  r.model = std::move(model);
  r.seed = seed;
  for (auto& [id, langs] : tasks) {
    TaskEval t;
    t.task_id = id;
    t.languages = langs;
    t.random_baseline = 0.5;
    t.template_ids = {id + "-1"};
    r.tasks.push_back(t);
  }
  return r;
}

}  // namespace

TEST_CASE("oracle and anti-oracle stubs") {
  const auto schema = binary_schema();
  const auto reg = binary_registry();
  const auto corpus = binary_corpus(50, {"en", "fr", "sw"}, 1);
  std::map<std::string, std::string> gold;
  for (const auto& r : corpus.rows) gold[r.fields.at("text")] = r.fields.at("label");
  FnScorer oracle([&](const std::string& s) {
    const auto cut = s.find(" gets ");
    return gold.at(s.substr(0, cut)) == s.substr(cut + 6) ? 1.0 : 0.0;
  });
  EvalTaskSpec spec{"toy_bin", {}, {}, {}, "en"};
  auto res = evaluate_task(spec, corpus, schema, reg, oracle);
  REQUIRE(res.languages.size() == 3);
  for (const auto& l : res.languages) CHECK(l.accuracy() == 1.0);
  CHECK(res.random_baseline == 0.5);

  FnScorer anti([&](const std::string& s) {
    const auto cut = s.find(" gets ");
    return gold.at(s.substr(0, cut)) == s.substr(cut + 6) ? 0.0 : 1.0;
  });
  res = evaluate_task(spec, corpus, schema, reg, anti);
  for (const auto& l : res.languages) CHECK(l.accuracy() == 0.0);

  spec.languages = {"en", "zz"};
  res = evaluate_task(spec, corpus, schema, reg, oracle);
  CHECK(res.languages.size() == 1);
  CHECK(res.warnings.size() == 1);
}

TEST_CASE("a uniform random scorer lands near chance") {
  const auto schema = binary_schema();
  const auto reg = binary_registry();
  const auto corpus = binary_corpus(10000, {"en"}, 2);
  Rng rng(3);
  FnScorer coin([&](const std::string&) { return rng.uniform(); });
  const auto res = evaluate_task({"toy_bin", {}, {}, {}, "en"}, corpus, schema, reg, coin);
  CHECK(res.micro() == doctest::Approx(0.5).epsilon(0.04));
  CHECK(std::abs(res.micro() - 0.5) <= 0.02);
}

TEST_CASE("geometric mean matches a 50-digit oracle") {
  const std::vector<double> row{0.6436, 0.4576, 0.7878, 0.5426};
  const double g = geometric_mean(row);
  const big ref = big_geomean(row);
  CHECK(boost::multiprecision::abs((big(g) - ref) / ref) < big("1e-9"));
  CHECK(g == doctest::Approx(0.596).epsilon(1e-3));

  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs(1 + rng.below(8));
    for (auto& x : xs) x = 0.01 + rng.uniform();
    const big r = big_geomean(xs);
    CHECK(boost::multiprecision::abs((big(geometric_mean(xs)) - r) / r) < big("1e-9"));
    CHECK(geometric_mean(xs) <= *std::max_element(xs.begin(), xs.end()) * (1 + 1e-12));
  }
  CHECK(geometric_mean(std::vector<double>{0.7}) == doctest::Approx(0.7).epsilon(1e-15));
  bool zero = false;
  CHECK(geometric_mean(std::vector<double>{0.5, 0.0, 0.9}, &zero) == 0.0);
  CHECK(zero);
}

TEST_CASE("population std across seeds") {
  const std::vector<double> seeds{65.0, 66.0, 64.0};
  CHECK(arithmetic_mean(seeds) == 65.0);
  const double oracle = std::sqrt((0.0 * 0.0 + 1.0 * 1.0 + 1.0 * 1.0) / 3.0);
  CHECK(population_std(seeds) == oracle);
  CHECK(population_std(std::vector<double>{3.0}) == 0.0);
}

TEST_CASE("random baselines") {
  CHECK(random_baseline(binary_schema()) == 0.5);
  auto nli = binary_schema();
  nli.label_space.labels = {"entailment", "neutral", "contradiction"};
  CHECK(random_baseline(nli) == doctest::Approx(1.0 / 3.0));

  TaskSchema mixed;
  mixed.task_id = "mixed";
  mixed.field_names = {"q", "answer", "d1", "d2", "d3"};
  mixed.label_space.kind = LabelSpace::Kind::gold_plus_distractors;
  mixed.label_space.gold_field = "answer";
  mixed.label_space.columns = {"d1", "d2", "d3"};
  std::vector<FieldMap> ex;
  for (int i = 0; i < 10; ++i) {
    if (i % 2) ex.push_back({{"q", "q"}, {"answer", "a"}, {"d1", "b"}});
    else ex.push_back({{"q", "q"}, {"answer", "a"}, {"d1", "b"}, {"d2", "c"}, {"d3", "d"}});
  }
  double oracle = 0;
  for (const auto& e : ex) oracle += (e.size() == 3 ? 0.5 : 0.25) / ex.size();
  CHECK(random_baseline(mixed, ex) == doctest::Approx(oracle).epsilon(1e-15));
  CHECK(oracle == doctest::Approx(0.375).epsilon(1e-15));
}

TEST_CASE("aggregate: accuracy identity, seen/unseen partition, seeds") {
  std::vector<RunEval> runs;
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::vector<std::pair<std::string, std::vector<LanguageAccuracy>>> tasks;
    for (std::string t : {"xcopa", "xnli"}) {
      std::vector<LanguageAccuracy> langs;
      for (std::string l : {"en", "sw", "qu", "tr"}) {
        const std::size_t total = 50 + rng.below(100);
        langs.push_back({l, rng.below(total + 1), total});
      }
      tasks.push_back({t, langs});
    }
    runs.push_back(fake_run("mdeberta", seed, tasks));
  }
  runs.push_back(fake_run("xlmr", 0, {{"xcopa", {{"en", 30, 60}}}}));
  const std::set<std::string> seen{"en", "sw"};
  const auto rep = aggregate(runs, seen);
  REQUIRE(rep.models.size() == 2);
  const auto& m = rep.models[0];
  CHECK(m.runs == 3);
  for (const auto& r : runs) {
    for (const auto& t : r.tasks) {
      std::size_t correct = 0;
      for (const auto& l : t.languages) correct += static_cast<std::size_t>(std::llround(l.accuracy() * l.total));
      CHECK(correct == t.correct());
    }
  }
  for (const auto& ts : m.tasks) {
    CHECK(ts.per_language.size() == 4);
    std::vector<double> seen_v, unseen_v, std_v;
    for (const auto& [l, c] : ts.per_language) {
      (seen.count(l) ? seen_v : unseen_v).push_back(c.mean);
      std_v.push_back(c.std);
      CHECK(c.per_run.size() == 3);
    }
    CHECK(seen_v.size() + unseen_v.size() == 4);
    CHECK(*ts.seen_mean == doctest::Approx(arithmetic_mean(seen_v)));
    CHECK(*ts.unseen_mean == doctest::Approx(arithmetic_mean(unseen_v)));
    CHECK(ts.mean_language_std == doctest::Approx(arithmetic_mean(std_v)));
    CHECK(ts.macro.per_run.size() == 3);
  }
  std::vector<double> means{m.tasks[0].macro.mean, m.tasks[1].macro.mean};
  CHECK(m.geometric_mean == doctest::Approx(std::sqrt(means[0] * means[1])).epsilon(1e-12));
  CHECK(m.geometric_mean <= std::max(means[0], means[1]));
  CHECK(rep.models[1].geometric_mean == doctest::Approx(0.5));
  CHECK_THROWS_AS(aggregate({}, seen), InvalidInputError);

  const auto back = EvalReport::from_json(json::parse(rep.to_json().dump()));
  CHECK(back.to_json() == rep.to_json());
}

TEST_CASE("report files and the summary table layout") {
  const std::vector<std::pair<std::string, std::vector<double>>> rows{
      {"XLMR-large", {64.36, 45.76, 78.78, 54.26}}, {"mBERT(base)", {52.47, 34.51, 48.30, 50.68}}};
  const std::vector<std::string> tasks{"xcopa", "xnli", "xstorycloze", "xwinograd"};
  std::vector<RunEval> runs;
  for (const auto& [name, accs] : rows) {
    std::vector<std::pair<std::string, std::vector<LanguageAccuracy>>> t;
    for (std::size_t i = 0; i < tasks.size(); ++i) t.push_back({tasks[i], {{"en", static_cast<std::size_t>(std::llround(accs[i] * 100)), 10000}}});
    runs.push_back(fake_run(name, 0, t));
  }
  const auto rep = aggregate(runs, {"en"});
  const auto table = render_table(rep);
  CHECK(table.find("| Model | Parameters | xcopa | xnli | xstorycloze | xwinograd | Geometric mean |") != std::string::npos);
  CHECK(table.find("| XLMR-large | - | 64.36 | 45.76 | 78.78 | 54.26 | 59.57 |") != std::string::npos);

  const auto dir = fs::temp_directory_path() / "stmt_eval_report";
  fs::remove_all(dir);
  write_report(rep, dir);
  for (const char* f : {"report.json", "results.md", "per_language.csv", "bars_xcopa.csv"}) CHECK(fs::exists(dir / f));
  const auto svgs = plot_report(EvalReport::from_json(json::parse(read_file(dir / "report.json"))), dir / "figs");
  CHECK(svgs.size() == 4);
  CHECK(read_file(svgs[0]).rfind("<svg", 0) == 0);
  fs::remove_all(dir);
}
