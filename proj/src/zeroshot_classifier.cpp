#include "stmt/zeroshot_classifier.hpp"

#include <algorithm>

#include "stmt/error.hpp"

namespace stmt {

using nlohmann::json;

std::string_view to_string(Aggregation a) { return a == Aggregation::mean ? "mean" : "max"; }

Aggregation parse_aggregation(std::string_view s) {
  if (s == "mean") return Aggregation::mean;
  if (s == "max") return Aggregation::max;
  throw InvalidConfigError("aggregation must be mean or max, got '" + std::string(s) + "'");
}

json ClassificationResult::to_json(bool verbose) const {
  json j = json::object();
  j["predicted"] = predicted;
  j["n_candidates"] = n_candidates;
  json scores = json::array();
  for (const auto& c : candidates) scores.push_back({{"candidate", c}, {"score", per_candidate_scores.at(c)}});
  j["per_candidate_scores"] = scores;
  j["tie"] = tie;
  j["dropped_templates"] = dropped_templates;
  if (!warnings.empty()) j["warnings"] = warnings;
  if (verbose) {
    json ps = json::array();
    for (const auto& s : per_statement) {
      ps.push_back({{"template_id", s.template_id},
                    {"candidate", s.candidate},
                    {"statement", s.statement},
                    {"probability", s.probability},
                    {"support", s.support}});
    }
    j["per_statement"] = ps;
  }
  return j;
}

namespace {

struct Use {
  std::size_t candidate;
  bool complement;
};

struct Item {
  std::string template_id;
  std::string text;
  std::vector<Use> uses;
};

struct Plan {
  std::vector<std::string> candidates;
  std::vector<Item> items;
  std::size_t dropped = 0;
  std::vector<std::string> warnings;
};

void check_request(const ClassificationRequest& r) {
  if (!r.example || !r.schema || !r.model) throw InvalidInputError("classification request is incomplete");
  if (r.templates.empty()) throw InvalidInputError("classification request has no templates");
  for (const auto* t : r.templates) {
    const auto v = validate_template(*t, *r.schema);
    if (!v.empty()) {
      throw InvalidInputError("template '" + t->template_id + "' does not fit task '" + r.schema->task_id +
                              "': " + v.front().message());
    }
  }
}

Plan make_plan(const ClassificationRequest& r) {
  check_request(r);
  Plan plan;
  plan.candidates = enumerate_candidates(*r.schema, *r.example);
  const auto& cands = plan.candidates;
  auto index_of = [&](const std::string& c) {
    return static_cast<std::size_t>(std::find(cands.begin(), cands.end(), c) - cands.begin());
  };

  for (const auto* t : r.templates) {
    const bool negated = t->polarity == Polarity::negated;
    if (negated && !r.include_negated) continue;
    std::vector<Item> items;
    try {
      if (t->candidate_slot) {
        for (std::size_t c = 0; c < cands.size(); ++c) {
          std::optional<std::string> contrast;
          if (t->contrast_slot) {
            for (std::size_t o = 0; o < cands.size() && !contrast; ++o) {
              if (o != c) contrast = cands[o];
            }
            if (!contrast) throw RenderError("no competing candidate for the contrast slot", *t->contrast_slot);
          }
          items.push_back({t->template_id, render(*t, *r.example, cands[c], contrast).text, {{c, negated}}});
        }
      } else if (t->asserted_label) {
        const auto c = index_of(*t->asserted_label);
        if (c == cands.size()) continue;
        items.push_back({t->template_id, render(*t, *r.example, std::nullopt).text, {{c, negated}}});
      } else {
        const auto& positive = r.schema->label_space.positive_label;
        if (!positive || index_of(*positive) == cands.size()) continue;
        Item item{t->template_id, render(*t, *r.example, std::nullopt).text, {}};
        const auto pos = index_of(*positive);
        for (std::size_t c = 0; c < cands.size(); ++c) item.uses.push_back({c, (c == pos) == negated});
        items.push_back(std::move(item));
      }
    } catch (const RenderError& e) {
      ++plan.dropped;
      plan.warnings.push_back("template '" + t->template_id + "' dropped: " + e.what());
      continue;
    }
    for (auto& it : items) plan.items.push_back(std::move(it));
  }
  if (plan.items.empty()) {
    throw ClassificationError("task '" + r.schema->task_id + "': no template produced a statement (" +
                              std::to_string(plan.dropped) + " dropped)");
  }
  return plan;
}

ClassificationResult finish(const ClassificationRequest& r, Plan plan, std::span<const double> probs) {
  ClassificationResult res;
  res.candidates = std::move(plan.candidates);
  res.n_candidates = res.candidates.size();
  res.dropped_templates = plan.dropped;
  res.warnings = std::move(plan.warnings);

  const std::size_t n = res.n_candidates;
  std::vector<double> sum(n, 0.0), best(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (std::size_t i = 0; i < plan.items.size(); ++i) {
    const auto& item = plan.items[i];
    for (const auto& u : item.uses) {
      const double s = u.complement ? 1.0 - probs[i] : probs[i];
      res.per_statement.push_back({item.template_id, res.candidates[u.candidate], item.text, probs[i], s});
      sum[u.candidate] += s;
      best[u.candidate] = count[u.candidate] == 0 ? s : std::max(best[u.candidate], s);
      ++count[u.candidate];
    }
  }
  std::vector<double> agg(n);
  for (std::size_t c = 0; c < n; ++c) {
    if (count[c] == 0) {
      throw ClassificationError("task '" + r.schema->task_id + "': candidate '" + res.candidates[c] +
                                "' has no surviving template");
    }
    agg[c] = r.aggregation == Aggregation::mean ? sum[c] / static_cast<double>(count[c]) : best[c];
    res.per_candidate_scores[res.candidates[c]] = agg[c];
  }
  std::size_t arg = 0;
  for (std::size_t c = 1; c < n; ++c) {
    if (agg[c] > agg[arg]) arg = c;
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (c != arg && agg[c] == agg[arg]) res.tie = true;
  }
  res.predicted_index = arg;
  res.predicted = res.candidates[arg];
  return res;
}

std::vector<std::string> texts_of(const Plan& p) {
  std::vector<std::string> out;
  out.reserve(p.items.size());
  for (const auto& it : p.items) out.push_back(it.text);
  return out;
}

}  // namespace

std::size_t fan_out(const ClassificationRequest& request) { return make_plan(request).items.size(); }

ClassificationResult classify(const ClassificationRequest& request) {
  auto plan = make_plan(request);
  const auto probs = request.model->score(texts_of(plan));
  if (probs.size() != plan.items.size()) throw BackendError("scorer returned the wrong number of probabilities");
  return finish(request, std::move(plan), probs);
}

std::vector<ClassificationResult> classify_batch(std::span<const ClassificationRequest> requests,
                                                 std::size_t max_statement_batch) {
  std::vector<Plan> plans;
  plans.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    plans.push_back(make_plan(requests[i]));
    if (plans.back().items.size() > max_statement_batch) {
      throw InvalidConfigError("request " + std::to_string(i) + " fans out to " +
                               std::to_string(plans.back().items.size()) + " statements, above max_statement_batch " +
                               std::to_string(max_statement_batch));
    }
  }

  std::vector<ClassificationResult> out;
  out.reserve(requests.size());
  std::size_t i = 0;
  while (i < requests.size()) {
    std::size_t j = i;
    std::vector<std::string> texts;
    while (j < requests.size() && requests[j].model == requests[i].model &&
           texts.size() + plans[j].items.size() <= max_statement_batch) {
      for (auto& t : texts_of(plans[j])) texts.push_back(std::move(t));
      ++j;
    }
    const auto probs = requests[i].model->score(texts);
    if (probs.size() != texts.size()) throw BackendError("scorer returned the wrong number of probabilities");
    std::size_t at = 0;
    for (std::size_t k = i; k < j; ++k) {
      const std::size_t len = plans[k].items.size();
      out.push_back(finish(requests[k], std::move(plans[k]), std::span(probs).subspan(at, len)));
      at += len;
    }
    i = j;
  }
  return out;
}

}  // namespace stmt
