#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stmt/model_backend.hpp"
#include "stmt/template_registry.hpp"

namespace stmt {

enum class Aggregation { mean, max };

std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view s);  // throws InvalidConfigError

struct ClassificationRequest {
  const FieldMap* example = nullptr;
  const TaskSchema* schema = nullptr;
  std::vector<const StatementTemplate*> templates;
  Aggregation aggregation = Aggregation::mean;
  Scorer* model = nullptr;
  // Negated templates are skipped unless set; they then count with 1 - p.
  bool include_negated = false;
};

struct ScoredStatement {
  std::string template_id;
  std::string candidate;
  std::string statement;
  double probability = 0.0;  // model output for the statement
  double support = 0.0;      // evidence for the candidate after complementing
};

struct ClassificationResult {
  std::string predicted;
  std::size_t predicted_index = 0;
  std::vector<std::string> candidates;  // enumeration order
  std::map<std::string, double> per_candidate_scores;
  std::vector<ScoredStatement> per_statement;
  std::size_t n_candidates = 0;
  std::size_t dropped_templates = 0;
  std::vector<std::string> warnings;
  bool tie = false;

  nlohmann::json to_json(bool verbose = false) const;
};

ClassificationResult classify(const ClassificationRequest& request);

// Statements of consecutive requests that share a scorer are packed into
// scorer calls of at most max_statement_batch statements. A request is never
// split across calls.
std::vector<ClassificationResult> classify_batch(std::span<const ClassificationRequest> requests,
                                                 std::size_t max_statement_batch);

// Statements a request would score, without scoring them.
std::size_t fan_out(const ClassificationRequest& request);

}  // namespace stmt
