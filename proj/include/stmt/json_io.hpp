#pragma once

// nlohmann::json adapters for the toolkit's file-facing types.

#include "json.hpp"
#include "stmt/template_registry.hpp"

namespace stmt {

void to_json(nlohmann::json& j, const LabelSpace& ls);
void from_json(const nlohmann::json& j, LabelSpace& ls);

void to_json(nlohmann::json& j, const TaskSchema& s);
void from_json(const nlohmann::json& j, TaskSchema& s);

void to_json(nlohmann::json& j, const StatementTemplate& t);

// Rejects any key of `j` outside `allowed`; returns the offending keys.
std::vector<std::string> unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed);

}  // namespace stmt
