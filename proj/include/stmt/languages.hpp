#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stmt {

enum class ResourceLevel { high, low };

struct LanguageInfo {
  std::string_view code;  // ISO 639-1
  std::string_view name;
  std::string_view family;
  std::string_view subgrouping;
  std::string_view script;
  ResourceLevel resource;
};

// The 25 statement-tuning languages, alphabetical by ISO code.
std::span<const LanguageInfo> training_languages();

std::optional<LanguageInfo> find_language(std::string_view code);

// Named language presets used by mixture specs.
enum class LanguagePreset { english_only, langs11, langs25 };

std::optional<LanguagePreset> parse_language_preset(std::string_view name);
std::string_view to_string(LanguagePreset preset);

// Codes of a preset in their canonical order. langs11 keeps the listed order
// of the intermediate subset (zh, en, fr, vi, sw, ...), which includes Swahili
// even though Swahili is absent from the 25-language table.
std::vector<std::string> preset_languages(LanguagePreset preset);

}  // namespace stmt
