#include "stmt/languages.hpp"

#include <algorithm>
#include <array>

namespace stmt {
namespace {

using enum ResourceLevel;

constexpr std::array<LanguageInfo, 25> kLanguages{{
    {"af", "Afrikaans", "Indo-European", "Germanic", "Latin", high},
    {"ar", "Arabic", "Afro-Asiatic", "Semitic", "Arabic", high},
    {"de", "German", "Indo-European", "Germanic", "Latin", high},
    {"en", "English", "Indo-European", "Germanic", "Latin", high},
    {"es", "Spanish", "Indo-European", "Italic", "Latin", high},
    {"fr", "French", "Indo-European", "Italic", "Latin", high},
    {"ga", "Irish", "Indo-European", "Celtic", "Latin", low},
    {"gu", "Gujarati", "Indo-European", "Indo-Aryan", "Gujarati", low},
    {"ha", "Hausa", "Afro-Asiatic", "Chadic", "Latin", low},
    {"hi", "Hindi", "Indo-European", "Indo-Aryan", "Devanagari", high},
    {"id", "Indonesian", "Austronesian", "Malayo-Polynesian", "Latin", high},
    {"ig", "Igbo", "Atlantic-Congo", "Benue-Congo", "Latin", low},
    {"is", "Icelandic", "Indo-European", "Germanic", "Latin", high},
    {"it", "Italian", "Indo-European", "Italic", "Latin", high},
    {"kk", "Kazakh", "Turkic", "Common Turkic", "Cyrillic", high},
    {"ky", "Kyrgyz", "Turkic", "Common Turkic", "Cyrillic", low},
    {"lo", "Lao", "Tai-Kadai", "Kam-Tai", "Lao", low},
    {"mt", "Maltese", "Afro-Asiatic", "Semitic", "Latin", high},
    {"ny", "Nyanja", "Atlantic-Congo", "Benue-Congo", "Latin", low},
    {"pt", "Portuguese", "Indo-European", "Italic", "Latin", high},
    {"ru", "Russian", "Indo-European", "Balto-Slavic", "Cyrillic", high},
    {"si", "Sinhala", "Indo-European", "Indo-Aryan", "Sinhala", low},
    {"tr", "Turkish", "Turkic", "Common Turkic", "Latin", high},
    {"vi", "Vietnamese", "Austroasiatic", "Vietic", "Latin", high},
    {"zh", "Chinese", "Sino-Tibetan", "Sinitic", "Han", high},
}};

constexpr std::array<std::string_view, 11> kLangs11{"zh", "en", "fr", "vi", "sw", "ru",
                                                    "ar", "hi", "de", "id", "it"};

}  // namespace

std::span<const LanguageInfo> training_languages() { return kLanguages; }

std::optional<LanguageInfo> find_language(std::string_view code) {
  auto it = std::find_if(kLanguages.begin(), kLanguages.end(),
                         [&](const LanguageInfo& l) { return l.code == code; });
  if (it == kLanguages.end()) return std::nullopt;
  return *it;
}

std::optional<LanguagePreset> parse_language_preset(std::string_view name) {
  if (name == "english_only") return LanguagePreset::english_only;
  if (name == "langs11") return LanguagePreset::langs11;
  if (name == "langs25") return LanguagePreset::langs25;
  return std::nullopt;
}

std::string_view to_string(LanguagePreset preset) {
  switch (preset) {
    case LanguagePreset::english_only: return "english_only";
    case LanguagePreset::langs11: return "langs11";
    case LanguagePreset::langs25: return "langs25";
  }
  return "?";
}

std::vector<std::string> preset_languages(LanguagePreset preset) {
  switch (preset) {
    case LanguagePreset::english_only: return {"en"};
    case LanguagePreset::langs11: return {kLangs11.begin(), kLangs11.end()};
    case LanguagePreset::langs25: {
      std::vector<std::string> out;
      for (const auto& l : kLanguages) out.emplace_back(l.code);
      return out;
    }
  }
  return {};
}

}  // namespace stmt
