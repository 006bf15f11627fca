#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stmt/corpus.hpp"
#include "stmt/rng.hpp"
#include "stmt/template_registry.hpp"

namespace stmt {

// Schema-conforming filler corpus: every field gets random pseudo-words,
// labels and gold indices are uniform. Useful for exercising the builder.
Corpus synth_task_corpus(const TaskSchema& schema, const std::string& dataset_id,
                         const std::vector<std::pair<std::string, std::size_t>>& rows_per_language,
                         std::uint64_t seed);

// A small world with learnable structure. Topics own disjoint word clusters;
// a sentence's topic is recoverable from its words. The "cipher" language
// maps every English word through a fixed bijection onto fresh tokens, so a
// model trained on both languages can transfer across them.
struct SynthWorld {
  std::vector<std::string> topics;
  std::vector<std::vector<std::string>> topic_words;  // per topic, English words
  std::string cipher_language = "qx";
  std::uint64_t seed = 0;

  static SynthWorld make(std::uint64_t seed, std::size_t topics = 7, std::size_t words_per_topic = 8);

  std::string word(std::size_t topic, std::size_t i, const std::string& language) const;
  std::string encode(const std::string& english_word, const std::string& language) const;
  std::string sentence(std::size_t topic, std::size_t length, const std::string& language, Rng& rng) const;
};

// Topic classification rows for the sib200 schema (fields: text, category).
Corpus world_topic_corpus(const SynthWorld& w, const std::vector<std::pair<std::string, std::size_t>>& rows_per_language,
                          std::uint64_t seed);
// Two-ending completion rows for the figqa schema: the right ending shares
// the start phrase's topic.
Corpus world_completion_corpus(const SynthWorld& w,
                               const std::vector<std::pair<std::string, std::size_t>>& rows_per_language,
                               std::uint64_t seed);
// Held-out binary choice rows for the xcopa schema (premise, choice1,
// choice2, label): the right choice continues the premise's topic.
Corpus world_choice_corpus(const SynthWorld& w, const std::vector<std::pair<std::string, std::size_t>>& rows_per_language,
                           std::uint64_t seed);

}  // namespace stmt
