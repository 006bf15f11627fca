#include "stmt/synth.hpp"

#include "stmt/rng.hpp"

namespace stmt {

namespace {

const char* const kSyllables[] = {"ka", "lo", "mi", "ru", "te", "sa", "no", "vi", "de", "pa", "zu", "fe",
                                  "ri", "bo", "ga", "hu", "ne", "to", "li", "ma", "ko", "se", "ju", "wa"};

std::string pseudo_word(Rng& rng, std::size_t syllables) {
  std::string w;
  for (std::size_t i = 0; i < syllables; ++i) w += kSyllables[rng.below(std::size(kSyllables))];
  return w;
}

std::string pseudo_phrase(Rng& rng, const std::string& language, std::size_t words) {
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += language + pseudo_word(rng, 2 + rng.below(2));
  }
  return out;
}

const char* const kFiller[] = {"the", "a", "of", "and", "in", "with", "that", "on"};

}  // namespace

Corpus synth_task_corpus(const TaskSchema& schema, const std::string& dataset_id,
                         const std::vector<std::pair<std::string, std::size_t>>& rows_per_language,
                         std::uint64_t seed) {
  Corpus c;
  c.dataset_id = dataset_id;
  c.task_id = schema.task_id;
  const auto& ls = schema.label_space;
  for (const auto& [lang, n] : rows_per_language) {
    Rng rng(derive_seed(seed, "synth", dataset_id, lang));
    for (std::size_t i = 0; i < n; ++i) {
      CorpusRow row;
      row.row_id = dataset_id + "-" + lang + "-" + std::to_string(i);
      row.language = lang;
      for (const auto& f : schema.field_names) row.fields[f] = pseudo_phrase(rng, lang, 3 + rng.below(6));
      switch (ls.kind) {
        case LabelSpace::Kind::fixed:
          row.fields[ls.gold_field] = ls.labels[rng.below(ls.labels.size())];
          break;
        case LabelSpace::Kind::choice_columns:
          for (const auto& col : ls.columns) row.fields[col] = pseudo_phrase(rng, lang, 2 + rng.below(4));
          row.fields[ls.gold_field] = std::to_string(rng.below(ls.columns.size()));
          break;
        case LabelSpace::Kind::gold_plus_distractors:
          row.fields[ls.gold_field] = pseudo_phrase(rng, lang, 2 + rng.below(4));
          for (const auto& col : ls.columns) row.fields[col] = pseudo_phrase(rng, lang, 2 + rng.below(4));
          break;
      }
      c.rows.push_back(std::move(row));
    }
  }
  return c;
}

SynthWorld SynthWorld::make(std::uint64_t seed, std::size_t topics, std::size_t words_per_topic) {
  static const char* const kTopics[] = {"science/technology", "travel",        "politics", "sports",
                                        "health",             "entertainment", "geography"};
  SynthWorld w;
  w.seed = seed;
  Rng rng(derive_seed(seed, "world"));
  for (std::size_t t = 0; t < topics; ++t) {
    w.topics.push_back(t < std::size(kTopics) ? kTopics[t] : "topic" + std::to_string(t));
    std::vector<std::string> words;
    for (std::size_t i = 0; i < words_per_topic; ++i) {
      // The topic index in the word keeps clusters disjoint.
      words.push_back(pseudo_word(rng, 2) + std::to_string(t) + pseudo_word(rng, 1));
    }
    w.topic_words.push_back(std::move(words));
  }
  return w;
}

std::string SynthWorld::encode(const std::string& english_word, const std::string& language) const {
  if (language == "en") return english_word;
  // Injective: the suffix is the word reversed, so distinct words stay distinct.
  std::string rev(english_word.rbegin(), english_word.rend());
  return language + rev;
}

std::string SynthWorld::word(std::size_t topic, std::size_t i, const std::string& language) const {
  return encode(topic_words[topic][i], language);
}

std::string SynthWorld::sentence(std::size_t topic, std::size_t length, const std::string& language,
                                 Rng& rng) const {
  std::string out;
  for (std::size_t i = 0; i < length; ++i) {
    if (i) out += ' ';
    if (rng.below(4) == 0) {
      out += encode(kFiller[rng.below(std::size(kFiller))], language);
    } else {
      out += word(topic, rng.below(topic_words[topic].size()), language);
    }
  }
  return out;
}

namespace {

std::size_t other_topic(std::size_t t, std::size_t n, Rng& rng) {
  std::size_t o = rng.below(n - 1);
  return o >= t ? o + 1 : o;
}

}  // namespace

Corpus world_topic_corpus(const SynthWorld& w, const std::vector<std::pair<std::string, std::size_t>>& rows_per_language,
                          std::uint64_t seed) {
  Corpus c;
  c.dataset_id = "sib200";
  c.task_id = "sib200";
  for (const auto& [lang, n] : rows_per_language) {
    Rng rng(derive_seed(seed, "topic", lang));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = rng.below(w.topics.size());
      CorpusRow row;
      row.row_id = "sib200-" + lang + "-" + std::to_string(i);
      row.language = lang;
      row.fields["text"] = w.sentence(t, 6 + rng.below(6), lang, rng);
      row.fields["category"] = w.topics[t];
      c.rows.push_back(std::move(row));
    }
  }
  return c;
}

Corpus world_completion_corpus(const SynthWorld& w,
                               const std::vector<std::pair<std::string, std::size_t>>& rows_per_language,
                               std::uint64_t seed) {
  Corpus c;
  c.dataset_id = "figqa";
  c.task_id = "figqa";
  for (const auto& [lang, n] : rows_per_language) {
    Rng rng(derive_seed(seed, "completion", lang));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = rng.below(w.topics.size());
      const std::size_t o = other_topic(t, w.topics.size(), rng);
      const std::size_t right = rng.below(2);
      CorpusRow row;
      row.row_id = "figqa-" + lang + "-" + std::to_string(i);
      row.language = lang;
      row.fields["startphrase"] = w.sentence(t, 5 + rng.below(4), lang, rng);
      const std::string good = w.sentence(t, 3 + rng.below(3), lang, rng);
      const std::string bad = w.sentence(o, 3 + rng.below(3), lang, rng);
      row.fields["ending1"] = right == 0 ? good : bad;
      row.fields["ending2"] = right == 0 ? bad : good;
      row.fields["label"] = std::to_string(right);
      c.rows.push_back(std::move(row));
    }
  }
  return c;
}

Corpus world_choice_corpus(const SynthWorld& w, const std::vector<std::pair<std::string, std::size_t>>& rows_per_language,
                           std::uint64_t seed) {
  Corpus c;
  c.dataset_id = "xcopa";
  c.task_id = "xcopa";
  for (const auto& [lang, n] : rows_per_language) {
    Rng rng(derive_seed(seed, "choice", lang));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = rng.below(w.topics.size());
      const std::size_t o = other_topic(t, w.topics.size(), rng);
      const std::size_t right = rng.below(2);
      CorpusRow row;
      row.row_id = "xcopa-" + lang + "-" + std::to_string(i);
      row.language = lang;
      row.fields["premise"] = w.sentence(t, 5 + rng.below(4), lang, rng);
      const std::string good = w.sentence(t, 3 + rng.below(3), lang, rng);
      const std::string bad = w.sentence(o, 3 + rng.below(3), lang, rng);
      row.fields["choice1"] = right == 0 ? good : bad;
      row.fields["choice2"] = right == 0 ? bad : good;
      row.fields["label"] = std::to_string(right);
      c.rows.push_back(std::move(row));
    }
  }
  return c;
}

}  // namespace stmt
