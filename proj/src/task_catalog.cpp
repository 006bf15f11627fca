// Schemas for the tasks covered by packs/appendix_a.json. Field names follow
// the placeholders printed in each template table; language lists record the
// coverage of the public dataset behind each task.

#include "stmt/template_registry.hpp"

namespace stmt {
namespace {

using Kind = LabelSpace::Kind;

TaskSchema fixed(std::string id, std::vector<std::string> fields, std::vector<std::string> labels,
                 std::string gold, std::vector<std::string> langs) {
  TaskSchema s;
  s.task_id = std::move(id);
  s.field_names = std::move(fields);
  s.label_space.kind = Kind::fixed;
  s.label_space.labels = std::move(labels);
  s.label_space.gold_field = std::move(gold);
  s.languages = std::move(langs);
  return s;
}

TaskSchema choices(std::string id, std::vector<std::string> fields, std::vector<std::string> columns,
                   std::string gold, std::vector<std::string> langs) {
  TaskSchema s;
  s.task_id = std::move(id);
  s.field_names = std::move(fields);
  s.label_space.kind = Kind::choice_columns;
  s.label_space.columns = std::move(columns);
  s.label_space.gold_field = std::move(gold);
  s.languages = std::move(langs);
  return s;
}

TaskSchema gold_plus(std::string id, std::vector<std::string> fields, std::string gold,
                     std::vector<std::string> distractors, bool pool, std::vector<std::string> langs) {
  TaskSchema s;
  s.task_id = std::move(id);
  s.field_names = std::move(fields);
  s.label_space.kind = Kind::gold_plus_distractors;
  s.label_space.gold_field = std::move(gold);
  s.label_space.columns = std::move(distractors);
  s.label_space.pool_distractors = pool;
  s.languages = std::move(langs);
  return s;
}

TaskCatalog make_builtin() {
  const std::vector<std::string> all25 = {"af", "ar", "de", "en", "es", "fr", "ga", "gu", "ha",
                                          "hi", "id", "ig", "is", "it", "kk", "ky", "lo", "mt",
                                          "ny", "pt", "ru", "si", "tr", "vi", "zh"};
  auto all_plus_sw = all25;
  all_plus_sw.push_back("sw");

  TaskCatalog c;
  // Training mixture.
  c.add(choices("belebele", {"context", "question"}, {"answer1", "answer2", "answer3", "answer4"},
                "answer_index", all_plus_sw));
  c.add(gold_plus("exams", {"question"}, "answer", {"distractor1", "distractor2", "distractor3"}, false,
                  {"ar", "de", "es", "fr", "it", "pt", "tr", "vi"}));
  c.add(gold_plus("xquad", {"context", "question"}, "answer", {"distractor1", "distractor2", "distractor3"},
                  true, {"ar", "de", "en", "es", "hi", "ru", "tr", "vi", "zh"}));
  c.add(gold_plus("wikilingua", {"source"}, "summary", {}, true,
                  {"ar", "de", "en", "es", "fr", "hi", "id", "it", "pt", "ru", "tr", "vi", "zh"}));
  {
    auto mt = gold_plus("flores101", {"target_lang", "lang", "sentence"}, "translation", {}, true, all_plus_sw);
    mt.is_translation = true;
    c.add(std::move(mt));
  }
  c.add(fixed("multilingual_sentiments", {"text"}, {"positive", "neutral", "negative"}, "label",
              {"ar", "de", "en", "es", "fr", "hi", "id", "it", "pt", "zh"}));
  {
    auto wic = fixed("xlwic", {"target_word", "context_1", "context_2"}, {"same", "different"}, "label",
                     {"de", "en", "fr", "it", "zh"});
    wic.label_space.positive_label = "same";
    c.add(std::move(wic));
  }
  c.add(fixed("massive", {"utt"},
              {"alarm", "audio", "calendar", "cooking", "datetime", "email", "general", "iot", "lists",
               "music", "news", "play", "qa", "recommendation", "social", "takeaway", "transport",
               "weather"},
              "label",
              {"af", "ar", "de", "en", "es", "fr", "hi", "id", "is", "it", "pt", "ru", "sw", "tr", "vi", "zh"}));
  c.add(choices("figqa", {"startphrase"}, {"ending1", "ending2"}, "label", {"en", "hi", "id", "sw"}));
  const std::vector<std::string> csqa_langs = {"ar", "de", "en", "es", "fr", "hi",
                                               "it", "pt", "ru", "sw", "vi", "zh"};
  c.add(choices("xcsqa", {"question"}, {"choice_a", "choice_b", "choice_c", "choice_d", "choice_e"},
                "answer_index", csqa_langs));
  c.add(choices("xcodah", {}, {"choice1", "choice2", "choice3", "choice4"}, "label", csqa_langs));
  c.add(fixed("sib200", {"text"},
              {"science/technology", "travel", "politics", "sports", "health", "entertainment", "geography"},
              "category", all_plus_sw));
  {
    auto paws = fixed("pawsx", {"text1", "text2"}, {"paraphrase", "not_paraphrase"}, "label",
                      {"de", "en", "es", "fr", "zh"});
    paws.label_space.positive_label = "paraphrase";
    c.add(std::move(paws));
  }

  // Held-out evaluation tasks. The last three follow the printed tables,
  // whose headings appear rotated (see suspect_heading in the pack).
  c.add(choices("xcopa", {"premise"}, {"choice1", "choice2"}, "label",
                {"et", "ht", "id", "it", "qu", "sw", "ta", "th", "tr", "vi", "zh"}));
  c.add(fixed("xstorycloze", {"text1", "text2"}, {"entailment", "neutral", "contradiction"}, "label",
              {"ar", "en", "es", "eu", "hi", "id", "my", "ru", "sw", "te", "zh"}));
  c.add(choices("xnli", {"sentence"}, {"option1", "option2"}, "answer",
                {"ar", "bg", "de", "el", "en", "es", "fr", "hi", "ru", "sw", "th", "tr", "ur", "vi", "zh"}));
  c.add(choices("xwinograd", {"input_sentence_1", "input_sentence_2", "input_sentence_3", "input_sentence_4"},
                {"sentence_quiz1", "sentence_quiz2"}, "answer_right_ending", {"en", "fr", "ja", "pt", "ru", "zh"}));
  return c;
}

}  // namespace

const TaskCatalog& TaskCatalog::builtin() {
  static const TaskCatalog catalog = make_builtin();
  return catalog;
}

}  // namespace stmt
