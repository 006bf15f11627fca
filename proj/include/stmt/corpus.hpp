#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stmt/template_registry.hpp"

namespace stmt {

struct CorpusRow {
  std::string row_id;
  std::string language;
  FieldMap fields;

  bool operator==(const CorpusRow&) const = default;
};

struct Corpus {
  std::string dataset_id;
  std::string task_id;
  std::vector<CorpusRow> rows;

  std::vector<std::string> languages() const;  // sorted, unique
};

enum class CorpusFormat { jsonl, csv, tsv };

struct CorpusFile {
  std::filesystem::path path;          // relative paths resolve against the manifest directory
  std::optional<std::string> language; // overrides language_column for every row of the file
};

// Per-dataset manifest binding source columns to task fields.
struct CorpusManifest {
  std::string dataset_id;
  std::string task_id;
  CorpusFormat format = CorpusFormat::jsonl;
  std::vector<CorpusFile> files;
  std::string language_column = "language";
  std::optional<std::string> row_id_column;
  // field name -> source column. Empty means every source column maps to a
  // field of the same name.
  std::map<std::string, std::string> columns;
  std::filesystem::path base_dir;
};

CorpusManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

// Reads every file of the manifest. Missing files raise LoadError naming the
// dataset and path; malformed rows raise ReadError with the line number.
Corpus load_corpus(const CorpusManifest& manifest);
Corpus load_corpus(const std::filesystem::path& manifest_path);

// Writes rows as JSON lines with a "language" and "row_id" column plus one
// column per field; returns a manifest that reads them back.
CorpusManifest write_jsonl_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// RFC 4180 records (quoted fields, doubled quotes, embedded newlines).
std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char delimiter, bool quoting);

}  // namespace stmt
