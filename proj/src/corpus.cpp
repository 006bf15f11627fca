#include "stmt/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"
#include "stmt/digest.hpp"
#include "stmt/error.hpp"
#include "stmt/json_io.hpp"

namespace stmt {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::string> Corpus::languages() const {
  std::set<std::string> langs;
  for (const auto& r : rows) langs.insert(r.language);
  return {langs.begin(), langs.end()};
}

namespace {

CorpusFormat parse_format(const std::string& s) {
  if (s == "jsonl") return CorpusFormat::jsonl;
  if (s == "csv") return CorpusFormat::csv;
  if (s == "tsv") return CorpusFormat::tsv;
  throw LoadError("unknown corpus format '" + s + "'");
}

std::string format_name(CorpusFormat f) {
  switch (f) {
    case CorpusFormat::jsonl: return "jsonl";
    case CorpusFormat::csv: return "csv";
    case CorpusFormat::tsv: return "tsv";
  }
  return "jsonl";
}

std::string scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

struct RawRecord {
  std::size_t line;
  std::map<std::string, std::string> columns;
};

std::vector<RawRecord> read_jsonl(const std::string& text, const fs::path& path) {
  std::vector<RawRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ReadError(path.string() + ": " + e.what(), n);
    }
    if (!obj.is_object()) throw ReadError(path.string() + ": row is not a JSON object", n);
    RawRecord rec{n, {}};
    for (const auto& [k, v] : obj.items()) rec.columns[k] = scalar_to_string(v);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RawRecord> read_delimited(const std::string& text, char delim, bool quoting, const fs::path& path) {
  auto records = parse_delimited(text, delim, quoting);
  std::vector<RawRecord> out;
  if (records.empty()) return out;
  const auto header = records.front();
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.size() == 1 && rec[0].empty()) continue;
    if (rec.size() != header.size()) {
      throw ReadError(path.string() + ": expected " + std::to_string(header.size()) + " columns, got " +
                          std::to_string(rec.size()),
                      i + 1);
    }
    RawRecord r{i + 1, {}};
    for (std::size_t c = 0; c < header.size(); ++c) r.columns[header[c]] = rec[c];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char delimiter, bool quoting) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> current;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (quoting && c == '"' && field.empty()) {
      in_quotes = true;
    } else if (c == delimiter) {
      current.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      current.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(current));
      current.clear();
      any = false;
    } else {
      field.push_back(c);
    }
  }
  if (any) {
    current.push_back(std::move(field));
    records.push_back(std::move(current));
  }
  return records;
}

CorpusManifest load_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw LoadError("manifest '" + path.string() + "': " + e.what());
  }
  if (auto bad = unknown_keys(doc, {"dataset_id", "task_id", "format", "files", "language_column",
                                    "row_id_column", "columns"});
      !bad.empty()) {
    throw LoadError("manifest '" + path.string() + "': unknown key '" + bad.front() + "'");
  }
  CorpusManifest m;
  try {
    m.dataset_id = doc.at("dataset_id").get<std::string>();
    m.task_id = doc.value("task_id", m.dataset_id);
    m.format = parse_format(doc.value("format", std::string("jsonl")));
    for (const auto& f : doc.at("files")) {
      CorpusFile file;
      if (f.is_string()) {
        file.path = f.get<std::string>();
      } else {
        file.path = f.at("path").get<std::string>();
        if (f.contains("language")) file.language = f["language"].get<std::string>();
      }
      m.files.push_back(std::move(file));
    }
    m.language_column = doc.value("language_column", std::string("language"));
    if (doc.contains("row_id_column")) m.row_id_column = doc["row_id_column"].get<std::string>();
    if (doc.contains("columns")) m.columns = doc["columns"].get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw LoadError("manifest '" + path.string() + "': " + e.what());
  }
  m.base_dir = path.parent_path();
  return m;
}

void save_manifest(const CorpusManifest& m, const fs::path& path) {
  json doc = json::object();
  doc["dataset_id"] = m.dataset_id;
  doc["task_id"] = m.task_id;
  doc["format"] = format_name(m.format);
  json files = json::array();
  for (const auto& f : m.files) {
    json jf = {{"path", f.path.generic_string()}};
    if (f.language) jf["language"] = *f.language;
    files.push_back(std::move(jf));
  }
  doc["files"] = std::move(files);
  doc["language_column"] = m.language_column;
  if (m.row_id_column) doc["row_id_column"] = *m.row_id_column;
  if (!m.columns.empty()) doc["columns"] = m.columns;
  write_file(path, doc.dump(2) + "\n");
}

Corpus load_corpus(const CorpusManifest& m) {
  Corpus corpus;
  corpus.dataset_id = m.dataset_id;
  corpus.task_id = m.task_id;
  for (const auto& file : m.files) {
    const fs::path path = file.path.is_absolute() ? file.path : m.base_dir / file.path;
    if (!fs::exists(path)) {
      throw LoadError("dataset '" + m.dataset_id + "': corpus file not found: " + path.string());
    }
    const std::string text = read_file(path);
    std::vector<RawRecord> raw;
    switch (m.format) {
      case CorpusFormat::jsonl: raw = read_jsonl(text, path); break;
      case CorpusFormat::csv: raw = read_delimited(text, ',', true, path); break;
      case CorpusFormat::tsv: raw = read_delimited(text, '\t', false, path); break;
    }
    const std::string stem = path.filename().string();
    for (auto& rec : raw) {
      CorpusRow row;
      if (file.language) {
        row.language = *file.language;
      } else if (auto it = rec.columns.find(m.language_column); it != rec.columns.end()) {
        row.language = it->second;
      } else {
        throw ReadError(path.string() + ": row has no language column '" + m.language_column + "'", rec.line);
      }
      if (m.row_id_column) {
        auto it = rec.columns.find(*m.row_id_column);
        if (it == rec.columns.end()) {
          throw ReadError(path.string() + ": row has no id column '" + *m.row_id_column + "'", rec.line);
        }
        row.row_id = it->second;
      } else {
        row.row_id = stem + ":" + std::to_string(rec.line);
      }
      if (m.columns.empty()) {
        for (auto& [k, v] : rec.columns) {
          if (k == m.language_column || (m.row_id_column && k == *m.row_id_column)) continue;
          row.fields.emplace(k, std::move(v));
        }
      } else {
        for (const auto& [field, column] : m.columns) {
          auto it = rec.columns.find(column);
          if (it != rec.columns.end()) row.fields.emplace(field, it->second);
        }
      }
      corpus.rows.push_back(std::move(row));
    }
  }
  return corpus;
}

Corpus load_corpus(const fs::path& manifest_path) { return load_corpus(load_manifest(manifest_path)); }

CorpusManifest write_jsonl_corpus(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string filename = corpus.dataset_id + ".jsonl";
  std::string out;
  for (const auto& row : corpus.rows) {
    json obj = json::object();
    obj["row_id"] = row.row_id;
    obj["language"] = row.language;
    for (const auto& [k, v] : row.fields) obj[k] = v;
    out += obj.dump(-1, ' ', false) + "\n";
  }
  write_file(dir / filename, out);
  CorpusManifest m;
  m.dataset_id = corpus.dataset_id;
  m.task_id = corpus.task_id;
  m.format = CorpusFormat::jsonl;
  m.files.push_back({filename, std::nullopt});
  m.row_id_column = "row_id";
  m.base_dir = dir;
  save_manifest(m, dir / (corpus.dataset_id + ".manifest.json"));
  return m;
}

}  // namespace stmt
