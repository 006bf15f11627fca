#include "stmt/efficiency_bench.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "stmt/digest.hpp"
#include "stmt/error.hpp"
#include "stmt/json_io.hpp"

namespace stmt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_bench_active{false};

std::string num(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool attempt(Scorer& model, const std::string& probe, std::size_t m) {
  std::vector<std::string> batch(m, probe);
  try {
    model.synchronize();
    model.score(batch);
    model.synchronize();
    return true;
  } catch (const OutOfMemoryError&) {
    return false;
  }
}

}  // namespace

void BenchConfig::validate() const {
  if (repeats < 1) throw InvalidConfigError("bench repeats must be >= 1");
  if (n_labels < 1) throw InvalidConfigError("bench n_labels must be >= 1");
  if (probe_tokens < 2) throw InvalidConfigError("bench probe_tokens must be >= 2");
  if (max_batch_ceiling < 1) throw InvalidConfigError("bench max_batch_ceiling must be >= 1");
  if (granularity < 1) throw InvalidConfigError("bench granularity must be >= 1");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] == 0 || (i && schedule[i] <= schedule[i - 1])) {
      throw InvalidConfigError("bench schedule must be strictly increasing positive sizes");
    }
  }
}

json to_json(const BenchConfig& c) {
  return {{"schedule", c.schedule.empty() ? json("doubling") : json(c.schedule)},
          {"repeats", c.repeats},
          {"warmup", c.warmup},
          {"probe_tokens", c.probe_tokens},
          {"n_labels", c.n_labels},
          {"max_batch_ceiling", c.max_batch_ceiling},
          {"memory_limit_bytes", c.memory_limit_bytes ? json(*c.memory_limit_bytes) : json(nullptr)},
          {"granularity", c.granularity}};
}

BenchConfig bench_config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidConfigError("bench config must be a JSON object");
  if (auto bad = unknown_keys(j, {"schedule", "repeats", "warmup", "probe_tokens", "n_labels", "max_batch_ceiling",
                                  "memory_limit_bytes", "granularity"});
      !bad.empty()) {
    throw InvalidConfigError("bench config: unknown key '" + bad.front() + "'");
  }
  BenchConfig c;
  try {
    if (j.contains("schedule")) {
      const auto& s = j["schedule"];
      if (s.is_string()) {
        if (s.get<std::string>() != "doubling") throw InvalidConfigError("bench schedule must be a list or \"doubling\"");
      } else {
        c.schedule = s.get<std::vector<std::size_t>>();
      }
    }
    c.repeats = j.value("repeats", c.repeats);
    c.warmup = j.value("warmup", c.warmup);
    c.probe_tokens = j.value("probe_tokens", c.probe_tokens);
    c.n_labels = j.value("n_labels", c.n_labels);
    c.max_batch_ceiling = j.value("max_batch_ceiling", c.max_batch_ceiling);
    if (j.contains("memory_limit_bytes") && !j["memory_limit_bytes"].is_null()) {
      c.memory_limit_bytes = j["memory_limit_bytes"].get<std::size_t>();
    }
    c.granularity = j.value("granularity", c.granularity);
  } catch (const json::exception& e) {
    throw InvalidConfigError(std::string("bench config: ") + e.what());
  }
  c.validate();
  return c;
}

BenchConfig load_bench_config(const fs::path& path) {
  try {
    return bench_config_from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw InvalidConfigError("bench config '" + path.string() + "': " + e.what());
  }
}

std::string make_probe(std::size_t tokens) {
  std::string s;
  for (std::size_t i = 1; i < tokens; ++i) s += i == 1 ? "probe" : " probe";
  return s;
}

MaxBatchResult find_max_batch(Scorer& model, const std::string& probe, std::size_t ceiling, std::size_t granularity) {
  if (ceiling < 1) throw InvalidConfigError("find_max_batch: ceiling must be >= 1");
  granularity = std::max<std::size_t>(granularity, 1);
  MaxBatchResult r;
  auto ok = [&](std::size_t m) {
    const bool good = attempt(model, probe, m);
    r.probes.push_back({m, good});
    return good;
  };
  if (!ok(1)) throw EnvironmentError("a batch of one probe statement does not fit on " + model.descriptor());

  std::size_t lo = 1, hi = 0;
  while (hi == 0) {
    if (lo == ceiling) {
      r.clamped = true;
      break;
    }
    const std::size_t next = std::min(lo * 2, ceiling);
    if (ok(next)) lo = next;
    else hi = next;
  }
  if (hi) {
    while (hi - lo > granularity) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (ok(mid)) lo = mid;
      else hi = mid;
    }
  }
  // Two consecutive successes confirm the result.
  while (lo > 1 && !(ok(lo) && ok(lo))) {
    r.clamped = false;
    --lo;
  }
  r.max_batch = lo;
  return r;
}

std::vector<std::size_t> doubling_schedule(std::size_t max_batch) {
  std::vector<std::size_t> s;
  for (std::size_t m = 1; m < max_batch; m *= 2) s.push_back(m);
  if (max_batch) s.push_back(max_batch);
  return s;
}

TimingRun time_batches(Scorer& model, const std::string& probe, const std::vector<std::size_t>& sizes,
                       std::size_t repeats, std::size_t warmup, std::size_t max_batch) {
  using clock = std::chrono::steady_clock;
  TimingRun run;
  for (std::size_t m : sizes) {
    if (m > max_batch) {
      run.warnings.push_back("batch size " + std::to_string(m) + " exceeds the maximum " + std::to_string(max_batch) +
                             ", skipped");
      continue;
    }
    const std::vector<std::string> batch(m, probe);
    for (std::size_t w = 0; w < warmup; ++w) model.score(batch);
    BatchTiming t;
    t.batch = m;
    for (std::size_t k = 0; k < repeats; ++k) {
      model.synchronize();
      const auto start = clock::now();
      model.score(batch);
      model.synchronize();
      t.samples.push_back(std::chrono::duration<double>(clock::now() - start).count());
    }
    double sum = 0.0;
    for (double x : t.samples) sum += x;
    t.mean_seconds = sum / static_cast<double>(t.samples.size());
    double ss = 0.0;
    for (double x : t.samples) ss += (x - t.mean_seconds) * (x - t.mean_seconds);
    t.std_seconds = std::sqrt(ss / static_cast<double>(t.samples.size()));
    run.timings.push_back(std::move(t));
  }
  return run;
}

BenchReport throughput_report(const std::vector<BatchTiming>& timings, std::size_t max_batch, std::size_t n_labels) {
  if (timings.empty()) throw InvalidInputError("throughput_report: no timings");
  if (n_labels == 0) throw InvalidInputError("throughput_report: n_labels must be >= 1");
  BenchReport r;
  r.timings = timings;
  r.max_batch = max_batch;
  const BatchTiming* use = nullptr;
  for (const auto& t : timings) {
    if (t.batch <= max_batch && (!use || t.batch > use->batch)) use = &t;
  }
  if (!use) throw InvalidInputError("throughput_report: no timing at or below the maximum batch");
  if (use->batch != max_batch) {
    r.warnings.push_back("no timing at the maximum batch " + std::to_string(max_batch) + "; throughput uses batch " +
                         std::to_string(use->batch));
  }
  r.throughput_batch = use->batch;
  r.mean_seconds_at_max = use->mean_seconds;
  r.instances_per_second =
      static_cast<double>(use->batch) / use->mean_seconds / static_cast<double>(n_labels);
  r.statements_per_second = r.instances_per_second * static_cast<double>(n_labels);
  r.config.n_labels = n_labels;

  for (std::size_t i = 0; i + 1 < timings.size(); ++i) {
    const auto& a = timings[i];
    const auto& b = timings[i + 1];
    if (b.batch != 2 * a.batch) continue;
    const double sa = static_cast<double>(a.batch) / a.mean_seconds;
    const double sb = static_cast<double>(b.batch) / b.mean_seconds;
    if (sb < 0.8 * sa) {
      r.warnings.push_back("statements/s drops from " + num(sa, 1) + " at batch " + std::to_string(a.batch) + " to " +
                           num(sb, 1) + " at batch " + std::to_string(b.batch));
    }
  }
  return r;
}

bool monotone_within(const std::vector<BatchTiming>& timings, double tolerance) {
  for (std::size_t i = 0; i + 1 < timings.size(); ++i) {
    if (timings[i + 1].mean_seconds < (1.0 - tolerance) * timings[i].mean_seconds) return false;
  }
  return true;
}

BenchReport run_bench(Scorer& model, const BenchConfig& config, const std::string& model_label) {
  config.validate();
  if (omp_in_parallel()) throw EnvironmentError("benchmark started inside a parallel region");
  bool expected = false;
  if (!g_bench_active.compare_exchange_strong(expected, true)) {
    throw EnvironmentError("another benchmark is running in this process");
  }
  struct Release {
    ~Release() { g_bench_active = false; }
  } release;

  if (auto* handle = dynamic_cast<ModelHandle*>(&model)) {
    if (config.memory_limit_bytes) handle->set_memory_ceiling(config.memory_limit_bytes);
    if (handle->tokenizer().max_sequence_length() < config.probe_tokens) {
      throw InvalidConfigError("probe of " + std::to_string(config.probe_tokens) +
                               " tokens exceeds the model's maximum sequence length");
    }
  }
  const auto probe = make_probe(config.probe_tokens);
  auto search = find_max_batch(model, probe, config.max_batch_ceiling, config.granularity);
  const auto sizes = config.schedule.empty() ? doubling_schedule(search.max_batch) : config.schedule;
  auto run = time_batches(model, probe, sizes, config.repeats, config.warmup, search.max_batch);
  auto report = throughput_report(run.timings, search.max_batch, config.n_labels);
  report.model = model_label;
  report.device = model.descriptor();
  report.config = config;
  report.search = std::move(search);
  report.warnings.insert(report.warnings.begin(), run.warnings.begin(), run.warnings.end());
  return report;
}

json BenchReport::to_json() const {
  json t = json::array();
  for (const auto& b : timings) {
    t.push_back({{"batch_size", b.batch},
                 {"mean_seconds", b.mean_seconds},
                 {"std_seconds", b.std_seconds},
                 {"samples", b.samples}});
  }
  json probes = json::array();
  for (const auto& p : search.probes) probes.push_back({{"batch_size", p.batch}, {"ok", p.ok}});
  return {{"format_version", 1},
          {"model", model},
          {"device", device},
          {"config", stmt::to_json(config)},
          {"max_batch", max_batch},
          {"max_batch_clamped", search.clamped},
          {"search_probes", probes},
          {"throughput_batch", throughput_batch},
          {"mean_seconds_at_max", mean_seconds_at_max},
          {"n_labels", config.n_labels},
          {"statements_per_second", statements_per_second},
          {"instances_per_second", instances_per_second},
          {"timings", t},
          {"warnings", warnings}};
}

std::string render_bench_table(const BenchReport& r) {
  std::string s = "| Model | Maximum Batch Size | Mean Inference Time Per Batch (s) |\n|---|---|---|\n";
  s += "| " + r.model + " | " + std::to_string(r.max_batch) + " | " + num(r.mean_seconds_at_max, 4) + " |\n";
  s += "\nDevice: " + r.device + ". Probe: " + std::to_string(r.config.probe_tokens) + " tokens, " +
       std::to_string(r.config.repeats) + " timed repeats after " + std::to_string(r.config.warmup) +
       " warmup batches.\n";
  s += "Throughput at batch " + std::to_string(r.throughput_batch) + ": " + num(r.statements_per_second, 1) +
       " statements/s, " + num(r.instances_per_second, 1) + " instances/s at n = " + std::to_string(r.config.n_labels) +
       " labels.\n";
  s += "\n| Batch Size | Mean (s) | Std (s) |\n|---|---|---|\n";
  for (const auto& t : r.timings) {
    s += "| " + std::to_string(t.batch) + " | " + num(t.mean_seconds, 6) + " | " + num(t.std_seconds, 6) + " |\n";
  }
  for (const auto& w : r.warnings) s += "\nWarning: " + w + "\n";
  return s;
}

void write_bench(const BenchReport& r, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "bench.json", r.to_json().dump(2) + "\n");
  write_file(dir / "bench.md", render_bench_table(r));
  std::string csv = "batch_size,repeat,seconds\n";
  for (const auto& t : r.timings) {
    for (std::size_t k = 0; k < t.samples.size(); ++k) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.9f", t.samples[k]);
      csv += std::to_string(t.batch) + "," + std::to_string(k) + "," + buf + "\n";
    }
  }
  write_file(dir / "timings.csv", csv);
}

}  // namespace stmt
