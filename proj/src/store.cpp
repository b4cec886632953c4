#include "bds/store.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bds::store {

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

template <typename T>
T required(const json& j, const char* field) {
  if (!j.contains(field)) throw StoreError(field, "missing from manifest");
  try {
    return j.at(field).get<T>();
  } catch (const json::exception& e) {
    throw StoreError(field, std::string("wrong type: ") + e.what());
  }
}

}  // namespace

StoreMetadata read_manifest(const std::string& dir) {
  const std::string path = join(dir, kManifestName);
  std::ifstream in(path);
  if (!in) throw StoreError("manifest", "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw StoreError("manifest", "unreadable JSON in " + path + ": " + e.what());
  }

  StoreMetadata m;
  m.format_version = required<int>(j, "format_version");
  if (m.format_version != kFormatVersion) {
    throw StoreError("format_version", "unsupported version " + std::to_string(m.format_version));
  }
  m.byte_order = required<std::string>(j, "byte_order");
  if (m.byte_order != "little") throw StoreError("byte_order", "only \"little\" is supported");
  m.fs = required<double>(j, "fs");
  if (!(m.fs > 0.0)) throw StoreError("fs", "must be positive");
  m.channels = required<std::size_t>(j, "channels");
  m.samples_per_trial = required<std::size_t>(j, "samples_per_trial");
  m.n_trials = required<std::size_t>(j, "n_trials");
  m.n_classes = required<std::size_t>(j, "n_classes");
  m.labels = required<std::vector<std::size_t>>(j, "labels");
  m.codebook = j.value("codebook", std::string());
  m.subject = j.value("subject", std::string());
  if (m.labels.size() != m.n_trials) {
    throw StoreError("labels", "has " + std::to_string(m.labels.size()) + " entries, n_trials is " +
                                   std::to_string(m.n_trials));
  }
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    if (m.labels[i] >= m.n_classes) {
      throw StoreError("labels", "label " + std::to_string(m.labels[i]) + " of trial " +
                                     std::to_string(i) + " is outside [0, n_classes)");
    }
  }
  if (m.n_trials > 0 && (m.channels == 0 || m.samples_per_trial == 0)) {
    throw StoreError("channels", "channels and samples_per_trial must be positive");
  }
  return m;
}

StoreReader::StoreReader(const std::string& dir) : meta_(read_manifest(dir)) {
  const std::string path = join(dir, kBlobName);
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw StoreError("blob", "cannot stat " + path + ": " + ec.message());
  const std::uintmax_t expected = static_cast<std::uintmax_t>(meta_.n_trials) * meta_.channels *
                                  meta_.samples_per_trial * sizeof(float);
  if (size != expected) {
    throw StoreError("blob", path + " has " + std::to_string(size) + " bytes, expected " +
                                 std::to_string(expected));
  }
  blob_.open(path, std::ios::binary);
  if (!blob_) throw StoreError("blob", "cannot open " + path);
  buffer_.resize(meta_.channels * meta_.samples_per_trial);
}

std::optional<decode::Trial> StoreReader::next() {
  if (position_ >= meta_.n_trials) return std::nullopt;
  blob_.read(reinterpret_cast<char*>(buffer_.data()),
             static_cast<std::streamsize>(buffer_.size() * sizeof(float)));
  if (!blob_) throw StoreError("blob", "short read at trial " + std::to_string(position_));
  decode::Trial trial;
  trial.fs = meta_.fs;
  trial.label = meta_.labels[position_];
  const auto channels = static_cast<Eigen::Index>(meta_.channels);
  const auto samples = static_cast<Eigen::Index>(meta_.samples_per_trial);
  trial.data.resize(channels, samples);
  for (Eigen::Index c = 0; c < channels; ++c) {
    for (Eigen::Index t = 0; t < samples; ++t) {
      std::uint32_t bits;
      std::memcpy(&bits, &buffer_[static_cast<std::size_t>(c * samples + t)], sizeof bits);
      bits = to_little(bits);
      float v;
      std::memcpy(&v, &bits, sizeof v);
      trial.data(c, t) = v;
    }
  }
  ++position_;
  return trial;
}

LoadedStore load_store(const std::string& dir) {
  StoreReader reader(dir);
  LoadedStore out;
  out.metadata = reader.metadata();
  out.trials.reserve(out.metadata.n_trials);
  while (auto t = reader.next()) out.trials.push_back(std::move(*t));
  if (!out.metadata.codebook.empty()) {
    const fs::path p = fs::path(out.metadata.codebook).is_absolute()
                           ? fs::path(out.metadata.codebook)
                           : fs::path(dir) / out.metadata.codebook;
    try {
      out.codebook = codec::read_codebook_file(p.string());
    } catch (const std::exception& e) {
      throw StoreError("codebook", e.what());
    }
  }
  return out;
}

void write_store(const std::string& dir, std::span<const decode::Trial> trials, StoreMetadata meta,
                 const codec::Codebook* codebook) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());

  meta.format_version = kFormatVersion;
  meta.byte_order = "little";
  meta.n_trials = trials.size();
  meta.labels.clear();
  if (!trials.empty()) {
    meta.channels = static_cast<std::size_t>(trials.front().channels());
    meta.samples_per_trial = static_cast<std::size_t>(trials.front().samples());
    if (meta.fs <= 0.0) meta.fs = trials.front().fs;
  }
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    if (static_cast<std::size_t>(t.channels()) != meta.channels ||
        static_cast<std::size_t>(t.samples()) != meta.samples_per_trial) {
      throw std::invalid_argument("write_store: trial " + std::to_string(i) + " has inconsistent dimensions");
    }
    if (!t.label || *t.label >= meta.n_classes) {
      throw std::invalid_argument("write_store: trial " + std::to_string(i) +
                                  " needs a label in [0, n_classes)");
    }
    meta.labels.push_back(*t.label);
  }
  if (codebook) {
    meta.codebook = kCodebookName;
    codec::write_codebook_file(join(dir, kCodebookName), *codebook);
  }

  const std::string blob_path = join(dir, kBlobName);
  std::ofstream blob(blob_path, std::ios::binary | std::ios::trunc);
  if (!blob) throw std::runtime_error("cannot open " + blob_path + " for writing");
  std::vector<std::uint32_t> row;
  for (const auto& t : trials) {
    row.resize(static_cast<std::size_t>(t.samples()));
    for (Eigen::Index c = 0; c < t.channels(); ++c) {
      for (Eigen::Index s = 0; s < t.samples(); ++s) {
        const float v = static_cast<float>(t.data(c, s));
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        row[static_cast<std::size_t>(s)] = to_little(bits);
      }
      blob.write(reinterpret_cast<const char*>(row.data()),
                 static_cast<std::streamsize>(row.size() * sizeof(std::uint32_t)));
    }
  }
  if (!blob) throw std::runtime_error("write failed: " + blob_path);

  json j;
  j["format_version"] = meta.format_version;
  j["byte_order"] = meta.byte_order;
  j["fs"] = meta.fs;
  j["channels"] = meta.channels;
  j["samples_per_trial"] = meta.samples_per_trial;
  j["n_trials"] = meta.n_trials;
  j["n_classes"] = meta.n_classes;
  j["labels"] = meta.labels;
  j["codebook"] = meta.codebook;
  if (!meta.subject.empty()) j["subject"] = meta.subject;
  const std::string manifest_path = join(dir, kManifestName);
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!manifest) throw std::runtime_error("cannot open " + manifest_path + " for writing");
  manifest << j.dump(2) << '\n';
  if (!manifest) throw std::runtime_error("write failed: " + manifest_path);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.folds < 2) throw std::invalid_argument("config: folds must be >= 2");
  if (!(cfg.grid_ms > 0.0)) throw std::invalid_argument("config: grid_ms must be positive");
  if (cfg.t_star_s < 0.0) throw std::invalid_argument("config: t_star_s must be >= 0");
  if (cfg.t_star_s > 0.0 && cfg.t_star_s * 1000.0 < cfg.grid_ms) {
    throw std::invalid_argument("config: t_star must be at least one grid step");
  }
  if (!(cfg.response_ms > 0.0)) throw std::invalid_argument("config: response_ms must be positive");
  if (cfg.overhead_s < 0.0) throw std::invalid_argument("config: overhead_s must be >= 0");
  if (cfg.hyperparams.empty()) throw std::invalid_argument("config: empty hyperparameter list");
}

std::string to_json(const ExperimentConfig& cfg) {
  json j;
  j["method"] = cfg.method;
  j["similarity"] = decode::to_string(cfg.similarity);
  j["hyperparams"] = cfg.hyperparams;
  j["folds"] = cfg.folds;
  j["grid_ms"] = cfg.grid_ms;
  j["t_star_s"] = cfg.t_star_s;
  j["response_ms"] = cfg.response_ms;
  j["seed"] = cfg.seed;
  j["overhead_s"] = cfg.overhead_s;
  j["count_forced"] = cfg.count_forced;
  j["abstain_forced"] = cfg.abstain_forced;
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  static const std::vector<std::string> known = {
      "method", "similarity", "hyperparams", "folds", "grid_ms", "t_star_s",
      "response_ms", "seed", "overhead_s", "count_forced", "abstain_forced"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument("config: unknown field '" + key + "'");
    }
  }
  ExperimentConfig cfg;
  try {
    cfg.method = j.value("method", cfg.method);
    cfg.similarity = decode::similarity_from_string(j.value("similarity", std::string("inner")));
    cfg.hyperparams = j.value("hyperparams", cfg.hyperparams);
    cfg.folds = j.value("folds", cfg.folds);
    cfg.grid_ms = j.value("grid_ms", cfg.grid_ms);
    cfg.t_star_s = j.value("t_star_s", cfg.t_star_s);
    cfg.response_ms = j.value("response_ms", cfg.response_ms);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.overhead_s = j.value("overhead_s", cfg.overhead_s);
    cfg.count_forced = j.value("count_forced", cfg.count_forced);
    cfg.abstain_forced = j.value("abstain_forced", cfg.abstain_forced);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> results_header() {
  std::vector<std::string> h = {"subject", "method", "hyperparam", "similarity"};
  for (const char* name : metrics::kMetricNames) h.emplace_back(name);
  for (const char* name : metrics::kMetricNames) h.push_back(std::string("ci_") + name);
  return h;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

double parse_number(const std::string& s, const std::string& column) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("results CSV: column " + column + ": '" + s + "' is not a number");
  }
  return v;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    if (table.header.empty()) {
      table.header = std::move(record);
    } else {
      table.rows.push_back(std::move(record));
    }
    record.clear();
    any = false;
  };
  char c;
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r') {
      continue;
    } else if (c == '\n') {
      end_record();
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw std::invalid_argument("CSV: unterminated quoted field");
  if (any || !field.empty()) end_record();
  return table;
}

void write_results_csv(std::vector<metrics::MetricsRow> rows, const std::string& path) {
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.subject != b.subject) return a.subject < b.subject;
    if (a.method != b.method) return a.method < b.method;
    if (a.hyperparam != b.hyperparam) return a.hyperparam < b.hyperparam;
    return a.similarity < b.similarity;
  });
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const auto header = results_header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\r\n";
  for (const auto& r : rows) {
    out << csv_field(r.subject) << ',' << csv_field(r.method) << ',' << format_double(r.hyperparam)
        << ',' << csv_field(r.similarity);
    for (double v : r.values) out << ',' << format_double(v);
    for (double v : r.ci) out << ',' << format_double(v);
    out << "\r\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<metrics::MetricsRow> read_results_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const CsvTable table = read_csv(in);
  const auto header = results_header();
  if (table.header != header) {
    throw std::invalid_argument("results CSV " + path + ": unexpected header");
  }
  std::vector<metrics::MetricsRow> rows;
  for (const auto& rec : table.rows) {
    if (rec.size() != header.size()) {
      throw std::invalid_argument("results CSV " + path + ": row with " + std::to_string(rec.size()) +
                                  " fields");
    }
    metrics::MetricsRow r;
    r.subject = rec[0];
    r.method = rec[1];
    r.hyperparam = parse_number(rec[2], header[2]);
    r.similarity = rec[3];
    for (std::size_t m = 0; m < metrics::kMetricCount; ++m) {
      r.values[m] = parse_number(rec[4 + m], header[4 + m]);
      r.ci[m] = parse_number(rec[4 + metrics::kMetricCount + m], header[4 + metrics::kMetricCount + m]);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace bds::store
