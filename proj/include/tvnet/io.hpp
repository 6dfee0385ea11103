#pragma once

// Ingestion of delimited observation files and serialization of results:
// line-delimited edge records, dense parameter-path tables, TSV tables and
// the run manifest. Numbers are written with 17 significant digits so every
// double survives a write/read cycle unchanged.

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tvnet/error.hpp"
#include "tvnet/graph.hpp"
#include "tvnet/ising.hpp"

namespace tvnet {

inline constexpr const char* kSoftwareVersion = "1.0.0";
inline constexpr int kEdgesFormatVersion = 1;
inline constexpr int kPathsFormatVersion = 1;
inline constexpr int kTableFormatVersion = 1;
inline constexpr int kManifestFormatVersion = 1;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open file for reading");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path.string(), "read failed");
  return content;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open file for writing");
  out << content;
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("internal", "SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

// ---------------------------------------------------------------- ingestion

enum class InputFormat { csv, tsv };
enum class ValueMap { plus_minus_one, zero_one };
enum class MissingPolicy { fill_minus_one, drop_row, error };

inline InputFormat parse_input_format(const std::string& s) {
  if (s == "csv") return InputFormat::csv;
  if (s == "tsv") return InputFormat::tsv;
  throw InvalidArgument("unknown input format '" + s + "'");
}
inline ValueMap parse_value_map(const std::string& s) {
  if (s == "pm1") return ValueMap::plus_minus_one;
  if (s == "01") return ValueMap::zero_one;
  throw InvalidArgument("unknown value map '" + s + "' (expected pm1 or 01)");
}
inline MissingPolicy parse_missing_policy(const std::string& s) {
  if (s == "fill_minus_one") return MissingPolicy::fill_minus_one;
  if (s == "drop_row") return MissingPolicy::drop_row;
  if (s == "error") return MissingPolicy::error;
  throw InvalidArgument("unknown missing policy '" + s + "'");
}

struct IngestionConfig {
  std::filesystem::path path;
  InputFormat format = InputFormat::csv;
  bool has_header = false;
  // Column name when the file has a header, otherwise a 0-based index.
  std::optional<std::string> time_column;
  ValueMap value_map = ValueMap::plus_minus_one;
  std::vector<std::string> missing_tokens = {"NA", ""};
  MissingPolicy missing_policy = MissingPolicy::fill_minus_one;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> split_fields(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(delim, start);
    const std::string_view field = line.substr(start, pos == std::string_view::npos ? line.npos : pos - start);
    out.emplace_back(trim(field));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct NumberedLine {
  std::size_t number;  // 1-based line number in the file
  std::string_view text;
};

inline std::vector<NumberedLine> nonblank_lines(std::string_view text) {
  std::vector<NumberedLine> out;
  std::size_t number = 0, start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++number;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.push_back({number, line});
    start = end + 1;
  }
  return out;
}

}  // namespace detail

// Maps distinct sorted stamps affinely onto (0, 1]: the largest goes to 1 and
// the smallest to 1/m for equally spaced input, matching the default grid.
inline std::vector<double> rescale_times(const std::vector<double>& distinct) {
  const std::size_t m = distinct.size();
  if (m == 1) return {1.0};
  const double lo = distinct.front();
  const double range = distinct.back() - lo;
  const double delta = range / static_cast<double>(m - 1);
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = (distinct[i] - lo + delta) / (range + delta);
  return out;
}

// Rows are observations and columns variables. Without a time column each row
// is its own time point on {1/m, ..., 1}; with one, rows sharing a stamp
// become replicates of that time point and stamps must be non-decreasing.
inline Dataset ingest_text(std::string_view text, const IngestionConfig& cfg) {
  const char delim = cfg.format == InputFormat::csv ? ',' : '\t';
  const auto lines = detail::nonblank_lines(text);
  std::size_t first = 0;
  std::vector<std::string> names;
  if (cfg.has_header) {
    if (lines.empty()) throw ValidationError("input has no header line");
    names = detail::split_fields(lines[0].text, delim);
    first = 1;
  }
  if (lines.size() <= first) throw ValidationError("input has no observation rows");
  const std::size_t columns = cfg.has_header ? names.size() : detail::split_fields(lines[first].text, delim).size();

  std::optional<std::size_t> time_col;
  if (cfg.time_column) {
    if (cfg.has_header) {
      const auto it = std::find(names.begin(), names.end(), *cfg.time_column);
      if (it == names.end()) throw ValidationError("time column '" + *cfg.time_column + "' not found in header");
      time_col = static_cast<std::size_t>(it - names.begin());
    } else {
      std::size_t idx = 0;
      const auto& s = *cfg.time_column;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), idx);
      if (ec != std::errc{} || ptr != s.data() + s.size() || idx >= columns)
        throw ValidationError("time column '" + s + "' is not a valid column index for a headerless file");
      time_col = idx;
    }
  }
  const std::size_t p = columns - (time_col ? 1 : 0);
  if (p < 2) throw ValidationError("need at least two variable columns");

  auto is_missing = [&](const std::string& f) {
    return std::find(cfg.missing_tokens.begin(), cfg.missing_tokens.end(), f) != cfg.missing_tokens.end();
  };
  auto map_value = [&](const std::string& f) -> int {
    if (cfg.value_map == ValueMap::zero_one) {
      if (f == "0") return -1;
      if (f == "1") return 1;
    } else {
      if (f == "1" || f == "+1") return 1;
      if (f == "-1") return -1;
    }
    return 0;
  };

  std::vector<double> stamps;
  std::vector<SpinVector> rows;
  for (std::size_t li = first; li < lines.size(); ++li) {
    const auto& line = lines[li];
    const auto fields = detail::split_fields(line.text, delim);
    if (fields.size() != columns)
      throw ParseError(line.number, std::min(fields.size(), columns) + 1,
                       "row " + std::to_string(line.number) + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(columns));
    std::vector<std::int8_t> spins;
    spins.reserve(p);
    bool drop = false;
    double stamp = 0.0;
    for (std::size_t c = 0; c < columns; ++c) {
      const std::string& f = fields[c];
      const std::string where = " at row " + std::to_string(line.number) + ", column " + std::to_string(c + 1);
      if (time_col && c == *time_col) {
        const auto v = parse_double(f);
        if (!v || !std::isfinite(*v)) throw ParseError(line.number, c + 1, "invalid time stamp '" + f + "'" + where);
        stamp = *v;
        continue;
      }
      if (is_missing(f)) {
        if (cfg.missing_policy == MissingPolicy::error)
          throw ParseError(line.number, c + 1, "missing value" + where);
        if (cfg.missing_policy == MissingPolicy::drop_row) drop = true;
        spins.push_back(-1);
        continue;
      }
      const int s = map_value(f);
      if (s == 0) throw ParseError(line.number, c + 1, "unmappable value '" + f + "'" + where);
      spins.push_back(static_cast<std::int8_t>(s));
    }
    if (drop) continue;
    if (time_col && !stamps.empty() && stamp < stamps.back())
      throw ValidationError("time stamps decrease at row " + std::to_string(line.number));
    stamps.push_back(stamp);
    rows.emplace_back(std::move(spins));
  }
  if (rows.empty()) throw ValidationError("no observation rows remain after missing-value handling");

  std::vector<double> distinct;
  std::vector<std::vector<SpinVector>> obs;
  if (!time_col) {
    for (auto& r : rows) obs.push_back({std::move(r)});
    std::vector<double> grid = Dataset::uniform_grid(obs.size());
    return Dataset(p, std::move(grid), std::move(obs));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (distinct.empty() || stamps[i] != distinct.back()) {
      distinct.push_back(stamps[i]);
      obs.emplace_back();
    }
    obs.back().push_back(std::move(rows[i]));
  }
  std::vector<double> times = rescale_times(distinct);
  for (std::size_t t = 1; t < times.size(); ++t)
    if (!(times[t] > times[t - 1])) throw ValidationError("time stamps too close to separate after rescaling");
  return Dataset(p, std::move(times), std::move(obs));
}

inline Dataset ingest(const IngestionConfig& cfg) { return ingest_text(read_file(cfg.path), cfg); }

// Writes a dataset in the layout ingest() reads back with a header and a
// time column named "t": one row per replicate.
inline std::string dataset_to_csv(const Dataset& data) {
  std::string out = "t";
  for (std::size_t j = 0; j < data.dimension(); ++j) out += ",x" + std::to_string(j);
  out += '\n';
  for (std::size_t t = 0; t < data.n_times(); ++t)
    for (const SpinVector& x : data.at(t)) {
      out += format_double(data.times()[t]);
      for (std::size_t j = 0; j < x.size(); ++j) out += x[j] > 0 ? ",1" : ",-1";
      out += '\n';
    }
  return out;
}

// ---------------------------------------------------------------- edges

inline std::string edges_to_jsonl(const GraphSequence& g) {
  std::string out = "{\"format\":\"tvnet-edges\",\"version\":" + std::to_string(kEdgesFormatVersion) +
                    ",\"p\":" + std::to_string(g.dimension()) + ",\"times\":[";
  for (std::size_t t = 0; t < g.n_times(); ++t) {
    if (t) out += ',';
    out += format_double(g.times()[t]);
  }
  out += "]}\n";
  for (std::size_t t = 0; t < g.n_times(); ++t)
    for (const Edge& e : g.edges(t))
      out += "{\"t\":" + format_double(g.times()[t]) + ",\"u\":" + std::to_string(e.u) +
             ",\"v\":" + std::to_string(e.v) + ",\"theta\":" + format_double(e.theta) + "}\n";
  return out;
}

inline GraphSequence edges_from_jsonl(std::string_view text) {
  const auto lines = detail::nonblank_lines(text);
  if (lines.empty()) throw ParseError(1, 0, "edge file is empty");
  GraphSequence g;
  std::vector<double> times;
  try {
    const auto header = nlohmann::json::parse(lines[0].text);
    if (header.value("format", "") != "tvnet-edges") throw ParseError(lines[0].number, 0, "not an edge file");
    if (header.at("version").get<int>() != kEdgesFormatVersion)
      throw ParseError(lines[0].number, 0, "unsupported edge file version");
    times = header.at("times").get<std::vector<double>>();
    g = GraphSequence(header.at("p").get<std::size_t>(), times);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(lines[0].number, 0, std::string("malformed edge file header: ") + e.what());
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      const auto rec = nlohmann::json::parse(lines[i].text);
      const double t = rec.at("t").get<double>();
      const auto it = std::find(times.begin(), times.end(), t);
      if (it == times.end())
        throw ParseError(lines[i].number, 0, "edge record time " + format_double(t) + " not in the header grid");
      g.add_edge(static_cast<std::size_t>(it - times.begin()), rec.at("u").get<NodeId>(), rec.at("v").get<NodeId>(),
                 rec.at("theta").get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lines[i].number, 0, std::string("malformed edge record: ") + e.what());
    } catch (const InvalidArgument& e) {
      throw ParseError(lines[i].number, 0, e.what());
    }
  }
  return g;
}

// ---------------------------------------------------------------- paths

// Dense table: one row per (node, time point), one column per node v holding
// theta_uv (0 on the diagonal).
inline std::string paths_to_tsv(const std::vector<NodeParamPath>& paths, const std::vector<double>& times) {
  const std::size_t p = paths.size();
  std::string out = "node\ttime_index\tt";
  for (std::size_t v = 0; v < p; ++v) out += "\tv" + std::to_string(v);
  out += '\n';
  for (const NodeParamPath& path : paths) {
    if (path.width() + 1 != p || path.n_times() != times.size())
      throw InvalidArgument("path dimensions do not match the node count and time grid");
    for (std::size_t t = 0; t < times.size(); ++t) {
      out += std::to_string(path.node()) + '\t' + std::to_string(t) + '\t' + format_double(times[t]);
      for (NodeId v = 0; v < p; ++v)
        out += '\t' + (v == path.node() ? std::string("0") : format_double(path.at(t, slot_of(path.node(), v))));
      out += '\n';
    }
  }
  return out;
}

struct PathTable {
  std::vector<double> times;
  std::vector<NodeParamPath> paths;
};

inline PathTable paths_from_tsv(std::string_view text) {
  const auto lines = detail::nonblank_lines(text);
  if (lines.empty()) throw ParseError(1, 0, "path table is empty");
  const auto header = detail::split_fields(lines[0].text, '\t');
  if (header.size() < 5 || header[0] != "node" || header[1] != "time_index" || header[2] != "t")
    throw ParseError(lines[0].number, 1, "unexpected path table header");
  const std::size_t p = header.size() - 3;
  const std::size_t rows = lines.size() - 1;
  if (rows % p != 0) throw ParseError(lines.back().number, 0, "row count is not a multiple of the node count");
  const std::size_t n = rows / p;
  PathTable table;
  table.times.resize(n);
  for (NodeId u = 0; u < p; ++u) table.paths.emplace_back(u, n, p - 1);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& line = lines[r + 1];
    const auto fields = detail::split_fields(line.text, '\t');
    if (fields.size() != header.size()) throw ParseError(line.number, fields.size(), "wrong field count");
    const NodeId u = r / n;
    const std::size_t t = r % n;
    if (fields[0] != std::to_string(u) || fields[1] != std::to_string(t))
      throw ParseError(line.number, 1, "rows are not ordered by node, then time index");
    std::vector<double> values(header.size());
    for (std::size_t c = 2; c < fields.size(); ++c) {
      const auto v = parse_double(fields[c]);
      if (!v) throw ParseError(line.number, c + 1, "invalid number '" + fields[c] + "'");
      values[c] = *v;
    }
    if (u == 0) table.times[t] = values[2];
    else if (values[2] != table.times[t]) throw ParseError(line.number, 3, "time stamp differs between nodes");
    for (NodeId v = 0; v < p; ++v)
      if (v != u) table.paths[u].at(t, slot_of(u, v)) = values[3 + v];
  }
  return table;
}

// ---------------------------------------------------------------- tables

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_tsv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += '\t';
        out += cells[i];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

inline Table metrics_table(const std::vector<std::pair<std::string, MetricsResult>>& labelled) {
  Table t{{"label", "precision", "recall", "f1"}, {}};
  for (const auto& [label, m] : labelled)
    t.rows.push_back({label, format_double(m.precision), format_double(m.recall), format_double(m.f1)});
  return t;
}

// ---------------------------------------------------------------- manifest

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp = std::chrono::system_clock::now()) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string method;
  nlohmann::json tuning = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
  std::string input_path;
  std::string input_digest;
  unsigned threads = 1;
  std::string started;
  std::string finished;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["manifest_version"] = kManifestFormatVersion;
    j["software_version"] = kSoftwareVersion;
    j["command"] = command;
    j["argv"] = argv;
    if (!method.empty()) j["method"] = method;
    j["tuning"] = tuning;
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    if (!input_path.empty()) {
      j["input"] = {{"path", input_path}, {"sha256", input_digest}};
    }
    j["threads"] = threads;
    j["started"] = started;
    j["finished"] = finished;
    j["formats"] = {{"edges", kEdgesFormatVersion},
                    {"paths", kPathsFormatVersion},
                    {"tables", kTableFormatVersion},
                    {"manifest", kManifestFormatVersion}};
    for (const auto& [k, v] : extra.items()) j[k] = v;
    return j;
  }
};

}  // namespace tvnet
