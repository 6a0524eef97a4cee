#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clp/bench.hpp"
#include "clp/error.hpp"
#include "clp/evalues.hpp"
#include "clp/generators.hpp"
#include "clp/network.hpp"

// File formats. Every file written here starts with a "# clp-<kind> v1"
// comment line; readers skip lines starting with '#'. Indices are 0-based.
namespace clp::io {

using json = nlohmann::json;

inline constexpr std::string_view kFormatVersion = "v1";

inline std::string header_line(std::string_view kind) {
  return "# clp-" + std::string(kind) + " " + std::string(kFormatVersion) + "\n";
}

// Shortest representation that reads back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError(p.string() + ": cannot open for reading");
  return in;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(p.string() + ": cannot open for writing");
  out << text;
  if (!out) throw IoError(p.string() + ": write failed");
}

inline std::string read_text(const std::filesystem::path& p) {
  auto in = open_in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- CSV ----

struct CsvField {
  std::string_view text;
  std::size_t column = 1;  // 1-based character position
};

struct CsvLine {
  std::size_t number = 0;
  std::vector<CsvField> fields;
};

// Data lines of a CSV stream: comment lines ('#') and blank lines dropped,
// fields split on ',' and trimmed of blanks and '\r'. Field views point into
// `storage`.
inline std::vector<CsvLine> split_csv(std::istream& in, std::vector<std::string>& storage) {
  storage.clear();
  std::vector<std::size_t> numbers;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    storage.push_back(line);
    numbers.push_back(number);
  }
  std::vector<CsvLine> out;
  out.reserve(storage.size());
  for (std::size_t k = 0; k < storage.size(); ++k) {
    CsvLine l;
    l.number = numbers[k];
    const std::string_view s = storage[k];
    std::size_t start = 0;
    while (true) {
      const auto comma = s.find(',', start);
      const auto end = comma == std::string_view::npos ? s.size() : comma;
      std::size_t a = start, b = end;
      while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
      while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
      l.fields.push_back({s.substr(a, b - a), a + 1});
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    out.push_back(std::move(l));
  }
  return out;
}

inline bool is_na(std::string_view s) { return s.empty() || s == "NA"; }

inline double parse_double(const std::string& file, const CsvLine& line, const CsvField& f) {
  double v = 0.0;
  const char* b = f.text.data();
  const char* e = b + f.text.size();
  if (b != e && *b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e)
    throw ParseError(file, line.number, f.column, "expected a number, got '" + std::string(f.text) + "'");
  if (!std::isfinite(v)) throw ParseError(file, line.number, f.column, "non-finite value");
  return v;
}

inline std::uint64_t parse_index(const std::string& file, const CsvLine& line, const CsvField& f) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(f.text.data(), f.text.data() + f.text.size(), v);
  if (r.ec != std::errc() || r.ptr != f.text.data() + f.text.size())
    throw ParseError(file, line.number, f.column, "expected a nonnegative integer, got '" + std::string(f.text) + "'");
  return v;
}

struct CsvMatrix {
  DenseMatrix<double> values;      // 0 where NA
  DenseMatrix<std::uint8_t> na;    // 1 where the cell was empty or NA
  std::size_t na_count = 0;
};

inline CsvMatrix parse_matrix_csv(std::istream& in, const std::string& name = "<matrix>") {
  std::vector<std::string> storage;
  const auto lines = split_csv(in, storage);
  if (lines.empty()) throw ParseError(name, 1, 1, "no data rows");
  const std::size_t cols = lines.front().fields.size();
  CsvMatrix m{DenseMatrix<double>(lines.size(), cols, 0.0), DenseMatrix<std::uint8_t>(lines.size(), cols, 0), 0};
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto& l = lines[r];
    if (l.fields.size() != cols)
      throw ParseError(name, l.number, 1,
                       "expected " + std::to_string(cols) + " fields, found " + std::to_string(l.fields.size()));
    for (std::size_t c = 0; c < cols; ++c) {
      if (is_na(l.fields[c].text)) {
        m.na(r, c) = 1;
        ++m.na_count;
      } else {
        m.values(r, c) = parse_double(name, l, l.fields[c]);
      }
    }
  }
  return m;
}

inline CsvMatrix read_matrix_csv(const std::filesystem::path& p) {
  auto in = open_in(p);
  return parse_matrix_csv(in, p.string());
}

// 0/1 matrix, 1 = missing.
inline DenseMatrix<std::uint8_t> parse_mask_csv(std::istream& in, const std::string& name = "<mask>") {
  std::vector<std::string> storage;
  const auto lines = split_csv(in, storage);
  if (lines.empty()) throw ParseError(name, 1, 1, "no data rows");
  const std::size_t cols = lines.front().fields.size();
  DenseMatrix<std::uint8_t> m(lines.size(), cols, 0);
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto& l = lines[r];
    if (l.fields.size() != cols)
      throw ParseError(name, l.number, 1,
                       "expected " + std::to_string(cols) + " fields, found " + std::to_string(l.fields.size()));
    for (std::size_t c = 0; c < cols; ++c) {
      const auto t = l.fields[c].text;
      if (t != "0" && t != "1") throw ParseError(name, l.number, l.fields[c].column, "mask entries must be 0 or 1");
      m(r, c) = t == "1" ? 1 : 0;
    }
  }
  return m;
}

inline DenseMatrix<std::uint8_t> read_mask_csv(const std::filesystem::path& p) {
  auto in = open_in(p);
  return parse_mask_csv(in, p.string());
}

// Weights with NA on masked cells (when `na` is given).
inline std::string matrix_csv(const DenseMatrix<double>& w, const MissingMask* na = nullptr,
                              std::string_view kind = "matrix") {
  std::string out = header_line(kind);
  for (Index i = 0; i < w.rows(); ++i) {
    for (Index j = 0; j < w.cols(); ++j) {
      if (j) out += ',';
      out += (na && na->missing(i, j)) ? std::string("NA") : format_double(w(i, j));
    }
    out += '\n';
  }
  return out;
}

inline std::string mask_csv(const MissingMask& m) {
  std::string out = header_line("mask");
  for (Index i = 0; i < m.n_rows(); ++i) {
    for (Index j = 0; j < m.n_cols(); ++j) {
      if (j) out += ',';
      out += m.missing(i, j) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

// Header row naming columns; i, j, c required, `alternative` (0/1) optional,
// anything else ignored.
inline HypothesisThresholds parse_thresholds_csv(std::istream& in, const std::string& name = "<thresholds>") {
  std::vector<std::string> storage;
  const auto lines = split_csv(in, storage);
  if (lines.empty()) throw ParseError(name, 1, 1, "missing header row");
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t k = 0; k < lines[0].fields.size(); ++k) col[std::string(lines[0].fields[k].text)] = k;
  for (const char* req : {"i", "j", "c"})
    if (!col.count(req)) throw ParseError(name, lines[0].number, 1, std::string("header lacks column '") + req + "'");
  const auto alt = col.find("alternative");
  std::vector<ThresholdEntry> entries;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& l = lines[r];
    if (l.fields.size() != lines[0].fields.size())
      throw ParseError(name, l.number, 1, "field count differs from the header");
    ThresholdEntry e;
    e.at.row = parse_index(name, l, l.fields[col["i"]]);
    e.at.col = parse_index(name, l, l.fields[col["j"]]);
    e.c = parse_double(name, l, l.fields[col["c"]]);
    if (alt != col.end()) {
      const auto& f = l.fields[alt->second];
      if (f.text != "0" && f.text != "1") throw ParseError(name, l.number, f.column, "alternative must be 0 or 1");
      e.alternative = f.text == "1";
    }
    entries.push_back(e);
  }
  try {
    return HypothesisThresholds(std::move(entries));
  } catch (const ValidationError& e) {
    throw ParseError(name, 1, 1, e.what());
  }
}

inline HypothesisThresholds read_thresholds_csv(const std::filesystem::path& p) {
  auto in = open_in(p);
  return parse_thresholds_csv(in, p.string());
}

// i, j, c, alternative[, a]; `a` is the hidden true value when `truth` is given.
inline std::string thresholds_csv(const HypothesisThresholds& th, const WeightedNetwork* truth = nullptr) {
  std::string out = header_line("thresholds");
  out += truth ? "i,j,c,alternative,a\n" : "i,j,c,alternative\n";
  for (const auto& e : th.entries()) {
    out += std::to_string(e.at.row) + ',' + std::to_string(e.at.col) + ',' + format_double(e.c) + ',' +
           (e.alternative ? '1' : '0');
    if (truth) out += ',' + format_double((*truth)(e.at.row, e.at.col));
    out += '\n';
  }
  return out;
}

// --------------------------------------------------------------- JSON ----

namespace detail {

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) throw ConfigError((where.empty() ? "" : where + ".") + k + ": unknown key");
  }
}

inline std::string path_of(const std::string& where, std::string_view key) {
  return where.empty() ? std::string(key) : where + "." + std::string(key);
}

inline double number(const json& j, std::string_view key, const std::string& where, double fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw ConfigError(path_of(where, key) + ": expected a number");
  return it->get<double>();
}

inline std::uint64_t count(const json& j, std::string_view key, const std::string& where, std::uint64_t fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  const bool ok = it->is_number_unsigned() || (it->is_number_integer() && it->get<std::int64_t>() >= 0);
  if (!ok) throw ConfigError(path_of(where, key) + ": expected a nonnegative integer");
  return it->get<std::uint64_t>();
}

inline bool boolean(const json& j, std::string_view key, const std::string& where, bool fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) throw ConfigError(path_of(where, key) + ": expected true or false");
  return it->get<bool>();
}

inline std::optional<std::string> text(const json& j, std::string_view key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  if (!it->is_string()) throw ConfigError(path_of(where, key) + ": expected a string");
  return it->get<std::string>();
}

}  // namespace detail

inline json to_json(const GraphonSpec& g) {
  json j{{"family", to_string(g.family)}, {"noise", g.noise_half_width}};
  if (g.family == GraphonFamily::threshold_binary) j["threshold"] = g.threshold;
  if (g.family == GraphonFamily::rescaled_bernoulli) j["base"] = to_string(g.base);
  return j;
}

inline GraphonSpec graphon_from_json(const json& j) {
  detail::check_keys(j, {"family", "noise", "threshold", "base"}, "graphon");
  GraphonSpec g;
  if (auto f = detail::text(j, "family", "graphon")) g.family = parse_graphon_family(*f);
  if (g.family == GraphonFamily::custom) throw ConfigError("graphon.family: custom graphons are library-only");
  g.noise_half_width = detail::number(j, "noise", "graphon", g.noise_half_width);
  g.threshold = detail::number(j, "threshold", "graphon", g.threshold);
  if (auto b = detail::text(j, "base", "graphon")) g.base = parse_graphon_family(*b);
  g.validate();
  return g;
}

inline json to_json(const MissingSpec& m) {
  json j{{"mode", to_string(m.mode)}};
  switch (m.mode) {
    case MissingMode::uniform: j["q"] = m.q; break;
    case MissingMode::heterogeneous_uniform:
      j["q_lo"] = m.q_lo;
      j["q_hi"] = m.q_hi;
      break;
    case MissingMode::per_entry: {
      json rows = json::array();
      for (Index i = 0; i < m.q_matrix.rows(); ++i) {
        json r = json::array();
        for (Index k = 0; k < m.q_matrix.cols(); ++k) r.push_back(m.q_matrix(i, k));
        rows.push_back(r);
      }
      j["q_matrix"] = rows;
      break;
    }
    case MissingMode::block:
      j["row_fraction"] = m.row_fraction;
      j["col_fraction"] = m.col_fraction;
      break;
    case MissingMode::staggered:
      j["treated_fraction"] = m.treated_fraction;
      j["earliest_start"] = m.earliest_start;
      break;
  }
  return j;
}

inline MissingSpec missing_from_json(const json& j) {
  detail::check_keys(
      j, {"mode", "q", "q_lo", "q_hi", "q_matrix", "row_fraction", "col_fraction", "treated_fraction", "earliest_start"},
      "missing");
  MissingSpec m;
  if (auto s = detail::text(j, "mode", "missing")) m.mode = parse_missing_mode(*s);
  m.q = detail::number(j, "q", "missing", m.q);
  m.q_lo = detail::number(j, "q_lo", "missing", m.q_lo);
  m.q_hi = detail::number(j, "q_hi", "missing", m.q_hi);
  m.row_fraction = detail::number(j, "row_fraction", "missing", m.row_fraction);
  m.col_fraction = detail::number(j, "col_fraction", "missing", m.col_fraction);
  m.treated_fraction = detail::number(j, "treated_fraction", "missing", m.treated_fraction);
  m.earliest_start = detail::number(j, "earliest_start", "missing", m.earliest_start);
  if (auto it = j.find("q_matrix"); it != j.end()) {
    if (!it->is_array() || it->empty() || !(*it)[0].is_array())
      throw ConfigError("missing.q_matrix: expected an array of rows");
    const auto rows = it->size(), cols = (*it)[0].size();
    m.q_matrix = DenseMatrix<double>(rows, cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      const auto& r = (*it)[i];
      if (!r.is_array() || r.size() != cols) throw ConfigError("missing.q_matrix: ragged rows");
      for (std::size_t k = 0; k < cols; ++k) {
        if (!r[k].is_number()) throw ConfigError("missing.q_matrix: expected numbers");
        m.q_matrix(i, k) = r[k].get<double>();
      }
    }
  }
  m.validate();
  return m;
}

inline json to_json(const ThresholdRule& r) {
  switch (r.kind) {
    case ThresholdKind::constant: return {{"rule", "constant"}, {"value", r.value}};
    case ThresholdKind::signal: return {{"rule", "signal"}, {"fraction", r.fraction}, {"delta", r.delta}};
    case ThresholdKind::quantile: return {{"rule", "quantile"}, {"kappa", r.kappa}};
  }
  return {};
}

inline ThresholdRule threshold_rule_from_json(const json& j) {
  detail::check_keys(j, {"rule", "value", "fraction", "delta", "kappa"}, "thresholds");
  ThresholdRule r;
  const auto kind = detail::text(j, "rule", "thresholds").value_or("signal");
  if (kind == "constant")
    r = ThresholdRule::constant(detail::number(j, "value", "thresholds", 0.0));
  else if (kind == "signal")
    r = ThresholdRule::signal(detail::number(j, "fraction", "thresholds", 0.3),
                              detail::number(j, "delta", "thresholds", 1.5));
  else if (kind == "quantile")
    r = ThresholdRule::quantile(detail::number(j, "kappa", "thresholds", 0.5));
  else
    throw ConfigError("thresholds.rule: unknown rule '" + kind + "'");
  r.validate();
  return r;
}

// `threads` and `record_splits` are run-time knobs, not part of the
// resolved configuration.
inline json to_json(const ClpParams& p) {
  json j{{"ratio_train", p.ratio_train},
         {"r0", p.r0},
         {"alpha_bh", p.alpha_bh},
         {"alpha_ebh", p.alpha_ebh},
         {"inflate_c", p.inflate_c ? json(*p.inflate_c) : json(nullptr)},
         {"reps", p.m_reps}};
  j["bandwidth"] = p.kernel.auto_bandwidth ? json("auto") : json(p.kernel.bandwidth);
  if (!p.row_reps.empty()) j["row_reps"] = p.row_reps;
  return j;
}

inline void params_from_json(const json& j, ClpParams& p) {
  detail::check_keys(j, {"ratio_train", "r0", "alpha_bh", "alpha_ebh", "inflate_c", "reps", "bandwidth", "row_reps"},
                     "params");
  p.ratio_train = detail::number(j, "ratio_train", "params", p.ratio_train);
  p.r0 = detail::count(j, "r0", "params", p.r0);
  p.alpha_bh = detail::number(j, "alpha_bh", "params", p.alpha_bh);
  p.alpha_ebh = detail::number(j, "alpha_ebh", "params", p.alpha_ebh);
  if (auto it = j.find("inflate_c"); it != j.end()) {
    if (it->is_null())
      p.inflate_c.reset();
    else if (it->is_number())
      p.inflate_c = it->get<double>();
    else
      throw ConfigError("params.inflate_c: expected a number or null");
  }
  p.m_reps = detail::count(j, "reps", "params", p.m_reps);
  if (auto it = j.find("bandwidth"); it != j.end()) {
    if (it->is_string() && it->get<std::string>() == "auto") {
      p.kernel.auto_bandwidth = true;
    } else if (it->is_number()) {
      p.kernel.auto_bandwidth = false;
      p.kernel.bandwidth = it->get<double>();
    } else {
      throw ConfigError("params.bandwidth: expected a number or \"auto\"");
    }
  }
  if (auto it = j.find("row_reps"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("params.row_reps: expected an array");
    p.row_reps.clear();
    for (const auto& v : *it) {
      if (!v.is_number_unsigned()) throw ConfigError("params.row_reps: expected nonnegative integers");
      p.row_reps.push_back(v.get<std::size_t>());
    }
  }
}

inline ScalePreset parse_preset(std::string_view s) {
  if (s == "desk") return ScalePreset::desk;
  if (s == "full" || s == "paper") return ScalePreset::full;
  throw ConfigError("preset: unknown preset '" + std::string(s) + "' (expected desk or full)");
}

// Fully resolved experiment configuration; threads are excluded.
inline json to_json(const ExperimentConfig& c) {
  json j{{"graphon", to_json(c.graphon)},
         {"missing", to_json(c.missing)},
         {"thresholds", to_json(c.thresholds)},
         {"topology", to_string(c.topology)},
         {"n", c.n},
         {"replications", c.replications},
         {"seed", c.master_seed},
         {"alpha_ebh", c.alpha_ebh_sweep},
         {"alpha_bh_ratio", c.alpha_bh_ratio},
         {"alpha_bh", c.fixed_alpha_bh ? json(*c.fixed_alpha_bh) : json(nullptr)},
         {"naive_baseline", c.naive_baseline},
         {"params", to_json(c.params)}};
  if (c.topology == TopologyMode::bipartite) j["n_cols"] = c.n_cols;
  return j;
}

// Keys not present keep the values already in `c`; "preset" is applied
// before any other key.
inline void experiment_from_json(const json& j, ExperimentConfig& c) {
  detail::check_keys(j,
                     {"preset", "graphon", "missing", "thresholds", "topology", "n", "n_cols", "replications", "seed",
                      "alpha_ebh", "alpha_bh_ratio", "alpha_bh", "naive_baseline", "params"},
                     "");
  if (auto p = detail::text(j, "preset", "")) apply_preset(c, parse_preset(*p));
  if (auto it = j.find("graphon"); it != j.end()) c.graphon = graphon_from_json(*it);
  if (auto it = j.find("missing"); it != j.end()) c.missing = missing_from_json(*it);
  if (auto it = j.find("thresholds"); it != j.end()) c.thresholds = threshold_rule_from_json(*it);
  if (auto t = detail::text(j, "topology", "")) c.topology = parse_topology(*t);
  c.n = detail::count(j, "n", "", c.n);
  c.n_cols = detail::count(j, "n_cols", "", c.n_cols);
  c.replications = detail::count(j, "replications", "", c.replications);
  c.master_seed = detail::count(j, "seed", "", c.master_seed);
  if (auto it = j.find("alpha_ebh"); it != j.end()) {
    c.alpha_ebh_sweep.clear();
    if (it->is_number()) {
      c.alpha_ebh_sweep.push_back(it->get<double>());
    } else if (it->is_array()) {
      for (const auto& v : *it) {
        if (!v.is_number()) throw ConfigError("alpha_ebh: expected numbers");
        c.alpha_ebh_sweep.push_back(v.get<double>());
      }
    } else {
      throw ConfigError("alpha_ebh: expected a number or an array of numbers");
    }
  }
  c.alpha_bh_ratio = detail::number(j, "alpha_bh_ratio", "", c.alpha_bh_ratio);
  if (auto it = j.find("alpha_bh"); it != j.end()) {
    if (it->is_null())
      c.fixed_alpha_bh.reset();
    else if (it->is_number())
      c.fixed_alpha_bh = it->get<double>();
    else
      throw ConfigError("alpha_bh: expected a number or null");
  }
  c.naive_baseline = detail::boolean(j, "naive_baseline", "", c.naive_baseline);
  if (auto it = j.find("params"); it != j.end()) params_from_json(*it, c.params);
}

inline json parse_json(const std::string& text, const std::string& name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; turn it into line/column.
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(name, line, col, "malformed JSON");
  }
}

inline json read_json(const std::filesystem::path& p) { return parse_json(read_text(p), p.string()); }

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ------------------------------------------------------------ outputs ----

inline json coordinate_json(const Coordinate& c) { return json::array({c.row, c.col}); }

inline json rejections_json(const ClpResult& r, double alpha_bh, std::optional<double> inflate_c) {
  std::map<Coordinate, const EValueRecord*> by_coord;
  for (const auto& e : r.evalues) by_coord[e.at] = &e;
  json rejected = json::array();
  for (const auto& c : r.rejection.rejected) {
    const auto* e = by_coord.at(c);
    rejected.push_back({{"i", c.row}, {"j", c.col}, {"e", e->e}, {"e_bar", e->e_bar}});
  }
  const auto& g = r.rejection;
  return {{"format", "clp-rejections v1"},
          {"alpha_ebh", g.alpha_ebh},
          {"alpha_bh", alpha_bh},
          {"inflate_c", inflate_c ? json(*inflate_c) : json(nullptr)},
          {"n_total", r.evalues.size()},
          {"k_hat", g.k_hat},
          {"threshold", std::isfinite(g.threshold) ? json(g.threshold) : json(nullptr)},
          {"rejected", rejected}};
}

inline std::string evalues_csv(const ClpResult& r) {
  std::string out = header_line("evalues") + "i,j,e_bar,e,reps,block_size,inflation,rejected\n";
  std::size_t k = 0;
  const auto& rej = r.rejection.rejected;
  for (const auto& e : r.evalues) {
    while (k < rej.size() && rej[k] < e.at) ++k;
    const bool hit = k < rej.size() && rej[k] == e.at;
    out += std::to_string(e.at.row) + ',' + std::to_string(e.at.col) + ',' + format_double(e.e_bar) + ',' +
           format_double(e.e) + ',' + std::to_string(e.reps) + ',' + std::to_string(e.block_size) + ',' +
           format_double(e.inflation) + ',' + (hit ? '1' : '0') + '\n';
  }
  return out;
}

inline json diagnostics_json(const ClpDiagnostics& d) {
  const auto& l = d.local;
  return {{"format", "clp-diagnostics v1"},
          {"tested", d.tested},
          {"starved_rows", d.starved_rows},
          {"skipped_reps", d.skipped_reps},
          {"hypotheses_evaluated", l.hypotheses},
          {"empty_omega", l.empty_omega},
          {"fallback_predictions", l.fallbacks},
          {"kernel_underflows", l.kernel_underflows},
          {"mean_omega_size", l.hypotheses ? static_cast<double>(l.omega_total) / static_cast<double>(l.hypotheses)
                                           : 0.0},
          {"tie_rate", l.ties.compared ? static_cast<double>(l.ties.tied) / static_cast<double>(l.ties.compared)
                                       : 0.0},
          {"warnings", d.warnings}};
}

inline json splits_json(const LocalResults& local) {
  json rows = json::array();
  for (const auto& row : local.rows) {
    json r{{"row", row.row}, {"starved", row.starved}};
    if (row.starved) {
      r["reason"] = row.reason;
      rows.push_back(r);
      continue;
    }
    r["r1"] = row.r1;
    json blocks = json::array();
    for (const auto& b : row.blocks) {
      json reps = json::array();
      for (const auto& s : b.splits) {
        json subsets = json::object();
        for (std::size_t k = 0; k < s.allocation.block.size(); ++k)
          subsets[std::to_string(s.allocation.block[k])] = s.allocation.subsets[k];
        reps.push_back({{"rep", s.rep}, {"train", s.split.train}, {"calib", s.split.calib}, {"calib_subsets", subsets}});
      }
      blocks.push_back({{"columns", b.columns}, {"reps", reps}});
    }
    r["blocks"] = blocks;
    rows.push_back(r);
  }
  return {{"format", "clp-splits v1"}, {"rows", rows}};
}

// i0, j0, k0, rep, p (and its exact numerator), c, calib_size.
inline std::string pvalues_csv(const LocalResults& local) {
  std::string out = header_line("pvalues") + "i0,j0,k0,rep,p,p_num,c,calib_size\n";
  for (const auto& row : local.rows)
    for (const auto& b : row.blocks)
      for (std::size_t l = 0; l < b.reps.size(); ++l) {
        if (!b.reps[l]) continue;
        for (const auto& rec : *b.reps[l])
          out += std::to_string(rec.at.row) + ',' + std::to_string(rec.at.col) + ',' + std::to_string(rec.block) +
                 ',' + std::to_string(l) + ',' + format_double(rec.p.value()) + ',' + std::to_string(rec.p.num) + ',' +
                 format_double(rec.threshold) + ',' + std::to_string(rec.calib_size) + '\n';
      }
  return out;
}

// Per-replication metrics. Runtimes live in timings_csv so that this file
// depends only on the configuration.
inline std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out = header_line("metrics") + "replication,method,alpha_ebh,alpha_bh,fdp,power,rejected,tested,alternatives,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    for (auto& ch : err)
      if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    out += std::to_string(r.replication) + ',' + r.method + ',' + format_double(r.alpha_ebh) + ',' +
           format_double(r.alpha_bh) + ',' + (r.error.empty() ? format_double(r.fdp) : "NA") + ',' +
           (r.error.empty() ? format_double(r.power) : "NA") + ',' + std::to_string(r.rejected) + ',' +
           std::to_string(r.tested) + ',' + std::to_string(r.alternatives) + ',' + err + '\n';
  }
  return out;
}

inline std::string timings_csv(const std::vector<MetricRow>& rows) {
  std::string out = header_line("timings") + "replication,method,alpha_ebh,runtime_ms\n";
  for (const auto& r : rows)
    out += std::to_string(r.replication) + ',' + r.method + ',' + format_double(r.alpha_ebh) + ',' +
           format_double(r.runtime_ms) + '\n';
  return out;
}

inline std::vector<MetricRow> parse_metrics_csv(std::istream& in, const std::string& name = "<metrics>") {
  std::vector<std::string> storage;
  const auto lines = split_csv(in, storage);
  if (lines.empty()) throw ParseError(name, 1, 1, "missing header row");
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t k = 0; k < lines[0].fields.size(); ++k) col[std::string(lines[0].fields[k].text)] = k;
  for (const char* req : {"replication", "method", "alpha_ebh", "alpha_bh", "fdp", "power", "rejected"})
    if (!col.count(req)) throw ParseError(name, lines[0].number, 1, std::string("header lacks column '") + req + "'");
  std::vector<MetricRow> rows;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& l = lines[r];
    if (l.fields.size() != lines[0].fields.size())
      throw ParseError(name, l.number, 1, "field count differs from the header");
    auto f = [&](const char* k) -> const CsvField& { return l.fields[col.find(k)->second]; };
    MetricRow m;
    m.replication = parse_index(name, l, f("replication"));
    m.method = std::string(f("method").text);
    m.alpha_ebh = parse_double(name, l, f("alpha_ebh"));
    m.alpha_bh = parse_double(name, l, f("alpha_bh"));
    if (col.count("error")) m.error = std::string(f("error").text);
    if (is_na(f("fdp").text) || is_na(f("power").text)) {
      if (m.error.empty()) m.error = "missing metrics";
    } else {
      m.fdp = parse_double(name, l, f("fdp"));
      m.power = parse_double(name, l, f("power"));
    }
    m.rejected = parse_index(name, l, f("rejected"));
    if (col.count("tested")) m.tested = parse_index(name, l, f("tested"));
    if (col.count("alternatives")) m.alternatives = parse_index(name, l, f("alternatives"));
    rows.push_back(std::move(m));
  }
  return rows;
}

inline std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& p) {
  auto in = open_in(p);
  return parse_metrics_csv(in, p.string());
}

inline json summary_json(const std::vector<SummaryRow>& summary) {
  json rows = json::array();
  for (const auto& s : summary)
    rows.push_back({{"method", s.method},
                    {"alpha_ebh", s.alpha_ebh},
                    {"alpha_bh", s.alpha_bh},
                    {"replications", s.replications},
                    {"failures", s.failures},
                    {"mean_fdr", s.mean_fdr},
                    {"se_fdr", s.se_fdr},
                    {"mean_power", s.mean_power},
                    {"se_power", s.se_power},
                    {"mean_rejected", s.mean_rejected}});
  return {{"format", "clp-summary v1"}, {"rows", rows}};
}

inline std::string curves_csv(const std::vector<SummaryRow>& summary) {
  std::string out = header_line("curves") + "method,alpha_ebh,alpha_bh,mean_fdr,se_fdr,mean_power,se_power,mean_rejected,replications,failures\n";
  for (const auto& s : summary)
    out += s.method + ',' + format_double(s.alpha_ebh) + ',' + format_double(s.alpha_bh) + ',' +
           format_double(s.mean_fdr) + ',' + format_double(s.se_fdr) + ',' + format_double(s.mean_power) + ',' +
           format_double(s.se_power) + ',' + format_double(s.mean_rejected) + ',' + std::to_string(s.replications) +
           ',' + std::to_string(s.failures) + '\n';
  return out;
}

// Fixed-width table of FDR and power against alpha_ebh.
inline std::string report_table(const std::vector<SummaryRow>& summary) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %9s %9s %8s %8s %8s %8s %10s %5s %5s\n", "method", "alpha_ebh", "alpha_bh",
                "FDR", "se", "power", "se", "rejected", "reps", "fail");
  out << buf;
  for (const auto& s : summary) {
    std::snprintf(buf, sizeof buf, "%-8s %9.4f %9.4f %8.4f %8.4f %8.4f %8.4f %10.2f %5zu %5zu\n", s.method.c_str(),
                  s.alpha_ebh, s.alpha_bh, s.mean_fdr, s.se_fdr, s.mean_power, s.se_power, s.mean_rejected,
                  s.replications, s.failures);
    out << buf;
  }
  return out.str();
}

}  // namespace clp::io
