#pragma once

// State-log I/O (line format and CSV export), coded datasets, and
// deterministic stratified holdout splits.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sxai/domain.hpp"
#include "sxai/error.hpp"
#include "sxai/rng.hpp"
#include "sxai/simulator.hpp"

namespace sxai {

// ---------------------------------------------------------------------------
// Record line format

/// `vessel=<id> tick=<int> ready_plan=... obstacle_found=<bool>[ behaviour=<token>]`
inline std::string format_record(const StateRecord& r) {
  std::string line = "vessel=" + r.vessel + " tick=" + std::to_string(r.tick);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    line += ' ';
    line += kFeatureNames[f];
    line += '=';
    line += feature_token(r.state, f);
  }
  if (r.behaviour) {
    line += " behaviour=";
    line += to_string(*r.behaviour);
  }
  return line;
}

inline StateRecord parse_record(std::string_view line, long line_no = 0) {
  auto fail = [&](const std::string& why) -> Error {
    return Error(Errc::parse_error, "line " + std::to_string(line_no) + ": " + why, "", "",
                 line_no);
  };
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    auto end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    if (end == pos) throw fail("empty field");
    fields.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
  if (fields.size() != 7 && fields.size() != 8)
    throw fail("expected 7 or 8 fields, got " + std::to_string(fields.size()));

  auto value_of = [&](std::size_t i, std::string_view key) {
    const auto f = fields[i];
    if (f.size() <= key.size() || f.substr(0, key.size()) != key || f[key.size()] != '=')
      throw fail("expected field '" + std::string(key) + "'");
    return f.substr(key.size() + 1);
  };

  StateRecord r;
  r.vessel = std::string(value_of(0, "vessel"));
  const auto tick = value_of(1, "tick");
  const auto [ptr, ec] = std::from_chars(tick.data(), tick.data() + tick.size(), r.tick);
  if (ec != std::errc{} || ptr != tick.data() + tick.size() || r.tick < 0)
    throw fail("bad tick '" + std::string(tick) + "'");
  Codes c{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) c[f] = encode_category(f, value_of(2 + f, kFeatureNames[f]));
  r.state = decode(c);
  if (fields.size() == 8) r.behaviour = parse_behaviour(value_of(7, "behaviour"));
  return r;
}

/// Reads a line-format log. Blank lines are rejected.
inline std::vector<StateRecord> read_records(std::istream& in) {
  std::vector<StateRecord> out;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    out.push_back(parse_record(line, n));
  }
  return out;
}

inline std::vector<StateRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path + "'");
  return read_records(in);
}

inline void write_records(std::ostream& out, const std::vector<StateRecord>& records) {
  for (const auto& r : records) out << format_record(r) << '\n';
}

inline void write_logs(const std::string& path, const std::vector<StateLog>& logs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write '" + path + "'");
  for (const auto& log : logs) write_records(out, log.records);
}

// ---------------------------------------------------------------------------
// Dataset

struct Dataset {
  std::vector<Codes> features;
  std::vector<std::uint8_t> labels;
  // Source record identity, kept so a dataset can be written back out.
  std::vector<std::string> vessels;
  std::vector<std::int64_t> ticks;
  std::string provenance;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }

  bool operator==(const Dataset&) const = default;
};

inline Dataset to_dataset(const std::vector<StateRecord>& records, std::string provenance = {}) {
  Dataset d;
  d.provenance = std::move(provenance);
  for (const auto& r : records) {
    if (!r.behaviour)
      throw Error(Errc::parse_error, "record at tick " + std::to_string(r.tick) + " has no label");
    d.features.push_back(encode(r.state));
    d.labels.push_back(code_of(*r.behaviour));
    d.vessels.push_back(r.vessel);
    d.ticks.push_back(r.tick);
  }
  return d;
}

inline Dataset to_dataset(const std::vector<StateLog>& logs, std::string provenance = {}) {
  std::vector<StateRecord> all;
  for (const auto& log : logs) all.insert(all.end(), log.records.begin(), log.records.end());
  return to_dataset(all, std::move(provenance));
}

inline std::vector<StateRecord> to_records(const Dataset& d) {
  std::vector<StateRecord> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    out.push_back({d.vessels[i], d.ticks[i], decode(d.features[i]), behaviour_from_code(d.labels[i])});
  return out;
}

/// Loads a labelled log; `.csv` files are read as the tabular export.
inline Dataset load_csv(const std::string& path);

inline Dataset load_log(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") return load_csv(path);
  return to_dataset(read_records(path), "log:" + path);
}

inline Dataset subset(const Dataset& d, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.provenance = d.provenance;
  for (auto i : rows) {
    out.features.push_back(d.features[i]);
    out.labels.push_back(d.labels[i]);
    out.vessels.push_back(d.vessels.empty() ? std::string() : d.vessels[i]);
    out.ticks.push_back(d.ticks.empty() ? 0 : d.ticks[i]);
  }
  return out;
}

inline std::array<std::size_t, kBehaviourCount> class_counts(const Dataset& d) {
  std::array<std::size_t, kBehaviourCount> counts{};
  for (auto y : d.labels) ++counts[y];
  return counts;
}

// ---------------------------------------------------------------------------
// CSV export

inline constexpr std::string_view kCsvHeader =
    "vessel,tick,ready_plan,current_objective,progress_type,same_objective,obstacle_found,behaviour";

inline void write_csv(std::ostream& out, const std::vector<StateRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.vessel << ',' << r.tick;
    for (std::size_t f = 0; f < kFeatureCount; ++f) out << ',' << feature_token(r.state, f);
    out << ',' << (r.behaviour ? to_string(*r.behaviour) : std::string_view{}) << '\n';
  }
}

inline std::vector<StateRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw Error(Errc::parse_error, "line 1: missing or unexpected CSV header", "", "", 1);
  std::vector<StateRecord> out;
  long n = 1;
  while (std::getline(in, line)) {
    ++n;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 8)
      throw Error(Errc::parse_error, "line " + std::to_string(n) + ": expected 8 columns", "", "", n);
    // Reuse the line-format parser so both formats share validation.
    std::string as_line = "vessel=" + cells[0] + " tick=" + cells[1];
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      as_line += " " + std::string(kFeatureNames[f]) + "=" + cells[2 + f];
    if (!cells[7].empty()) as_line += " behaviour=" + cells[7];
    out.push_back(parse_record(as_line, n));
  }
  return out;
}

inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path + "'");
  return to_dataset(read_csv(in), "csv:" + path);
}

// ---------------------------------------------------------------------------
// Stratified holdout split

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;

  bool operator==(const Split&) const = default;
};

namespace detail {

/// Row indices grouped by class code.
inline std::array<std::vector<std::size_t>, kBehaviourCount> rows_by_class(
    std::span<const std::uint8_t> labels, std::span<const std::size_t> rows) {
  std::array<std::vector<std::size_t>, kBehaviourCount> out;
  for (auto i : rows) out[labels[i]].push_back(i);
  return out;
}

/// Largest-remainder apportionment of `total` over `quotas`; ties go to the
/// lower index.
inline std::vector<std::size_t> largest_remainder(std::span<const double> quotas,
                                                  std::size_t total) {
  std::vector<std::size_t> out(quotas.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < quotas.size(); ++i) {
    out[i] = static_cast<std::size_t>(std::floor(quotas[i] + 1e-9));
    assigned += out[i];
  }
  std::vector<std::size_t> order(quotas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
    return quotas[a] - std::floor(quotas[a] + 1e-9) > quotas[b] - std::floor(quotas[b] + 1e-9) + 1e-12;
  });
  for (std::size_t k = 0; assigned < total && k < order.size(); ++k, ++assigned) ++out[order[k]];
  return out;
}

}  // namespace detail

inline Split stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(Errc::invalid_argument, "test_fraction must lie in (0, 1)");
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto by_class = detail::rows_by_class(data.labels, all);

  std::vector<double> quotas(kBehaviourCount, 0.0);
  for (std::size_t c = 0; c < kBehaviourCount; ++c) {
    if (by_class[c].size() == 1)
      throw Error(Errc::degenerate_class,
                  "class " + std::string(kBehaviourTokens[c]) + " has a single row");
    quotas[c] = static_cast<double>(by_class[c].size()) * test_fraction;
  }
  const auto total =
      static_cast<std::size_t>(std::floor(static_cast<double>(data.size()) * test_fraction + 0.5));
  auto take = detail::largest_remainder(quotas, total);

  Split split;
  split.seed = seed;
  Rng rng(seed);
  for (std::size_t c = 0; c < kBehaviourCount; ++c) {
    auto& rows = by_class[c];
    if (rows.empty()) continue;
    const auto n_test = std::clamp<std::size_t>(take[c], 1, rows.size() - 1);
    rng.shuffle(std::span(rows));
    split.test.insert(split.test.end(), rows.begin(), rows.begin() + static_cast<long>(n_test));
    split.train.insert(split.train.end(), rows.begin() + static_cast<long>(n_test), rows.end());
  }
  std::ranges::sort(split.train);
  std::ranges::sort(split.test);
  return split;
}

/// Stratified k-fold assignment over `rows`: each class's rows are shuffled
/// and dealt round-robin, continuing the deal across classes so fold sizes
/// stay balanced. Returns the test rows of each fold, sorted.
inline std::vector<std::vector<std::size_t>> stratified_folds(std::span<const std::uint8_t> labels,
                                                              std::span<const std::size_t> rows,
                                                              std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::invalid_argument, "fold count must be >= 2");
  auto by_class = detail::rows_by_class(labels, rows);
  std::vector<std::vector<std::size_t>> folds(k);
  Rng rng(seed);
  std::size_t next = 0;
  for (auto& cls : by_class) {
    rng.shuffle(std::span(cls));
    for (auto i : cls) folds[next++ % k].push_back(i);
  }
  for (auto& f : folds) std::ranges::sort(f);
  return folds;
}

}  // namespace sxai
