#pragma once

#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "clcd/error.hpp"
#include "clcd/var_set.hpp"

namespace clcd {

using Code = std::uint16_t;

enum class Role { feature, label };

// Dataset
//
// Immutable, column-oriented table of categorical codes. Codes of variable v
// lie in [0, arity(v)). Any number of readers may share one instance.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<std::string> names, std::vector<Role> roles, std::vector<int> arities,
          std::vector<std::vector<Code>> columns)
      : names_(std::move(names)),
        roles_(std::move(roles)),
        arities_(std::move(arities)),
        columns_(std::move(columns)) {
    const std::size_t n_vars = names_.size();
    if (roles_.size() != n_vars || arities_.size() != n_vars || columns_.size() != n_vars)
      throw Error("dataset: names, roles, arities and columns differ in length");
    n_rows_ = n_vars == 0 ? 0 : columns_.front().size();
    for (std::size_t v = 0; v < n_vars; ++v) {
      if (arities_[v] < 1) throw Error("dataset: arity of '" + names_[v] + "' must be >= 1");
      if (columns_[v].size() != n_rows_) throw Error("dataset: ragged column '" + names_[v] + "'");
      for (Code c : columns_[v])
        if (c >= arities_[v])
          throw Error("dataset: code " + std::to_string(c) + " out of range for '" + names_[v] + "'");
      if (roles_[v] == Role::label) labels_.insert(static_cast<VarId>(v));
      else features_.insert(static_cast<VarId>(v));
      index_.emplace(names_[v], static_cast<VarId>(v));
    }
    if (index_.size() != n_vars) throw Error("dataset: duplicate variable names");
    if (labels_.empty()) throw Error("dataset: at least one label is required");
  }

  [[nodiscard]] std::size_t n_vars() const { return names_.size(); }
  [[nodiscard]] std::size_t n_rows() const { return n_rows_; }
  [[nodiscard]] int arity(VarId v) const { return arities_.at(v); }
  [[nodiscard]] Role role(VarId v) const { return roles_.at(v); }
  [[nodiscard]] const std::string& name(VarId v) const { return names_.at(v); }
  [[nodiscard]] std::span<const Code> column(VarId v) const { return columns_.at(v); }
  [[nodiscard]] const VarSet& labels() const { return labels_; }
  [[nodiscard]] const VarSet& features() const { return features_; }
  [[nodiscard]] VarSet all() const { return VarSet::range(static_cast<VarId>(n_vars())); }
  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }

  [[nodiscard]] VarId id(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw Error("unknown variable '" + std::string(name) + "'");
    return it->second;
  }

  [[nodiscard]] bool has(std::string_view name) const {
    return index_.count(std::string(name)) != 0;
  }

  // New dataset holding only the given rows (in the given order).
  [[nodiscard]] Dataset select_rows(std::span<const std::size_t> rows) const {
    std::vector<std::vector<Code>> cols(n_vars());
    for (std::size_t v = 0; v < n_vars(); ++v) {
      cols[v].reserve(rows.size());
      for (std::size_t r : rows) cols[v].push_back(columns_[v].at(r));
    }
    return Dataset(names_, roles_, arities_, std::move(cols));
  }

 private:
  std::vector<std::string> names_;
  std::vector<Role> roles_;
  std::vector<int> arities_;
  std::vector<std::vector<Code>> columns_;
  std::size_t n_rows_ = 0;
  VarSet labels_;
  VarSet features_;
  std::unordered_map<std::string, VarId> index_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"')
      cell = cell.substr(1, cell.size() - 2);
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline bool is_integer(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s.front() == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

}  // namespace detail

// Parses CSV text plus a label list. Integer columns keep their codes verbatim
// (arity = max + 1); any other column is coded by first appearance.
inline Dataset parse_dataset(std::istream& csv, const std::vector<std::string>& label_names) {
  std::string line;
  if (!std::getline(csv, line)) throw Error("csv: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // strip UTF-8 BOM
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = detail::split_csv_line(line);
  const std::size_t n_cols = header.size();

  std::vector<std::vector<std::string>> cells(n_cols);
  std::size_t row = 1;
  while (std::getline(csv, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != n_cols)
      throw Error("csv: ragged row " + std::to_string(row) + " (" + std::to_string(fields.size()) +
                  " cells, expected " + std::to_string(n_cols) + ")");
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (fields[c].empty())
        throw Error("csv: blank cell at row " + std::to_string(row) + ", column '" + header[c] + "'");
      cells[c].push_back(std::move(fields[c]));
    }
  }
  const std::size_t n_rows = cells.empty() ? 0 : cells.front().size();
  if (n_rows == 0) throw Error("csv: no data rows");

  std::vector<Role> roles(n_cols, Role::feature);
  for (const auto& label : label_names) {
    auto it = std::find(header.begin(), header.end(), label);
    if (it == header.end()) throw Error("unknown label column '" + label + "'");
    roles[static_cast<std::size_t>(it - header.begin())] = Role::label;
  }

  std::vector<int> arities(n_cols);
  std::vector<std::vector<Code>> columns(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    auto& col = cells[c];
    columns[c].reserve(n_rows);
    bool numeric = std::all_of(col.begin(), col.end(), [](const std::string& s) { return detail::is_integer(s); });
    if (numeric) {
      long max_code = 0;
      for (const auto& s : col) {
        long v = 0;
        try {
          v = std::stol(s);
        } catch (const std::exception&) {
          throw Error("csv: unparseable cell '" + s + "' in column '" + header[c] + "'");
        }
        if (v < 0) throw Error("csv: negative cell " + s + " in column '" + header[c] + "'");
        if (v > 65534) throw Error("csv: code " + s + " too large in column '" + header[c] + "'");
        max_code = std::max(max_code, v);
        columns[c].push_back(static_cast<Code>(v));
      }
      arities[c] = static_cast<int>(max_code) + 1;
    } else {
      std::unordered_map<std::string, Code> codes;
      for (const auto& s : col) {
        auto [it, fresh] = codes.emplace(s, static_cast<Code>(codes.size()));
        if (fresh && codes.size() > 65535) throw Error("csv: too many categories in '" + header[c] + "'");
        columns[c].push_back(it->second);
      }
      arities[c] = static_cast<int>(codes.size());
    }
  }
  return Dataset(std::move(header), std::move(roles), std::move(arities), std::move(columns));
}

inline std::vector<std::string> read_label_names(const std::string& meta_path) {
  std::ifstream in(meta_path);
  if (!in) throw Error("cannot open metadata file '" + meta_path + "'");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw Error("metadata: " + std::string(e.what()));
  }
  if (!meta.is_object() || !meta.contains("labels") || !meta["labels"].is_array())
    throw Error("metadata: expected {\"labels\": [...]}");
  return meta["labels"].get<std::vector<std::string>>();
}

inline Dataset load_dataset(const std::string& csv_path, const std::string& meta_path) {
  auto labels = read_label_names(meta_path);
  std::ifstream in(csv_path);
  if (!in) throw Error("cannot open data file '" + csv_path + "'");
  return parse_dataset(in, labels);
}

inline void write_csv(std::ostream& out, const Dataset& ds) {
  for (std::size_t v = 0; v < ds.n_vars(); ++v) out << (v ? "," : "") << ds.name(static_cast<VarId>(v));
  out << '\n';
  std::string line;
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    line.clear();
    for (std::size_t v = 0; v < ds.n_vars(); ++v) {
      if (v) line.push_back(',');
      line += std::to_string(ds.column(static_cast<VarId>(v))[r]);
    }
    line.push_back('\n');
    out << line;
  }
}

inline nlohmann::json meta_json(const Dataset& ds) {
  nlohmann::json labels = nlohmann::json::array();
  for (VarId t : ds.labels()) labels.push_back(ds.name(t));
  return {{"labels", labels}};
}

// ContingencyTable
//
// counts[(s * rx + i) * ry + j] is the number of rows in stratum s with x = i
// and y = j. The stratum index is mixed-radix over z, first member fastest.
struct ContingencyTable {
  VarId x = 0;
  VarId y = 0;
  VarSet z;
  int rx = 0;
  int ry = 0;
  std::size_t strata = 1;
  std::vector<std::uint64_t> counts;
  std::uint64_t n = 0;

  [[nodiscard]] std::uint64_t at(std::size_t s, int i, int j) const {
    return counts[(s * static_cast<std::size_t>(rx) + static_cast<std::size_t>(i)) * static_cast<std::size_t>(ry) +
                  static_cast<std::size_t>(j)];
  }
};

inline ContingencyTable contingency(const Dataset& ds, VarId x, VarId y, const VarSet& z) {
  if (x == y) throw Error("contingency: x and y must differ");
  if (z.contains(x) || z.contains(y)) throw Error("contingency: conditioning set overlaps {x, y}");
  ContingencyTable t;
  t.x = x;
  t.y = y;
  t.z = z;
  t.rx = ds.arity(x);
  t.ry = ds.arity(y);
  for (VarId v : z) t.strata *= static_cast<std::size_t>(ds.arity(v));
  t.counts.assign(t.strata * static_cast<std::size_t>(t.rx * t.ry), 0);
  auto cx = ds.column(x);
  auto cy = ds.column(y);
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    std::size_t s = 0;
    std::size_t mult = 1;
    for (VarId v : z) {
      s += ds.column(v)[r] * mult;
      mult *= static_cast<std::size_t>(ds.arity(v));
    }
    ++t.counts[(s * static_cast<std::size_t>(t.rx) + cx[r]) * static_cast<std::size_t>(t.ry) + cy[r]];
  }
  t.n = ds.n_rows();
  return t;
}

}  // namespace clcd
