#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftcop/normal.hpp"

namespace ftcop {

// n x d grid of ordinal observations, categories 0..K_j-1 per item.
struct response_matrix {
  std::vector<int> values;  // row-major n*d
  int n = 0;
  int d = 0;
  std::vector<int> category_counts;  // K_j
  std::vector<std::string> item_names;

  int y(int i, int j) const { return values[static_cast<size_t>(i) * d + j]; }
  int& y(int i, int j) { return values[static_cast<size_t>(i) * d + j]; }

  void validate() const {
    if (n < 2) throw std::domain_error("response_matrix: need n >= 2 respondents");
    if (d < 3) throw std::domain_error("response_matrix: need d >= 3 items");
    if (static_cast<size_t>(n) * d != values.size())
      throw std::domain_error("response_matrix: size mismatch");
    if (static_cast<int>(category_counts.size()) != d)
      throw std::domain_error("response_matrix: category_counts size mismatch");
    for (int j = 0; j < d; ++j)
      if (category_counts[j] < 1)
        throw std::domain_error("response_matrix: item with no categories");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j)
        if (y(i, j) < 0 || y(i, j) >= category_counts[j])
          throw std::domain_error("response_matrix: entry outside 0..K-1 at row " +
                                  std::to_string(i) + ", item " + std::to_string(j));
  }

  static response_matrix from_rows(const std::vector<std::vector<int>>& rows,
                                   std::optional<int> categories = std::nullopt) {
    response_matrix m;
    m.n = static_cast<int>(rows.size());
    m.d = rows.empty() ? 0 : static_cast<int>(rows.front().size());
    m.values.reserve(static_cast<size_t>(m.n) * m.d);
    for (const auto& r : rows) {
      if (static_cast<int>(r.size()) != m.d)
        throw std::domain_error("response_matrix: ragged rows");
      m.values.insert(m.values.end(), r.begin(), r.end());
    }
    m.category_counts.assign(m.d, categories.value_or(0));
    if (!categories) {
      for (int j = 0; j < m.d; ++j) {
        int mx = 0;
        for (int i = 0; i < m.n; ++i) mx = std::max(mx, m.y(i, j));
        m.category_counts[j] = mx + 1;
      }
    }
    for (int j = 0; j < m.d; ++j)
      m.item_names.push_back("item" + std::to_string(j + 1));
    m.validate();
    return m;
  }
};

// Per-item cutpoints on the uniform scale, a_{j,0} = 0 < ... < a_{j,K} = 1,
// together with their normal-scale images.
struct cutpoint_set {
  std::vector<std::vector<double>> a;
  std::vector<std::vector<double>> alpha;

  int d() const { return static_cast<int>(a.size()); }
  int categories(int j) const { return static_cast<int>(a[j].size()) - 1; }

  static cutpoint_set from_uniform(const std::vector<std::vector<double>>& a_in) {
    cutpoint_set c;
    c.a = a_in;
    for (const auto& aj : c.a) {
      if (aj.size() < 2 || aj.front() != 0.0 || aj.back() != 1.0)
        throw std::domain_error("cutpoint_set: endpoints must be 0 and 1");
      for (size_t k = 1; k < aj.size(); ++k)
        if (!(aj[k] > aj[k - 1]))
          throw std::domain_error("cutpoint_set: cutpoints must be strictly increasing");
      std::vector<double> al(aj.size());
      for (size_t k = 0; k < aj.size(); ++k) al[k] = norm_quantile(aj[k]);
      c.alpha.push_back(std::move(al));
    }
    return c;
  }

  // K equally weighted categories for every one of d items
  static cutpoint_set equally_spaced(int d, int K) {
    std::vector<std::vector<double>> a(d, std::vector<double>(K + 1));
    for (int j = 0; j < d; ++j)
      for (int k = 0; k <= K; ++k) a[j][k] = static_cast<double>(k) / K;
    return from_uniform(a);
  }
};

enum class unobserved_policy { reject, merge_adjacent };

struct cutpoint_estimate {
  cutpoint_set cut;
  response_matrix data;  // remapped when categories were merged
  std::vector<std::string> warnings;
};

// IFM step 1: cutpoints from cumulative univariate sample proportions.
inline cutpoint_estimate estimate_cutpoints_with_policy(
    const response_matrix& data, unobserved_policy policy = unobserved_policy::reject) {
  data.validate();
  cutpoint_estimate out;
  out.data = data;
  std::vector<std::vector<double>> a(data.d);
  for (int j = 0; j < data.d; ++j) {
    const int K = data.category_counts[j];
    std::vector<int> counts(K, 0);
    for (int i = 0; i < data.n; ++i) counts[data.y(i, j)]++;
    std::vector<int> observed;
    for (int k = 0; k < K; ++k)
      if (counts[k] > 0) observed.push_back(k);
    if (observed.size() < 2)
      throw std::domain_error("estimate_cutpoints: degenerate item " + std::to_string(j + 1) +
                              " (all responses in one category)");
    if (static_cast<int>(observed.size()) < K) {
      if (policy == unobserved_policy::reject)
        throw std::domain_error("estimate_cutpoints: unobserved category in item " +
                                std::to_string(j + 1));
      // merge each empty category into its lower neighbour
      std::vector<int> remap(K, 0);
      for (int k = 0, next = 0; k < K; ++k) {
        if (counts[k] > 0) remap[k] = next++;
        else remap[k] = std::max(0, (k > 0 ? remap[k - 1] : 0));
      }
      // empty leading categories map to 0 alongside the first observed one
      for (int k = 0; k < K; ++k)
        if (counts[k] == 0 && k < observed.front()) remap[k] = 0;
      for (int i = 0; i < data.n; ++i) out.data.y(i, j) = remap[data.y(i, j)];
      out.data.category_counts[j] = static_cast<int>(observed.size());
      out.warnings.push_back("item " + std::to_string(j + 1) + ": merged " +
                             std::to_string(K - observed.size()) +
                             " unobserved categories into neighbours");
      std::vector<int> merged(observed.size(), 0);
      for (int k = 0; k < K; ++k) merged[std::min<int>(remap[k], merged.size() - 1)] += counts[k];
      counts.assign(merged.begin(), merged.end());
    }
    std::vector<double> aj(counts.size() + 1, 0.0);
    double cum = 0.0;
    for (size_t k = 0; k < counts.size(); ++k) {
      cum += counts[k];
      aj[k + 1] = cum / data.n;
    }
    aj.back() = 1.0;
    a[j] = std::move(aj);
  }
  if (policy == unobserved_policy::merge_adjacent) {
    out.cut = cutpoint_set::from_uniform(a);
    return out;
  }
  out.cut = cutpoint_set::from_uniform(a);
  return out;
}

inline cutpoint_set estimate_cutpoints(const response_matrix& data) {
  return estimate_cutpoints_with_policy(data).cut;
}

// --- CSV interface: header row of item names, one row per respondent ---

struct csv_read_result {
  response_matrix data;
  // per item: original label of each contiguous code 0..K_j-1
  std::vector<std::vector<int>> label_map;
  bool remapped = false;
};

inline csv_read_result read_csv(std::istream& in,
                                std::optional<int> declared_categories = std::nullopt) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty input");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.push_back("");
    return cells;
  };
  auto header = split(line);
  const int d = static_cast<int>(header.size());
  if (d < 1) throw std::runtime_error("read_csv: missing header");

  std::vector<std::vector<int>> raw;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto cells = split(line);
    if (static_cast<int>(cells.size()) != d)
      throw std::runtime_error("read_csv: ragged row at line " + std::to_string(lineno));
    std::vector<int> row(d);
    for (int j = 0; j < d; ++j) {
      size_t pos = 0;
      int v;
      try {
        v = std::stoi(cells[j], &pos);
      } catch (const std::exception&) {
        throw std::runtime_error("read_csv: non-integer cell at line " + std::to_string(lineno));
      }
      while (pos < cells[j].size() && std::isspace(static_cast<unsigned char>(cells[j][pos])))
        ++pos;
      if (pos != cells[j].size())
        throw std::runtime_error("read_csv: non-integer cell at line " + std::to_string(lineno));
      row[j] = v;
    }
    raw.push_back(std::move(row));
  }
  if (raw.empty()) throw std::runtime_error("read_csv: no data rows");

  csv_read_result out;
  const int n = static_cast<int>(raw.size());
  out.label_map.resize(d);
  if (declared_categories) {
    const int K = *declared_categories;
    for (auto& row : raw)
      for (int v : row)
        if (v < 0 || v >= K)
          throw std::runtime_error("read_csv: label outside declared 0.." + std::to_string(K - 1));
    for (int j = 0; j < d; ++j) {
      out.label_map[j].resize(K);
      for (int k = 0; k < K; ++k) out.label_map[j][k] = k;
    }
    out.data = response_matrix::from_rows(raw, K);
  } else {
    for (int j = 0; j < d; ++j) {
      std::map<int, int> codes;
      for (int i = 0; i < n; ++i) codes[raw[i][j]] = 0;
      int next = 0;
      for (auto& [label, code] : codes) {
        code = next++;
        out.label_map[j].push_back(label);
        if (label != code) out.remapped = true;
      }
      for (int i = 0; i < n; ++i) raw[i][j] = codes[raw[i][j]];
    }
    out.data = response_matrix::from_rows(raw);
  }
  out.data.item_names.assign(header.begin(), header.end());
  return out;
}

inline csv_read_result read_csv_file(const std::string& path,
                                     std::optional<int> declared_categories = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_csv(in, declared_categories);
}

inline void write_csv(std::ostream& out, const response_matrix& data) {
  for (int j = 0; j < data.d; ++j) out << (j ? "," : "") << data.item_names[j];
  out << "\n";
  for (int i = 0; i < data.n; ++i) {
    for (int j = 0; j < data.d; ++j) out << (j ? "," : "") << data.y(i, j);
    out << "\n";
  }
}

inline void write_csv_file(const std::string& path, const response_matrix& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(out, data);
}

}  // namespace ftcop
