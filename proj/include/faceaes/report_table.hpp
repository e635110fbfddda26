#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "faceaes/error.hpp"
#include "faceaes/eval_harness.hpp"

namespace faceaes {

/// Sweep results of one dataset, one EvalReport per table row.
using SweepRows = std::vector<EvalReport>;

namespace detail {

inline std::vector<std::string> table_block_columns(std::span<const SweepRows> datasets) {
  std::vector<std::string> cols;
  for (const auto& rows : datasets) {
    for (const auto& r : rows) {
      for (const auto& b : r.blocks) {
        if (std::find(cols.begin(), cols.end(), b) == cols.end()) cols.push_back(b);
      }
    }
  }
  return canonical_order(std::move(cols));
}

inline void check_aligned(std::span<const SweepRows> datasets) {
  require(!datasets.empty() && !datasets.front().empty(), ErrorKind::InvalidArgument, "table: no rows");
  for (const auto& rows : datasets) {
    require(rows.size() == datasets.front().size(), ErrorKind::InvalidArgument,
            "table: datasets have different row counts");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& a = rows[i];
      const auto& b = datasets.front()[i];
      require(a.blocks == b.blocks && a.is_ga() == b.is_ga() && a.task == b.task, ErrorKind::InvalidArgument,
              "table: row " + std::to_string(i) + " differs between datasets");
    }
  }
}

/// #features cell: the fused dimensionality for baselines; for GA rows the
/// mean selected-feature count (averaged over datasets), rounded.
inline std::size_t feature_count_cell(std::span<const SweepRows> datasets, std::size_t row) {
  const auto& first = datasets.front()[row];
  if (!first.is_ga()) return first.n_features;
  double s = 0.0;
  for (const auto& rows : datasets) s += rows[row].mean_selected;
  return static_cast<std::size_t>(std::llround(s / static_cast<double>(datasets.size())));
}

inline std::string thousands(std::size_t v) {
  std::string digits = std::to_string(v);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

inline std::string metric_cell(const EvalReport& r) {
  char buf[32];
  if (r.task == Task::Classification) {
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * r.mean);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f", r.mean);
  }
  return buf;
}

}  // namespace detail

/// Aligned text table: one checkmark column per block, #features, GA flag,
/// then the metric (GCR in percent, LCC) for every dataset.
inline std::string render_table(std::span<const SweepRows> datasets) {
  detail::check_aligned(datasets);
  const auto block_cols = detail::table_block_columns(datasets);
  const auto& first_rows = datasets.front();

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = block_cols;
  header.push_back("#features");
  header.push_back("GA");
  const std::string metric(first_rows.front().metric_name());
  for (const auto& rows : datasets) {
    header.push_back(metric + (metric == "GCR" ? " (%) " : " ") + rows.front().dataset);
  }
  cells.push_back(header);
  for (std::size_t i = 0; i < first_rows.size(); ++i) {
    std::vector<std::string> line;
    for (const auto& b : block_cols) {
      const auto& rb = first_rows[i].blocks;
      line.push_back(std::find(rb.begin(), rb.end(), b) != rb.end() ? "x" : "");
    }
    line.push_back(detail::thousands(detail::feature_count_cell(datasets, i)));
    line.push_back(first_rows[i].is_ga() ? "x" : "");
    for (const auto& rows : datasets) line.push_back(detail::metric_cell(rows[i]));
    cells.push_back(std::move(line));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::ostringstream out;
  for (std::size_t l = 0; l < cells.size(); ++l) {
    for (std::size_t c = 0; c < cells[l].size(); ++c) {
      if (c) out << "  ";
      const auto& s = cells[l][c];
      out << std::string(width[c] - s.size(), ' ') << s;
    }
    out << '\n';
    if (l == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

/// Machine-readable table: block flags, n_features, ga, then mean and std per
/// dataset at full precision.
inline std::string render_csv(std::span<const SweepRows> datasets) {
  detail::check_aligned(datasets);
  const auto block_cols = detail::table_block_columns(datasets);
  std::ostringstream out;
  out.precision(17);
  for (const auto& b : block_cols) out << b << ',';
  out << "n_features,ga";
  for (const auto& rows : datasets) {
    const std::string m(rows.front().metric_name());
    out << ',' << rows.front().dataset << '_' << m << "_mean," << rows.front().dataset << '_' << m << "_std";
  }
  out << '\n';
  const auto& first_rows = datasets.front();
  for (std::size_t i = 0; i < first_rows.size(); ++i) {
    for (const auto& b : block_cols) {
      const auto& rb = first_rows[i].blocks;
      out << (std::find(rb.begin(), rb.end(), b) != rb.end() ? 1 : 0) << ',';
    }
    out << detail::feature_count_cell(datasets, i) << ',' << (first_rows[i].is_ga() ? 1 : 0);
    for (const auto& rows : datasets) out << ',' << rows[i].mean << ',' << rows[i].std_dev;
    out << '\n';
  }
  return out.str();
}

}  // namespace faceaes
