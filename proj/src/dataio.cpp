#include "tsfn/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string_view>

#include "tsfn/linalg.hpp"
#include "tsfn/optimizer.hpp"
#include "tsfn/rmt.hpp"

namespace tsfn::dataio {

namespace {

constexpr double kGdEta = 0.05;
constexpr std::size_t kGdSteps = 200;
// an outlier group must sit above the fitted bulk edge and be separated
// from the rest of the spectrum by at least this eigenvalue ratio
constexpr double kGapFloor = 1.8;

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                           ": " + what);
}

std::vector<double> parse_row(const std::string& line, char delimiter,
                              std::size_t line_no) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(delimiter, start);
    std::size_t stop = end == std::string::npos ? line.size() : end;
    std::string_view cell(line.data() + start, stop - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t'))
      cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t'))
      cell.remove_suffix(1);
    double value = 0.0;
    auto [ptr, ec] =
        std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc() ||
        ptr != cell.data() + cell.size())
      parse_fail(line_no, "cell is not a number");
    if (!std::isfinite(value)) parse_fail(line_no, "non-finite value");
    out.push_back(value);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace

Dataset load_csv(const std::string& path, bool has_header,
                 std::optional<std::size_t> target_column, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  std::vector<std::vector<double>> rows;
  std::size_t n_cols = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::size_t line_no = i + 1;
    if (has_header && i == 0) continue;
    if (lines[i].empty()) parse_fail(line_no, "blank row");
    auto row = parse_row(lines[i], delimiter, line_no);
    if (rows.empty()) {
      n_cols = row.size();
    } else if (row.size() != n_cols) {
      parse_fail(line_no, "expected " + std::to_string(n_cols) +
                              " cells, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("load_csv: no data rows");

  Dataset ds;
  if (target_column) {
    if (*target_column >= n_cols)
      throw std::invalid_argument("load_csv: target column out of range");
    if (n_cols < 2)
      throw std::invalid_argument(
          "load_csv: a lone target column leaves no features");
    ds.features = Matrix(rows.size(), n_cols - 1);
    Matrix targets(rows.size(), 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::size_t j_out = 0;
      for (std::size_t j = 0; j < n_cols; ++j) {
        if (j == *target_column)
          targets(i, 0) = rows[i][j];
        else
          ds.features(i, j_out++) = rows[i][j];
      }
    }
    ds.targets = std::move(targets);
  } else {
    ds.features = Matrix(rows.size(), n_cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < n_cols; ++j) ds.features(i, j) = rows[i][j];
  }
  return ds;
}

void save_csv(const std::string& path, const Dataset& ds, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);
  char buf[64];
  for (std::size_t i = 0; i < ds.n_samples(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      if (j > 0) out.put(delimiter);
      std::snprintf(buf, sizeof buf, "%.17g", ds.features(i, j));
      out << buf;
    }
    if (ds.targets) {
      out.put(delimiter);
      std::snprintf(buf, sizeof buf, "%.17g", (*ds.targets)(i, 0));
      out << buf;
    }
    out.put('\n');
  }
  if (!out) throw std::runtime_error("save_csv: write failed for " + path);
}

VarianceExplained variance_explained(const Dataset& ds) {
  std::size_t n = ds.n_samples(), d = ds.dim();
  if (n < 2)
    throw std::invalid_argument("variance_explained: need n_samples >= 2");
  if (!ds.features.is_finite())
    throw std::invalid_argument("variance_explained: non-finite features");

  Matrix centered = ds.features;
  double max_abs = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += centered(i, j);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      centered(i, j) -= mean;
      max_abs = std::max(max_abs, std::fabs(ds.features(i, j)));
    }
  }

  Matrix cov = centered.transposed() * centered;
  double scale = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) cov(i, j) *= scale;

  auto dec = linalg::sym_eig(SymmetricMatrix::from_symmetrized(cov));
  VarianceExplained out;
  out.eigenvalues = dec.eigenvalues;
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(),
            std::greater<>());

  double total = 0.0;
  for (double l : out.eigenvalues) total += std::max(l, 0.0);
  out.cumulative.resize(d, 0.0);
  if (total <= 1e-18 * (1.0 + max_abs * max_abs)) {
    out.degenerate = true;
    out.n90 = 0;
    return out;
  }

  double prefix = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    prefix += std::max(out.eigenvalues[i], 0.0);
    out.cumulative[i] = prefix / total;
    if (out.n90 == 0 && out.cumulative[i] >= 0.90) out.n90 = i + 1;
  }
  return out;
}

OutlierReport outlier_vs_pca_report(
    const Dataset& ds, const std::vector<std::size_t>& mlp_widths,
    std::uint64_t seed) {
  if (!ds.targets)
    throw std::invalid_argument("outlier_vs_pca_report: dataset has no targets");
  if (mlp_widths.size() < 2)
    throw std::invalid_argument(
        "outlier_vs_pca_report: widths need at least input and output");
  if (mlp_widths.front() != ds.dim())
    throw std::invalid_argument(
        "outlier_vs_pca_report: first width must equal the feature dim");
  if (mlp_widths.back() != ds.targets->cols())
    throw std::invalid_argument(
        "outlier_vs_pca_report: last width must equal the target dim");

  OutlierReport report;
  report.widths = mlp_widths;
  report.seed = seed;
  report.pca = variance_explained(ds);

  obj::Dataset data{ds.features, *ds.targets};
  auto mlp = obj::mlp_objective(mlp_widths, std::move(data), seed);

  opt::OptimizerConfig cfg;
  cfg.method = opt::Method::gd;
  cfg.eta = kGdEta;
  cfg.max_iter = kGdSteps;
  cfg.grad_tol = 1e-300;  // unreachable, the step count stays fixed
  cfg.seed = seed;
  auto traj = opt::run(*mlp, cfg, mlp->initial_parameters());
  if (traj.status == opt::RunStatus::diverged)
    throw std::runtime_error("outlier_vs_pca_report: training diverged");

  auto eig = linalg::sym_eig(mlp->hessian(traj.iterates.back()));
  report.hessian_eigenvalues = eig.eigenvalues;
  std::sort(report.hessian_eigenvalues.begin(),
            report.hessian_eigenvalues.end(), std::greater<>());

  double aspect = static_cast<double>(mlp->dim()) /
                  static_cast<double>(ds.n_samples());
  const auto& eigs = report.hessian_eigenvalues;
  auto model = rmt::fit_bulk_scale(eigs, aspect);
  double edge = model.c_plus + rmt::default_edge_pad(model, eigs.size());

  // candidates above the bulk edge only count as outliers when the largest
  // multiplicative gap inside the candidate range clears kGapFloor; the cut
  // at that gap is the outlier count
  std::size_t above = 0;
  while (above < eigs.size() && eigs[above] > edge) ++above;
  std::size_t cut = 0;
  double best_gap = 0.0;
  for (std::size_t i = 0; i < above; ++i) {
    double next = i + 1 < eigs.size() ? eigs[i + 1] : 0.0;
    double gap = next > 1e-12 * eigs.front()
                     ? eigs[i] / next
                     : std::numeric_limits<double>::infinity();
    if (gap > best_gap) {
      best_gap = gap;
      cut = i + 1;
    }
  }

  report.n90 = report.pca.n90;
  report.n_outliers = best_gap >= kGapFloor ? cut : 0;
  report.difference = static_cast<long long>(report.n_outliers) -
                      static_cast<long long>(report.n90);
  return report;
}

Dataset from_objective_data(obj::Dataset data) {
  Dataset ds;
  ds.features = std::move(data.inputs);
  ds.targets = std::move(data.targets);
  return ds;
}

}  // namespace tsfn::dataio
