#include "czo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "czo/decomposition.hpp"
#include "czo/errors.hpp"
#include "czo/kernel.hpp"
#include "czo/metric.hpp"
#include "czo/operator.hpp"
#include "czo/parallel.hpp"
#include "czo/partition.hpp"
#include "czo/random.hpp"
#include "czo/registry.hpp"

namespace czo {
namespace {

const char* const kDefaultFamily =
    "indicator:-1:1;indicator:0:1;indicator:-2:-1.5;indicator:1:3;indicator:-0.5:0.25;"
    "bump:0:1;bump:2:1.5;bump:-3:0.5;bump:1:0.25;bump:-1:2";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) {
    part = trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": not a finite number: '" + text + "'");
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (v < 0.0 || v != std::floor(v) || v > 1e15) throw ConfigError(key + ": not a nonnegative integer: '" + text + "'");
  return static_cast<std::size_t>(v);
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const std::string& t : split(text, ',')) out.push_back(parse_double(key, t));
  return out;
}

Vector parse_point(const std::string& key, const std::string& text, std::size_t dim) {
  const std::vector<std::string> parts = split(text, ' ');
  if (parts.size() != dim) throw ConfigError(key + ": expected " + std::to_string(dim) + " coordinates in '" + text + "'");
  Vector v(dim);
  for (std::size_t k = 0; k < dim; ++k) v[k] = parse_double(key, parts[k]);
  return v;
}

Box parse_box(const std::string& text, std::size_t dim) {
  std::vector<std::string> axes = split(text, ',');
  if (axes.size() == 1) axes.assign(dim, axes.front());
  if (axes.size() != dim) throw ConfigError("box: expected one range or " + std::to_string(dim) + " ranges");
  Box box{Vector(dim), Vector(dim)};
  for (std::size_t k = 0; k < dim; ++k) {
    const auto dots = axes[k].find("..");
    if (dots == std::string::npos) throw ConfigError("box: range must look like lo..hi: '" + axes[k] + "'");
    box.lo[k] = parse_double("box", trim(axes[k].substr(0, dots)));
    box.hi[k] = parse_double("box", trim(axes[k].substr(dots + 2)));
    if (!(box.hi[k] > box.lo[k])) throw ConfigError("box: empty range '" + axes[k] + "'");
  }
  return box;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? sep : "") + parts[k];
  return out;
}

std::string point_text(const Vector& v) { return to_string(v); }

/// CSV output with '#' header comments.
class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, std::vector<std::string>& files) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    files.push_back(path.filename().string());
  }
  void comment(const std::string& key, const std::string& value) { out_ << "# " << key << "=" << value << "\n"; }
  void row(const std::vector<std::string>& cells) { out_ << join(cells, ",") << "\n"; }

 private:
  std::ofstream out_;
};

std::shared_ptr<const HyperCurve> require_curve(const ExperimentConfig& c) {
  auto curve = find_curve(c.curve, c.dim);
  if (!curve) throw ConfigError("unknown curve: " + c.curve);
  return curve;
}

KernelSpec require_kernel(const ExperimentConfig& c) {
  auto kernel = find_kernel(c.kernel);
  if (!kernel) throw ConfigError("unknown kernel: " + c.kernel);
  if (kernel->singular_curve().dim() != c.dim)
    throw ConfigError("kernel " + c.kernel + " lives in dimension " + std::to_string(kernel->singular_curve().dim()));
  return *kernel;
}

std::vector<std::string> coordinate_header(const std::string& name, std::size_t dim) {
  if (dim == 1) return {name};
  std::vector<std::string> h;
  for (std::size_t k = 0; k < dim; ++k) h.push_back(name + std::to_string(k + 1));
  return h;
}

void append_point(std::vector<std::string>& row, const Vector& p) {
  for (double v : p) row.push_back(fmt(v));
}

void warn_resolution(const std::vector<double>& epsilons, const GridGeometry& g) {
  for (double e : epsilons)
    if (e < 4.0 * g.max_h())
      std::cerr << "warning: epsilon " << e << " is below 4h = " << 4.0 * g.max_h()
                << (e <= g.max_h() ? " (at or below h: unreliable)" : "") << "\n";
}

void write_function_values(CsvFile& csv, const GridFunction& f) {
  const GridGeometry& g = f.geometry();
  std::vector<std::string> header = coordinate_header("x", g.dim());
  header.push_back("value");
  csv.row(header);
  for (std::size_t k = 0; k < f.size(); ++k) {
    std::vector<std::string> row;
    append_point(row, g.midpoint(k));
    row.push_back(fmt(f[k]));
    csv.row(row);
  }
}

using Dir = std::filesystem::path;

int run_metric(const ExperimentConfig& c, const Dir& dir, RunResult& res) {
  const auto curve = require_curve(c);
  std::vector<std::pair<Vector, Vector>> pairs;
  if (!c.points.empty()) {
    for (const std::string& p : split(c.points, ';')) {
      const auto colon = p.find(':');
      if (colon == std::string::npos) throw ConfigError("points: each pair must look like x:y");
      pairs.emplace_back(parse_point("points", p.substr(0, colon), c.dim), parse_point("points", p.substr(colon + 1), c.dim));
    }
  } else {
    Rng rng(c.seed);
    pairs.resize(c.samples);
    for (auto& p : pairs) p = {rng.point_in(c.box), rng.point_in(c.box)};
  }
  const std::vector<std::string> metrics = split(c.values.at("metrics"), ',');
  for (const std::string& m : metrics)
    if (m != "rho" && m != "rho_tilde" && m != "rho_tilde_star") throw ConfigError("metrics: unknown metric " + m);

  std::vector<std::vector<std::string>> rows(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto& [x, y] = pairs[k];
    std::vector<std::string>& row = rows[k];
    append_point(row, x);
    append_point(row, y);
    std::size_t branch = 0;
    bool have_branch = false;
    for (const std::string& m : metrics) {
      MetricValue v = m == "rho" ? rho(*curve, x, y) : m == "rho_tilde" ? rho_tilde(*curve, x, y) : rho_tilde_star(*curve, x, y);
      row.push_back(fmt(v.value));
      if (!have_branch) {
        branch = v.branch;
        have_branch = true;
      }
    }
    row.push_back(std::to_string(branch));
  }, 16);

  CsvFile csv(dir / "metric.csv", res.files);
  csv.comment("curve", c.curve);
  std::vector<std::string> header = coordinate_header("x", c.dim);
  for (const auto& h : coordinate_header("y", c.dim)) header.push_back(h);
  for (const auto& m : metrics) header.push_back(m);
  header.push_back("branch");
  csv.row(header);
  for (const auto& r : rows) csv.row(r);
  return 0;
}

int run_metric_equivalence(const ExperimentConfig& c, const Dir& dir, RunResult& res) {
  const auto curve = require_curve(c);
  const EquivalenceReport r = check_equivalence(*curve, c.samples, c.seed, c.box);
  CsvFile csv(dir / "equivalence.csv", res.files);
  csv.comment("curve", c.curve);
  csv.comment("pairs", std::to_string(r.pair_count));
  csv.comment("bound", fmt(r.bound));
  csv.row({"scope", "max_tilde_ratio", "max_star_ratio", "min_tilde_ratio", "min_star_ratio", "bound", "passed"});
  csv.row({"all", fmt(r.max_tilde_ratio), fmt(r.max_star_ratio), fmt(r.min_tilde_ratio), fmt(r.min_star_ratio),
           fmt(r.bound), r.passed ? "1" : "0"});
  for (std::size_t i = 0; i < r.branch_max_tilde_ratio.size(); ++i)
    csv.row({"branch " + std::to_string(i), fmt(r.branch_max_tilde_ratio[i]), fmt(r.branch_max_star_ratio[i]), "", "",
             fmt(r.bound), ""});
  if (!r.passed) {
    csv.comment("failure", r.failure);
    if (r.witness) csv.row({"witness", point_text(r.witness->first), point_text(r.witness->second), "", "", "", "0"});
    res.message = r.failure;
    return 1;
  }
  return 0;
}

int run_partition(const ExperimentConfig& c, const Dir& dir, RunResult& res) {
  const auto curve = require_curve(c);
  const BranchDisjointPartition p = build_partition(*curve, c.box, c.max_depth);

  CsvFile csv(dir / "partition.csv", res.files);
  csv.comment("curve", c.curve);
  csv.comment("max_depth", std::to_string(c.max_depth));
  csv.comment("leftover_measure", fmt(p.leftover_measure));
  csv.comment("sound", p.sound ? "1" : "0");
  csv.row({"level", "corner", "owners", "status"});
  auto corner = [](const DyadicCube& q) {
    std::vector<std::string> parts;
    for (std::size_t k = 0; k < q.dim(); ++k) parts.push_back(std::to_string(q.corner(k)));
    return join(parts, " ");
  };
  for (std::size_t j = 0; j < p.cubes.size(); ++j) {
    std::vector<std::string> owners;
    for (std::size_t i : p.owners[j]) owners.push_back(std::to_string(i));
    csv.row({std::to_string(p.cubes[j].level()), corner(p.cubes[j]), join(owners, " "), "accepted"});
  }
  for (const DyadicCube& q : p.leftover) csv.row({std::to_string(q.level()), corner(q), "", "leftover"});

  // Disjointness: no sampled x may lie in two branch preimages of one cube.
  Rng rng(c.seed);
  std::vector<Vector> xs(c.lookups);
  for (Vector& x : xs) x = rng.point_in(c.box);
  std::vector<unsigned char> bad(xs.size(), 0);
  parallel_for(xs.size(), [&](std::size_t k) {
    const std::vector<InducedMatch> m = induced_map_matches(p, *curve, xs[k]);
    for (std::size_t a = 1; a < m.size(); ++a)
      if (m[a].cube == m[a - 1].cube) bad[k] = 1;
  }, 256);
  const std::size_t violations = static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1));

  CsvFile summary(dir / "partition_summary.csv", res.files);
  summary.row({"max_depth", "accepted", "leftover", "leftover_measure", "lookups", "violations", "sound"});
  summary.row({std::to_string(c.max_depth), std::to_string(p.cubes.size()), std::to_string(p.leftover.size()),
               fmt(p.leftover_measure), std::to_string(xs.size()), std::to_string(violations), p.sound ? "1" : "0"});
  if (violations > 0) {
    const auto it = std::find(bad.begin(), bad.end(), 1);
    summary.comment("witness", point_text(xs[static_cast<std::size_t>(it - bad.begin())]));
    res.message = std::to_string(violations) + " lookups hit two branches in one cube";
    return 1;
  }
  return 0;
}

std::vector<std::pair<Vector, Vector>> hormander_pair(const ExperimentConfig& c, double a) {
  Vector z(c.dim);
  z[0] = a;
  return {{Vector(c.dim), z}};
}

int run_hormander_rows(const ExperimentConfig& c, const KernelSpec& kernel, CsvFile& csv, bool with_audit_columns,
                       std::string& failure) {
  int status = 0;
  for (bool adjoint : c.adjoint ? std::vector<bool>{false, true} : std::vector<bool>{false}) {
    for (double a : c.hormander_a) {
      if (!(a > 0.0)) throw ConfigError("hormander_a: scales must be positive");
      const Box box = Box::symmetric(c.dim, c.hormander_box_scale * a);
      const HormanderResult h = hormander_constant(kernel, hormander_pair(c, a), box, c.hormander_grid, adjoint);
      const bool ok = std::isfinite(h.value) && std::isfinite(h.tail_bound);
      if (!ok) {
        status = 1;
        failure = "Hoermander integral is not finite at a = " + fmt(a);
      }
      const std::string label = adjoint ? "hormander-adjoint" : "hormander";
      if (with_audit_columns)
        csv.row({label + " a=" + fmt(a), fmt(h.value), "", ok ? "1" : "0", fmt(h.tail_bound)});
      else
        csv.row({fmt(a), adjoint ? "1" : "0", fmt(h.value), fmt(h.tail_bound), ok ? "1" : "0"});
    }
  }
  return status;
}

int run_kernel_audit(const ExperimentConfig& c, const Dir& dir, RunResult& res) {
  const KernelSpec kernel = require_kernel(c);
  CsvFile csv(dir / "audit.csv", res.files);
  csv.comment("kernel", kernel.name);
  csv.comment("seed", std::to_string(c.seed));
  csv.row({"audit", "empirical", "declared", "passed", "note"});
  int status = 0;
  for (const std::string& audit : c.audits) {
    if (audit == "size") {
      const SizeAudit s = audit_size(kernel, c.size_samples, c.seed);
      csv.row({"size", fmt(s.empirical), fmt(s.declared), s.passed ? "1" : "0",
               s.witness ? "witness " + point_text(s.witness->first) + " / " + point_text(s.witness->second) : ""});
      if (!s.passed) {
        status = 1;
        res.message = "size audit exceeds the declared constant";
      }
    } else if (audit == "regularity") {
      if (!kernel.regularity_audited) {
        csv.row({"regularity", "", "", "1", "skipped: kernel claims the size condition only"});
        continue;
      }
      const RegularityAudit r = audit_regularity(kernel, c.triples, c.seed);
      csv.row({"regularity-y", fmt(r.a_y), fmt(r.declared), r.a_y <= r.declared * (1.0 + 1e-3) ? "1" : "0", ""});
      csv.row({"regularity-x", fmt(r.a_x), fmt(r.declared), r.a_x <= r.declared * (1.0 + 1e-3) ? "1" : "0", ""});
      if (!r.passed) {
        status = 1;
        res.message = "regularity audit exceeds the declared constant";
      }
    } else if (audit == "hormander") {
      std::string failure;
      if (run_hormander_rows(c, kernel, csv, true, failure) != 0) {
        status = 1;
        res.message = failure;
      }
    } else {
      throw ConfigError("audits: unknown audit " + audit);
    }
  }
  return status;
}

int run_hormander(const ExperimentConfig& c, const Dir& dir, RunResult& res) {
  const KernelSpec kernel = require_kernel(c);
  CsvFile csv(dir / "hormander.csv", res.files);
  csv.comment("kernel", kernel.name);
  csv.comment("grid", std::to_string(c.hormander_grid));
  csv.comment("box_scale", fmt(c.hormander_box_scale));
  csv.row({"a", "adjoint", "value", "tail_bound", "finite"});
  std::string failure;
  const int status = run_hormander_rows(c, kernel, csv, false, failure);
  if (status) res.message = failure;
  return status;
}

GridGeometry input_grid(const ExperimentConfig& c) { return GridGeometry(c.box, c.n); }
GridGeometry output_grid(const ExperimentConfig& c) { return GridGeometry(c.box, c.out_n ? c.out_n : c.n); }

void write_convergence(CsvFile& csv, const T0Estimate& t) {
  csv.row({"epsilon", "next_epsilon", "sup_difference", "reliable"});
  for (std::size_t k = 0; k < t.epsilons.size(); ++k) {
    const bool has_next = k + 1 < t.epsilons.size();
    csv.row({fmt(t.epsilons[k]), has_next ? fmt(t.epsilons[k + 1]) : "", has_next ? fmt(t.sup_differences[k]) : "",
             t.reliable[k] ? "1" : "0"});
  }
}

int run_apply(const ExperimentConfig& c, const Dir& dir, RunResult& res) {
  const KernelSpec kernel = require_kernel(c);
  const GridFunction f = make_function(c.function, input_grid(c));
  const GridGeometry out = output_grid(c);
  warn_resolution(c.epsilons, f.geometry());
  GridFunction result;
  if (c.epsilons.size() == 1) {
    result = apply_truncated(kernel, f, c.epsilons.front(), out);
  } else {
    const T0Estimate t = estimate_T0(kernel, f, c.epsilons, out);
    result = t.result;
    CsvFile conv(dir / "convergence.csv", res.files);
    conv.comment("kernel", kernel.name);
    conv.comment("function", c.function);
    write_convergence(conv, t);
  }
  CsvFile csv(dir / "apply.csv", res.files);
  csv.comment("kernel", kernel.name);
  csv.comment("function", c.function);
  csv.comment("epsilon", fmt(c.epsilons.back()));
  write_function_values(csv, result);
  return 0;
}

int run_t0_convergence(const ExperimentConfig& c, const Dir& dir, RunResult& res) {
  const KernelSpec kernel = require_kernel(c);
  const GridFunction f = make_function(c.function, input_grid(c));
  warn_resolution(c.t0_epsilons, f.geometry());
  const T0Estimate t = estimate_T0(kernel, f, c.t0_epsilons, output_grid(c));
  CsvFile conv(dir / "convergence.csv", res.files);
  conv.comment("kernel", kernel.name);
  conv.comment("function", c.function);
  conv.comment("monotone_tail", t.monotone_tail ? "1" : "0");
  write_convergence(conv, t);
  CsvFile csv(dir / "t0.csv", res.files);
  csv.comment("kernel", kernel.name);
  csv.comment("epsilon", fmt(t.epsilons.back()));
  write_function_values(csv, t.result);
  return 0;
}

int run_recover(const ExperimentConfig& c, const Dir& dir, RunResult& res) {
  const auto curve = require_curve(c);
  if (c.multipliers.size() != curve->branch_count())
    throw ConfigError("b: curve " + c.curve + " has " + std::to_string(curve->branch_count()) + " branches but " +
                      std::to_string(c.multipliers.size()) + " multipliers were given");
  std::vector<std::function<double(const Vector&)>> fns;
  for (const std::string& name : c.multipliers) fns.push_back(named_multiplier(name));
  const GridGeometry grid = input_grid(c);
  const MultiplierField declared = MultiplierField::sample(*curve, grid, fns);
  const OperatorHandle difference = OperatorHandle::multiplier(curve, declared);
  const BranchDisjointPartition partition = build_partition(*curve, c.box, c.max_depth);
  const RecoveryResult rec = recover_multipliers(difference, *curve, partition, grid, grid);
  const MultiplierBound bound = multiplier_bound_check(*curve, rec.field, c.cap);
  const double tolerance = 2.0 * grid.max_h();

  const std::size_t r = curve->branch_count();
  std::vector<double> sup_error(r, 0.0);
  std::vector<std::size_t> covered(r, 0);
  CsvFile csv(dir / "recover.csv", res.files);
  csv.comment("curve", c.curve);
  csv.comment("b", join(c.multipliers, ","));
  std::vector<std::string> header = coordinate_header("x", c.dim);
  for (std::size_t i = 0; i < r; ++i)
    for (const char* col : {"declared_", "recovered_", "covered_"}) header.push_back(col + std::to_string(i));
  csv.row(header);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<std::string> row;
    append_point(row, grid.midpoint(k));
    for (std::size_t i = 0; i < r; ++i) {
      const bool cov = rec.covered[i][k] != 0;
      if (cov) {
        ++covered[i];
        sup_error[i] = std::max(sup_error[i], std::fabs(rec.field.values[i][k] - declared.values[i][k]));
      }
      row.push_back(fmt(declared.values[i][k]));
      row.push_back(fmt(rec.field.values[i][k]));
      row.push_back(cov ? "1" : "0");
    }
    csv.row(row);
  }

  CsvFile summary(dir / "recover_summary.csv", res.files);
  summary.comment("uncovered_points", std::to_string(rec.uncovered_points));
  summary.row({"branch", "b", "covered_points", "sup_error", "tolerance", "bound_sup", "cap", "passed"});
  int status = 0;
  for (std::size_t i = 0; i < r; ++i) {
    const bool ok = sup_error[i] <= tolerance && bound.branch_sup[i] <= c.cap;
    summary.row({std::to_string(i), c.multipliers[i], std::to_string(covered[i]), fmt(sup_error[i]), fmt(tolerance),
                 fmt(bound.branch_sup[i]), fmt(c.cap), ok ? "1" : "0"});
    if (sup_error[i] > tolerance) {
      status = 1;
      res.message = "branch " + std::to_string(i) + ": recovery error exceeds 2h";
    }
  }
  if (!bound.passed) {
    status = 1;
    if (res.message.empty()) res.message = "multiplier bound exceeds the cap";
  }
  return status;
}

Cube parse_root(const ExperimentConfig& c, const GridGeometry& g) {
  if (c.root.empty()) return grid_root(g);
  const auto colon = c.root.find(':');
  if (colon == std::string::npos) throw ConfigError("root: expected lower:side, e.g. -2:4");
  Cube q;
  q.lower = parse_point("root", c.root.substr(0, colon), c.dim);
  q.side = parse_double("root", trim(c.root.substr(colon + 1)));
  return q;
}

int run_decompose(const ExperimentConfig& c, const Dir& dir, RunResult& res) {
  const GridFunction f = make_function(c.function, input_grid(c));
  const Cube root = parse_root(c, f.geometry());
  double lambda = c.lambda;
  if (lambda == 0.0) {
    const std::vector<double> ladder = lambda_ladder(f, root, 2);
    lambda = ladder.back();
  }
  if (!(lambda > 0.0)) throw ConfigError("lambda: must be positive (the function may be zero on the root)");
  const DecompositionResult d = cz_decompose(f, lambda, root);
  const DecompositionCheck check = check_decomposition(f, d);

  CsvFile cubes(dir / "cubes.csv", res.files);
  cubes.comment("function", c.function);
  cubes.comment("lambda", fmt(lambda));
  cubes.comment("root", point_text(root.lower) + " side " + fmt(root.side));
  std::vector<std::string> header{"k"};
  for (const auto& h : coordinate_header("lower", c.dim)) header.push_back(h);
  header.insert(header.end(), {"side", "average"});
  cubes.row(header);
  for (std::size_t k = 0; k < d.cubes.size(); ++k) {
    std::vector<std::string> row{std::to_string(k)};
    append_point(row, d.cubes[k].lower);
    const double cells = d.cubes[k].measure() / f.geometry().cell_volume();
    row.push_back(fmt(d.cubes[k].side));
    row.push_back(fmt(d.abs_sums[k] / cells));
    cubes.row(row);
  }

  GridFunction bad(f.geometry());
  for (const BadPart& b : d.bad)
    for (std::size_t t = 0; t < b.cells.size(); ++t) bad[b.cells[t]] += b.values[t];
  d.good.save_csv((dir / "good.csv").string());
  res.files.push_back("good.csv");
  bad.save_csv((dir / "bad.csv").string());
  res.files.push_back("bad.csv");

  CsvFile summary(dir / "decompose_summary.csv", res.files);
  summary.row({"cubes", "disjoint", "averages_bracketed", "small_off_cubes", "mean_zero", "reconstructs",
               "measure_bound"});
  auto b = [](bool v) { return std::string(v ? "1" : "0"); };
  summary.row({std::to_string(d.cubes.size()), b(check.disjoint), b(check.averages_bracketed),
               b(check.small_off_cubes), b(check.mean_zero), b(check.reconstructs), b(check.measure_bound)});
  if (!check.passed()) {
    summary.comment("failure", check.failure);
    res.message = check.failure;
    return 1;
  }
  return 0;
}

double effective_theta(const ExperimentConfig& c, const HyperCurve& curve) {
  return c.theta > 0.0 ? c.theta : qtheta_min_theta(curve) + 1.0;
}

int run_weaktype(const ExperimentConfig& c, const Dir& dir, RunResult& res) {
  const KernelSpec kernel = require_kernel(c);
  const GridGeometry grid = input_grid(c);
  std::vector<GridFunction> family;
  for (const std::string& spec : c.family) family.push_back(make_function(spec, grid));
  const double theta = effective_theta(c, kernel.singular_curve());
  warn_resolution({c.epsilons.front()}, grid);
  const WeakTypeReport r = weak_type_experiment(kernel, family, c.epsilons.front(), theta, c.ladder_steps);

  CsvFile csv(dir / "weaktype.csv", res.files);
  csv.comment("kernel", kernel.name);
  csv.comment("epsilon", fmt(c.epsilons.front()));
  csv.comment("theta", fmt(theta));
  csv.comment("n", std::to_string(c.n));
  csv.row({"function", "lambda", "cubes", "superlevel_measure", "ratio", "B_star_measure", "good_superlevel_measure",
           "bad_outside"});
  bool finite = true;
  for (const WeakTypeRow& w : r.rows) {
    finite = finite && std::isfinite(w.ratio);
    csv.row({std::to_string(w.function), fmt(w.lambda), std::to_string(w.cubes), fmt(w.superlevel_measure),
             fmt(w.ratio), fmt(w.b_star_measure), fmt(w.good_superlevel_measure), fmt(w.bad_outside)});
  }
  CsvFile summary(dir / "weaktype_summary.csv", res.files);
  summary.comment("max_ratio", fmt(r.max_ratio));
  summary.row({"function", "definition", "max_ratio"});
  for (std::size_t k = 0; k < r.function_max_ratio.size(); ++k)
    summary.row({std::to_string(k), c.family[k], fmt(r.function_max_ratio[k])});
  if (!finite) {
    res.message = "a weak-type ratio is not finite";
    return 1;
  }
  return 0;
}

int run_qtheta(const ExperimentConfig& c, const Dir& dir, RunResult& res) {
  const auto curve = require_curve(c);
  const double theta = effective_theta(c, *curve);
  Rng rng(c.seed);
  CsvFile csv(dir / "qtheta.csv", res.files);
  csv.comment("curve", c.curve);
  csv.comment("theta", fmt(theta));
  csv.comment("covering_constant", fmt(qtheta_covering_constant(*curve, theta)));
  std::vector<std::string> header{"cube"};
  for (const auto& h : coordinate_header("lower", c.dim)) header.push_back(h);
  header.insert(header.end(), {"side", "measured", "half_width", "bound", "min_separation_ratio", "probes", "passed"});
  csv.row(header);
  int status = 0;
  for (std::size_t k = 0; k < c.cubes; ++k) {
    Cube q;
    q.side = std::ldexp(1.0, static_cast<int>(rng.index(4)) - 2);
    q.lower = Vector(c.dim);
    for (std::size_t a = 0; a < c.dim; ++a) q.lower[a] = rng.uniform(c.box.lo[a], c.box.hi[a] - q.side);
    const QThetaReport r = check_qtheta(*curve, q, theta, c.probes, c.seed + k, c.mc_samples);
    std::vector<std::string> row{std::to_string(k)};
    append_point(row, q.lower);
    row.insert(row.end(), {fmt(q.side), fmt(r.measured), fmt(r.half_width), fmt(r.bound), fmt(r.min_separation_ratio),
                           std::to_string(r.probes), r.passed ? "1" : "0"});
    csv.row(row);
    if (!r.passed) {
      status = 1;
      csv.comment("failure_" + std::to_string(k), r.failure);
      if (r.witness) csv.comment("witness_" + std::to_string(k), point_text(r.witness->first) + " / " + point_text(r.witness->second));
      if (res.message.empty()) res.message = "cube " + std::to_string(k) + ": " + r.failure;
    }
  }
  return status;
}

void write_manifest(const ExperimentConfig& c, const Dir& dir, const RunResult& res, double seconds,
                    const std::string& started) {
  std::ofstream m(dir / "manifest.txt");
  m << "kind=" << c.kind << "\n";
  m << "version=" << kVersion << "\n";
  m << "seed=" << c.seed << "\n";
  m << "threads=" << thread_count() << "\n";
  m << "started=" << started << "\n";
  m << "wall_time_s=" << fmt(seconds) << "\n";
  m << "exit_code=" << res.exit_code << "\n";
  if (!res.message.empty()) m << "message=" << res.message << "\n";
  m << "files=" << join(res.files, ",") << "\n";
  for (const auto& [k, v] : c.values) m << "config." << k << "=" << v << "\n";
}

double bump(const Vector& x, double center, double radius) {
  double s = 0.0;
  for (double v : x) s += (v - center) * (v - center);
  s /= radius * radius;
  return s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s)) : 0.0;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys{
      {"curve", "two-lines", "curve name: diagonal, two-lines, diamond"},
      {"kernel", "two-line-hilbert", "kernel name: hilbert, two-line-hilbert, diamond-model"},
      {"dim", "1", "ambient dimension n"},
      {"box", "-8..8", "grid and sampling box, lo..hi for every axis or one range per axis separated by ','"},
      {"n", "512", "grid cells per axis"},
      {"out_n", "0", "output grid cells per axis (0: same as n)"},
      {"samples", "10000", "random point pairs for metric and metric-equivalence"},
      {"seed", "7", "random seed"},
      {"points", "", "explicit metric pairs 'x:y;x:y' (coordinates separated by spaces); overrides samples"},
      {"metrics", "rho,rho_tilde,rho_tilde_star", "metric columns to emit"},
      {"function", "bump:0:1", "input function: indicator:a:b, bump:c:r, odd-bump:c:r, zero, csv:path"},
      {"family", kDefaultFamily, "weaktype functions separated by ';'"},
      {"epsilon", "0.25", "truncation radius; a ',' list makes apply report convergence"},
      {"epsilons", "0.5,0.25,0.125,0.0625", "strictly decreasing radii for t0-convergence"},
      {"lambda", "0", "decomposition height (0: twice the average of |f| over the root)"},
      {"root", "", "decomposition root as lower:side (empty: the grid box)"},
      {"theta", "0", "enlargement factor (0: 2 sqrt(n) + 5 sqrt(n) c + 1)"},
      {"max_depth", "8", "partition depth"},
      {"lookups", "100000", "sampled induced-map lookups in the partition check"},
      {"b", "1,sin", "one multiplier per branch for recover: 0, 1, sin, cos, x or a number"},
      {"cap", "1.000000001", "cap for sup |b_i|^2 / |J_i| in recover"},
      {"audits", "size,regularity,hormander", "kernel-audit checks to run"},
      {"size_samples", "20000", "pairs for the size audit"},
      {"triples", "20000", "triples for the regularity audit"},
      {"hormander_a", "0.1,1,10", "pair separations a for the pairs (0, a e_1)"},
      {"hormander_grid", "1048576", "cells per axis of the Hoermander quadrature"},
      {"hormander_box_scale", "4096", "integration box half-width in units of a"},
      {"adjoint", "0", "also compute the adjoint Hoermander integral (0 or 1)"},
      {"cubes", "10", "random cubes for qtheta"},
      {"probes", "1000", "separation probes per cube for qtheta"},
      {"mc_samples", "1000000", "Monte-Carlo points per cube for qtheta"},
      {"ladder_steps", "13", "lambda ladder length for weaktype"},
      {"threads", "0", "worker threads (0: CZO_THREADS or the hardware count)"},
      {"out", "czo-out", "output directory"},
  };
  return keys;
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"metric",        "metric-equivalence", "partition", "kernel-audit",
                                              "hormander",     "apply",              "t0-convergence",
                                              "recover",       "decompose",          "weaktype",  "qtheta"};
  return kinds;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const bool known = std::any_of(config_keys().begin(), config_keys().end(),
                                   [&](const ConfigKey& k) { return k.name == key; });
    if (!known) throw ConfigError("line " + std::to_string(number) + ": unknown key " + key);
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

ExperimentConfig make_config(const std::string& kind, const std::map<std::string, std::string>& file,
                             const std::vector<std::string>& overrides) {
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) throw ConfigError("unknown experiment kind: " + kind);

  std::map<std::string, std::string> v;
  for (const ConfigKey& k : config_keys()) v[k.name] = k.default_value;
  for (const auto& [k, val] : file) v[k] = val;
  std::string text;
  for (const std::string& o : overrides) text += o + "\n";
  for (const auto& [k, val] : parse_config_text(text)) v[k] = val;

  ExperimentConfig c;
  c.kind = kind;
  c.values = v;
  c.curve = v["curve"];
  c.kernel = v["kernel"];
  c.dim = parse_count("dim", v["dim"]);
  if (c.dim < 1 || c.dim > kMaxDim) throw ConfigError("dim: must be between 1 and " + std::to_string(kMaxDim));
  c.box = parse_box(v["box"], c.dim);
  c.n = parse_count("n", v["n"]);
  c.out_n = parse_count("out_n", v["out_n"]);
  if (c.n < 1) throw ConfigError("n: must be positive");
  c.samples = parse_count("samples", v["samples"]);
  c.seed = parse_count("seed", v["seed"]);
  c.points = v["points"];
  c.function = v["function"];
  c.family = split(v["family"], ';');
  if (c.family.empty()) throw ConfigError("family: needs at least one function");
  c.epsilons = parse_doubles("epsilon", v["epsilon"]);
  c.t0_epsilons = parse_doubles("epsilons", v["epsilons"]);
  for (const auto* list : {&c.epsilons, &c.t0_epsilons}) {
    if (list->empty()) throw ConfigError("epsilon lists must not be empty");
    for (std::size_t k = 0; k < list->size(); ++k) {
      if (!((*list)[k] > 0.0)) throw ConfigError("epsilon values must be positive");
      if (k > 0 && !((*list)[k] < (*list)[k - 1])) throw ConfigError("epsilon lists must be strictly decreasing");
    }
  }
  c.lambda = parse_double("lambda", v["lambda"]);
  if (c.lambda < 0.0) throw ConfigError("lambda: must not be negative");
  c.root = v["root"];
  c.theta = parse_double("theta", v["theta"]);
  c.max_depth = static_cast<int>(parse_count("max_depth", v["max_depth"]));
  if (c.max_depth > 40) throw ConfigError("max_depth: at most 40");
  c.lookups = parse_count("lookups", v["lookups"]);
  c.multipliers = split(v["b"], ',');
  c.cap = parse_double("cap", v["cap"]);
  if (!(c.cap > 0.0)) throw ConfigError("cap: must be positive");
  c.audits = split(v["audits"], ',');
  c.size_samples = parse_count("size_samples", v["size_samples"]);
  c.triples = parse_count("triples", v["triples"]);
  c.hormander_a = parse_doubles("hormander_a", v["hormander_a"]);
  c.hormander_grid = parse_count("hormander_grid", v["hormander_grid"]);
  if (c.hormander_grid < 2) throw ConfigError("hormander_grid: at least 2");
  c.hormander_box_scale = parse_double("hormander_box_scale", v["hormander_box_scale"]);
  if (!(c.hormander_box_scale > 2.0)) throw ConfigError("hormander_box_scale: must exceed 2");
  const std::string adj = v["adjoint"];
  if (adj != "0" && adj != "1") throw ConfigError("adjoint: expected 0 or 1");
  c.adjoint = adj == "1";
  c.cubes = parse_count("cubes", v["cubes"]);
  c.probes = parse_count("probes", v["probes"]);
  c.mc_samples = parse_count("mc_samples", v["mc_samples"]);
  c.ladder_steps = static_cast<int>(parse_count("ladder_steps", v["ladder_steps"]));
  if (c.ladder_steps < 1 || c.ladder_steps > 60) throw ConfigError("ladder_steps: between 1 and 60");
  c.threads = parse_count("threads", v["threads"]);
  c.out = v["out"];
  if (c.out.empty()) throw ConfigError("out: must name a directory");
  return c;
}

GridFunction make_function(const std::string& spec, const GridGeometry& geometry) {
  const std::vector<std::string> parts = split(spec, ':');
  if (parts.empty()) throw ConfigError("function: empty definition");
  const std::string& family = parts[0];
  if (family == "zero") return GridFunction(geometry);
  if (family == "csv") {
    if (parts.size() < 2) throw ConfigError("function: csv needs a path");
    const std::string path = spec.substr(spec.find(':') + 1);
    GridFunction f;
    try {
      f = GridFunction::load_csv(path);
    } catch (const std::exception& e) {
      throw ConfigError("function: " + std::string(e.what()));
    }
    if (!(f.geometry() == geometry)) throw ConfigError("function: " + path + " does not match the configured grid");
    return f;
  }
  if (parts.size() != 3) throw ConfigError("function: expected " + family + ":<a>:<b> in '" + spec + "'");
  const double a = parse_double("function", parts[1]);
  const double b = parse_double("function", parts[2]);
  if (family == "indicator") {
    if (!(b >= a)) throw ConfigError("function: indicator needs a <= b");
    return GridFunction::sample(geometry, [a, b](const Vector& x) {
      for (double v : x)
        if (v < a || v > b) return 0.0;
      return 1.0;
    });
  }
  if (family == "bump" || family == "odd-bump") {
    if (!(b > 0.0)) throw ConfigError("function: bump radius must be positive");
    if (family == "bump") return GridFunction::sample(geometry, [a, b](const Vector& x) { return bump(x, a, b); });
    return GridFunction::sample(geometry, [a, b](const Vector& x) { return bump(x, a, b) - bump(x, -a, b); });
  }
  throw ConfigError("function: unknown family '" + family + "'");
}

std::function<double(const Vector&)> named_multiplier(const std::string& name) {
  if (name == "sin") return [](const Vector& x) { return std::sin(x[0]); };
  if (name == "cos") return [](const Vector& x) { return std::cos(x[0]); };
  if (name == "x") return [](const Vector& x) { return x[0]; };
  const double v = parse_double("b", name);
  return [v](const Vector&) { return v; };
}

RunResult run_experiment(const ExperimentConfig& config) {
  RunResult res;
  const auto t0 = std::chrono::steady_clock::now();
  const std::time_t now = std::time(nullptr);
  char started[32];
  std::strftime(started, sizeof started, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));

  const Dir dir(config.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    res.exit_code = 2;
    res.message = "cannot create output directory " + config.out;
    return res;
  }
  if (config.threads > 0) set_thread_count(config.threads);

  try {
    const std::string& k = config.kind;
    if (k == "metric") res.exit_code = run_metric(config, dir, res);
    else if (k == "metric-equivalence") res.exit_code = run_metric_equivalence(config, dir, res);
    else if (k == "partition") res.exit_code = run_partition(config, dir, res);
    else if (k == "kernel-audit") res.exit_code = run_kernel_audit(config, dir, res);
    else if (k == "hormander") res.exit_code = run_hormander(config, dir, res);
    else if (k == "apply") res.exit_code = run_apply(config, dir, res);
    else if (k == "t0-convergence") res.exit_code = run_t0_convergence(config, dir, res);
    else if (k == "recover") res.exit_code = run_recover(config, dir, res);
    else if (k == "decompose") res.exit_code = run_decompose(config, dir, res);
    else if (k == "weaktype") res.exit_code = run_weaktype(config, dir, res);
    else if (k == "qtheta") res.exit_code = run_qtheta(config, dir, res);
    else throw ConfigError("unknown experiment kind: " + k);
  } catch (const ConfigError& e) {
    res.exit_code = 2;
    res.message = e.what();
  } catch (const InvalidInput& e) {
    res.exit_code = 2;
    res.message = e.what();
  } catch (const std::exception& e) {
    res.exit_code = 1;
    res.message = e.what();
  }

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(config, dir, res, seconds, started);
  res.files.push_back("manifest.txt");
  return res;
}

}  // namespace czo
