#pragma once
// Experiment drivers: JSON configuration, preset coefficient geometries on
// the unit square, and the table runners behind the command-line tool. Each
// runner returns plain row structs; write_csv overloads serialize them.

#include <Eigen/SparseLU>
#include <cmath>
#include <complex>
#include <iomanip>
#include <istream>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crfve/assembly.hpp"
#include "crfve/coefficient.hpp"
#include "crfve/dual_mesh.hpp"
#include "crfve/gmres.hpp"
#include "crfve/matrix_norms.hpp"
#include "crfve/mesh.hpp"
#include "crfve/partition.hpp"
#include "crfve/schwarz.hpp"
#include "crfve/spectral.hpp"

namespace crfve {

struct SolverConfig {
  int variant = 2;
  double rtol = 1e-6;
  int maxit = 500;
  bool energy_product = true;
  bool estimate_cp = true;
};

struct SweepConfig {
  std::vector<double> alpha1{1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
  std::vector<int> mesh_sizes{8, 16, 32};
  std::vector<int> blocks{2, 4};
};

struct ExperimentConfig {
  int n = 32;
  Diagonal diagonal = Diagonal::lower_left;
  int blocks = 4;
  CoefficientSpec coefficient;
  int example = 0;  // 0 = use coefficient.inclusions as given
  SolverConfig solver;
  SweepConfig sweep;
  std::string convergence_case = "sin";      // or "linear"
  std::string diagnostics_mode = "nonsymmetry";  // or "perturbation"
};

/// Built-in inclusion layouts. All rectangles have corners on the 1/32 grid
/// with even coordinates, so they resolve exactly on meshes with n a
/// multiple of 16; other sizes are rejected.
///   1: channels and squares interior to each of the 4x4 blocks, kept two
///      cells away from the block boundaries;
///   2: squares straddling every interior block interface;
///   3: a checkerboard of whole blocks;
///   4: horizontal channels crossing all vertical interfaces.
inline std::vector<Rect> preset_geometry(int example, int n) {
  if (n < 16 || n % 16 != 0)
    throw std::invalid_argument(
        "preset geometries require a mesh size that is a multiple of 16");
  auto cells = [](int x0, int y0, int x1, int y1) {
    return Rect{x0 / 32.0, y0 / 32.0, x1 / 32.0, y1 / 32.0};
  };
  std::vector<Rect> out;
  switch (example) {
    case 1:
      for (int by = 0; by < 4; ++by)
        for (int bx = 0; bx < 4; ++bx) {
          out.push_back(cells(8 * bx + 2, 8 * by + 2, 8 * bx + 6, 8 * by + 4));
          out.push_back(cells(8 * bx + 4, 8 * by + 4, 8 * bx + 6, 8 * by + 6));
        }
      break;
    case 2:
      for (int a = 1; a <= 3; ++a)
        for (int b = 0; b < 4; ++b) {
          out.push_back(cells(8 * a - 2, 8 * b + 2, 8 * a + 2, 8 * b + 6));
          out.push_back(cells(8 * b + 2, 8 * a - 2, 8 * b + 6, 8 * a + 2));
        }
      break;
    case 3:
      for (int by = 0; by < 4; ++by)
        for (int bx = 0; bx < 4; ++bx)
          if ((bx + by) % 2 == 1)
            out.push_back(cells(8 * bx, 8 * by, 8 * bx + 8, 8 * by + 8));
      break;
    case 4:
      for (int r = 0; r < 4; ++r) out.push_back(cells(0, 8 * r + 4, 32, 8 * r + 6));
      break;
    default:
      throw std::invalid_argument("preset example must be between 1 and 4");
  }
  return out;
}

inline Diagonal parse_diagonal(const std::string& s) {
  if (s == "lower_left") return Diagonal::lower_left;
  if (s == "lower_right") return Diagonal::lower_right;
  throw std::invalid_argument("unknown diagonal: " + s);
}

inline CoefficientSpec::Base parse_base(const std::string& s) {
  if (s == "constant") return CoefficientSpec::Base::constant;
  if (s == "sinusoidal") return CoefficientSpec::Base::sinusoidal;
  throw std::invalid_argument("unknown coefficient base: " + s);
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  const nlohmann::json empty = nlohmann::json::object();
  const nlohmann::json& jm = j.contains("mesh") ? j.at("mesh") : empty;
  cfg.n = jm.value("n", cfg.n);
  cfg.diagonal = parse_diagonal(jm.value("diagonal", std::string("lower_left")));
  if (cfg.n < 1 || cfg.n > 4096)
    throw std::invalid_argument("mesh.n must be between 1 and 4096");

  const nlohmann::json& jp = j.contains("partition") ? j.at("partition") : empty;
  cfg.blocks = jp.value("blocks", cfg.blocks);
  if (cfg.blocks < 1) throw std::invalid_argument("partition.blocks must be positive");

  const nlohmann::json& jc = j.contains("coefficient") ? j.at("coefficient") : empty;
  cfg.coefficient.base = parse_base(jc.value("base", std::string("sinusoidal")));
  cfg.coefficient.value = jc.value("value", cfg.coefficient.value);
  cfg.coefficient.frequency = jc.value("frequency", cfg.coefficient.frequency);
  cfg.coefficient.alpha1 = jc.value("alpha1", cfg.coefficient.alpha1);
  cfg.example = jc.value("example", 0);
  if (cfg.example < 0 || cfg.example > 4)
    throw std::invalid_argument("coefficient.example must be between 0 and 4");
  if (jc.contains("inclusions")) {
    if (cfg.example != 0)
      throw std::invalid_argument(
          "give either coefficient.example or coefficient.inclusions, not both");
    for (const auto& r : jc.at("inclusions")) {
      if (!r.is_array() || r.size() != 4)
        throw std::invalid_argument("each inclusion must be [x0, y0, x1, y1]");
      cfg.coefficient.inclusions.push_back(
          Rect{r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
               r[3].get<double>()});
    }
  }

  const nlohmann::json& js = j.contains("solver") ? j.at("solver") : empty;
  cfg.solver.variant = js.value("variant", cfg.solver.variant);
  cfg.solver.rtol = js.value("rtol", cfg.solver.rtol);
  cfg.solver.maxit = js.value("maxit", cfg.solver.maxit);
  std::string ipname = js.value("inner_product", std::string("energy"));
  if (ipname == "energy")
    cfg.solver.energy_product = true;
  else if (ipname == "l2" || ipname == "euclidean")
    cfg.solver.energy_product = false;
  else
    throw std::invalid_argument("unknown inner_product: " + ipname);
  cfg.solver.estimate_cp = js.value("estimate_cp", cfg.solver.estimate_cp);
  if (cfg.solver.variant < 1 || cfg.solver.variant > 3)
    throw std::invalid_argument("solver.variant must be 1, 2 or 3");
  if (cfg.solver.rtol <= 0.0 || cfg.solver.maxit < 1)
    throw std::invalid_argument("solver.rtol must be positive and maxit >= 1");

  const nlohmann::json& jv = j.contains("convergence") ? j.at("convergence") : empty;
  cfg.convergence_case = jv.value("case", cfg.convergence_case);
  if (cfg.convergence_case != "sin" && cfg.convergence_case != "linear")
    throw std::invalid_argument("convergence.case must be sin or linear");

  const nlohmann::json& jd = j.contains("diagnostics") ? j.at("diagnostics") : empty;
  cfg.diagnostics_mode = jd.value("mode", cfg.diagnostics_mode);
  if (cfg.diagnostics_mode != "nonsymmetry" && cfg.diagnostics_mode != "perturbation")
    throw std::invalid_argument("diagnostics.mode must be nonsymmetry or perturbation");

  const nlohmann::json& jw = j.contains("sweep") ? j.at("sweep") : empty;
  if (jw.contains("alpha1"))
    cfg.sweep.alpha1 = jw.at("alpha1").get<std::vector<double>>();
  if (jw.contains("mesh_sizes"))
    cfg.sweep.mesh_sizes = jw.at("mesh_sizes").get<std::vector<int>>();
  if (jw.contains("blocks"))
    cfg.sweep.blocks = jw.at("blocks").get<std::vector<int>>();
  return cfg;
}

inline ExperimentConfig parse_config(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

/// The coefficient specification for one sweep point: preset geometry (if
/// any) plus the requested contrast.
inline CoefficientSpec spec_for(const ExperimentConfig& cfg, double alpha1) {
  CoefficientSpec s = cfg.coefficient;
  if (cfg.example != 0) s.inclusions = preset_geometry(cfg.example, cfg.n);
  s.alpha1 = alpha1;
  s.validate();
  return s;
}

struct Workspace {
  TriMesh mesh;
  DualMesh dual;
  Partition part;
  OperatorMatrix fe;
  OperatorMatrix fve;
  Eigen::VectorXd load_fe;
  Eigen::VectorXd load_fve;
  std::optional<SchwarzOperator> op;
};

/// Quadrature refinement so that subcells resolve a quarter period of an
/// oscillatory coefficient. A plain rule aliases sub-mesh oscillations and
/// inflates the finite volume perturbation with integration noise.
inline int oscillation_levels(const CoefficientSpec& spec, int n) {
  if (spec.base != CoefficientSpec::Base::sinusoidal) return 0;
  const double subcells = 2.0 * spec.frequency / n;  // h / (quarter period)
  int levels = 0;
  while ((1 << levels) < subcells && levels < 5) ++levels;
  return levels;
}

inline Workspace make_workspace(const ExperimentConfig& cfg,
                                const CoefficientSpec& spec,
                                bool with_solver = true) {
  Workspace w;
  w.mesh = build_unit_square_mesh(cfg.n, cfg.diagonal, make_tagger(spec));
  w.dual = build_dual_mesh(w.mesh);
  CoefficientField field = make_field(spec);
  const int levels = oscillation_levels(spec, cfg.n);
  w.fe = assemble_fe_matrix(w.mesh, field, composite_triangle_rule(levels));
  w.fve = assemble_fve_matrix(w.mesh, w.dual, field,
                              composite_segment_rule(1 << levels));
  auto one = [](Point2) { return 1.0; };
  CrFunction bfe = assemble_fe_rhs(w.mesh, one);
  CrFunction bfv = assemble_fve_rhs(w.mesh, w.dual, one);
  w.load_fe = Eigen::Map<const Eigen::VectorXd>(bfe.values.data(), bfe.values.size());
  w.load_fve = Eigen::Map<const Eigen::VectorXd>(bfv.values.data(), bfv.values.size());
  if (with_solver) {
    w.part = build_block_partition(w.mesh, cfg.blocks);
    w.op.emplace(w.mesh, w.part, w.fe, w.fve, cfg.solver.variant);
  }
  return w;
}

inline Eigen::VectorXd direct_solve(const SpMat& A, const Eigen::VectorXd& b) {
  SpMat Ac = A;
  Ac.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.compute(Ac);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("sparse factorization failed");
  return lu.solve(b);
}

struct SolveOutcome {
  Eigen::VectorXd u;
  KrylovReport report;
};

inline SolveOutcome solve_once(const Workspace& w, const SolverConfig& solver) {
  const bool fe_system = solver.variant == 1;
  const SpMat& A = fe_system ? w.fe.A : w.fve.A;
  const Eigen::VectorXd& b = fe_system ? w.load_fe : w.load_fve;
  Eigen::VectorXd g = w.op->build_g(b);
  InnerProduct ip = solver.energy_product ? InnerProduct::energy(w.fe.A)
                                          : InnerProduct::l2();
  GmresOptions opts;
  opts.rtol = solver.rtol;
  opts.maxit = solver.maxit;
  TrueResidualMonitor mon{[&A](const Eigen::VectorXd& x) { return A * x; }, b};
  GmresResult res = gmres([&w](const Eigen::VectorXd& x) { return w.op->apply(x); },
                          g, ip, opts, &mon);
  return {std::move(res.u), std::move(res.report)};
}

/// Lower-bound estimate for the preconditioned operator, always in the
/// energy inner product of the symmetric form.
inline SpectralEstimate operator_cp(const Workspace& w, double tol = 1e-6) {
  InnerProduct ip = InnerProduct::energy(w.fe.A);
  return estimate_cp([&w](const Eigen::VectorXd& x) { return w.op->apply(x); },
                     [&w](const Eigen::VectorXd& x) { return w.op->apply_transpose(x); },
                     w.op->dim(), ip, tol);
}

inline SpectralEstimate operator_Cp(const Workspace& w, double tol = 1e-6) {
  InnerProduct ip = InnerProduct::energy(w.fe.A);
  return estimate_Cp([&w](const Eigen::VectorXd& x) { return w.op->apply(x); },
                     [&w](const Eigen::VectorXd& x) { return w.op->apply_transpose(x); },
                     w.op->dim(), ip, tol);
}

struct IterationRow {
  double alpha1 = 1.0;
  int iterations = 0;
  bool converged = false;
  double cp = std::numeric_limits<double>::quiet_NaN();
};

struct IterationTable {
  std::vector<IterationRow> rows;
  bool all_converged = true;
};

inline IterationTable run_iteration_table(const ExperimentConfig& cfg) {
  IterationTable table;
  for (double a1 : cfg.sweep.alpha1) {
    Workspace w = make_workspace(cfg, spec_for(cfg, a1));
    SolveOutcome out = solve_once(w, cfg.solver);
    IterationRow row;
    row.alpha1 = a1;
    row.iterations = out.report.iterations;
    row.converged = out.report.converged;
    if (cfg.solver.estimate_cp) row.cp = operator_cp(w).value;
    table.all_converged = table.all_converged && row.converged;
    table.rows.push_back(row);
  }
  return table;
}

struct ScalingRow {
  int n = 0;
  int blocks = 0;
  double h = 0.0;
  double H = 0.0;
  int iterations = 0;
  bool converged = false;
  double cp = std::numeric_limits<double>::quiet_NaN();
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  bool all_converged = true;
};

inline ScalingTable run_scaling_table(const ExperimentConfig& cfg) {
  ScalingTable table;
  for (int m : cfg.sweep.blocks)
    for (int n : cfg.sweep.mesh_sizes) {
      if (n % m != 0 || n / m < 2) continue;
      ExperimentConfig local = cfg;
      local.n = n;
      local.blocks = m;
      Workspace w = make_workspace(local, spec_for(cfg, cfg.coefficient.alpha1));
      SolveOutcome out = solve_once(w, cfg.solver);
      ScalingRow row;
      row.n = n;
      row.blocks = m;
      row.h = 1.0 / n;
      row.H = 1.0 / m;
      row.iterations = out.report.iterations;
      row.converged = out.report.converged;
      if (cfg.solver.estimate_cp) row.cp = operator_cp(w).value;
      table.all_converged = table.all_converged && row.converged;
      table.rows.push_back(row);
    }
  return table;
}

struct NonsymmetryRow {
  double alpha1 = 1.0;
  double norm_skew = 0.0;
  double norm_nonnormal = 0.0;
};

struct NonsymmetryTable {
  std::vector<NonsymmetryRow> rows;
  bool all_converged = true;
};

inline NonsymmetryTable run_nonsymmetry_table(const ExperimentConfig& cfg) {
  NonsymmetryTable table;
  for (double a1 : cfg.sweep.alpha1) {
    Workspace w = make_workspace(cfg, spec_for(cfg, a1), false);
    NonsymmetryMeasures nm = nonsymmetry_measures(w.fve, 1e-8);
    table.rows.push_back({a1, nm.norm_skew, nm.norm_nonnormal});
  }
  return table;
}

struct PerturbationRow {
  int n = 0;
  double h = 0.0;
  double norm_diff = 0.0;
};

struct PerturbationTable {
  std::vector<PerturbationRow> rows;
  bool all_converged = true;
};

inline PerturbationTable run_perturbation_table(const ExperimentConfig& cfg) {
  PerturbationTable table;
  for (int n : cfg.sweep.mesh_sizes) {
    ExperimentConfig local = cfg;
    local.n = n;
    Workspace w = make_workspace(local, spec_for(cfg, cfg.coefficient.alpha1), false);
    table.rows.push_back({n, 1.0 / n, perturbation_norm(w.fe, w.fve, 1e-8)});
  }
  return table;
}

struct ConvergenceRow {
  int n = 0;
  double h = 0.0;
  double error = 0.0;
  double order = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  bool all_converged = true;
};

/// Manufactured-solution study with the finite volume scheme: case "sin"
/// solves for u = sin(pi x) sin(pi y) with a direct factorization; case
/// "linear" reports the error of the midpoint interpolant of an affine u,
/// which solves the boundary-lifted discrete problem exactly for constant
/// coefficients. Requires a smooth coefficient, so no inclusions.
inline ConvergenceTable run_convergence_study(const ExperimentConfig& cfg) {
  if (cfg.example != 0 || !cfg.coefficient.inclusions.empty())
    throw std::invalid_argument(
        "the convergence study requires a smooth coefficient without inclusions");
  if (cfg.convergence_case == "linear") {
    if (cfg.coefficient.base != CoefficientSpec::Base::constant)
      throw std::invalid_argument(
          "the linear convergence case requires a constant coefficient");
    auto lin = [](Point2 p) { return 3.0 * p.x - 2.0 * p.y + 0.25; };
    auto lin_grad = [](Point2) { return Point2{3.0, -2.0}; };
    ConvergenceTable table;
    for (int n : cfg.sweep.mesh_sizes) {
      TriMesh mesh = build_unit_square_mesh(n, cfg.diagonal);
      CrFunction uh = interpolate_midpoints(mesh, lin);
      ConvergenceRow row;
      row.n = n;
      row.h = 1.0 / n;
      row.error = broken_h1_error(mesh, uh, lin, lin_grad, triangle_rule(5), lin);
      table.rows.push_back(row);
    }
    return table;
  }
  constexpr double pi = std::numbers::pi;
  const bool constant = cfg.coefficient.base == CoefficientSpec::Base::constant;
  const double v = cfg.coefficient.value;
  const double gfreq = static_cast<double>(cfg.coefficient.frequency);
  auto exact = [pi](Point2 p) { return std::sin(pi * p.x) * std::sin(pi * p.y); };
  auto grad = [pi](Point2 p) {
    return Point2{pi * std::cos(pi * p.x) * std::sin(pi * p.y),
                  pi * std::sin(pi * p.x) * std::cos(pi * p.y)};
  };
  auto rhs = [=](Point2 p) {
    double u = std::sin(pi * p.x) * std::sin(pi * p.y);
    if (constant) return 2.0 * pi * pi * v * u;
    double g = gfreq * pi;
    double alpha = 2.0 + std::sin(g * p.x) * std::sin(g * p.y);
    double cross = gfreq * pi * pi *
                   (std::cos(g * p.x) * std::sin(g * p.y) * std::cos(pi * p.x) *
                        std::sin(pi * p.y) +
                    std::sin(g * p.x) * std::cos(g * p.y) * std::sin(pi * p.x) *
                        std::cos(pi * p.y));
    return 2.0 * pi * pi * alpha * u - cross;
  };

  ConvergenceTable table;
  for (int n : cfg.sweep.mesh_sizes) {
    ExperimentConfig local = cfg;
    local.n = n;
    Workspace w = make_workspace(local, spec_for(cfg, 1.0), false);
    CrFunction b = assemble_fve_rhs(w.mesh, w.dual, rhs);
    Eigen::VectorXd bv =
        Eigen::Map<const Eigen::VectorXd>(b.values.data(), b.values.size());
    Eigen::VectorXd u = direct_solve(w.fve.A, bv);
    CrFunction uh{u, w.mesh.id};
    ConvergenceRow row;
    row.n = n;
    row.h = 1.0 / n;
    row.error = broken_h1_error(w.mesh, uh, exact, grad, triangle_rule(5));
    if (!table.rows.empty()) {
      const ConvergenceRow& prev = table.rows.back();
      row.order = std::log(prev.error / row.error) /
                  std::log(static_cast<double>(n) / prev.n);
    }
    table.rows.push_back(row);
  }
  return table;
}

struct SpectrumPair {
  std::vector<std::complex<double>> system;
  std::vector<std::complex<double>> preconditioned;
};

inline SpectrumPair run_spectrum(const ExperimentConfig& cfg) {
  Workspace w = make_workspace(cfg, spec_for(cfg, cfg.coefficient.alpha1));
  SpectrumPair out;
  const SpMat& A = cfg.solver.variant == 1 ? w.fe.A : w.fve.A;
  out.system = dense_spectrum(Eigen::MatrixXd(A));
  Eigen::MatrixXd Td = dense_operator(
      [&w](const Eigen::VectorXd& x) { return w.op->apply(x); }, w.op->dim());
  out.preconditioned = dense_spectrum(Td);
  return out;
}

inline void write_csv(const IterationTable& t, std::ostream& os) {
  os << "alpha1,iterations,cp\n" << std::setprecision(12);
  for (const auto& r : t.rows)
    os << r.alpha1 << ',' << r.iterations << ',' << r.cp << '\n';
}

inline void write_csv(const ScalingTable& t, std::ostream& os) {
  os << "h,H,iterations,cp\n" << std::setprecision(12);
  for (const auto& r : t.rows)
    os << r.h << ',' << r.H << ',' << r.iterations << ',' << r.cp << '\n';
}

inline void write_csv(const NonsymmetryTable& t, std::ostream& os) {
  os << "alpha1,norm_A_minus_At,norm_AAt_minus_AtA\n" << std::setprecision(12);
  for (const auto& r : t.rows)
    os << r.alpha1 << ',' << r.norm_skew << ',' << r.norm_nonnormal << '\n';
}

inline void write_csv(const PerturbationTable& t, std::ostream& os) {
  os << "h,norm_AFE_minus_AFVE\n" << std::setprecision(12);
  for (const auto& r : t.rows) os << r.h << ',' << r.norm_diff << '\n';
}

inline void write_csv(const ConvergenceTable& t, std::ostream& os) {
  os << "h,error,order\n" << std::setprecision(12);
  for (const auto& r : t.rows)
    os << r.h << ',' << r.error << ',' << r.order << '\n';
}

inline void write_spectrum(const std::vector<std::complex<double>>& spec,
                           std::ostream& os) {
  os << "re,im\n" << std::setprecision(17);
  for (const auto& z : spec) os << z.real() << ',' << z.imag() << '\n';
}

inline void write_residual_history(const KrylovReport& rep, std::ostream& os) {
  os << "iter,true_residual,precond_residual,minimized_residual\n"
     << std::setprecision(12);
  for (std::size_t m = 0; m < rep.residual_history.size(); ++m)
    os << m << ',' << rep.residual_history[m] << ','
       << rep.precond_residual_history[m] << ',' << rep.ip_residual_history[m]
       << '\n';
}

}  // namespace crfve
