// Command-line driver: reads a JSON experiment configuration, runs one of
// the table generators from the library, and writes CSV (or JSON for
// mesh-info). Exit code 0 when every solved row converged, 2 when any row
// hit the iteration cap, 1 on configuration or runtime errors.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>

#include "crfve/experiment.hpp"

namespace {

using namespace crfve;

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file: " + path);
  return os;
}

std::pair<std::string, std::string> split_extension(const std::string& path) {
  auto slash = path.find_last_of('/');
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos ||
      (slash != std::string::npos && dot < slash))
    return {path, std::string()};
  return {path.substr(0, dot), path.substr(dot)};
}

int run_mesh_info(const std::string& config_path, const std::string& out_path,
                  const std::string& mesh_path, const std::string& part_path) {
  ExperimentConfig cfg = load_config(config_path);
  CoefficientSpec spec = spec_for(cfg, cfg.coefficient.alpha1);
  TriMesh mesh = build_unit_square_mesh(cfg.n, cfg.diagonal, make_tagger(spec));
  MeshDiagnostics diag = validate_mesh(mesh);
  Partition part = build_block_partition(mesh, cfg.blocks);
  nlohmann::json j;
  j["vertices"] = mesh.points.size();
  j["triangles"] = mesh.triangles.size();
  j["edges"] = mesh.edges.size();
  j["interior_edges"] = mesh.n_interior_edges;
  j["h"] = mesh.h;
  j["h_min"] = diag.h_min;
  j["h_max"] = diag.h_max;
  j["shape_regularity"] = diag.shape_regularity;
  j["flipped_triangles"] = diag.flipped_triangles;
  j["nonconforming_edges"] = diag.nonconforming_edges;
  j["valid"] = diag.ok();
  j["subdomains"] = part.n_subdomains();
  j["interface_dofs"] = part.interface_dofs.size();
  std::ofstream os = open_out(out_path);
  os << j.dump(2) << '\n';
  if (!mesh_path.empty()) {
    std::ofstream ms = open_out(mesh_path);
    write_mesh(mesh, ms);
  }
  if (!part_path.empty()) {
    std::ofstream ps = open_out(part_path);
    write_partition(part, ps);
  }
  return diag.ok() ? 0 : 1;
}

int run_solve_command(const std::string& config_path, const std::string& out_path,
                      const std::string& history_path) {
  ExperimentConfig cfg = load_config(config_path);
  Workspace w = make_workspace(cfg, spec_for(cfg, cfg.coefficient.alpha1));
  SolveOutcome out = solve_once(w, cfg.solver);
  std::ofstream os = open_out(out_path);
  write_vector(out.u, os);
  if (!history_path.empty()) {
    std::ofstream hs = open_out(history_path);
    write_residual_history(out.report, hs);
  }
  std::cerr << "iterations: " << out.report.iterations
            << (out.report.converged ? "" : " (no convergence)") << '\n';
  return out.report.converged ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crouzeix-Raviart finite volume experiment driver"};
  app.require_subcommand(1);

  struct SubArgs {
    std::string config;
    std::string out;
  };
  auto add_common = [](CLI::App* sub, SubArgs& args) {
    sub->add_option("--config", args.config, "experiment configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output file")->required();
  };

  SubArgs info_args, diag_args, iter_args, scal_args, conv_args, spec_args,
      solve_args;
  std::string mesh_dump, part_dump, history_path;

  CLI::App* info = app.add_subcommand("mesh-info", "mesh and partition summary");
  add_common(info, info_args);
  info->add_option("--write-mesh", mesh_dump, "also dump the mesh");
  info->add_option("--write-partition", part_dump, "also dump the partition");

  CLI::App* diag = app.add_subcommand(
      "diagnostics", "matrix non-symmetry or discretization-difference table");
  add_common(diag, diag_args);

  CLI::App* iter =
      app.add_subcommand("iterations", "iteration counts over a contrast sweep");
  add_common(iter, iter_args);

  CLI::App* scal =
      app.add_subcommand("scaling", "iteration counts over an (h, H) grid");
  add_common(scal, scal_args);

  CLI::App* conv =
      app.add_subcommand("convergence", "manufactured-solution error study");
  add_common(conv, conv_args);

  CLI::App* spec =
      app.add_subcommand("spectrum", "dense eigenvalue dump of matrix and operator");
  add_common(spec, spec_args);

  CLI::App* solve = app.add_subcommand("solve", "single solve with residual history");
  add_common(solve, solve_args);
  solve->add_option("--history", history_path, "residual history CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*info)
      return run_mesh_info(info_args.config, info_args.out, mesh_dump, part_dump);
    if (*diag) {
      ExperimentConfig cfg = load_config(diag_args.config);
      std::ofstream os = open_out(diag_args.out);
      if (cfg.diagnostics_mode == "perturbation")
        write_csv(run_perturbation_table(cfg), os);
      else
        write_csv(run_nonsymmetry_table(cfg), os);
      return 0;
    }
    if (*iter) {
      ExperimentConfig cfg = load_config(iter_args.config);
      IterationTable t = run_iteration_table(cfg);
      std::ofstream os = open_out(iter_args.out);
      write_csv(t, os);
      if (!t.all_converged)
        std::cerr << "warning: some rows hit the iteration cap\n";
      return t.all_converged ? 0 : 2;
    }
    if (*scal) {
      ExperimentConfig cfg = load_config(scal_args.config);
      ScalingTable t = run_scaling_table(cfg);
      std::ofstream os = open_out(scal_args.out);
      write_csv(t, os);
      if (!t.all_converged)
        std::cerr << "warning: some rows hit the iteration cap\n";
      return t.all_converged ? 0 : 2;
    }
    if (*conv) {
      ExperimentConfig cfg = load_config(conv_args.config);
      std::ofstream os = open_out(conv_args.out);
      write_csv(run_convergence_study(cfg), os);
      return 0;
    }
    if (*spec) {
      ExperimentConfig cfg = load_config(spec_args.config);
      SpectrumPair pair = run_spectrum(cfg);
      auto [stem, ext] = split_extension(spec_args.out);
      if (ext.empty()) ext = ".csv";
      std::string matrix_path = stem + "_matrix" + ext;
      std::string operator_path = stem + "_operator" + ext;
      std::ofstream ms = open_out(matrix_path);
      write_spectrum(pair.system, ms);
      std::ofstream os = open_out(operator_path);
      write_spectrum(pair.preconditioned, os);
      std::cerr << "wrote " << matrix_path << " and " << operator_path << '\n';
      return 0;
    }
    if (*solve)
      return run_solve_command(solve_args.config, solve_args.out, history_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
