// biofilm-gds: configuration-driven driver for simulations, convergence
// studies, and discretisation quality probes.
//
//   biofilm-gds run         --config cfg.json [--out dir] [--threads k]
//   biofilm-gds convergence --config cfg.json [--out dir] [--threads k]
//   biofilm-gds quality     --config cfg.json [--out dir] [--threads k]
//
// Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 I/O error.
// The BIOFILM_GDS_OUT environment variable overrides the output directory.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "biogds/model.hpp"
#include "biogds/output.hpp"
#include "biogds/parallel.hpp"
#include "biogds/scheme_hmm.hpp"
#include "biogds/scheme_p1.hpp"
#include "biogds/verify.hpp"

using json = nlohmann::json;
using namespace biogds;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return j;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config field '" + key + "': " + e.what());
  }
}

ModelProblem make_problem(const json& root) {
  if (!root.contains("problem")) throw ConfigError("config field 'problem' is required");
  const json& pj = root.at("problem");
  std::string base;
  json overrides = json::object();
  if (pj.is_string()) {
    base = pj.get<std::string>();
  } else if (pj.is_object()) {
    base = get_or<std::string>(pj, "base", "");
    overrides = pj;
  } else {
    throw ConfigError("config field 'problem' must be a name or an object with 'base'");
  }
  if (base.empty()) throw ConfigError("config field 'problem.base' is required");
  ModelProblem m;
  try {
    m = builtin_problem(base);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config field 'problem': ") + e.what());
  }
  if (overrides.contains("T")) m.T = overrides.at("T").get<double>();
  if (overrides.contains("a_scale")) {
    const double s = overrides.at("a_scale").get<double>();
    m.coeff_a = isotropic_tensor(s);
    m.d1 = std::min(m.d1, s);
    m.d2 = std::max(m.d2, s);
  }
  if (overrides.contains("b_scale")) {
    const double s = overrides.at("b_scale").get<double>();
    m.coeff_b = isotropic_tensor(s);
    m.d1 = std::min(m.d1, s);
    m.d2 = std::max(m.d2, s);
  }
  if (overrides.contains("chi_const")) {
    const double c = overrides.at("chi_const").get<double>();
    m.chi = [c](const Point2&) { return c; };
  }
  if (overrides.contains("m_lip")) m.m_lip = overrides.at("m_lip").get<double>();
  if (!(m.T > 0.0)) throw ConfigError("config field 'problem.T' must be positive");
  return m;
}

Mesh make_mesh(const json& root, const DomainSpec& domain) {
  if (!root.contains("mesh")) throw ConfigError("config field 'mesh' is required");
  const json& mj = root.at("mesh");
  const std::string kind = get_or<std::string>(mj, "kind", "rect");
  if (kind == "file") {
    const std::string path = get_or<std::string>(mj, "path", "");
    if (path.empty()) throw ConfigError("config field 'mesh.path' is required for kind=file");
    if (!std::filesystem::exists(path))
      throw ConfigError("config field 'mesh.path': file does not exist: " + path);
    try {
      return load_mesh(path);
    } catch (const MeshError& e) {
      throw ConfigError("config field 'mesh.path': " + std::string(e.what()));
    }
  }
  const int res = get_or<int>(mj, "resolution", 0);
  if (res < 1) throw ConfigError("config field 'mesh.resolution' must be >= 1");
  if (kind == "rect") return generate_rect_mesh(domain, res);
  if (kind == "hex") return generate_hex_mesh(domain, res);
  throw ConfigError("config field 'mesh.kind' must be rect, hex, or file");
}

std::unique_ptr<GradientDiscretisation> make_scheme(const json& root, const Mesh& mesh,
                                                    std::string* name_out = nullptr) {
  const json sj = root.contains("scheme") ? root.at("scheme") : json::object();
  const std::string kind = get_or<std::string>(sj, "kind", "hmm");
  if (name_out) *name_out = kind;
  if (kind == "p1") return build_p1(mesh);
  if (kind == "hmm") {
    HmmOptions opts;
    opts.stab = get_or<double>(sj, "stabilization", opts.stab);
    opts.face_value_mean = get_or<bool>(sj, "face_value_mean", false);
    return build_hmm(mesh, opts);
  }
  throw ConfigError("config field 'scheme.kind' must be hmm or p1");
}

RunOptions make_run_options(const json& root) {
  RunOptions opts;
  const json sj = root.contains("solver") ? root.at("solver") : json::object();
  opts.advance.picard_tol = get_or<double>(sj, "picard_tol", opts.advance.picard_tol);
  opts.advance.max_picard = get_or<int>(sj, "picard_max", opts.advance.max_picard);
  opts.advance.obstacle.tol = get_or<double>(sj, "obstacle_tol", opts.advance.obstacle.tol);
  opts.advance.linear.tol = get_or<double>(sj, "linear_tol", opts.advance.linear.tol);
  opts.project_infeasible_initial = get_or<bool>(sj, "project_initial", true);
  if (root.contains("scheme"))
    opts.lump_mass_p = get_or<bool>(root.at("scheme"), "lump_mass", true);
  if (!(opts.advance.picard_tol > 0.0) || !(opts.advance.obstacle.tol > 0.0) ||
      !(opts.advance.linear.tol > 0.0))
    throw ConfigError("config field 'solver': tolerances must be positive");
  if (opts.advance.max_picard < 1)
    throw ConfigError("config field 'solver.picard_max' must be >= 1");
  return opts;
}

void apply_solver_problem_flags(const json& root, ModelProblem& m) {
  const json sj = root.contains("solver") ? root.at("solver") : json::object();
  const std::string orientation = get_or<std::string>(sj, "obstacle", "lower");
  if (orientation == "upper")
    m.obstacle_upper = true;
  else if (orientation != "lower")
    throw ConfigError("config field 'solver.obstacle' must be lower or upper");
  if (sj.contains("m_lip")) m.m_lip = sj.at("m_lip").get<double>();
}

std::string out_dir(const json& root, const std::string& cli_override) {
  std::string dir = "out";
  if (root.contains("output")) dir = get_or<std::string>(root.at("output"), "dir", dir);
  if (!cli_override.empty()) dir = cli_override;
  if (const char* env = std::getenv("BIOFILM_GDS_OUT"); env && *env) dir = env;
  std::filesystem::create_directories(dir);
  return dir;
}

int nearest_knot(const TimeGrid& grid, double t) {
  int best = 0;
  double dist = std::abs(grid.knots[0] - t);
  for (int n = 1; n < static_cast<int>(grid.knots.size()); ++n)
    if (std::abs(grid.knots[n] - t) < dist) {
      dist = std::abs(grid.knots[n] - t);
      best = n;
    }
  return best;
}

int cmd_run(const json& root, const std::string& dir_flag) {
  ModelProblem model = make_problem(root);
  apply_solver_problem_flags(root, model);
  const json tj = root.contains("time") ? root.at("time") : json::object();
  if (tj.contains("T")) model.T = tj.at("T").get<double>();
  const int steps = get_or<int>(tj, "steps", 0);
  if (steps < 1) throw ConfigError("config field 'time.steps' must be >= 1");

  std::vector<double> snapshots;
  std::string prefix = "run";
  if (root.contains("output")) {
    snapshots = get_or<std::vector<double>>(root.at("output"), "snapshots", {});
    prefix = get_or<std::string>(root.at("output"), "prefix", prefix);
  }
  for (double t : snapshots)
    if (t < 0.0 || t > model.T + 1e-12)
      throw ConfigError("config field 'output.snapshots': time outside [0, T]");

  Mesh mesh = make_mesh(root, model.domain);
  std::string scheme_name;
  auto gd = make_scheme(root, mesh, &scheme_name);
  RunOptions opts = make_run_options(root);

  const std::string dir = out_dir(root, dir_flag);
  const TimeGrid grid = TimeGrid::uniform(model.T, steps);
  Trajectory traj = run(model, *gd, grid, opts);

  Manifest manifest;
  auto emit = [&](const std::string& name) { return dir + "/" + name; };

  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    const int n = nearest_knot(grid, snapshots[k]);
    const std::string pf = emit(prefix + "_p_" + std::to_string(k) + ".vtk");
    const std::string qf = emit(prefix + "_q_" + std::to_string(k) + ".vtk");
    write_vtk_field(*gd, traj.p[n], "p", grid.knots[n], pf);
    write_vtk_field(*gd, traj.q[n], "q", grid.knots[n], qf);
    manifest.add(pf);
    manifest.add(qf);
  }
  const std::string picard = emit(prefix + "_picard.csv");
  write_picard_csv(traj, picard);
  manifest.add(picard);

  const std::string summary = emit(prefix + "_summary.txt");
  {
    std::ofstream out(summary);
    if (!out) throw IoError("cannot open " + summary);
    out << "problem: " << model.name << "\n"
        << "scheme: " << scheme_name << "\n"
        << "cells: " << mesh.n_cells() << "\n"
        << "interior_dofs: " << gd->n_interior() << "\n"
        << "steps: " << grid.steps() << "\n"
        << "projected_initial: " << (traj.projected_initial ? "yes" : "no") << "\n";
    int total_picard = 0;
    for (const auto& r : traj.reports) total_picard += r.iterations;
    out << "picard_iterations_total: " << total_picard << "\n";
  }
  manifest.add(summary);
  manifest.write(emit(prefix + "_manifest.txt"));
  std::cout << "run complete: " << traj.grid.steps() << " steps, outputs in " << dir << "\n";
  return 0;
}

int cmd_convergence(const json& root, const std::string& dir_flag) {
  ModelProblem model = make_problem(root);
  apply_solver_problem_flags(root, model);
  if (!root.contains("convergence"))
    throw ConfigError("config field 'convergence' is required");
  const json& cj = root.at("convergence");
  std::vector<StudyLevel> levels;
  if (cj.contains("levels"))
    for (const json& lj : cj.at("levels"))
      levels.push_back({get_or<int>(lj, "resolution", 0), get_or<int>(lj, "steps", 0)});
  if (levels.size() < 2)
    throw ConfigError("config field 'convergence.levels' needs at least two levels");
  for (const auto& l : levels)
    if (l.resolution < 1 || l.steps < 1)
      throw ConfigError("config field 'convergence.levels': resolution and steps must be >= 1");
  std::vector<std::string> schemes =
      get_or<std::vector<std::string>>(cj, "schemes", {"hmm"});
  const std::string mesh_kind = get_or<std::string>(cj, "mesh", "rect");
  if (mesh_kind != "rect" && mesh_kind != "hex")
    throw ConfigError("config field 'convergence.mesh' must be rect or hex");

  std::string prefix = "convergence";
  if (root.contains("output"))
    prefix = get_or<std::string>(root.at("output"), "prefix", prefix);
  const std::string dir = out_dir(root, dir_flag);

  StudyOptions sopts;
  sopts.mesh_kind = mesh_kind;
  sopts.run = make_run_options(root);
  if (root.contains("scheme")) {
    const json& sj = root.at("scheme");
    sopts.hmm.stab = get_or<double>(sj, "stabilization", sopts.hmm.stab);
  }

  Manifest manifest;
  std::vector<std::string> dats;
  for (const std::string& scheme : schemes) {
    if (scheme != "hmm" && scheme != "p1")
      throw ConfigError("config field 'convergence.schemes' entries must be hmm or p1");
    sopts.scheme = scheme;
    ErrorReport report = convergence_study(model, levels, sopts);
    const std::string csv = dir + "/" + prefix + "_" + scheme + ".csv";
    const std::string dat = dir + "/" + prefix + "_" + scheme + ".dat";
    write_error_report_csv(report, csv);
    write_loglog_data(report, dat);
    manifest.add(csv);
    manifest.add(dat);
    dats.push_back(prefix + "_" + scheme + ".dat");
    for (const LevelRecord& r : report.levels)
      std::cout << scheme << " level " << r.level << ": h=" << r.h
                << " err_p_l2=" << r.err_p_l2 << " order=" << r.order_p_l2 << "\n";
  }
  const std::string plot = dir + "/" + prefix + ".gnuplot";
  write_gnuplot_script(dats, plot);
  manifest.add(plot);
  manifest.write(dir + "/" + prefix + "_manifest.txt");
  return 0;
}

int cmd_quality(const json& root, const std::string& dir_flag) {
  const json qj = root.contains("quality") ? root.at("quality") : json::object();
  std::vector<int> levels = get_or<std::vector<int>>(qj, "levels", {});
  if (levels.empty()) throw ConfigError("config field 'quality.levels' is required");
  std::vector<std::string> schemes = get_or<std::vector<std::string>>(qj, "schemes", {"hmm"});
  const std::string mesh_kind = get_or<std::string>(qj, "mesh", "rect");
  const bool default_probes = !qj.contains("probes") ||
                              get_or<std::string>(qj, "probes", "default") == "default";
  if (!default_probes)
    throw ConfigError("config field 'quality.probes': only 'default' is available");
  std::cerr << "[quality] using the default probe set\n";

  // Default probes: sine products, a polynomial bubble, and manufactured
  // fields of the analytical test case.
  const ModelProblem t2 = builtin_problem("test2");
  struct SProbe {
    std::string name;
    ScalarFn f;
    VectorFn g;
  };
  const double pi = 3.14159265358979323846;
  std::vector<SProbe> sprobes = {
      {"sinpi", [pi](const Point2& x) { return std::sin(pi * x.x) * std::sin(pi * x.y); },
       [pi](const Point2& x) {
         return Point2{pi * std::cos(pi * x.x) * std::sin(pi * x.y),
                       pi * std::sin(pi * x.x) * std::cos(pi * x.y)};
       }},
      {"bubble", [](const Point2& x) { return (1.0 - x.x * x.x) * (1.0 - x.y * x.y); },
       [](const Point2& x) {
         return Point2{-2.0 * x.x * (1.0 - x.y * x.y), -2.0 * x.y * (1.0 - x.x * x.x)};
       }},
      {"t2q", [&t2](const Point2& x) { return t2.exact->q(x, 0.1); },
       [&t2](const Point2& x) { return t2.exact->grad_q(x, 0.1); }}};
  struct WProbe {
    std::string name;
    VectorFn f;
  };
  std::vector<WProbe> wprobes = {
      {"const", [](const Point2&) { return Point2{0.7, -0.3}; }},
      {"sincos",
       [pi](const Point2& x) {
         return Point2{std::sin(pi * x.x) * std::cos(pi * x.y),
                       std::cos(pi * x.x) * std::sin(pi * x.y)};
       }},
      {"t2flux_b", [&t2](const Point2& x) {
         const Point2 g = t2.exact->grad_q(x, 0.1);
         return Point2{0.25 * g.x, 0.25 * g.y};
       }}};

  std::string prefix = "quality";
  if (root.contains("output"))
    prefix = get_or<std::string>(root.at("output"), "prefix", prefix);
  const std::string dir = out_dir(root, dir_flag);

  std::vector<std::string> s_names, w_names;
  for (const auto& p : sprobes) s_names.push_back(p.name);
  for (const auto& p : wprobes) w_names.push_back(p.name);

  Manifest manifest;
  for (const std::string& scheme : schemes) {
    if (scheme != "hmm" && scheme != "p1")
      throw ConfigError("config field 'quality.schemes' entries must be hmm or p1");
    std::vector<QualityReport> rows;
    for (std::size_t k = 0; k < levels.size(); ++k) {
      if (levels[k] < 1) throw ConfigError("config field 'quality.levels': must be >= 1");
      Mesh mesh = mesh_kind == "hex" ? generate_hex_mesh({-1.0, 1.0}, levels[k])
                                     : generate_rect_mesh({-1.0, 1.0}, levels[k]);
      auto gd = scheme == "p1" ? build_p1(mesh) : build_hmm(mesh);
      const auto ii = interior_ids(*gd);
      const SparseMatrix mass_ii = assemble_mass(*gd).block(ii, ii);
      const SparseMatrix gram = gradient_gram(*gd);
      const SparseMatrix gram_ii = gram.block(ii, ii);
      QualityReport row;
      row.level = static_cast<int>(k);
      row.h = mesh_size(mesh);
      row.coercivity = coercivity_constant(mass_ii, gram_ii);
      for (const auto& p : sprobes)
        row.s_values.push_back(consistency_defect(*gd, p.f, p.g, {5, 1, nullptr}));
      for (const auto& p : wprobes)
        row.w_values.push_back(limit_conformity_defect(*gd, gram_ii, p.f));
      rows.push_back(std::move(row));
    }
    const std::string csv = dir + "/" + prefix + "_" + scheme + ".csv";
    write_quality_csv(rows, s_names, w_names, csv);
    manifest.add(csv);
    std::cout << scheme << ": " << rows.size() << " levels -> " << csv << "\n";
    // observed orders between the last two levels, where the defect is live
    if (rows.size() >= 2) {
      const QualityReport& a = rows[rows.size() - 2];
      const QualityReport& b = rows.back();
      auto note = [&](const std::string& n, double va, double vb) {
        if (vb <= 1e-10) {
          std::cout << "  " << n << ": at rounding level (conforming)\n";
          return;
        }
        const double ord = std::log(va / vb) / std::log(a.h / b.h);
        std::cout << "  " << n << ": order " << ord << (std::abs(ord - 1.0) < 0.3 ? " (~1)" : "")
                  << "\n";
      };
      for (std::size_t k = 0; k < s_names.size(); ++k)
        note("s_" + s_names[k], a.s_values[k], b.s_values[k]);
      for (std::size_t k = 0; k < w_names.size(); ++k)
        note("w_" + w_names[k], a.w_values[k], b.w_values[k]);
    }
  }
  manifest.write(dir + "/" + prefix + "_manifest.txt");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient-scheme solver for the constrained biofilm reaction-diffusion system"};
  app.require_subcommand(1);

  std::string config_path, dir_flag;
  int threads = 1;
  for (const char* name : {"run", "convergence", "quality"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "configuration file (JSON)")->required();
    sub->add_option("--out", dir_flag, "output directory (overrides config)");
    sub->add_option("--threads", threads, "worker threads for assembly and norms");
  }

  CLI11_PARSE(app, argc, argv);
  set_thread_count(threads);

  try {
    const json root = load_config(config_path);
    if (app.got_subcommand("run")) return cmd_run(root, dir_flag);
    if (app.got_subcommand("convergence")) return cmd_convergence(root, dir_flag);
    if (app.got_subcommand("quality")) return cmd_quality(root, dir_flag);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
