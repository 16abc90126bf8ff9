#include "hocurve/distortion.hpp"
#include "hocurve/error.hpp"
#include "hocurve/generators.hpp"
#include "hocurve/geometry.hpp"
#include "hocurve/mesh_io.hpp"
#include "hocurve/optimizer.hpp"
#include "hocurve/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace hocurve;
using nlohmann::json;

namespace {

struct RunManifest {
  fs::path mesh;
  fs::path geometry;
  int degree = 0;
  fs::path out;  // prefix for the four outputs
  fs::path out_mesh, out_vtk, out_log, out_summary;
  bool adapt_mu = true;
  bool adapt_delta = true;
  bool assembled = false;
  bool p_continuation = true;
  std::optional<double> fixed_delta, epsilon_star, omega_star;
  int max_penalty_iterations = 100;
  int threads = 1;
  int vtk_subdivisions = 4;
  std::uint64_t seed = 1;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

RunManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Io, "cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Parse, "manifest " + path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  RunManifest m;
  try {
    if (j.contains("mesh")) m.mesh = resolve(base, j["mesh"].get<std::string>());
    if (j.contains("geometry")) m.geometry = resolve(base, j["geometry"].get<std::string>());
    take(j, "degree", m.degree);
    if (j.contains("out")) m.out = resolve(base, j["out"].get<std::string>());
    if (j.contains("outputs")) {
      const json& o = j["outputs"];
      if (o.contains("mesh")) m.out_mesh = resolve(base, o["mesh"].get<std::string>());
      if (o.contains("vtk")) m.out_vtk = resolve(base, o["vtk"].get<std::string>());
      if (o.contains("log")) m.out_log = resolve(base, o["log"].get<std::string>());
      if (o.contains("summary")) m.out_summary = resolve(base, o["summary"].get<std::string>());
    }
    if (j.contains("solver")) {
      const json& s = j["solver"];
      take(s, "adapt_mu", m.adapt_mu);
      take(s, "adapt_delta", m.adapt_delta);
      take(s, "assembled", m.assembled);
      take(s, "p_continuation", m.p_continuation);
      take(s, "max_penalty_iterations", m.max_penalty_iterations);
      if (s.contains("fixed_delta")) m.fixed_delta = s["fixed_delta"].get<double>();
      if (s.contains("epsilon_star")) m.epsilon_star = s["epsilon_star"].get<double>();
      if (s.contains("omega_star")) m.omega_star = s["omega_star"].get<double>();
    }
    take(j, "threads", m.threads);
    take(j, "vtk_subdivisions", m.vtk_subdivisions);
    take(j, "seed", m.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Config, "manifest " + path.string() + ": " + e.what());
  }
  return m;
}

void check(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCategory::Parameter, what);
}

void validate_manifest(RunManifest& m) {
  check(!m.mesh.empty(), "no input mesh given");
  check(!m.geometry.empty(), "no geometry config given");
  check(m.degree >= 2 && m.degree <= 4, "degree must be in 2..4");
  check(m.threads >= 1 && m.threads <= 256, "threads must be in 1..256");
  check(m.vtk_subdivisions >= 1 && m.vtk_subdivisions <= 16, "vtk subdivisions must be in 1..16");
  check(m.max_penalty_iterations >= 1 && m.max_penalty_iterations <= 1000,
        "max penalty iterations must be in 1..1000");
  if (m.fixed_delta) check(*m.fixed_delta > 0 && *m.fixed_delta < 1, "fixed delta must be in (0, 1)");
  if (m.epsilon_star) check(*m.epsilon_star > 0 && *m.epsilon_star < 1, "epsilon star must be in (0, 1)");
  if (m.omega_star) check(*m.omega_star > 0 && *m.omega_star < 1, "omega star must be in (0, 1)");
  if (!fs::is_regular_file(m.mesh)) throw Error(ErrorCategory::Io, "mesh not found: " + m.mesh.string());
  if (!fs::is_regular_file(m.geometry))
    throw Error(ErrorCategory::Io, "geometry config not found: " + m.geometry.string());

  const bool all_explicit =
      !m.out_mesh.empty() && !m.out_vtk.empty() && !m.out_log.empty() && !m.out_summary.empty();
  check(!m.out.empty() || all_explicit, "no output prefix given");
  auto with_suffix = [&](fs::path& p, const char* suffix) {
    if (p.empty()) p = fs::path(m.out.string() + suffix);
  };
  with_suffix(m.out_mesh, ".msh");
  with_suffix(m.out_vtk, ".vtk");
  with_suffix(m.out_log, "_log.csv");
  with_suffix(m.out_summary, "_summary.json");
  for (const fs::path& p : {m.out_mesh, m.out_vtk, m.out_log, m.out_summary}) {
    const fs::path dir = p.parent_path();
    if (!dir.empty() && !fs::is_directory(dir))
      throw Error(ErrorCategory::Io, "output directory does not exist: " + dir.string());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::Io, "cannot write " + path.string());
  out << text;
}

int cmd_curve(RunManifest m) {
  validate_manifest(m);
  set_num_threads(m.threads);

  const HighOrderMesh linear = read_msh(m.mesh);
  const GeometryModel model = GeometryModel::load(m.geometry);
  model.validate(linear);

  CurvingConfig cfg;
  cfg.p_max = m.degree;
  cfg.adapt_mu = m.adapt_mu;
  cfg.adapt_delta = m.adapt_delta;
  cfg.linear.block_sor = !m.assembled;
  cfg.p_continuation = m.p_continuation;
  cfg.max_penalty_iterations = m.max_penalty_iterations;
  if (m.fixed_delta) cfg.fixed_delta = *m.fixed_delta;
  if (m.epsilon_star) cfg.epsilon_star_relative = *m.epsilon_star;
  if (m.omega_star) cfg.omega_star = *m.omega_star;
  std::cout << ConvergenceLog::csv_header() << '\n';
  cfg.on_iteration = [](const LogRow& row) { std::cout << ConvergenceLog::csv_row(row) << std::endl; };

  CurvingResult result;
  try {
    result = curve_mesh(linear, model, cfg);
  } catch (const CurvingError& e) {
    write_text(m.out_log, e.log().to_csv());
    throw;
  }

  const QualityReport q = quality_report(result.mesh);
  write_msh(result.mesh, m.out_mesh);
  write_vtk(result.mesh, m.out_vtk, m.vtk_subdivisions, q.quality);
  write_text(m.out_log, result.log.to_csv());
  write_text(m.out_summary, result.summary.to_json() + "\n");
  std::printf("converged: epsilon %.3e (target %.3e), gradient %.3e, min quality %.4f\n",
              result.summary.epsilon, result.summary.epsilon_star, result.summary.grad_inf,
              result.summary.min_quality);
  return 0;
}

int cmd_quality(const fs::path& mesh_path, const std::string& vtk_path, int subdivisions) {
  const HighOrderMesh mesh = read_msh(mesh_path);
  const QualityReport q = quality_report(mesh);
  std::printf("elements %lld\n", static_cast<long long>(mesh.num_elements()));
  std::printf("min quality %.6f\n", q.min_quality);
  std::printf("mean quality %.6f\n", q.mean_quality);
  std::printf("max quality %.6f\n", q.max_quality);
  std::printf("min jacobian %.6e\n", q.min_jacobian);
  std::printf("invalid elements %lld\n", static_cast<long long>(q.invalid_elements));
  if (!vtk_path.empty()) write_vtk(mesh, vtk_path, subdivisions, q.quality);
  return 0;
}

struct GenerateParams {
  std::string kind;
  std::string prefix;
  double inner = 1.0;
  double outer = 4.0;
  int level = 1;
  double angle = std::numbers::pi / 6;
  double jitter = 0.0;
  std::uint64_t seed = 1;
};

int cmd_generate(const GenerateParams& g) {
  check(g.inner > 0 && g.outer > g.inner, "radii must satisfy 0 < inner < outer");
  check(g.jitter >= 0 && g.jitter < 0.5, "jitter must be in [0, 0.5)");
  GeneratorOptions opt;
  opt.jitter = g.jitter;
  opt.seed = g.seed;
  HighOrderMesh mesh;
  GeometryModel model;
  if (g.kind == "annulus" || g.kind == "shell") {
    const int dim = g.kind == "annulus" ? 2 : 3;
    mesh = generate_shell_mesh(g.inner, g.outer, g.level, dim, opt);
    model = shell_model(g.inner, g.outer, dim);
  } else {
    check(g.angle > 0 && g.angle < std::numbers::pi, "sector angle must be in (0, pi)");
    mesh = generate_sector_mesh(g.inner, g.outer, g.angle, g.level, opt);
    model = sector_model(g.inner, g.outer, g.angle);
  }
  const fs::path msh(g.prefix + ".msh"), cfg(g.prefix + ".json");
  write_msh(mesh, msh);
  model.save(cfg);
  std::printf("wrote %s (%lld elements) and %s\n", msh.string().c_str(),
              static_cast<long long>(mesh.num_elements()), cfg.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-order mesh curving"};
  app.require_subcommand(1);

  RunManifest flags;
  std::string manifest_path, mesh_path, geometry_path, out_path;
  std::optional<int> degree, threads, max_penalty, subdivisions;
  std::optional<double> fixed_delta;
  bool no_adapt_mu = false, no_adapt_delta = false, assembled = false, no_pcont = false;
  CLI::App* curve = app.add_subcommand("curve", "Curve a linear mesh onto its geometry");
  curve->add_option("--manifest", manifest_path, "JSON run manifest; flags override it");
  curve->add_option("--mesh", mesh_path, "Linear input mesh (MSH 4.1)");
  curve->add_option("--geometry", geometry_path, "Geometry config (JSON)");
  curve->add_option("--degree", degree, "Target polynomial degree (2..4)");
  curve->add_option("--out", out_path, "Output prefix");
  curve->add_flag("--no-adapt-mu", no_adapt_mu, "Multiply the penalty by 10 at every iteration");
  curve->add_flag("--no-adapt-delta", no_adapt_delta, "Use a fixed linear tolerance");
  curve->add_option("--fixed-delta", fixed_delta, "Linear tolerance when not adapted");
  curve->add_flag("--assembled", assembled, "Assembled Hessian with SSOR instead of block SOR");
  curve->add_flag("--no-p-continuation", no_pcont, "Start directly at the target degree");
  curve->add_option("--max-penalty-iterations", max_penalty, "Penalty iteration cap");
  curve->add_option("--threads", threads, "Worker threads");
  curve->add_option("--vtk-subdivisions", subdivisions, "Sub-cells per element edge in the VTK output");

  std::string q_mesh, q_vtk;
  int q_subdivisions = 4;
  CLI::App* quality = app.add_subcommand("quality", "Report element quality of a mesh");
  quality->add_option("--mesh", q_mesh, "Mesh (MSH 4.1)")->required();
  quality->add_option("--vtk", q_vtk, "Write a VTK file with per-element quality");
  quality->add_option("--vtk-subdivisions", q_subdivisions, "Sub-cells per element edge")
      ->check(CLI::Range(1, 16));

  GenerateParams gen;
  CLI::App* generate = app.add_subcommand("generate", "Write a linear demo mesh and its geometry config");
  generate->add_option("--kind", gen.kind, "annulus, shell or sector")
      ->required()
      ->check(CLI::IsMember({"annulus", "shell", "sector"}));
  generate->add_option("--out-prefix", gen.prefix, "Writes <prefix>.msh and <prefix>.json")->required();
  generate->add_option("--inner-radius", gen.inner);
  generate->add_option("--outer-radius", gen.outer);
  generate->add_option("--level", gen.level, "Refinement level (1..6)");
  generate->add_option("--angle", gen.angle, "Sector angle in radians");
  generate->add_option("--jitter", gen.jitter, "Random interior vertex displacement");
  generate->add_option("--seed", gen.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*curve) {
      RunManifest m = manifest_path.empty() ? RunManifest{} : load_manifest(manifest_path);
      if (!mesh_path.empty()) m.mesh = mesh_path;
      if (!geometry_path.empty()) m.geometry = geometry_path;
      if (!out_path.empty()) {
        m.out = out_path;
        m.out_mesh = m.out_vtk = m.out_log = m.out_summary = fs::path();
      }
      if (degree) m.degree = *degree;
      if (no_adapt_mu) m.adapt_mu = false;
      if (no_adapt_delta) m.adapt_delta = false;
      if (fixed_delta) m.fixed_delta = *fixed_delta;
      if (assembled) m.assembled = true;
      if (no_pcont) m.p_continuation = false;
      if (max_penalty) m.max_penalty_iterations = *max_penalty;
      if (threads) m.threads = *threads;
      if (subdivisions) m.vtk_subdivisions = *subdivisions;
      return cmd_curve(std::move(m));
    }
    if (*quality) return cmd_quality(q_mesh, q_vtk, q_subdivisions);
    return cmd_generate(gen);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(category_name(e.category())).c_str(), e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
