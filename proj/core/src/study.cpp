#include "tpmsvox/study.hpp"

#include "tpmsvox/csv.hpp"
#include "tpmsvox/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace tpmsvox {

using nlohmann::json;

namespace {

const char* rule_name(ClassificationRule r) {
  switch (r) {
    case ClassificationRule::intersect: return "intersect";
    case ClassificationRule::centroid: return "centroid";
    case ClassificationRule::fraction: return "fraction";
  }
  return "intersect";
}

ClassificationRule rule_from(const std::string& s) {
  if (s == "intersect") return ClassificationRule::intersect;
  if (s == "centroid") return ClassificationRule::centroid;
  if (s == "fraction") return ClassificationRule::fraction;
  throw ConfigError("classification.rule: unknown rule '" + s + "'");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + key + ": " + e.what());
  }
}

std::uint64_t parse_seed(const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    try {
      std::size_t pos = 0;
      const auto seed = std::stoull(s, &pos, 0);
      if (pos == s.size()) return seed;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("seed: expected an unsigned integer or a numeric string");
}

}  // namespace

std::vector<double> StudyConfig::densities() const {
  if (!relative_densities.empty()) return relative_densities;
  return {lattice.relative_density};
}

std::string StudyConfig::to_json() const {
  json j;
  j["lattice"] = {{"kind", "gyroid"},
                  {"topology", std::string(to_string(lattice.topology))},
                  {"cell_size_mm", lattice.cell_size_mm}};
  if (lattice.graded)
    j["lattice"]["graded"] = {{"rd_bottom", lattice.rd_bottom}, {"rd_top", lattice.rd_top}};
  else
    j["lattice"]["relative_density"] = lattice.relative_density;
  j["cells_per_axis"] = cells_per_axis;
  j["element_sizes_mm"] = element_sizes_mm;
  j["min_jacobians"] = min_jacobians;
  if (!relative_densities.empty()) j["relative_densities"] = relative_densities;
  j["material"] = {{"youngs_modulus_mpa", material.youngs_modulus},
                   {"poisson_ratio", material.poisson_ratio},
                   {"density_kg_m3", material.density},
                   {"yield_stress_mpa", material.yield_stress},
                   {"tangent_modulus_mpa", material.tangent_modulus}};
  j["top_displacement_mm"] = top_displacement_mm;
  j["solver"] = {{"rel_tol", solver.rel_tol}, {"max_iter", solver.max_iter}};
  j["classification"] = {{"rule", rule_name(classification)}, {"threshold", classification_threshold}};
  j["conform_passes"] = conform_passes;
  j["surface_resolution"] = surface_resolution;
  j["calibration_grid"] = calibration_grid;
  j["seed"] = seed;
  return j.dump();
}

std::string StudyConfig::hash() const { return fnv1a_hex(to_json()); }

void StudyConfig::validate(bool require_gci_order) const {
  if (!(lattice.cell_size_mm > 0.0)) throw ConfigError("lattice.cell_size_mm must be > 0");
  if (cells_per_axis < 1) throw ConfigError("cells_per_axis must be >= 1");
  if (lattice.graded) {
    for (double rd : {lattice.rd_bottom, lattice.rd_top})
      if (!(rd > 0.0 && rd < 1.0)) throw ConfigError("lattice.graded: densities must lie in (0, 1)");
    if (!relative_densities.empty()) throw ConfigError("relative_densities cannot be combined with a graded lattice");
  } else if (!(lattice.relative_density > 0.0 && lattice.relative_density <= 1.0)) {
    throw ConfigError("lattice.relative_density must lie in (0, 1]");
  }
  for (double rd : relative_densities)
    if (!(rd > 0.0 && rd <= 1.0)) throw ConfigError("relative_densities: values must lie in (0, 1]");
  if (element_sizes_mm.empty()) throw ConfigError("element_sizes_mm must not be empty");
  const double edge = domain_edge();
  for (std::size_t i = 0; i < element_sizes_mm.size(); ++i) {
    const double h = element_sizes_mm[i];
    if (!(h > 0.0)) throw ConfigError("element_sizes_mm: sizes must be > 0");
    const double n = edge / h;
    if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n)) {
      std::ostringstream msg;
      msg << "element_sizes_mm: " << h << " mm does not divide the domain edge " << edge << " mm";
      throw ConfigError(msg.str());
    }
    if (require_gci_order && i > 0 && !(h < element_sizes_mm[i - 1]))
      throw ConfigError("element_sizes_mm must be strictly decreasing for a GCI study");
  }
  if (min_jacobians.empty()) throw ConfigError("min_jacobians must not be empty");
  for (double mj : min_jacobians)
    if (!(mj > 0.0 && mj <= 1.0)) throw ConfigError("min_jacobians: values must lie in (0, 1]");
  try {
    material.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("material: ") + e.what());
  }
  if (!(top_displacement_mm >= 0.0)) throw ConfigError("top_displacement_mm must be >= 0");
  if (!(solver.rel_tol > 0.0)) throw ConfigError("solver.rel_tol must be > 0");
  if (solver.max_iter < 0) throw ConfigError("solver.max_iter must be >= 0");
  if (!(classification_threshold > 0.0 && classification_threshold <= 1.0))
    throw ConfigError("classification.threshold must lie in (0, 1]");
  if (conform_passes < 1) throw ConfigError("conform_passes must be >= 1");
  if (surface_resolution < 8) throw ConfigError("surface_resolution must be >= 8");
  if (calibration_grid < 8) throw ConfigError("calibration_grid must be >= 8");
}

StudyConfig parse_study_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config",
             {"lattice", "cells_per_axis", "element_sizes_mm", "min_jacobians", "relative_densities", "material",
              "top_displacement_mm", "solver", "classification", "conform_passes", "surface_resolution",
              "calibration_grid", "seed", "output_dir"});
  StudyConfig c;
  if (j.contains("lattice")) {
    const json& l = j["lattice"];
    check_keys(l, "lattice", {"kind", "topology", "cell_size_mm", "relative_density", "graded"});
    if (l.contains("kind") && l["kind"] != "gyroid") throw ConfigError("lattice.kind: only 'gyroid' is supported");
    if (l.contains("topology")) {
      try {
        c.lattice.topology = topology_from_string(l["topology"].get<std::string>());
      } catch (const std::exception& e) {
        throw ConfigError(std::string("lattice.topology: ") + e.what());
      }
    }
    read(l, "cell_size_mm", c.lattice.cell_size_mm, "lattice.");
    read(l, "relative_density", c.lattice.relative_density, "lattice.");
    if (l.contains("graded")) {
      if (l.contains("relative_density"))
        throw ConfigError("lattice: give either relative_density or graded, not both");
      check_keys(l["graded"], "lattice.graded", {"rd_bottom", "rd_top"});
      c.lattice.graded = true;
      read(l["graded"], "rd_bottom", c.lattice.rd_bottom, "lattice.graded.");
      read(l["graded"], "rd_top", c.lattice.rd_top, "lattice.graded.");
    }
  }
  read(j, "cells_per_axis", c.cells_per_axis, "");
  read(j, "element_sizes_mm", c.element_sizes_mm, "");
  read(j, "min_jacobians", c.min_jacobians, "");
  read(j, "relative_densities", c.relative_densities, "");
  if (j.contains("material")) {
    const json& m = j["material"];
    check_keys(m, "material",
               {"youngs_modulus_mpa", "poisson_ratio", "density_kg_m3", "yield_stress_mpa", "tangent_modulus_mpa"});
    read(m, "youngs_modulus_mpa", c.material.youngs_modulus, "material.");
    read(m, "poisson_ratio", c.material.poisson_ratio, "material.");
    read(m, "density_kg_m3", c.material.density, "material.");
    read(m, "yield_stress_mpa", c.material.yield_stress, "material.");
    read(m, "tangent_modulus_mpa", c.material.tangent_modulus, "material.");
  }
  read(j, "top_displacement_mm", c.top_displacement_mm, "");
  if (j.contains("solver")) {
    check_keys(j["solver"], "solver", {"rel_tol", "max_iter"});
    read(j["solver"], "rel_tol", c.solver.rel_tol, "solver.");
    read(j["solver"], "max_iter", c.solver.max_iter, "solver.");
  }
  if (j.contains("classification")) {
    const json& cl = j["classification"];
    if (cl.is_string()) {
      c.classification = rule_from(cl.get<std::string>());
    } else {
      check_keys(cl, "classification", {"rule", "threshold"});
      if (cl.contains("rule")) c.classification = rule_from(cl["rule"].get<std::string>());
      read(cl, "threshold", c.classification_threshold, "classification.");
    }
  }
  read(j, "conform_passes", c.conform_passes, "");
  read(j, "surface_resolution", c.surface_resolution, "");
  read(j, "calibration_grid", c.calibration_grid, "");
  if (j.contains("seed")) c.seed = parse_seed(j["seed"]);
  read(j, "output_dir", c.output_dir, "");
  c.validate();
  return c;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_study_config(ss.str());
}

LatticeBuild build_lattice(const StudyConfig& config, std::optional<double> rd) {
  const Vec3 cell = Vec3::Constant(config.lattice.cell_size_mm);
  const Topology topo = config.lattice.topology;
  if (config.lattice.graded && !rd) {
    DensityCalibration::Spec spec;
    spec.grid_n = config.calibration_grid;
    auto table = DensityCalibration::build(cell, topo, spec);
    const Box box = config.domain();
    ImplicitLattice lattice =
        graded_lattice(cell, config.lattice.rd_top, config.lattice.rd_bottom, box.lo.z(), box.hi.z(), table);
    const double mean = 0.5 * (config.lattice.rd_top + config.lattice.rd_bottom);
    return {std::move(lattice), mean, mean, std::move(table)};
  }
  const double target = rd.value_or(config.lattice.relative_density);
  if (target >= 1.0) {
    // Fully solid: any offset below the field minimum.
    const double c = topo == Topology::network ? -2.0 : 2.0;
    return {ImplicitLattice::uniform(config.lattice.cell_size_mm, c, topo), 1.0, 1.0, std::nullopt};
  }
  const auto cal = calibrate_offset(cell, topo, target, 1e-3, config.calibration_grid);
  return {ImplicitLattice::uniform(config.lattice.cell_size_mm, cal.offset, topo), target, cal.achieved,
          std::nullopt};
}

MeshOutcome mesh_point(const StudyConfig& config, const ImplicitLattice& lattice, double h, double mj) {
  VoxelGridSpec spec;
  spec.element_size = h;
  spec.domain = config.domain();
  spec.rule = config.classification;
  spec.threshold = config.classification_threshold;
  const OccupancyGrid grid = classify_voxels(lattice, spec);
  HexMesh mesh = build_voxel_mesh(grid);

  MeshOutcome out;
  if (mj < 1.0) {
    ConformOptions opts;
    opts.min_jacobian = mj;
    opts.max_passes = config.conform_passes;
    mesh = conform_to_surface(mesh, lattice, opts, &out.conform);
  }
  out.mesh = filter_components(mesh, ComponentKeep::spanning);
  out.quality = quality_report(out.mesh, config.cells_per_axis);
  out.voxel_rd = static_cast<double>(out.mesh.element_count()) * h * h * h / spec.domain.volume();
  return out;
}

namespace {

std::string point_message(const std::string& stage, double h, double mj, const std::string& what) {
  std::ostringstream msg;
  msg << stage << " failed at h=" << h << " mm, MJ=" << mj << ": " << what;
  return msg.str();
}

}  // namespace

StudyPointError::StudyPointError(std::string stage, double h, double mj, const std::string& what)
    : Error(point_message(stage, h, mj, what)), stage_(std::move(stage)) {}

PointResult run_point(const StudyConfig& config, const ImplicitLattice& lattice, double rd_target, double h,
                      double mj, bool keep_displacement) {
  const auto t0 = std::chrono::steady_clock::now();
  PointResult r;
  r.rd_target = rd_target;
  r.h = h;
  r.mj = mj;
  MeshOutcome m;
  try {
    m = mesh_point(config, lattice, h, mj);
  } catch (const std::exception& e) {
    throw StudyPointError("mesh", h, mj, e.what());
  }
  r.quality = m.quality;
  try {
    CompressionSetup setup;
    setup.displacement = config.top_displacement_mm;
    r.solution = run_compression(m.mesh, config.material, setup, config.solver);
  } catch (const std::exception& e) {
    throw StudyPointError("solve", h, mj, e.what());
  }
  if (!keep_displacement) {
    r.solution.u.clear();
    r.solution.u.shrink_to_fit();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<PointResult> run_sweep(const StudyConfig& config, int jobs, const ProgressCallback& progress) {
  config.validate();
  struct Job {
    std::size_t lattice;
    double rd;
    double h;
    double mj;
  };
  std::vector<LatticeBuild> lattices;
  std::vector<Job> work;
  if (config.lattice.graded) {
    lattices.push_back(build_lattice(config));
  } else {
    for (double rd : config.densities()) lattices.push_back(build_lattice(config, rd));
  }
  for (std::size_t l = 0; l < lattices.size(); ++l)
    for (double h : config.element_sizes_mm)
      for (double mj : config.min_jacobians) work.push_back({l, lattices[l].target_rd, h, mj});

  std::vector<PointResult> results(work.size());
  std::vector<std::exception_ptr> errors(work.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < work.size();) {
      const Job& w = work[i];
      try {
        results[i] = run_point(config, lattices[w.lattice].lattice, w.rd, w.h, w.mj);
        if (progress) {
          std::lock_guard lock(progress_mutex);
          progress(results[i]);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(work.size(), 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

std::vector<std::string> compression_csv_header() {
  return {"h", "MJ", "elements", "RD_mesh", "F_N", "sigma_MPa", "Eeff_MPa", "iters", "residual"};
}

std::vector<std::string> compression_csv_row(const PointResult& r) {
  return {format_number(r.h),
          format_number(r.mj),
          std::to_string(r.quality.element_count),
          format_number(r.quality.relative_density),
          format_number(r.solution.force),
          format_number(r.solution.stress),
          format_number(r.solution.modulus),
          std::to_string(r.solution.iterations),
          format_number(r.solution.residual)};
}

std::vector<std::string> sweep_csv_header() {
  auto h = compression_csv_header();
  h.insert(h.begin(), "RD_target");
  h.push_back("min_SJ");
  return h;
}

std::vector<std::string> sweep_csv_row(const PointResult& r) {
  auto row = compression_csv_row(r);
  row.insert(row.begin(), format_number(r.rd_target));
  row.push_back(format_number(r.quality.min_scaled_jacobian));
  return row;
}

std::vector<std::string> quality_csv_header() {
  std::vector<std::string> h{"h", "MJ", "elements", "elements_per_cell", "min_SJ", "RD_mesh"};
  for (int i = 0; i < 10; ++i) h.push_back("hist_" + std::to_string(i));
  return h;
}

std::vector<std::string> quality_csv_row(double h, double mj, const MeshQualityReport& q) {
  std::vector<std::string> row{format_number(h),
                               format_number(mj),
                               std::to_string(q.element_count),
                               format_number(q.elements_per_cell),
                               format_number(q.min_scaled_jacobian),
                               format_number(q.relative_density)};
  for (auto n : q.histogram) row.push_back(std::to_string(n));
  return row;
}

std::vector<MeshStudy> studies_from_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  std::vector<MeshStudy> studies;
  std::map<std::string, std::size_t> index;
  auto add = [&](const std::string& label, double h, double f) {
    auto it = index.find(label);
    if (it == index.end()) {
      it = index.emplace(label, studies.size()).first;
      studies.push_back({label, {}});
    }
    studies[it->second].points.push_back({h, f});
  };

  const int hc = t.column("h");
  if (t.find("f") >= 0) {
    const int fc = t.column("f");
    const int lc = t.find("label");
    for (std::size_t i = 0; i < t.rows.size(); ++i)
      add(lc >= 0 ? t.rows[i][lc] : path.stem().string(), t.number(i, hc), t.number(i, fc));
  } else {
    const int mc = t.column("MJ");
    const int ec = t.column("Eeff_MPa");
    const int rc = t.find("RD_target");
    std::set<std::string> rds;
    if (rc >= 0)
      for (const auto& row : t.rows) rds.insert(row[rc]);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      std::string label = "MJ=" + t.rows[i][mc];
      if (rds.size() > 1) label = "RD=" + t.rows[i][rc] + " " + label;
      add(label, t.number(i, hc), t.number(i, ec));
    }
  }
  for (auto& s : studies)
    std::stable_sort(s.points.begin(), s.points.end(),
                     [](const MeshStudy::Point& a, const MeshStudy::Point& b) { return a.h > b.h; });
  return studies;
}

std::vector<std::string> gci_csv_header() {
  return {"label", "convention", "p", "f_asym", "gci12_pct", "gci23_pct", "Ra"};
}

std::vector<std::string> gci_csv_row(const GciReport& r) {
  return {r.label,           to_string(r.convention),   format_number(r.p), format_number(r.f_asym),
          format_number(r.gci12), format_number(r.gci23), format_number(r.ra)};
}

}  // namespace tpmsvox
