#include "cli.hpp"

#include "tpmsvox/convergence.hpp"
#include "tpmsvox/csv.hpp"
#include "tpmsvox/errors.hpp"
#include "tpmsvox/fem.hpp"
#include "tpmsvox/study.hpp"
#include "tpmsvox/surface.hpp"
#include "tpmsvox/svg.hpp"
#include "tpmsvox/vtk.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace tpmsvox::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::string convention = "paper";
  std::optional<double> safety_factor;
  std::optional<double> h;
  std::optional<double> mj;
  std::optional<double> mj_filter;
  double youngs_modulus = MaterialSpec{}.youngs_modulus;
  std::string input;
  bool ascii = false;
  bool log_x = false;
};

StudyConfig load(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required for this command");
  StudyConfig c = load_study_config(o.config);
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.seed) c.seed = *o.seed;
  return c;
}

fs::path output_dir(const Options& o, const StudyConfig* c) {
  fs::path dir = !o.out.empty() ? fs::path(o.out) : c ? fs::path(c->output_dir) : fs::path("tpmsvox-out");
  fs::create_directories(dir);
  return dir;
}

std::string tag(double h, double mj) {
  return "h" + format_number(h) + "_mj" + format_number(mj);
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

double pick(const std::optional<double>& v, const std::vector<double>& list) {
  return v ? *v : list.front();
}

int cmd_gen(const Options& o, std::ostream& out) {
  const StudyConfig c = load(o);
  const fs::path dir = output_dir(o, &c);
  const Box box = c.domain();
  const Vec3 cell = Vec3::Constant(c.lattice.cell_size_mm);

  DensityCalibration::Spec spec;
  spec.grid_n = c.calibration_grid;
  const auto table = DensityCalibration::build(cell, c.lattice.topology, spec);
  table.write_csv(dir / "calibration.csv", "config " + c.hash());

  std::optional<ImplicitLattice> lattice;
  if (c.lattice.graded) {
    lattice = graded_lattice(cell, c.lattice.rd_top, c.lattice.rd_bottom, box.lo.z(), box.hi.z(), table);
  } else {
    // Same bracket as the table so out-of-range targets fail with its range.
    if (c.lattice.relative_density < 1.0) table.offset_for(c.lattice.relative_density);
    lattice = build_lattice(c).lattice;
  }

  SurfaceOptions so;
  so.resolution = c.surface_resolution;
  const TriMesh surface = extract_surface(*lattice, box, so);
  write_stl(surface, dir / "lattice.stl", o.ascii ? StlMode::ascii : StlMode::binary);

  MonteCarloSampler mc;
  mc.seed = c.seed;
  const double rd_mc = solid_fraction(*lattice, box, mc);
  const double rd_stl = enclosed_volume(surface) / box.volume();

  // Density along z in one slab per quarter cell.
  CsvWriter slabs(dir / "slabs.csv", {"z_lo_mm", "z_hi_mm", "RD"}, c.hash());
  const int n = 4 * c.cells_per_axis;
  for (int k = 0; k < n; ++k) {
    Box slab = box;
    slab.lo.z() = box.lo.z() + box.extent().z() * k / n;
    slab.hi.z() = box.lo.z() + box.extent().z() * (k + 1) / n;
    MonteCarloSampler s;
    s.seed = c.seed + static_cast<std::uint64_t>(k) + 1;
    s.samples = 200'000;
    slabs.row({format_number(slab.lo.z()), format_number(slab.hi.z()),
               format_number(solid_fraction(*lattice, slab, s))});
  }
  slabs.close();

  out << "triangles " << surface.size() << "\n"
      << "RD (Monte-Carlo) " << rd_mc << "\n"
      << "RD (STL volume) " << rd_stl << "\n"
      << "wrote " << (dir / "lattice.stl").string() << ", calibration.csv, slabs.csv\n";
  return 0;
}

int cmd_mesh(const Options& o, std::ostream& out) {
  const StudyConfig c = load(o);
  const fs::path dir = output_dir(o, &c);
  const double h = pick(o.h, c.element_sizes_mm);
  const double mj = pick(o.mj, c.min_jacobians);
  StudyConfig checked = c;
  checked.element_sizes_mm = {h};
  checked.min_jacobians = {mj};
  checked.validate();

  const auto lb = build_lattice(c);
  MeshOutcome m;
  try {
    m = mesh_point(c, lb.lattice, h, mj);
  } catch (const std::exception& e) {
    throw StudyPointError("mesh", h, mj, e.what());
  }
  std::vector<double> sj(m.mesh.element_count());
  for (std::size_t e = 0; e < sj.size(); ++e) sj[e] = scaled_jacobian(m.mesh.corners(e));
  write_vtk(m.mesh, {}, {{"scaled_jacobian", 1, sj}}, dir / ("mesh_" + tag(h, mj) + ".vtk"));

  CsvWriter csv(dir / ("quality_" + tag(h, mj) + ".csv"), quality_csv_header(), c.hash());
  csv.row(quality_csv_row(h, mj, m.quality));
  csv.close();
  out << "elements " << m.quality.element_count << ", min SJ " << m.quality.min_scaled_jacobian << ", RD "
      << m.quality.relative_density << "\n";
  return 0;
}

int cmd_solve(const Options& o, std::ostream& out, std::ostream& err) {
  const StudyConfig c = load(o);
  const fs::path dir = output_dir(o, &c);
  const double h = pick(o.h, c.element_sizes_mm);
  const double mj = pick(o.mj, c.min_jacobians);
  StudyConfig checked = c;
  checked.element_sizes_mm = {h};
  checked.min_jacobians = {mj};
  checked.validate();

  const auto lb = build_lattice(c);
  MeshOutcome m;
  try {
    m = mesh_point(c, lb.lattice, h, mj);
  } catch (const std::exception& e) {
    throw StudyPointError("mesh", h, mj, e.what());
  }
  PointResult r;
  r.rd_target = lb.target_rd;
  r.h = h;
  r.mj = mj;
  r.quality = m.quality;
  try {
    CompressionSetup setup;
    setup.displacement = c.top_displacement_mm;
    r.solution = run_compression(m.mesh, c.material, setup, c.solver);
  } catch (const std::exception& e) {
    throw StudyPointError("solve", h, mj, e.what());
  }

  CsvWriter csv(dir / ("result_" + tag(h, mj) + ".csv"), compression_csv_header(), c.hash());
  csv.row(compression_csv_row(r));
  csv.close();
  write_vtk(m.mesh, {{"displacement", 3, r.solution.u}},
            {{"von_mises_MPa", 1, element_von_mises(m.mesh, c.material, r.solution.u)}},
            dir / ("displacement_" + tag(h, mj) + ".vtk"));
  out << "E_eff " << r.solution.modulus << " MPa (" << r.solution.iterations << " CG iterations)\n";
  err << "reaction imbalance " << r.solution.reaction_imbalance << "\n";
  return 0;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const StudyConfig c = load(o);
  const fs::path dir = output_dir(o, &c);
  const auto results = run_sweep(c, o.jobs, [&](const PointResult& r) {
    err << "RD " << r.rd_target << " h " << r.h << " MJ " << r.mj << ": E_eff " << r.solution.modulus << " MPa, "
        << r.quality.element_count << " elements, " << r.seconds << " s\n";
  });
  CsvWriter csv(dir / "sweep.csv", sweep_csv_header(), c.hash());
  for (const auto& r : results) csv.row(sweep_csv_row(r));
  csv.close();
  out << "wrote " << (dir / "sweep.csv").string() << " (" << results.size() << " rows)\n";
  return 0;
}

int cmd_gci(const Options& o, std::ostream& out) {
  const GciConvention conv = gci_convention_from_string(o.convention);
  const double fs_default = kSafetyFactorThreeGrid;
  const double safety = o.safety_factor.value_or(fs_default);
  const auto studies = studies_from_csv(o.input);
  const fs::path dir = output_dir(o, nullptr);

  std::vector<GciReport> reports;
  SvgPlot plot{"Mesh convergence", "element size h (mm)", "f", o.log_x, false, true, {}};
  for (const auto& s : studies) {
    if (s.points.size() < 3)
      throw std::invalid_argument("study '" + s.label + "' has fewer than three grids");
    MeshStudy finest{s.label, {s.points.end() - 3, s.points.end()}};
    reports.push_back(gci_report(finest, safety, conv));
    SvgSeries series{s.label, {}};
    for (const auto& p : s.points) series.points.emplace_back(p.h, p.f);
    plot.series.push_back(std::move(series));
  }

  CsvWriter csv(dir / "gci.csv", gci_csv_header(), file_hash(o.input));
  for (const auto& r : reports) csv.row(gci_csv_row(r));
  csv.close();
  if (conv == GciConvention::paper) {
    std::ofstream note(dir / "gci.csv", std::ios::app);
    note << "# Ra is identically 1 under the paper convention\n";
  }
  write_svg(plot, dir / "gci.svg");

  for (const auto& r : reports)
    out << r.label << ": p " << r.p << ", f_asym " << r.f_asym << ", GCI12 " << r.gci12 << "%, GCI23 " << r.gci23
        << "%, Ra " << r.ra << (conv == GciConvention::paper ? " (trivially 1 under paper convention)" : "")
        << "\n";
  return 0;
}

int cmd_fit(const Options& o, std::ostream& out) {
  const CsvTable t = read_csv(o.input);
  std::vector<DensityModulusPoint> pts;
  std::vector<std::size_t> lines;
  if (t.find("RD") >= 0 && t.find("E_rel") >= 0) {
    const int rc = t.column("RD"), ec = t.column("E_rel");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      pts.push_back({t.number(i, rc), t.number(i, ec)});
      lines.push_back(t.lines[i]);
    }
  } else {
    const int rc = t.column("RD_target"), ec = t.column("Eeff_MPa"), mc = t.column("MJ");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      if (o.mj_filter && std::abs(t.number(i, mc) - *o.mj_filter) > 1e-12) continue;
      pts.push_back({t.number(i, rc), t.number(i, ec) / o.youngs_modulus});
      lines.push_back(t.lines[i]);
    }
  }

  GibsonAshbyFit fit;
  try {
    fit = fit_gibson_ashby(pts);
  } catch (const NonPositivePoint& e) {
    throw NonPositivePoint(lines.at(e.row() - 1), std::string("line ") + std::to_string(lines.at(e.row() - 1)) +
                                                      " of " + o.input);
  }

  const fs::path dir = output_dir(o, nullptr);
  CsvWriter csv(dir / "fit.csv", {"C1", "m", "R2", "points"}, file_hash(o.input));
  csv.row({format_number(fit.c1), format_number(fit.m), format_number(fit.r2), std::to_string(fit.points)});
  csv.close();

  SvgPlot plot{"Gibson-Ashby fit", "relative density", "E / E_s", true, true, false, {}};
  SvgSeries data{"data", {}};
  for (const auto& p : pts) data.points.emplace_back(p.rd, p.e_rel);
  SvgSeries line{"fit", {}};
  double lo = pts.front().rd, hi = lo;
  for (const auto& p : pts) {
    lo = std::min(lo, p.rd);
    hi = std::max(hi, p.rd);
  }
  for (int k = 0; k <= 20; ++k) {
    const double rd = lo * std::pow(hi / lo, k / 20.0);
    line.points.emplace_back(rd, fit.c1 * std::pow(rd, fit.m));
  }
  plot.series = {line, data};
  write_svg(plot, dir / "fit.svg");
  out << "E/E_s = " << fit.c1 << " RD^" << fit.m << ", R^2 " << fit.r2 << "\n";
  return 0;
}

int cmd_report(const Options& o, std::ostream& out) {
  const CsvTable t = read_csv(o.input);
  const int rc = t.find("RD_target");
  const int hc = t.column("h"), mc = t.column("MJ"), ec = t.column("Eeff_MPa"), nc = t.column("elements"),
            dc = t.column("RD_mesh"), sc = t.column("min_SJ");
  std::map<std::string, std::vector<std::size_t>> groups;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    std::string label = "MJ=" + t.rows[i][mc];
    if (rc >= 0) label = "RD=" + t.rows[i][rc] + " " + label;
    if (!groups.count(label)) order.push_back(label);
    groups[label].push_back(i);
  }

  const fs::path dir = output_dir(o, nullptr);
  CsvWriter csv(dir / "report.csv", {"label", "h", "elements", "RD_mesh", "min_SJ", "Eeff_MPa", "rel_err_pct"},
                file_hash(o.input));
  SvgPlot plot{"Effective modulus", "element size h (mm)", "E_eff (MPa)", o.log_x, false, true, {}};
  for (const auto& label : order) {
    auto rows = groups[label];
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::size_t a, std::size_t b) { return t.number(a, hc) > t.number(b, hc); });
    SvgSeries series{label, {}};
    out << label << "\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const std::size_t i = rows[k];
      // Relative error of this mesh against the next finer one.
      std::string err_pct;
      double err = 0.0;
      if (k + 1 < rows.size()) {
        err = relative_error(t.number(rows[k + 1], ec), t.number(i, ec));
        err_pct = format_number(err);
      }
      csv.row({label, t.rows[i][hc], t.rows[i][nc], t.rows[i][dc], t.rows[i][sc], t.rows[i][ec], err_pct});
      series.points.emplace_back(t.number(i, hc), t.number(i, ec));
      out << "  h " << t.rows[i][hc] << "  elements " << t.rows[i][nc] << "  E_eff " << t.number(i, ec) << " MPa";
      if (!err_pct.empty()) out << "  rel. error " << err << "%";
      out << "\n";
    }
    plot.series.push_back(std::move(series));
  }
  csv.close();
  write_svg(plot, dir / "report.svg");
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"TPMS lattice voxel meshing, compression FEM and mesh-convergence analysis", "tpmsvox"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON study configuration")->envname("TPMSVOX_CONFIG");
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "output directory (overrides output_dir)")->envname("TPMSVOX_OUT");
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Monte-Carlo seed (overrides the config)")->envname("TPMSVOX_SEED");
  };
  auto add_point = [&](CLI::App* sub) {
    sub->add_option("--element-size", o.h, "element size in mm (default: first of element_sizes_mm)");
    sub->add_option("--mj", o.mj, "minimum scaled Jacobian (default: first of min_jacobians)");
  };

  auto* gen = app.add_subcommand("gen", "calibrate the offset and write STL and calibration table");
  add_config(gen);
  add_out(gen);
  add_seed(gen);
  gen->add_flag("--ascii", o.ascii, "write ASCII STL instead of binary");

  auto* mesh = app.add_subcommand("mesh", "build one voxel mesh and report its quality");
  add_config(mesh);
  add_out(mesh);
  add_seed(mesh);
  add_point(mesh);

  auto* solve = app.add_subcommand("solve", "mesh and solve one compression case");
  add_config(solve);
  add_out(solve);
  add_seed(solve);
  add_point(solve);

  auto* sweep = app.add_subcommand("sweep", "solve every (RD, h, MJ) combination of the config");
  add_config(sweep);
  add_out(sweep);
  add_seed(sweep);
  sweep->add_option("--jobs", o.jobs, "concurrent sweep points")->envname("TPMSVOX_JOBS")->check(CLI::PositiveNumber);

  auto* gci = app.add_subcommand("gci", "observed order, Richardson extrapolation and GCI from a study CSV");
  gci->add_option("input", o.input, "CSV with h,f[,label] columns or a sweep CSV")->required()->check(CLI::ExistingFile);
  add_out(gci);
  gci->add_option("--convention", o.convention, "GCI denominator convention")
      ->envname("TPMSVOX_CONVENTION")
      ->check(CLI::IsMember({"paper", "roache"}));
  gci->add_option("--safety-factor", o.safety_factor, "F_s (default 1.25)");
  gci->add_flag("--log-x", o.log_x, "logarithmic h axis in the plot");

  auto* fit = app.add_subcommand("fit", "Gibson-Ashby power-law fit");
  fit->add_option("input", o.input, "CSV with RD,E_rel columns or a sweep CSV")->required()->check(CLI::ExistingFile);
  add_out(fit);
  fit->add_option("--mj", o.mj_filter, "sweep CSV only: keep rows with this MJ");
  fit->add_option("--es", o.youngs_modulus, "sweep CSV only: base modulus E_s in MPa");

  auto* report = app.add_subcommand("report", "per-MJ convergence table and plot from a sweep CSV");
  report->add_option("input", o.input, "sweep CSV")->required()->check(CLI::ExistingFile);
  add_out(report);
  report->add_flag("--log-x", o.log_x, "logarithmic h axis in the plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*gen) return cmd_gen(o, out);
    if (*mesh) return cmd_mesh(o, out);
    if (*solve) return cmd_solve(o, out, err);
    if (*sweep) return cmd_sweep(o, out, err);
    if (*gci) return cmd_gci(o, out);
    if (*fit) return cmd_fit(o, out);
    if (*report) return cmd_report(o, out);
  } catch (const std::exception& e) {
    err << "tpmsvox: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace tpmsvox::cli
