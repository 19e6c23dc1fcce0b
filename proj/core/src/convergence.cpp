#include "tpmsvox/convergence.hpp"

#include "tpmsvox/errors.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tpmsvox {

double relative_error(double f_fine, double f_coarse) {
  if (f_fine == 0.0) throw ZeroReference("relative error needs a nonzero fine-mesh result");
  return std::abs(f_coarse - f_fine) / std::abs(f_fine) * 100.0;
}

double observed_order(double f1, double f2, double f3, double r) {
  if (!(r > 1.0)) throw std::invalid_argument("refinement ratio must be > 1");
  const double d21 = f2 - f1;
  const double d32 = f3 - f2;
  if (d21 == 0.0 || d32 == 0.0) throw ZeroDifference("consecutive mesh results are identical");
  if ((d21 > 0.0) != (d32 > 0.0))
    throw NonMonotoneTriple("oscillatory convergence: GCI does not apply to this triple");
  return std::log(d32 / d21) / std::log(r);
}

namespace {

double rp_minus_one(double r, double p) {
  if (!(r > 1.0)) throw std::invalid_argument("refinement ratio must be > 1");
  const double d = std::pow(r, p) - 1.0;
  if (std::abs(d) < 1e-12) throw DegenerateOrder("r^p is 1; the order of convergence is degenerate");
  return d;
}

}  // namespace

double richardson(double f1, double f2, double r, double p) {
  return f1 + (f1 - f2) / rp_minus_one(r, p);
}

double gci_pair(double f_fine, double f_coarse, double f_ref, double r, double p, double safety_factor) {
  if (f_ref == 0.0) throw ZeroReference("GCI reference value is zero");
  const double d = rp_minus_one(r, p);
  if (d < 0.0) throw DegenerateOrder("GCI needs r^p > 1");
  return safety_factor * (std::abs(f_coarse - f_fine) / std::abs(f_ref)) / d * 100.0;
}

double asymptotic_ratio(double gci12, double gci23, double r, double p) {
  if (gci12 == 0.0) throw ZeroGci("GCI12 is zero; asymptotic ratio undefined");
  return gci23 / (std::pow(r, p) * gci12);
}

const char* to_string(GciConvention c) {
  return c == GciConvention::paper ? "paper" : "roache";
}

GciConvention gci_convention_from_string(const std::string& s) {
  if (s == "paper") return GciConvention::paper;
  if (s == "roache") return GciConvention::roache;
  throw ConfigError("unknown GCI convention '" + s + "' (expected paper or roache)");
}

void MeshStudy::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].h > 0.0)) throw std::invalid_argument("mesh study: h must be > 0");
    if (i > 0 && !(points[i].h < points[i - 1].h))
      throw std::invalid_argument("mesh study: h must be strictly decreasing");
  }
}

double MeshStudy::refinement_ratio() const {
  validate();
  if (points.size() < 2) throw std::invalid_argument("mesh study needs at least two grids");
  const double r = points[points.size() - 2].h / points.back().h;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double ri = points[i - 1].h / points[i].h;
    if (std::abs(ri - r) > 1e-9 * r) {
      std::ostringstream msg;
      msg << "mesh study '" << label << "': refinement ratio is not constant (" << ri << " vs " << r << ")";
      throw std::invalid_argument(msg.str());
    }
  }
  return r;
}

GciReport gci_report(const MeshStudy& study, double safety_factor, GciConvention convention) {
  if (study.points.size() != 3)
    throw std::invalid_argument("GCI report needs exactly three grids, got " + std::to_string(study.points.size()));
  GciReport rep;
  rep.label = study.label;
  rep.convention = convention;
  rep.safety_factor = safety_factor;
  rep.r = study.refinement_ratio();

  // Points are ordered coarse to fine; f1 is the finest.
  const double f1 = study.points[2].f;
  const double f2 = study.points[1].f;
  const double f3 = study.points[0].f;
  rep.p = observed_order(f1, f2, f3, rep.r);
  rep.f_asym = richardson(f1, f2, rep.r, rep.p);
  const double ref23 = convention == GciConvention::paper ? f1 : f2;
  rep.gci12 = gci_pair(f1, f2, f1, rep.r, rep.p, safety_factor);
  rep.gci23 = gci_pair(f2, f3, ref23, rep.r, rep.p, safety_factor);
  rep.ra = asymptotic_ratio(rep.gci12, rep.gci23, rep.r, rep.p);
  return rep;
}

GibsonAshbyFit fit_gibson_ashby(const std::vector<DensityModulusPoint>& points) {
  if (points.size() < 2) throw DegenerateFit("power-law fit needs at least two points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].rd > 0.0)) throw NonPositivePoint(i + 1, "relative density");
    if (!(points[i].e_rel > 0.0)) throw NonPositivePoint(i + 1, "relative modulus");
  }
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += std::log(p.rd);
    my += std::log(p.e_rel);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.rd) - mx;
    const double dy = std::log(p.e_rel) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 1e-300) throw DegenerateFit("all relative densities are equal");

  GibsonAshbyFit fit;
  fit.points = points.size();
  fit.m = sxy / sxx;
  fit.c1 = std::exp(my - fit.m * mx);
  double ss_res = 0.0;
  for (const auto& p : points) {
    const double e = std::log(p.e_rel) - (my + fit.m * (std::log(p.rd) - mx));
    ss_res += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

}  // namespace tpmsvox
