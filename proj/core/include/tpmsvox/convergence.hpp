#pragma once

#include <string>
#include <vector>

namespace tpmsvox {

/// |f_coarse - f_fine| / f_fine * 100. Throws ZeroReference.
double relative_error(double f_fine, double f_coarse);

/// ln((f3 - f2) / (f2 - f1)) / ln r with f1 the finest result.
/// Throws ZeroDifference or NonMonotoneTriple.
double observed_order(double f1, double f2, double f3, double r);

/// f1 + (f1 - f2) / (r^p - 1). Throws DegenerateOrder.
double richardson(double f1, double f2, double r, double p);

/// F_s |f_coarse - f_fine| / f_ref / (r^p - 1) * 100.
double gci_pair(double f_fine, double f_coarse, double f_ref, double r, double p, double safety_factor);

/// gci23 / (r^p gci12). Throws ZeroGci.
double asymptotic_ratio(double gci12, double gci23, double r, double p);

enum class GciConvention {
  paper,   // both pairs normalised by the finest result
  roache,  // each pair normalised by its own fine member
};

const char* to_string(GciConvention c);
GciConvention gci_convention_from_string(const std::string& s);

inline constexpr double kSafetyFactorThreeGrid = 1.25;
inline constexpr double kSafetyFactorTwoGrid = 3.0;

struct MeshStudy {
  struct Point {
    double h = 0.0;
    double f = 0.0;
  };
  std::string label;
  std::vector<Point> points;  // h strictly decreasing

  /// Throws std::invalid_argument when h is not strictly decreasing or not
  /// positive.
  void validate() const;
  /// Constant refinement ratio h_coarse / h_fine; throws when the ratio
  /// varies by more than 1e-9.
  double refinement_ratio() const;
};

struct GciReport {
  std::string label;
  GciConvention convention = GciConvention::paper;
  double safety_factor = kSafetyFactorThreeGrid;
  double r = 0.0;
  double p = 0.0;
  double f_asym = 0.0;
  double gci12 = 0.0;
  double gci23 = 0.0;
  double ra = 0.0;
};

/// Three-grid report over the last three (finest) entries of the study.
GciReport gci_report(const MeshStudy& study, double safety_factor = kSafetyFactorThreeGrid,
                     GciConvention convention = GciConvention::paper);

struct GibsonAshbyFit {
  double c1 = 0.0;
  double m = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

struct DensityModulusPoint {
  double rd = 0.0;
  double e_rel = 0.0;  // E / E_s
};

/// Ordinary least squares in (ln RD, ln E/E_s). Throws NonPositivePoint
/// (with the one-based point index) or DegenerateFit.
GibsonAshbyFit fit_gibson_ashby(const std::vector<DensityModulusPoint>& points);

}  // namespace tpmsvox
