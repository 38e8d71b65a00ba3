#pragma once

#include <string>
#include <vector>

#include "fsi/fluid_solver.hpp"
#include "fsi/grid.hpp"
#include "fsi/kinematics.hpp"

namespace fsi {

enum class ContactLabel : char { C = 'C', I = 'I', N = 'N' };

struct ClassificationTolerances {
  double wall = 1e-3;
  double self = 1e-3;
  double ref_separation = -1.0;  // negative: 4 x solid spacing
};

struct ContactClassification {
  std::vector<int> nodes;  // boundary nodes, counter-clockwise from node (0, 0)
  std::vector<ContactLabel> labels;
  // Far partners of each boundary node (positions in nodes), whatever its label.
  std::vector<std::vector<int>> partners;
  double wall_tol = 0.0;
  double self_tol = 0.0;
  double ref_separation = 0.0;

  int count(ContactLabel l) const;
};

std::vector<int> boundary_nodes(const SolidGrid& grid);

// C if within wall tol of the container boundary; else N if some boundary node
// at reference distance >= ref_separation maps within self tol; else I.
ContactClassification classify_boundary(const DeformationField& state, const FluidGrid& container,
                                        const ClassificationTolerances& tol = {});

// Deformed length of the I-labeled part of the boundary, det F |F^-T n| dS.
double interface_area(const DeformationField& state, const ContactClassification& c);

struct LemmaCheck {
  std::string name;
  bool passed = true;
  std::vector<int> witness;  // solid node indices
};

struct LemmaReport {
  LemmaCheck injective_on_C;
  LemmaCheck multiplicity;
  LemmaCheck partition;
  int max_multiplicity = 1;

  bool all_passed() const { return injective_on_C.passed && multiplicity.passed && partition.passed; }
};

LemmaReport lemma_checks(const DeformationField& state, const ContactClassification& c);

// Integral of p(rho) over the fluid part of cells closer than each width to the
// walls or the deformed solid boundary.
std::vector<double> collar_pressure_profile(const FluidState& fluid, const DeformationField& solid,
                                            const SolidMask& mask, const FluidParams& params,
                                            const std::vector<double>& widths);

struct CantorProfile {
  int levels = 0;
  std::vector<double> widths;      // per level
  std::vector<double> amplitudes;  // per level
  std::vector<double> lo, hi;      // bump supports, sorted
  std::vector<int> level_of;       // level of each support
  std::vector<double> f;           // samples at cell centers of a uniform grid on [0, 1]
  double positivity_measure = 0.0;  // measured on the grid
  double complement_measure = 0.0;
  double exact_positivity = 0.0;    // interval bookkeeping
};

CantorProfile fat_cantor_profile(int levels, int resolution);

enum class Fixture { Separated, WallFlush, Fold, TriplePoint };

// Constructed configurations in a container: a square, a square flush to
// x = container.origin, a horseshoe whose arms touch, a triple crease.
DeformationField make_fixture(Fixture f, const FluidGrid& container, double tol = 1e-3);
Fixture fixture_from_name(const std::string& name);

}  // namespace fsi
