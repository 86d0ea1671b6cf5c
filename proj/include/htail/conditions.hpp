#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "htail/convolve.hpp"
#include "htail/diagnostics.hpp"

namespace htail {

/// Named sufficient or necessary conditions on F, G and H = law of XY.
///
///   EQ11   G(x) tail = o(H(bx) tail) for every b > 0
///   EQ12   G(x/d) tail - G((x+1)/d) tail = o(H(x) tail) for every atom d of F
///   EQ13   H(x) tail = O(F(x/t) tail) for some t >= 1
///   EQ14   H(x) tail = O(F(x/d) tail) for some atom d of G
///   T1A_D  G(a(x)) tail = o(H(x) tail), a an insensitivity function of F
///   T31    G(a(x)) tail = O(H(x) tail) and F(x/a(x)) tail = O(H(x) tail)
///   T32    F(x - 1/x) ~ F(x), G(x - 1/x) ~ G(x) (tails), plus
///          G(a(x)) tail = O(H(x) tail) and F(a(x)) tail = O(H(x) tail)
enum class ConditionId { EQ11, EQ12, EQ13, EQ14, T1A_D, T31, T32 };

enum class Overall { HoldsEvidence, FailsEvidence, Inconclusive };

std::string to_string(ConditionId id);
std::string to_string(Overall o);
ConditionId parse_condition_id(const std::string& s);

struct ParameterEvidence {
  std::string label;       // e.g. "b=0.5", "d=2", "a=sqrt"
  double value = 0.0;      // probe value; NaN for function-valued parameters
  std::string required;    // "VANISHES", "BOUNDED" or "CONVERGES_TO(1)"
  Overall status = Overall::Inconclusive;
  RatioDiagnostic diagnostic;
};

struct ConditionReport {
  ConditionId condition_id = ConditionId::EQ11;
  std::vector<ParameterEvidence> parameter_evidence;  // sorted by value, then label
  Overall overall = Overall::Inconclusive;
  bool existential = false;  // true when one satisfied parameter suffices
  bool vacuous = false;      // no probe parameters exist
  std::string note;
};

struct ConditionParams {
  std::vector<double> b = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> t = {1.0, 2.0, 4.0, 8.0};
  std::vector<double> extra_d;        // added to the atom probe sets
  double atom_mass_floor = 1e-6;
  double atom_loc_ceiling = 20.0;
  std::function<double(double)> a;    // explicit a(x); defaults depend on the condition
  std::string a_label = "a";
  double delta = 0.05;                // insensitivity tolerance when a is built for T1A_D
  ClassifyOptions options;
  GridSpec product_grid;              // gridded product used by the theorem11_verdict cross-check
};

/// Evaluate one condition on the grid.
ConditionReport check_condition(ConditionId id, const Distribution& F, const Distribution& G,
                                const std::vector<double>& grid, const ConditionParams& params = {});

/// Per-parameter status of a graded ratio against a required verdict.
Overall grade_requirement(const RatioDiagnostic& d, VerdictKind required, const VerdictThresholds& th);

/// Grid and thresholds for a pair of laws: the knot subsequence when either
/// law is example31_G, otherwise the default geometric grid.
std::pair<std::vector<double>, VerdictThresholds> default_grid_for(const Distribution& F, const Distribution& G);

/// The premise F in S was not supported by the evidence.
class PremiseRefused : public std::runtime_error {
 public:
  PremiseRefused(const std::string& what, ClassVerdict evidence)
      : std::runtime_error(what), evidence_(std::move(evidence)) {}
  const ClassVerdict& evidence() const { return evidence_; }

 private:
  ClassVerdict evidence_;
};

struct Theorem11Verdict {
  ClassVerdict premise;                 // classify(F, S)
  bool df_empty = false;
  std::vector<double> df_probe;         // atoms of F used as probes
  std::optional<ConditionReport> eq12;  // absent on the empty-D[F] branch
  std::string branch;                   // "D[F] empty" or "D[F] nonempty, EQ12 ..."
  Membership predicted = Membership::Inconclusive;
  ClassVerdict cross_check;             // classify(H, S) on the gridded product
  bool agree = false;
};

/// H in S iff D[F] is empty or EQ12 holds, given F in S. Throws
/// PremiseRefused when classify(F, S) is not member evidence.
Theorem11Verdict theorem11_verdict(const Distribution& F, const Distribution& G, const std::vector<double>& grid,
                                   const ConditionParams& params = {});

}  // namespace htail
