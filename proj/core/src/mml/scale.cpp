#include <algorithm>
#include <cmath>
#include <tuple>

#include "mmsf/mml/analysis.hpp"

namespace mmsf::mml {

std::string_view to_string(ScaleRelation relation) {
  switch (relation) {
    case ScaleRelation::kSeparated: return "separated";
    case ScaleRelation::kAdjacent: return "adjacent";
    case ScaleRelation::kOverlapping: return "overlapping";
  }
  return "?";
}

namespace {

// `fine_span` is how long the finer process runs, `coarse_step` the step of
// the coarser one.
ScaleRelation relate(double fine_span, double coarse_step) {
  double scale = std::max(std::abs(fine_span), std::abs(coarse_step));
  if (std::abs(fine_span - coarse_step) <= kScaleEpsilon * scale) return ScaleRelation::kAdjacent;
  if (fine_span <= coarse_step * (1.0 - kScaleEpsilon)) return ScaleRelation::kSeparated;
  return ScaleRelation::kOverlapping;
}

}  // namespace

ScaleComparison scale_relation(const ScaleSpec& a, const ScaleSpec& b) {
  // Order by (step, span) so the answer does not depend on argument order.
  const bool a_finer = std::tie(a.dt, a.total_time) <= std::tie(b.dt, b.total_time);
  const ScaleSpec& fine = a_finer ? a : b;
  const ScaleSpec& coarse = a_finer ? b : a;

  ScaleComparison out;
  out.temporal = relate(fine.total_time, coarse.dt);
  out.step_ratio = coarse.dt / fine.dt;

  if (a.dx && a.extent && b.dx && b.extent) {
    const bool a_fine_space = std::tie(*a.dx, *a.extent) <= std::tie(*b.dx, *b.extent);
    const ScaleSpec& fs = a_fine_space ? a : b;
    const ScaleSpec& cs = a_fine_space ? b : a;
    out.spatial = relate(*fs.extent, *cs.dx);
    out.spatial_ratio = *cs.dx / *fs.dx;
  }
  return out;
}

}  // namespace mmsf::mml
