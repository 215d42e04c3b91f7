#pragma once

#include <optional>
#include <vector>

namespace faps {

/// One point of the discrete policy grid: a square crop of side m, centered
/// horizontally on the canvas and shifted down by delta pixels (image y grows
/// downward, so delta > 0 moves the crop toward the chin).
struct AlignmentPolicy {
  int m{0};
  int delta{0};

  friend bool operator==(const AlignmentPolicy&, const AlignmentPolicy&) = default;
};

/// Square crop region in canvas coordinates.
struct CropBox {
  double left{0.0};
  double top{0.0};
  double side{0.0};
};

/// General axis-aligned rectangle; crop-box intersections are usually not
/// square, so IOU arithmetic lives at this level.
struct Rect {
  double left{0.0};
  double top{0.0};
  double width{0.0};
  double height{0.0};

  double area() const { return width * height; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

Rect to_rect(const CropBox& box);

/// Intersection of two rectangles; disjoint inputs yield a zero-area rect.
Rect intersect(const Rect& a, const Rect& b);

/// Discrete policy grid: m over {m_min, m_min+s_m, ..., m_max}, delta over
/// {delta_min, ..., delta_max}. A grid point is a candidate iff its crop box
/// is contained in the box of the maximal policy {m_max, 0}.
struct SearchSpace {
  int m_min{160};
  int m_max{232};
  int s_m{8};
  int delta_min{-32};
  int delta_max{24};
  int s_delta{4};
  int canvas{300};

  /// Throws std::invalid_argument on malformed bounds/steps. Also requires
  /// the delta lattice to pass through 0 so {m_max, 0} is itself a candidate.
  void validate() const;

  AlignmentPolicy super_roi() const { return {m_max, 0}; }

  /// Candidate membership: on both lattices, inside bounds, box contained
  /// in the super-ROI box.
  bool contains(const AlignmentPolicy& p) const;
};

/// Square box of policy p on a canvas x canvas frame: horizontally centered,
/// vertical center at canvas/2 + delta. Throws if the box leaves the canvas.
CropBox policy_to_box(const AlignmentPolicy& p, int canvas);

/// Intersection area over union area. Zero-area inputs compare 0 against
/// everything except a bitwise-identical degenerate rectangle, which gives 1.
double rect_iou(const Rect& a, const Rect& b);
double box_iou(const CropBox& a, const CropBox& b);

/// All valid candidates, ascending m then ascending delta.
std::vector<AlignmentPolicy> enumerate_space(const SearchSpace& space);

/// Clamp a (possibly out-of-range) policy onto the valid grid: m first, then
/// delta into the containment interval for that m. Off-lattice inputs snap to
/// the nearest lattice point (ties toward zero). The result is always a
/// member of enumerate_space, and clipping is idempotent.
AlignmentPolicy clip_policy(const AlignmentPolicy& p, const SearchSpace& space);

struct CrossoverResult {
  AlignmentPolicy policy;
  int parent_index;  // 1 or 2
};

/// Intersection-based crossover: the child is the candidate whose crop box
/// has the largest IOU with box(p1) ∩ box(p2); parent_index names the parent
/// whose box has the larger IOU with the child box (the one worth cloning).
/// IOU ties among candidates resolve to the box center nearest the
/// intersection center, then to enumeration order; parent ties resolve to the
/// higher recorded accuracy, then to parent 1.
/// Throws if either parent is not a candidate or their boxes are disjoint.
CrossoverResult intersection_crossover(const AlignmentPolicy& p1,
                                       const AlignmentPolicy& p2,
                                       const SearchSpace& space,
                                       std::optional<double> acc1 = std::nullopt,
                                       std::optional<double> acc2 = std::nullopt);

}  // namespace faps
