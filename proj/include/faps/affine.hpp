#pragma once

#include <Eigen/Dense>
#include <vector>

#include "faps/geometry.hpp"

namespace faps {

using Point2 = Eigen::Vector2d;

/// Ordered 2D point set, one column per point.
class LandmarkSet {
 public:
  /// Requires at least 2 finite points.
  explicit LandmarkSet(Eigen::Matrix2Xd points);
  static LandmarkSet from_points(const std::vector<Point2>& pts);

  Eigen::Index size() const { return points_.cols(); }
  Point2 point(Eigen::Index i) const { return points_.col(i); }
  const Eigen::Matrix2Xd& points() const { return points_; }

 private:
  Eigen::Matrix2Xd points_;
};

/// Conformal 2D transform x -> [[a, -b], [b, a]] x + [tx, ty]: rotation and
/// uniform scale plus translation, never a reflection. Composition and
/// inversion stay inside the family.
struct SimilarityTransform {
  double a{1.0};
  double b{0.0};
  double tx{0.0};
  double ty{0.0};

  double scale() const { return std::hypot(a, b); }
  Eigen::Matrix2d linear() const {
    Eigen::Matrix2d m;
    m << a, -b, b, a;
    return m;
  }
  Point2 translation() const { return {tx, ty}; }

  Point2 operator()(const Point2& p) const {
    return {a * p.x() - b * p.y() + tx, b * p.x() + a * p.y() + ty};
  }
  Eigen::Matrix2Xd operator()(const Eigen::Matrix2Xd& pts) const {
    return (linear() * pts).colwise() + translation();
  }
  LandmarkSet operator()(const LandmarkSet& lms) const { return LandmarkSet((*this)(lms.points())); }

  SimilarityTransform inverse() const;
  static SimilarityTransform identity() { return {}; }
};

/// outer after inner: compose(A, T)(x) == A(T(x)).
SimilarityTransform compose(const SimilarityTransform& outer, const SimilarityTransform& inner);

/// Least-squares conformal fit of dst = M src + t. The parameterization is
/// linear in (a, b, tx, ty), so the closed form below is the global minimizer
/// of the summed squared residual over the reflection-free family; it is
/// exact whenever dst is an exact similarity image of src.
/// Throws on mismatched counts, coincident src, or a zero-scale solution.
SimilarityTransform estimate_similarity(const LandmarkSet& src, const LandmarkSet& dst);

/// Canonical landmark layout on a square canvas with the anchor (nose
/// mid-point) at the canvas center. Landmarks must be mirror-symmetric about
/// the vertical center line (within 1e-9); construction validates this.
struct BaseTemplate {
  int canvas;
  int output_size;
  LandmarkSet landmarks;

  BaseTemplate(int canvas, int output_size, LandmarkSet lms);

  Point2 anchor() const { return {canvas / 2.0, canvas / 2.0}; }

  /// 300x300 canvas, 112 output, 5-point layout (eyes, nose, mouth corners).
  static BaseTemplate default_template();
};

/// Map from base-canvas coordinates into the output frame of policy p: pure
/// scale output_size/m plus the translation that sends the crop-box corner to
/// the origin. Throws if p does not fit the canvas.
SimilarityTransform policy_transform(const AlignmentPolicy& p, const BaseTemplate& base);

/// The landmark layout that policy p's template induces in the output frame.
LandmarkSet derive_template_landmarks(const AlignmentPolicy& p, const BaseTemplate& base);

}  // namespace faps
