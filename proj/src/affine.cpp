#include "faps/affine.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace faps {

LandmarkSet::LandmarkSet(Eigen::Matrix2Xd points) : points_(std::move(points)) {
  if (points_.cols() < 2) throw std::invalid_argument("landmark set needs at least 2 points");
  if (!points_.allFinite()) throw std::invalid_argument("landmark coordinates must be finite");
}

LandmarkSet LandmarkSet::from_points(const std::vector<Point2>& pts) {
  Eigen::Matrix2Xd m(2, static_cast<Eigen::Index>(pts.size()));
  for (Eigen::Index i = 0; i < m.cols(); ++i) m.col(i) = pts[static_cast<std::size_t>(i)];
  return LandmarkSet(std::move(m));
}

SimilarityTransform SimilarityTransform::inverse() const {
  const double s2 = a * a + b * b;
  if (s2 <= 0.0) throw std::invalid_argument("similarity transform has zero scale");
  const double ia = a / s2;
  const double ib = -b / s2;
  return {ia, ib, -(ia * tx - ib * ty), -(ib * tx + ia * ty)};
}

SimilarityTransform compose(const SimilarityTransform& outer, const SimilarityTransform& inner) {
  // Complex-number product on the linear parts; translation pulled through.
  return {outer.a * inner.a - outer.b * inner.b,
          outer.a * inner.b + outer.b * inner.a,
          outer.a * inner.tx - outer.b * inner.ty + outer.tx,
          outer.b * inner.tx + outer.a * inner.ty + outer.ty};
}

SimilarityTransform estimate_similarity(const LandmarkSet& src, const LandmarkSet& dst) {
  if (src.size() != dst.size())
    throw std::invalid_argument("estimate_similarity: landmark counts differ");

  const Eigen::Matrix2Xd& p = src.points();
  const Eigen::Matrix2Xd& q = dst.points();
  const Point2 mu_src = p.rowwise().mean();
  const Point2 mu_dst = q.rowwise().mean();
  const Eigen::Matrix2Xd pc = p.colwise() - mu_src;
  const Eigen::Matrix2Xd qc = q.colwise() - mu_dst;

  const double denom = pc.squaredNorm();
  if (denom <= 0.0)
    throw std::invalid_argument("estimate_similarity: source landmarks are coincident");

  SimilarityTransform t;
  t.a = pc.cwiseProduct(qc).sum() / denom;
  t.b = (pc.row(0).cwiseProduct(qc.row(1)) - pc.row(1).cwiseProduct(qc.row(0))).sum() / denom;
  if (t.scale() <= 0.0)
    throw std::invalid_argument("estimate_similarity: degenerate solve (zero scale)");

  const Point2 shift = mu_dst - t.linear() * mu_src;
  t.tx = shift.x();
  t.ty = shift.y();
  return t;
}

namespace {

// Every landmark must have a mirror partner across x = canvas/2.
void check_mirror_symmetry(const LandmarkSet& lms, double canvas) {
  constexpr double kTol = 1e-9;
  const Eigen::Index n = lms.size();
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point2 want{canvas - lms.point(i).x(), lms.point(i).y()};
    bool matched = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      if (std::abs(lms.point(j).x() - want.x()) <= kTol &&
          std::abs(lms.point(j).y() - want.y()) <= kTol) {
        used[static_cast<std::size_t>(j)] = true;
        matched = true;
        break;
      }
    }
    if (!matched)
      throw std::invalid_argument(
          "base template landmarks are not mirror-symmetric about the canvas center line");
  }
}

}  // namespace

BaseTemplate::BaseTemplate(int canvas_px, int output_px, LandmarkSet lms)
    : canvas(canvas_px), output_size(output_px), landmarks(std::move(lms)) {
  if (canvas <= 0) throw std::invalid_argument("base template: canvas must be positive");
  if (output_size <= 0) throw std::invalid_argument("base template: output size must be positive");
  check_mirror_symmetry(landmarks, static_cast<double>(canvas));
}

BaseTemplate BaseTemplate::default_template() {
  return BaseTemplate(300, 112,
                      LandmarkSet::from_points({{105.0, 125.0},
                                                {195.0, 125.0},
                                                {150.0, 150.0},
                                                {118.0, 190.0},
                                                {182.0, 190.0}}));
}

SimilarityTransform policy_transform(const AlignmentPolicy& p, const BaseTemplate& base) {
  const CropBox box = policy_to_box(p, base.canvas);
  const double k = static_cast<double>(base.output_size) / p.m;
  return {k, 0.0, -box.left * k, -box.top * k};
}

LandmarkSet derive_template_landmarks(const AlignmentPolicy& p, const BaseTemplate& base) {
  return policy_transform(p, base)(base.landmarks);
}

}  // namespace faps
