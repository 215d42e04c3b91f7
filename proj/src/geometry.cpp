#include "faps/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>

namespace faps {

namespace {

constexpr int floor_div(int a, int b) {
  const int q = a / b;
  const int r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

constexpr int ceil_div(int a, int b) { return -floor_div(-a, b); }

// Nearest lattice index for value v on {origin + j*step}; exact half-step
// ties go to the lattice value with the smaller magnitude.
int snap_index(int v, int origin, int step) {
  const int rel = v - origin;
  const int j0 = floor_div(rel, step);
  const int rem = rel - j0 * step;  // in [0, step)
  if (2 * rem < step) return j0;
  if (2 * rem > step) return j0 + 1;
  const int lo = origin + j0 * step;
  const int hi = lo + step;
  return std::abs(lo) <= std::abs(hi) ? j0 : j0 + 1;
}

int snap_clamp(int v, int lo, int hi, int step) {
  const int j = std::clamp(snap_index(v, lo, step), 0, (hi - lo) / step);
  return lo + j * step;
}

std::string policy_str(const AlignmentPolicy& p) {
  return "{" + std::to_string(p.m) + ", " + std::to_string(p.delta) + "}";
}

}  // namespace

Rect to_rect(const CropBox& box) { return {box.left, box.top, box.side, box.side}; }

Rect intersect(const Rect& a, const Rect& b) {
  const double left = std::max(a.left, b.left);
  const double top = std::max(a.top, b.top);
  const double right = std::min(a.left + a.width, b.left + b.width);
  const double bottom = std::min(a.top + a.height, b.top + b.height);
  if (right <= left || bottom <= top) return {left, top, 0.0, 0.0};
  return {left, top, right - left, bottom - top};
}

void SearchSpace::validate() const {
  if (s_m <= 0 || s_delta <= 0) throw std::invalid_argument("search space: steps must be positive");
  if (m_min <= 0) throw std::invalid_argument("search space: m_min must be positive");
  if (m_min > m_max) throw std::invalid_argument("search space: m_min > m_max");
  if (delta_min > delta_max) throw std::invalid_argument("search space: delta_min > delta_max");
  if ((m_max - m_min) % s_m != 0)
    throw std::invalid_argument("search space: (m_max - m_min) not divisible by s_m");
  if ((delta_max - delta_min) % s_delta != 0)
    throw std::invalid_argument("search space: (delta_max - delta_min) not divisible by s_delta");
  if (canvas <= 0) throw std::invalid_argument("search space: canvas must be positive");
  if (m_max > canvas) throw std::invalid_argument("search space: m_max exceeds canvas");
  // {m_max, 0} must be a candidate: delta lattice has to bracket and hit 0.
  if (delta_min > 0 || delta_max < 0 || delta_min % s_delta != 0)
    throw std::invalid_argument("search space: delta grid must contain 0");
}

bool SearchSpace::contains(const AlignmentPolicy& p) const {
  if (p.m < m_min || p.m > m_max || (p.m - m_min) % s_m != 0) return false;
  if (p.delta < delta_min || p.delta > delta_max || (p.delta - delta_min) % s_delta != 0) return false;
  return 2 * std::abs(p.delta) <= m_max - p.m;
}

CropBox policy_to_box(const AlignmentPolicy& p, int canvas) {
  if (canvas <= 0) throw std::invalid_argument("policy_to_box: canvas must be positive");
  if (p.m <= 0) throw std::invalid_argument("policy_to_box: crop size must be positive");
  if (p.m > canvas)
    throw std::invalid_argument("policy_to_box: crop size " + std::to_string(p.m) +
                                " exceeds canvas " + std::to_string(canvas));
  const double left = (canvas - p.m) / 2.0;
  const double top = left + p.delta;
  if (top < 0.0 || top + p.m > canvas)
    throw std::invalid_argument("policy_to_box: policy " + policy_str(p) +
                                " extends outside the canvas");
  return {left, top, static_cast<double>(p.m)};
}

double rect_iou(const Rect& a, const Rect& b) {
  const double area_a = a.area();
  const double area_b = b.area();
  if (area_a <= 0.0 || area_b <= 0.0) return a == b ? 1.0 : 0.0;
  const double inter = intersect(a, b).area();
  if (inter <= 0.0) return 0.0;
  return inter / (area_a + area_b - inter);
}

double box_iou(const CropBox& a, const CropBox& b) { return rect_iou(to_rect(a), to_rect(b)); }

std::vector<AlignmentPolicy> enumerate_space(const SearchSpace& space) {
  space.validate();
  std::vector<AlignmentPolicy> out;
  for (int m = space.m_min; m <= space.m_max; m += space.s_m) {
    for (int d = space.delta_min; d <= space.delta_max; d += space.s_delta) {
      // Containment in the super-ROI box reduces to 2|delta| <= m_max - m.
      if (2 * std::abs(d) <= space.m_max - m) out.push_back({m, d});
    }
  }
  return out;
}

AlignmentPolicy clip_policy(const AlignmentPolicy& p, const SearchSpace& space) {
  space.validate();
  const int m = snap_clamp(p.m, space.m_min, space.m_max, space.s_m);

  // Containment interval for delta at this m, doubled to stay integral:
  // 2*delta in [-(m_max - m), m_max - m], intersected with the configured
  // bounds, then reduced to lattice indices.
  const int half2 = space.m_max - m;
  const int lo2 = std::max(2 * space.delta_min, -half2);
  const int hi2 = std::min(2 * space.delta_max, half2);
  const int j_lo = ceil_div(lo2 - 2 * space.delta_min, 2 * space.s_delta);
  const int j_hi = floor_div(hi2 - 2 * space.delta_min, 2 * space.s_delta);

  const int j = std::clamp(snap_index(p.delta, space.delta_min, space.s_delta), j_lo, j_hi);
  return {m, space.delta_min + j * space.s_delta};
}

CrossoverResult intersection_crossover(const AlignmentPolicy& p1, const AlignmentPolicy& p2,
                                       const SearchSpace& space, std::optional<double> acc1,
                                       std::optional<double> acc2) {
  if (!space.contains(p1))
    throw std::invalid_argument("intersection_crossover: parent 1 " + policy_str(p1) +
                                " is not a candidate of the space");
  if (!space.contains(p2))
    throw std::invalid_argument("intersection_crossover: parent 2 " + policy_str(p2) +
                                " is not a candidate of the space");

  const Rect b1 = to_rect(policy_to_box(p1, space.canvas));
  const Rect b2 = to_rect(policy_to_box(p2, space.canvas));
  const Rect shared = intersect(b1, b2);
  if (shared.area() <= 0.0)
    throw std::invalid_argument("intersection_crossover: parent boxes " + policy_str(p1) +
                                " and " + policy_str(p2) + " are disjoint");

  const double shared_cx = shared.left + shared.width / 2.0;
  const double shared_cy = shared.top + shared.height / 2.0;

  const std::vector<AlignmentPolicy> candidates = enumerate_space(space);
  std::size_t best = 0;
  double best_iou = -1.0;
  double best_center_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Rect r = to_rect(policy_to_box(candidates[i], space.canvas));
    const double iou = rect_iou(r, shared);
    if (iou < best_iou) continue;
    const double dx = r.left + r.width / 2.0 - shared_cx;
    const double dy = r.top + r.height / 2.0 - shared_cy;
    const double d2 = dx * dx + dy * dy;
    // Strictly better IOU wins; exact ties fall to the nearer box center,
    // and equal centers keep the earlier enumeration index.
    if (iou > best_iou || d2 < best_center_d2) {
      best = i;
      best_iou = iou;
      best_center_d2 = d2;
    }
  }

  const AlignmentPolicy child = candidates[best];
  const Rect rc = to_rect(policy_to_box(child, space.canvas));
  const double iou1 = rect_iou(rc, b1);
  const double iou2 = rect_iou(rc, b2);
  int parent = 1;
  if (iou2 > iou1) {
    parent = 2;
  } else if (iou2 == iou1 && acc2.has_value() && (!acc1.has_value() || *acc2 > *acc1)) {
    parent = 2;
  }
  return {child, parent};
}

}  // namespace faps
