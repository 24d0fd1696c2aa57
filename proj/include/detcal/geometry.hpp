#pragma once

#include <array>

namespace detcal {

/// Axis-aligned box in absolute pixel coordinates, corner form.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }

  /// COCO `[x, y, w, h]` to corner form.
  static BBox from_xywh(double x, double y, double w, double h) {
    return BBox{x, y, x + w, y + h};
  }
  std::array<double, 4> to_xywh() const { return {x1, y1, width(), height()}; }

  bool operator==(const BBox&) const = default;
};

/// Throws InputError unless all coordinates are finite and x1 <= x2, y1 <= y2.
void validate(const BBox& box);

BBox translated(const BBox& box, double dx, double dy);

/// Intersection over union. Two boxes with zero union area have IoU 0.
double iou(const BBox& a, const BBox& b);

/// Gradient of iou(a, b) with respect to (a.x1, a.y1, a.x2, a.y2).
///
/// A coordinate sitting exactly on a kink (an edge of `a` coinciding with the
/// matching edge of `b`, or the boxes touching) gets the subgradient 0.
/// Boxes that do not overlap have a zero gradient. Throws InputError when
/// either box has zero area.
std::array<double, 4> iou_grad(const BBox& a, const BBox& b);

namespace detail {

// Shared by the scalar path and the vector kernels; the operation order here
// is what the kernel equivalence tests hold the SIMD variants to.
inline double iou_unchecked(const BBox& a, const BBox& b) {
  const double ix1 = a.x1 > b.x1 ? a.x1 : b.x1;
  const double iy1 = a.y1 > b.y1 ? a.y1 : b.y1;
  const double ix2 = a.x2 < b.x2 ? a.x2 : b.x2;
  const double iy2 = a.y2 < b.y2 ? a.y2 : b.y2;
  const double iw = ix2 - ix1;
  const double ih = iy2 - iy1;
  if (!(iw > 0.0) || !(ih > 0.0)) return 0.0;
  const double inter = iw * ih;
  const double area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
  const double area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace detail

}  // namespace detcal
