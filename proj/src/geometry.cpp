#include "detcal/geometry.hpp"

#include <cmath>
#include <sstream>

#include "detcal/error.hpp"

namespace detcal {

void validate(const BBox& box) {
  if (!std::isfinite(box.x1) || !std::isfinite(box.y1) ||
      !std::isfinite(box.x2) || !std::isfinite(box.y2)) {
    throw InputError("box has non-finite coordinates");
  }
  if (box.x1 > box.x2 || box.y1 > box.y2) {
    std::ostringstream msg;
    msg << "box corners out of order: (" << box.x1 << ", " << box.y1 << ", "
        << box.x2 << ", " << box.y2 << ")";
    throw InputError(msg.str());
  }
}

BBox translated(const BBox& box, double dx, double dy) {
  return BBox{box.x1 + dx, box.y1 + dy, box.x2 + dx, box.y2 + dy};
}

double iou(const BBox& a, const BBox& b) {
  validate(a);
  validate(b);
  return detail::iou_unchecked(a, b);
}

std::array<double, 4> iou_grad(const BBox& a, const BBox& b) {
  validate(a);
  validate(b);
  if (!(a.area() > 0.0) || !(b.area() > 0.0)) {
    throw InputError("iou_grad needs boxes with positive area");
  }
  const double iw = std::fmin(a.x2, b.x2) - std::fmax(a.x1, b.x1);
  const double ih = std::fmin(a.y2, b.y2) - std::fmax(a.y1, b.y1);
  if (!(iw > 0.0) || !(ih > 0.0)) return {0.0, 0.0, 0.0, 0.0};

  const double inter = iw * ih;
  const double area_a = a.area();
  const double area_sum = area_a + b.area();
  const double uni = area_sum - inter;
  const double uni_sq = uni * uni;

  // d(intersection)/d(coordinate); NaN marks a kink.
  const double kink = std::nan("");
  const double d_inter[4] = {
      a.x1 > b.x1 ? -ih : (a.x1 < b.x1 ? 0.0 : kink),
      a.y1 > b.y1 ? -iw : (a.y1 < b.y1 ? 0.0 : kink),
      a.x2 < b.x2 ? ih : (a.x2 > b.x2 ? 0.0 : kink),
      a.y2 < b.y2 ? iw : (a.y2 > b.y2 ? 0.0 : kink),
  };
  const double d_area[4] = {-a.height(), -a.width(), a.height(), a.width()};

  std::array<double, 4> grad{};
  for (int i = 0; i < 4; ++i) {
    if (std::isnan(d_inter[i])) {
      grad[i] = 0.0;
      continue;
    }
    grad[i] = (d_inter[i] * area_sum - inter * d_area[i]) / uni_sq;
  }
  return grad;
}

}  // namespace detcal
