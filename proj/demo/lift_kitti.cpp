// Reads a KITTI label file and its calib, then lifts every 2D box to 3D from
// the labelled dims, rotation and depth and reports how far the fitted center
// lands from the labelled one.
//
//   lift_kitti label.txt calib.txt

#include <cmath>
#include <cstdio>

#include "det3d/det3d.hpp"

using namespace det3d;

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s label.txt calib.txt\n", argv[0]);
    return 2;
  }
  try {
    const auto records = kitti::parse_kitti_label_file(io::read_text(argv[1]));
    const CameraIntrinsics cam(kitti::parse_kitti_calib(io::read_text(argv[2])).p2);
    for (const auto& r : records) {
      const Box2D box(r.bbox[0], r.bbox[1], r.bbox[2], r.bbox[3]);
      const Dims3 dims{r.dimensions[1], r.dimensions[0], r.dimensions[2]};
      const Box3D fit = geometry::fit_center_from_2d(cam, box, dims, {rad_to_deg(r.rotation_y), 0, 0},
                                                     r.location[2]);
      // KITTI locations sit on the bottom face.
      const double dx = fit.center.x - r.location[0];
      const double dy = fit.center.y - (r.location[1] - 0.5 * dims.h);
      std::printf("%-10s z=%6.2f  fitted (%7.3f, %7.3f)  offset %.3f m\n", r.type.c_str(),
                  r.location[2], fit.center.x, fit.center.y, std::hypot(dx, dy));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 3;
  }
}
