// Synthesize one scene, render the maps a perfect network would emit, add a
// little noise, decode them back and score the result.
//
//   closed_loop [noise] [seed]

#include <cstdio>
#include <cstdlib>

#include "det3d/det3d.hpp"

using namespace det3d;

int main(int argc, char** argv) {
  const double noise = argc > 1 ? std::atof(argv[1]) : 0.0;
  const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1;

  synth::SynthConfig cfg;
  cfg.stride = 4;
  const auto taxonomy = cfg.taxonomy();
  const auto points = synth::enumerate_sweep({synth::SweepCategory::Camera, SuperCategory::Ground}, seed);
  const auto scene = synth::generate_scene(points[5], seed, 3, cfg);

  auto maps = synth::render_ideal_maps(scene, cfg.feature_height(), cfg.feature_width(), cfg.stride, taxonomy);
  maps = synth::corrupt_maps(maps, noise, seed);

  DecodeConfig dc;
  dc.stride = cfg.stride;
  const auto dets = decode_frame(maps, dc, taxonomy, scene.camera);

  std::printf("camera distance %.1f m, elevation %.1f deg, noise %.3f\n",
              scene.point.camera_distance, scene.point.camera_elevation, noise);
  for (const auto& o : scene.objects) {
    std::printf("truth %-10s [%7.1f %6.1f %7.1f %6.1f] z=%.2f\n", taxonomy.name(o.box2d.class_id).c_str(),
                o.box2d.x_min, o.box2d.y_min, o.box2d.x_max, o.box2d.y_max, o.box3d.center.z);
  }
  metrics::FrameDetections pred;
  metrics::FrameTruth truth;
  for (const auto& d : dets) {
    const Box2D& b = d.box2d();
    std::printf("det   %-10s [%7.1f %6.1f %7.1f %6.1f] score %.3f", taxonomy.name(b.class_id).c_str(),
                b.x_min, b.y_min, b.x_max, b.y_max, b.score);
    if (d.box3d) std::printf(" z=%.2f az=%.1f", d.box3d->center.z, d.box3d->orientation.azimuth);
    std::printf("\n");
    pred.boxes.push_back(b);
    pred.boxes3d.push_back(d.box3d);
  }
  for (const auto& o : scene.objects) {
    truth.boxes.push_back(o.box2d);
    truth.boxes3d.push_back(o.box3d);
  }
  const auto report = metrics::evaluate(std::span(&pred, 1), std::span(&truth, 1), taxonomy, {});
  std::printf("mAP %.4f\n", report.map.value_or(0.0));
}
