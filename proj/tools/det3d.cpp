// det3d: synthesize oracle datasets, decode tensor bundles, evaluate
// detections and move annotations in and out of KITTI format.
//
// Exit codes: 0 ok, 2 usage or I/O error, 3 bad input data, 4 internal error.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "det3d/det3d.hpp"

namespace fs = std::filesystem;
using namespace det3d;
using serialize::Json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be stored
// by index; the first failure (lowest index) is rethrown after all workers
// finish so errors are as deterministic as the output.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Json read_json(const fs::path& path) {
  const std::string text = io::read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), std::nullopt, e.byte);
  }
}

void write_json(const fs::path& path, const Json& j) { io::write_atomic(path, j.dump(2) + "\n"); }

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("DET3D_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*env == '\0' || *end != '\0') throw CLI::ValidationError("DET3D_SEED", "not an integer: " + std::string(env));
    return v;
  }
  return 0;
}

template <typename Enum, std::size_t N>
std::vector<Enum> parse_list(const std::string& text, const std::array<Enum, N>& all,
                             const char* flag) {
  if (synth::detail::iequals(text, "all")) return {all.begin(), all.end()};
  std::vector<Enum> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = synth::parse_enum(item, all);
    if (!v) throw CLI::ValidationError(flag, "unknown value '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset manifest
// ---------------------------------------------------------------------------

struct ManifestEntry {
  std::string id;
  fs::path scene;
  fs::path bundle;
  synth::SweepPoint sweep;
};

struct Manifest {
  fs::path root;
  ClassTaxonomy taxonomy;
  std::size_t stride = 1;
  std::vector<ManifestEntry> samples;
};

Manifest load_manifest(const fs::path& dir) {
  const fs::path path = fs::is_directory(dir) ? dir / "manifest.json" : dir;
  const Json j = read_json(path);
  const std::string ctx = path.string();
  Manifest m{path.parent_path(), serialize::taxonomy_from_json(serialize::detail::require(j, "taxonomy", ctx), ctx),
             serialize::detail::get<std::size_t>(j, "stride", ctx), {}};
  for (const auto& s : serialize::detail::require(j, "samples", ctx)) {
    m.samples.push_back({serialize::detail::get<std::string>(s, "id", ctx),
                         m.root / serialize::detail::get<std::string>(s, "scene", ctx),
                         m.root / serialize::detail::get<std::string>(s, "bundle", ctx),
                         serialize::sweep_point_from_json(serialize::detail::require(s, "sweep", ctx), ctx)});
  }
  return m;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string category = "camera";
  std::string super = "ground";
  std::string scene = "city";
  std::optional<std::uint64_t> seed;
  std::size_t repeats = 1;
  std::size_t objects = 1;
  std::size_t stride = 4;
  std::size_t jobs = 1;
  double noise = 0.0;
  bool noise_preset = false;
  bool no_3d = false;
  std::size_t bins = 4;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed);
  const auto supers = [&] {
    if (synth::detail::iequals(a.super, "all")) return std::vector{SuperCategory::Air, SuperCategory::Ground};
    const auto s = synth::parse_super(a.super);
    if (!s) throw CLI::ValidationError("--super", "unknown value '" + a.super + "'");
    return std::vector{*s};
  }();
  const auto categories = parse_list(a.category, synth::kAllCategories, "--category");
  const auto scene = synth::parse_enum(a.scene, synth::kAllScenes);
  if (!scene) throw CLI::ValidationError("--scene", "unknown value '" + a.scene + "'");

  synth::SynthConfig cfg;
  cfg.stride = a.stride;
  const ClassTaxonomy taxonomy = cfg.taxonomy();
  synth::RenderConfig rc;
  rc.orientation_bins = a.bins;

  std::vector<synth::SweepPoint> points;
  for (auto s : supers)
    for (auto c : categories)
      for (const auto& p : synth::enumerate_sweep({c, s, *scene}, seed))
        for (std::size_t r = 0; r < a.repeats; ++r) points.push_back(p);

  const fs::path out(a.out);
  std::vector<double> noise(points.size());
  parallel_for(points.size(), a.jobs, [&](std::size_t i) {
    const std::string id = synth::frame_id(i);
    const auto sample = synth::generate_scene(points[i], synth::mix_seed(seed, i), a.objects, cfg, id);
    noise[i] = a.noise + (a.noise_preset ? synth::preset_noise_level(points[i]) : 0.0);
    MapBundle b = synth::render_ideal_maps(sample, cfg.feature_height(), cfg.feature_width(),
                                           cfg.stride, taxonomy, rc);
    b = synth::corrupt_maps(b, noise[i], synth::mix_seed(seed ^ 0x4E4F495345ULL, i));
    if (a.no_3d) b.depth = b.dims = b.orientation = std::nullopt;
    write_json(out / "scenes" / (id + ".json"), serialize::to_json(sample, taxonomy));
    write_bundle(out / "bundles" / id, b);
  });

  Json manifest;
  manifest["seed"] = seed;
  manifest["stride"] = cfg.stride;
  manifest["objects"] = a.objects;
  manifest["repeats"] = a.repeats;
  manifest["image"] = {{"width", cfg.image_width}, {"height", cfg.image_height}};
  manifest["feature"] = {{"width", cfg.feature_width()}, {"height", cfg.feature_height()}};
  manifest["taxonomy"] = serialize::to_json(taxonomy);
  Json samples = Json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::string id = synth::frame_id(i);
    samples.push_back({{"id", id},
                       {"scene", "scenes/" + id + ".json"},
                       {"bundle", "bundles/" + id},
                       {"noise", noise[i]},
                       {"sweep", serialize::to_json(points[i])}});
  }
  manifest["samples"] = samples;
  write_json(out / "manifest.json", manifest);
  std::printf("wrote %zu samples to %s\n", points.size(), out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

struct DecodeArgs {
  std::string dataset;
  std::string bundle;
  std::string scene;
  std::string calib;
  std::string frame;
  std::optional<std::size_t> stride;
  double score_threshold = 0.3;
  std::size_t nms_window = 3;
  std::size_t top_k = 100;
  double theta = 0.5;
  std::size_t jobs = 1;
  std::string out;
};

serialize::FrameDetectionsRecord to_record(std::string frame, const std::vector<Detection>& dets) {
  serialize::FrameDetectionsRecord r{std::move(frame), {}, {}};
  for (const auto& d : dets) {
    r.boxes.push_back(d.box2d());
    r.boxes3d.push_back(d.box3d);
  }
  return r;
}

int cmd_decode(const DecodeArgs& a) {
  DecodeConfig cfg;
  cfg.peaks = {a.score_threshold, a.nms_window, a.top_k};
  cfg.grouping.theta = a.theta;

  std::vector<serialize::FrameDetectionsRecord> frames;
  ClassTaxonomy taxonomy = synth::default_taxonomy();
  if (!a.dataset.empty()) {
    const Manifest m = load_manifest(a.dataset);
    taxonomy = m.taxonomy;
    cfg.stride = a.stride.value_or(m.stride);
    frames.resize(m.samples.size());
    parallel_for(m.samples.size(), a.jobs, [&](std::size_t i) {
      const auto& s = m.samples[i];
      const auto scene = serialize::scene_from_json(read_json(s.scene), taxonomy);
      frames[i] = to_record(s.id, decode_frame(read_bundle(s.bundle), cfg, taxonomy, scene.camera));
    });
  } else {
    cfg.stride = a.stride.value_or(1);
    std::optional<CameraIntrinsics> camera;
    if (!a.calib.empty()) camera = CameraIntrinsics(kitti::parse_kitti_calib(io::read_text(a.calib)).p2);
    if (!a.scene.empty()) camera = serialize::scene_from_json(read_json(a.scene), taxonomy).camera;
    const std::string frame = a.frame.empty() ? fs::path(a.bundle).filename().string() : a.frame;
    frames.push_back(to_record(frame, decode_frame(read_bundle(a.bundle), cfg, taxonomy, camera)));
  }
  const Json j = serialize::detections_to_json(frames, taxonomy);
  if (a.out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json(a.out, j);
    std::size_t n = 0;
    for (const auto& f : frames) n += f.boxes.size();
    std::printf("%zu detections in %zu frames -> %s\n", n, frames.size(), a.out.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string truth;
  std::string per_class_ap;
  double iou = 0.5;
  std::string interpolation = "all";
  bool json = false;
  std::string out;
};

std::string pct(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
  return buf;
}

void print_table(const metrics::EvalReport& r, const ClassTaxonomy& tax,
                 const std::vector<serialize::BreakdownRow>& rows) {
  std::printf("%-12s %8s\n", "class", "AP(%)");
  for (const auto& [name, ap] : r.per_class_ap) std::printf("%-12s %8s\n", name.c_str(), pct(ap).c_str());
  std::printf("%-12s %8s\n\n", "mAP", pct(r.map).c_str());

  if (!rows.empty()) {
    std::printf("%-8s %-9s %7s %8s\n", "super", "category", "frames", "mAP(%)");
    for (const auto& b : rows) {
      std::printf("%-8s %-9s %7zu %8s\n", std::string(to_string(b.super)).c_str(),
                  std::string(synth::to_string(b.category)).c_str(), b.frames, pct(b.map).c_str());
    }
    std::printf("\n");
  }

  std::printf("confusion (rows truth, cols detection)\n%-12s", "");
  for (const auto& c : tax.classes()) std::printf(" %10s", c.name.c_str());
  std::printf(" %10s\n", "background");
  for (std::size_t t = 0; t <= tax.size(); ++t) {
    std::printf("%-12s", t < tax.size() ? tax.name(t).c_str() : "background");
    for (std::size_t d = 0; d <= tax.size(); ++d) std::printf(" %10zu", r.confusion.at(t, d));
    std::printf("\n");
  }
  std::printf("\nmatched pairs %zu", r.matched_pairs);
  if (r.mean_diou_loss) std::printf(", mean DIoU loss %.6f", *r.mean_diou_loss);
  if (r.sie) std::printf(", SIE %.6g", *r.sie);
  std::printf("\n");
}

int eval_precomputed(const EvalArgs& a) {
  const Json j = read_json(a.per_class_ap);
  if (!j.is_object()) throw ParseError(a.per_class_ap + ": expected an object of class -> AP");
  std::vector<double> values;
  for (const auto& [name, v] : j.items()) {
    if (!v.is_number()) throw ParseError(a.per_class_ap + ": AP for '" + name + "' is not a number");
    values.push_back(v.get<double>());
  }
  const double map = metrics::mean_average_precision(values);
  if (a.json) {
    Json out;
    out["per_class_ap"] = j;
    out["map"] = map;
    std::cout << out.dump(2) << "\n";
  } else {
    for (const auto& [name, v] : j.items()) std::printf("%-12s %.6f\n", name.c_str(), v.get<double>());
    std::printf("%-12s %.6f\n", "mAP", map);
  }
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  if (!a.per_class_ap.empty()) return eval_precomputed(a);
  if (a.pred.empty() || a.truth.empty()) {
    throw CLI::ValidationError("eval", "needs --pred and --truth, or --per-class-ap");
  }
  const metrics::MatchPolicy policy{
      a.iou, a.interpolation == "11" ? metrics::Interpolation::ElevenPoint : metrics::Interpolation::AllPoint};
  const Manifest m = load_manifest(a.truth);
  const auto preds = serialize::detections_from_json(read_json(a.pred), m.taxonomy);

  std::map<std::string, std::size_t> pred_index;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!pred_index.emplace(preds[i].frame, i).second) {
      throw ValidationError("duplicate prediction frame '" + preds[i].frame + "'");
    }
  }
  std::set<std::string> truth_ids;
  std::vector<std::string> missing, unexpected;
  for (const auto& s : m.samples) {
    truth_ids.insert(s.id);
    if (!pred_index.count(s.id)) missing.push_back(s.id);
  }
  for (const auto& p : preds)
    if (!truth_ids.count(p.frame)) unexpected.push_back(p.frame);
  if (!missing.empty() || !unexpected.empty()) {
    std::string msg = "frame ids differ between predictions and truth";
    auto list = [&](const char* label, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string("; ") + label + ":";
      for (const auto& id : ids) msg += " " + id;
    };
    list("missing predictions", missing);
    list("unknown frames", unexpected);
    throw ValidationError(msg);
  }

  std::vector<metrics::FrameDetections> det_frames(m.samples.size());
  std::vector<metrics::FrameTruth> truth_frames(m.samples.size());
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    const auto scene = serialize::scene_from_json(read_json(m.samples[i].scene), m.taxonomy);
    for (const auto& o : scene.objects) {
      truth_frames[i].boxes.push_back(o.box2d);
      truth_frames[i].boxes3d.push_back(o.box3d);
    }
    const auto& p = preds[pred_index.at(m.samples[i].id)];
    det_frames[i] = {p.boxes, p.boxes3d};
  }
  const auto report = metrics::evaluate(det_frames, truth_frames, m.taxonomy, policy);

  std::vector<serialize::BreakdownRow> rows;
  for (auto sup : {SuperCategory::Air, SuperCategory::Ground}) {
    for (auto cat : synth::kAllCategories) {
      std::vector<metrics::FrameDetections> d;
      std::vector<metrics::FrameTruth> t;
      for (std::size_t i = 0; i < m.samples.size(); ++i) {
        if (m.samples[i].sweep.super != sup || m.samples[i].sweep.category != cat) continue;
        d.push_back(det_frames[i]);
        t.push_back(truth_frames[i]);
      }
      if (d.empty()) continue;
      rows.push_back({sup, cat, metrics::evaluate(d, t, m.taxonomy, policy).map, d.size()});
    }
  }

  const Json j = serialize::to_json(report, m.taxonomy, rows);
  if (!a.out.empty()) write_json(a.out, j);
  if (a.json) {
    std::cout << j.dump(2) << "\n";
  } else {
    print_table(report, m.taxonomy, rows);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// convert
// ---------------------------------------------------------------------------

struct ConvertArgs {
  std::string scene;
  std::string dataset;
  std::string kitti_label;
  std::string kitti_calib;
  std::string id = "000000";
  std::string out;
};

void export_scene(const synth::SceneSample& s, const ClassTaxonomy& tax, const fs::path& out) {
  const auto k = kitti::convert_scene_to_kitti(s, tax);
  io::write_atomic(out / "label_2" / (s.id + ".txt"), k.label);
  io::write_atomic(out / "calib" / (s.id + ".txt"), k.calib);
}

int cmd_convert(const ConvertArgs& a) {
  const fs::path out(a.out);
  if (!a.kitti_label.empty()) {
    if (a.kitti_calib.empty()) throw CLI::ValidationError("--calib", "required with --kitti-label");
    const ClassTaxonomy tax = synth::default_taxonomy();
    const auto calib = kitti::parse_kitti_calib(io::read_text(a.kitti_calib));
    synth::SceneSample s;
    s.id = a.id;
    s.camera = CameraIntrinsics(calib.p2);
    s.image_width = synth::SynthConfig{}.image_width;
    s.image_height = synth::SynthConfig{}.image_height;
    for (const auto& r : kitti::parse_kitti_label_file(io::read_text(a.kitti_label)))
      s.objects.push_back(kitti::from_kitti_record(r, tax));
    write_json(out, serialize::to_json(s, tax));
    std::printf("%zu objects -> %s\n", s.objects.size(), out.string().c_str());
    return 0;
  }
  if (!a.dataset.empty()) {
    const Manifest m = load_manifest(a.dataset);
    for (const auto& e : m.samples) export_scene(serialize::scene_from_json(read_json(e.scene), m.taxonomy), m.taxonomy, out);
    std::printf("%zu frames -> %s\n", m.samples.size(), out.string().c_str());
    return 0;
  }
  if (!a.scene.empty()) {
    const ClassTaxonomy tax = synth::default_taxonomy();
    export_scene(serialize::scene_from_json(read_json(a.scene), tax), tax, out);
    return 0;
  }
  throw CLI::ValidationError("convert", "needs --scene, --dataset or --kitti-label");
}

// ---------------------------------------------------------------------------
// pool
// ---------------------------------------------------------------------------

int cmd_pool(const std::string& in, const std::string& op, const std::string& out) {
  const FeatureMap m = fmap::read_file(in);
  FeatureMap result(m.height(), m.width(), m.channels(), MapRole::Generic);
  for (std::size_t ch = 0; ch < m.channels(); ++ch) {
    const FeatureMap one = op == "center" ? pooling::center_pool(m, ch)
                          : op == "tl"    ? pooling::cascade_corner_pool(m, ch, pooling::Corner::TopLeft)
                                          : pooling::cascade_corner_pool(m, ch, pooling::Corner::BottomRight);
    for (std::size_t r = 0; r < m.height(); ++r)
      for (std::size_t c = 0; c < m.width(); ++c) result(r, c, ch) = one(r, c, 0);
  }
  fmap::write_file(out, result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"det3d: keypoint-based 2D/3D detection decoding, evaluation and synthetic data"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate an oracle dataset (scenes + ideal tensor bundles)");
  synth->add_option("--category", sa.category, "camera|light|weather|sensor, a comma list, or all")->capture_default_str();
  synth->add_option("--super", sa.super, "air|ground|all")->capture_default_str();
  synth->add_option("--scene", sa.scene, "city|desert|forest|grass")->capture_default_str();
  synth->add_option("--seed", sa.seed, "base seed (falls back to $DET3D_SEED, then 0)");
  synth->add_option("--repeats", sa.repeats, "object layouts per sweep point")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--objects", sa.objects, "objects per scene")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--stride", sa.stride, "feature-map stride")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--bins", sa.bins, "MultiBin orientation bins")->check(CLI::Range(1, 64))->capture_default_str();
  synth->add_option("--noise", sa.noise, "Gaussian map corruption level")->check(CLI::NonNegativeNumber)->capture_default_str();
  synth->add_flag("--noise-preset", sa.noise_preset, "add the sweep point's weather/light/sensor noise");
  synth->add_flag("--no-3d", sa.no_3d, "omit depth, dims and orientation heads");
  synth->add_option("--jobs,-j", sa.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--out,-o", sa.out, "output directory")->required();

  DecodeArgs da;
  auto* decode = app.add_subcommand("decode", "decode tensor bundles into detections JSON");
  auto* d_dataset = decode->add_option("--dataset", da.dataset, "dataset directory (manifest.json)");
  auto* d_bundle = decode->add_option("--bundle", da.bundle, "single bundle directory");
  d_dataset->excludes(d_bundle);
  decode->add_option("--scene", da.scene, "scene JSON supplying the camera (with --bundle)")->needs(d_bundle);
  decode->add_option("--calib", da.calib, "KITTI calib file supplying P2 (with --bundle)")->needs(d_bundle);
  decode->add_option("--frame", da.frame, "frame id for --bundle (default: directory name)");
  decode->add_option("--stride", da.stride, "feature-map stride (default: manifest, else 1)")->check(CLI::PositiveNumber);
  decode->add_option("--score-threshold", da.score_threshold, "minimum peak score")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  decode->add_option("--nms-window", da.nms_window, "odd local-max window")->check(CLI::PositiveNumber)->capture_default_str();
  decode->add_option("--top-k", da.top_k, "peaks per channel")->check(CLI::PositiveNumber)->capture_default_str();
  decode->add_option("--theta", da.theta, "tag distance threshold")->check(CLI::PositiveNumber)->capture_default_str();
  decode->add_option("--jobs,-j", da.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  decode->add_option("--out,-o", da.out, "detections JSON (default: stdout)");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "score detections against a dataset");
  eval->add_option("--pred", ea.pred, "detections JSON");
  eval->add_option("--truth", ea.truth, "dataset directory or manifest.json");
  eval->add_option("--per-class-ap", ea.per_class_ap, "JSON object of precomputed per-class APs; prints their mean");
  eval->add_option("--iou", ea.iou, "IoU match threshold")->check(CLI::Range(0.0, 1.0).description("(0, 1]"))->capture_default_str();
  eval->add_option("--interpolation", ea.interpolation, "all|11")->check(CLI::IsMember({"all", "11"}))->capture_default_str();
  eval->add_flag("--json", ea.json, "print the JSON report instead of the table");
  eval->add_option("--out,-o", ea.out, "also write the JSON report here");

  ConvertArgs ca;
  auto* convert = app.add_subcommand("convert", "scene JSON <-> KITTI label/calib");
  convert->add_option("--scene", ca.scene, "scene JSON to export");
  convert->add_option("--dataset", ca.dataset, "export every scene of a dataset");
  convert->add_option("--kitti-label", ca.kitti_label, "KITTI label file to import");
  convert->add_option("--calib", ca.kitti_calib, "KITTI calib file (with --kitti-label)");
  convert->add_option("--id", ca.id, "frame id for an imported scene")->capture_default_str();
  convert->add_option("--out,-o", ca.out, "output directory (export) or scene JSON (import)")->required();

  std::string pool_in, pool_op = "center", pool_out;
  auto* pool = app.add_subcommand("pool", "apply center or cascade corner pooling to every channel of an FMAP");
  pool->add_option("--in", pool_in, "input FMAP")->required();
  pool->add_option("--op", pool_op, "center|tl|br")->check(CLI::IsMember({"center", "tl", "br"}))->capture_default_str();
  pool->add_option("--out,-o", pool_out, "output FMAP")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(sa);
    if (*decode) {
      if (da.dataset.empty() && da.bundle.empty()) throw CLI::ValidationError("decode", "needs --dataset or --bundle");
      return cmd_decode(da);
    }
    if (*eval) return cmd_eval(ea);
    if (*convert) return cmd_convert(ca);
    if (*pool) return cmd_pool(pool_in, pool_op, pool_out);
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitUsage;
  } catch (const BoundsError& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}
