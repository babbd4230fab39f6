#include "pressmap/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "json_util.hpp"
#include "pressmap/error.hpp"
#include "pressmap/model_io.hpp"
#include "pressmap/pmt1.hpp"
#include "pressmap/convert.hpp"
#include "pressmap/toy_model.hpp"

namespace pressmap {

using detail::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Highest surface point under each pixel center; -inf where nothing is hit.
ImageArray height_map(const PosedMesh& mesh, const ImageGeometry& geom) {
  ImageArray h = ImageArray::Constant(geom.rows, geom.cols, -std::numeric_limits<double>::infinity());
  if (!mesh.faces) return h;
  const FaceArray& f = *mesh.faces;
  const MatX3& v = mesh.vertices;
  for (Eigen::Index t = 0; t < f.rows(); ++t) {
    const Eigen::Vector3d a = v.row(f(t, 0)), b = v.row(f(t, 1)), c = v.row(f(t, 2));
    const double area2 = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    if (std::abs(area2) < 1e-18) continue;
    const double minx = std::min({a.x(), b.x(), c.x()}), maxx = std::max({a.x(), b.x(), c.x()});
    const double miny = std::min({a.y(), b.y(), c.y()}), maxy = std::max({a.y(), b.y(), c.y()});
    const int c0 = std::max(0, static_cast<int>(std::ceil((minx - geom.origin.x()) / geom.pitch - 0.5)));
    const int c1 = std::min(geom.cols - 1, static_cast<int>(std::floor((maxx - geom.origin.x()) / geom.pitch - 0.5)));
    const int r0 = std::max(0, static_cast<int>(std::ceil((miny - geom.origin.y()) / geom.pitch - 0.5)));
    const int r1 = std::min(geom.rows - 1, static_cast<int>(std::floor((maxy - geom.origin.y()) / geom.pitch - 0.5)));
    for (int r = r0; r <= r1; ++r) {
      const double py = geom.origin.y() + (r + 0.5) * geom.pitch;
      for (int col = c0; col <= c1; ++col) {
        const double px = geom.origin.x() + (col + 0.5) * geom.pitch;
        const double w0 = ((b.x() - px) * (c.y() - py) - (c.x() - px) * (b.y() - py)) / area2;
        const double w1 = ((c.x() - px) * (a.y() - py) - (a.x() - px) * (c.y() - py)) / area2;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        h(r, col) = std::max(h(r, col), w0 * a.z() + w1 * b.z() + w2 * c.z());
      }
    }
  }
  return h;
}

// Sheet resting on the body: height max_q(body(q) + thickness - slope * |p - q|), floored at 0.
// Cone envelope via two-pass 5x5 chamfer propagation (steps 1, sqrt 2, sqrt 5).
ImageArray drape(const ImageArray& body, const ImageGeometry& geom, const CoverSpec& spec) {
  const int rows = static_cast<int>(body.rows());
  const int cols = static_cast<int>(body.cols());
  const double inf = std::numeric_limits<double>::infinity();
  ImageArray h = ImageArray::Constant(rows, cols, -inf);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (body(r, c) > 0.0) h(r, c) = body(r, c) + spec.thickness_m;

  struct Step {
    int dr, dc;
    double cost;
  };
  const double unit = spec.slope * geom.pitch;
  const double s2 = unit * std::sqrt(2.0);
  const double s5 = unit * std::sqrt(5.0);
  const Step forward[] = {{0, -1, unit}, {-1, -1, s2}, {-1, 0, unit}, {-1, 1, s2},
                          {-1, -2, s5},  {-1, 2, s5},  {-2, -1, s5},  {-2, 1, s5}};
  auto relax = [&](int r, int c, int sign) {
    double best = h(r, c);
    for (const Step& s : forward) {
      const int rr = r + sign * s.dr;
      const int cc = c + sign * s.dc;
      if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
      best = std::max(best, h(rr, cc) - s.cost);
    }
    h(r, c) = best;
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) relax(r, c, 1);
  for (int r = rows - 1; r >= 0; --r)
    for (int c = cols - 1; c >= 0; --c) relax(r, c, -1);
  return h.cwiseMax(0.0);
}

std::string sample_id(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

json scene_to_json(const SceneConfig& s) {
  return {{"pressure_geom", detail::geometry_to_json(s.pressure_geom)},
          {"depth_geom", detail::geometry_to_json(s.depth_geom)},
          {"camera_height_m", s.camera_height_m},
          {"sink_depth_m", s.sink_depth_m},
          {"contact_eps_m", s.contact_eps_m},
          {"shape_range", s.shape_range},
          {"pose_spread", s.pose_spread},
          {"roll_jitter_deg", s.roll_jitter_deg},
          {"yaw_jitter_deg", s.yaw_jitter_deg},
          {"shift_jitter_m", s.shift_jitter_m},
          {"mass_range_kg", {s.mass_min_kg, s.mass_max_kg}},
          {"cover1", {{"thickness_m", s.cover1.thickness_m}, {"slope", s.cover1.slope}}},
          {"cover2", {{"thickness_m", s.cover2.thickness_m}, {"slope", s.cover2.slope}}}};
}

SceneConfig scene_from_json(const json& j) {
  detail::require_known_keys(j,
                             {"pressure_geom", "depth_geom", "camera_height_m", "sink_depth_m", "contact_eps_m",
                              "shape_range", "pose_spread", "roll_jitter_deg", "yaw_jitter_deg", "shift_jitter_m",
                              "mass_range_kg", "cover1", "cover2"},
                             "scene");
  SceneConfig s;
  if (j.contains("pressure_geom")) s.pressure_geom = detail::geometry_from_json(j["pressure_geom"]);
  if (j.contains("depth_geom")) s.depth_geom = detail::geometry_from_json(j["depth_geom"]);
  auto get = [&](const char* key, double& out) {
    if (j.contains(key)) out = j[key].get<double>();
  };
  get("camera_height_m", s.camera_height_m);
  get("sink_depth_m", s.sink_depth_m);
  get("contact_eps_m", s.contact_eps_m);
  get("shape_range", s.shape_range);
  get("pose_spread", s.pose_spread);
  get("roll_jitter_deg", s.roll_jitter_deg);
  get("yaw_jitter_deg", s.yaw_jitter_deg);
  get("shift_jitter_m", s.shift_jitter_m);
  if (j.contains("mass_range_kg")) {
    const auto m = j["mass_range_kg"].get<std::vector<double>>();
    if (m.size() != 2) throw Error(ErrorCode::ConfigInvalid, "mass_range_kg needs two values");
    s.mass_min_kg = m[0];
    s.mass_max_kg = m[1];
  }
  for (auto [key, spec] : {std::pair{"cover1", &s.cover1}, std::pair{"cover2", &s.cover2}}) {
    if (!j.contains(key)) continue;
    detail::require_known_keys(j[key], {"thickness_m", "slope"}, key);
    spec->thickness_m = j[key].value("thickness_m", spec->thickness_m);
    spec->slope = j[key].value("slope", spec->slope);
  }
  if (!(s.camera_height_m > 0) || s.sink_depth_m < 0 || s.contact_eps_m < 0 || s.shape_range < 0 ||
      s.pose_spread < 0 || s.pose_spread > 1 || !(s.mass_min_kg > 0) || s.mass_max_kg < s.mass_min_kg ||
      !(s.cover1.slope > 0) || !(s.cover2.slope > 0) || s.cover1.thickness_m < 0 || s.cover2.thickness_m < 0) {
    throw Error(ErrorCode::ConfigInvalid, "scene parameters out of range");
  }
  return s;
}

}  // namespace

ModelSet ModelSet::generate(int n_v, std::uint64_t seed) {
  return {generate_toy_model({n_v, seed, Gender::Female}), generate_toy_model({n_v, seed, Gender::Male})};
}

int DatasetConfig::total() const {
  int n = 0;
  for (const auto& [pose, covers] : counts)
    for (const auto& [cover, count] : covers) n += count;
  return n;
}

DatasetConfig DatasetConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, e.what());
  }
  detail::require_known_keys(j, {"seed", "model", "counts", "scene"}, "dataset config");
  DatasetConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("model")) {
      detail::require_known_keys(j["model"], {"n_v", "seed"}, "model");
      c.model_vertices = j["model"].value("n_v", c.model_vertices);
      c.model_seed = j["model"].value("seed", c.model_seed);
    }
    if (!j.contains("counts")) throw Error(ErrorCode::ConfigInvalid, "dataset config needs 'counts'");
    for (const auto& [pose, covers] : j["counts"].items()) {
      for (const auto& [cover, count] : covers.items()) {
        const int n = count.get<int>();
        if (n < 0) throw Error(ErrorCode::ConfigInvalid, "negative sample count");
        c.counts[pose_category_from_string(pose)][cover_from_string(cover)] = n;
      }
    }
    if (j.contains("scene")) c.scene = scene_from_json(j["scene"]);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, e.what());
  }
  if (c.total() <= 0) throw Error(ErrorCode::ConfigInvalid, "dataset config requests no samples");
  if (c.model_vertices < 200) throw Error(ErrorCode::ConfigInvalid, "model n_v must be at least 200");
  return c;
}

DatasetConfig DatasetConfig::from_json_file(const std::filesystem::path& path) {
  return from_json_text(detail::read_json(path).dump());
}

std::string DatasetConfig::to_json_text() const {
  json counts_json = json::object();
  for (const auto& [pose, covers] : counts)
    for (const auto& [cover, count] : covers) counts_json[std::string(to_string(pose))][std::string(to_string(cover))] = count;
  const json j = {{"seed", seed},
                  {"model", {{"n_v", model_vertices}, {"seed", model_seed}}},
                  {"counts", counts_json},
                  {"scene", scene_to_json(scene)}};
  return j.dump(2);
}

BodyParams sample_params(std::mt19937_64& rng, PoseCategory category, const BodyModel& model,
                         const SceneConfig& config) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  BodyParams p;
  p.gender = model.gender;
  p.beta = Eigen::VectorXd(model.num_betas());
  for (auto& b : p.beta) b = config.shape_range * unit(rng);
  p.theta = Eigen::VectorXd(model.num_pose_params());
  for (int i = 0; i < model.num_pose_params(); ++i) {
    std::uniform_real_distribution<double> u(config.pose_spread * model.pose_limits(i, 0),
                                             config.pose_spread * model.pose_limits(i, 1));
    p.theta[i] = u(rng);
  }
  const double base = category == PoseCategory::Supine ? 0.0 : (category == PoseCategory::LeftLateral ? 90.0 : -90.0);
  const double roll = (base + config.roll_jitter_deg * unit(rng)) * kDeg;
  const double yaw = config.yaw_jitter_deg * unit(rng) * kDeg;
  const Eigen::Matrix3d rot = (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                               Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitY())).toRotationMatrix();
  p.root_rot_x = rot.col(0);
  p.root_rot_y = rot.col(1);
  p.root_trans.setZero();

  const PosedMesh unplaced = pose_mesh(model, p);
  const Eigen::Vector3d lo = unplaced.vertices.colwise().minCoeff();
  const Eigen::Vector3d hi = unplaced.vertices.colwise().maxCoeff();
  const ImageGeometry& g = config.pressure_geom;
  const Eigen::Vector2d grid_center = g.origin + 0.5 * g.pitch * Eigen::Vector2d(g.cols, g.rows);
  const Eigen::Vector2d jitter(config.shift_jitter_m * unit(rng), config.shift_jitter_m * unit(rng));
  // Jitter never pushes a body that fits on the mat over its edge.
  const Eigen::Vector2d slack =
      (Eigen::Vector2d(g.cols, g.rows) * g.pitch - (hi - lo).head<2>()).cwiseMax(0.0) / 2.0;
  const Eigen::Vector2d shift =
      grid_center - 0.5 * (lo.head<2>() + hi.head<2>()) + jitter.cwiseMax(-slack).cwiseMin(slack);
  p.root_trans = Eigen::Vector3d(shift.x(), shift.y(), -lo.z());
  return p;
}

DepthImage render_depth(const PosedMesh& mesh, const ImageGeometry& geom, Cover cover, const SceneConfig& config) {
  validate(geom);
  const double h_cam = config.camera_height_m;
  // The mattress hides anything below its surface.
  ImageArray surface = height_map(mesh, geom).cwiseMax(0.0).cwiseMin(h_cam);
  if (cover != Cover::Uncovered) {
    const ImageArray sheet = drape(surface, geom, cover == Cover::Cover1 ? config.cover1 : config.cover2);
    surface = surface.cwiseMax(sheet).cwiseMin(h_cam);
  }
  return {geom, (h_cam - surface.array()).matrix()};
}

Eigen::VectorXd vertex_areas(const PosedMesh& mesh) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(mesh.num_vertices());
  if (!mesh.faces) return a;
  const FaceArray& f = *mesh.faces;
  for (Eigen::Index t = 0; t < f.rows(); ++t) {
    const Eigen::Vector3d p0 = mesh.vertices.row(f(t, 0)), p1 = mesh.vertices.row(f(t, 1)),
                          p2 = mesh.vertices.row(f(t, 2));
    const double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
    for (int k = 0; k < 3; ++k) a[f(t, k)] += area / 3.0;
  }
  return a;
}

PressureImage simulate_pressure(const PosedMesh& mesh, const ImageGeometry& geom, double body_mass_kg,
                                double contact_eps) {
  validate(geom);
  if (!(body_mass_kg > 0.0)) throw Error(ErrorCode::ConfigInvalid, "body mass must be positive");
  const Eigen::VectorXd area = vertex_areas(mesh);
  std::vector<int> contact;
  double total_area = 0.0;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.vertices(v, 2) <= contact_eps) {
      contact.push_back(v);
      total_area += area[v];
    }
  }
  if (contact.empty()) throw Error(ErrorCode::NoContact, "no vertex touches the mattress");
  const double weight = body_mass_kg * kGravity;
  PressureImage img{geom, ImageArray::Zero(geom.rows, geom.cols)};
  for (int v : contact) {
    const double share = total_area > 0.0 ? weight * area[v] / total_area : weight / contact.size();
    if (const auto t = taxel_of_point({mesh.vertices(v, 0), mesh.vertices(v, 1)}, geom)) {
      img.values(t->row, t->col) += share;
    }
  }
  img.values /= geom.cell_area() * 1000.0;  // N/m^2 -> kPa
  return img;
}

SceneSample make_sample(const ModelSet& models, const DatasetConfig& config, std::size_t index,
                        PoseCategory category, Cover cover) {
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  const SceneConfig& sc = config.scene;
  SceneSample s;
  s.pose_category = category;
  s.cover = cover;
  s.gender = std::bernoulli_distribution(0.5)(rng) ? Gender::Female : Gender::Male;
  const BodyModel& model = models.get(s.gender);
  s.gt_params = sample_params(rng, category, model, sc);
  s.gt_params.root_trans.z() -= sc.sink_depth_m;
  s.gt_mesh = pose_mesh(model, s.gt_params);
  s.body_mass_kg = std::uniform_real_distribution<double>(sc.mass_min_kg, sc.mass_max_kg)(rng);
  s.pressure = simulate_pressure(s.gt_mesh, sc.pressure_geom, s.body_mass_kg, sc.contact_eps_m);
  s.depth = render_depth(s.gt_mesh, sc.depth_geom, cover, sc);
  s.gt_vpm = project_gt(s.pressure, s.gt_mesh, sc.contact_eps_m);
  s.gt_contact = contact_from_pressure(s.gt_vpm);
  return s;
}

std::vector<SceneSample> generate_samples(const ModelSet& models, const DatasetConfig& config) {
  std::vector<SceneSample> out;
  out.reserve(static_cast<std::size_t>(config.total()));
  std::size_t index = 0;
  for (const auto& [pose, covers] : config.counts)
    for (const auto& [cover, count] : covers)
      for (int i = 0; i < count; ++i) out.push_back(make_sample(models, config, index++, pose, cover));
  return out;
}

void save_sample(const SceneSample& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  pmt1::save(dir / "depth.pmt", to_tensor(s.depth.values));
  pmt1::save(dir / "pressure.pmt", to_tensor(s.pressure.values));
  pmt1::save(dir / "params.pmt", to_tensor(s.gt_params.flatten()));
  pmt1::save(dir / "vertices.pmt", to_tensor(s.gt_mesh.vertices));
  pmt1::save(dir / "joints.pmt", to_tensor(s.gt_mesh.joints));
  pmt1::save(dir / "vertex_pressure.pmt", to_tensor(s.gt_vpm));
  pmt1::save(dir / "contact.pmt", to_tensor(s.gt_contact), pmt1::DType::U8);
  detail::write_json(dir / "meta.json", {{"gender", to_string(s.gender)},
                                         {"pose_category", to_string(s.pose_category)},
                                         {"cover", to_string(s.cover)},
                                         {"body_mass_kg", s.body_mass_kg},
                                         {"pressure_geom", detail::geometry_to_json(s.pressure.geom)},
                                         {"depth_geom", detail::geometry_to_json(s.depth.geom)}});
}

SceneSample load_sample(const std::filesystem::path& dir, const ModelSet& models) {
  const json meta = detail::read_json(dir / "meta.json");
  SceneSample s;
  s.gender = gender_from_string(meta.at("gender").get<std::string>());
  s.pose_category = pose_category_from_string(meta.at("pose_category").get<std::string>());
  s.cover = cover_from_string(meta.at("cover").get<std::string>());
  s.body_mass_kg = meta.at("body_mass_kg").get<double>();
  auto image = [&](const char* file, const ImageGeometry& g) {
    const Tensor t = pmt1::load(dir / file);
    if (t.rank() != 2 || static_cast<int>(t.dim(0)) != g.rows || static_cast<int>(t.dim(1)) != g.cols) {
      throw Error(ErrorCode::GeometryMismatch, (dir / file).string() + " does not match its geometry");
    }
    return ImageArray(Eigen::Map<const ImageArray>(t.data.data(), g.rows, g.cols));
  };
  s.pressure.geom = detail::geometry_from_json(meta.at("pressure_geom"));
  s.pressure.values = image("pressure.pmt", s.pressure.geom);
  s.depth.geom = detail::geometry_from_json(meta.at("depth_geom"));
  s.depth.values = image("depth.pmt", s.depth.geom);
  const Tensor params = pmt1::load(dir / "params.pmt");
  if (params.size() != static_cast<std::size_t>(kNumParams)) throw Error(ErrorCode::IoError, "params.pmt has wrong size");
  s.gt_params = BodyParams::unflatten(params.data, s.gender);
  s.gt_mesh.vertices = to_matx3(pmt1::load(dir / "vertices.pmt"));
  s.gt_mesh.joints = to_matx3(pmt1::load(dir / "joints.pmt"));
  s.gt_mesh.faces = models.get(s.gender).faces;
  s.gt_vpm = to_vector(pmt1::load(dir / "vertex_pressure.pmt"));
  s.gt_contact = to_vector(pmt1::load(dir / "contact.pmt"));
  return s;
}

Manifest make_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir) {
  if (config.total() <= 0) throw Error(ErrorCode::ConfigInvalid, "dataset config requests no samples");
  const ModelSet models = ModelSet::generate(config.model_vertices, config.model_seed);
  std::filesystem::create_directories(out_dir);
  save_model(models.female, out_dir / "model" / "female");
  save_model(models.male, out_dir / "model" / "male");
  Manifest m{config, {}};
  json entries = json::array();
  std::size_t index = 0;
  for (const auto& [pose, covers] : config.counts)
    for (const auto& [cover, count] : covers)
      for (int i = 0; i < count; ++i, ++index) {
        const SceneSample s = make_sample(models, config, index, pose, cover);
        const std::string id = sample_id(index);
        save_sample(s, out_dir / "samples" / id);
        m.entries.push_back({id, pose, cover, s.gender});
        entries.push_back({{"id", id},
                           {"path", "samples/" + id},
                           {"pose_category", to_string(pose)},
                           {"cover", to_string(cover)},
                           {"gender", to_string(s.gender)}});
      }
  detail::write_json(out_dir / "manifest.json", {{"format", "pressmap-dataset"},
                                                 {"version", 1},
                                                 {"config", json::parse(config.to_json_text())},
                                                 {"samples", entries}});
  return m;
}

Manifest load_manifest(const std::filesystem::path& dataset_dir) {
  const json j = detail::read_json(dataset_dir / "manifest.json");
  if (j.value("format", "") != "pressmap-dataset") {
    throw Error(ErrorCode::IoError, (dataset_dir / "manifest.json").string() + " is not a dataset manifest");
  }
  Manifest m;
  m.config = DatasetConfig::from_json_text(j.at("config").dump());
  for (const json& e : j.at("samples")) {
    m.entries.push_back({e.at("id").get<std::string>(), pose_category_from_string(e.at("pose_category").get<std::string>()),
                         cover_from_string(e.at("cover").get<std::string>()),
                         gender_from_string(e.at("gender").get<std::string>())});
  }
  return m;
}

ModelSet load_models(const std::filesystem::path& dataset_dir) {
  return {load_model(dataset_dir / "model" / "female"), load_model(dataset_dir / "model" / "male")};
}

bool SampleFilter::accepts(PoseCategory p, Cover c) const {
  if (poses && std::find(poses->begin(), poses->end(), p) == poses->end()) return false;
  if (covers && std::find(covers->begin(), covers->end(), c) == covers->end()) return false;
  return true;
}

std::vector<std::size_t> select(const std::vector<SceneSample>& samples, const SampleFilter& filter) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (filter.accepts(samples[i].pose_category, samples[i].cover)) out.push_back(i);
  return out;
}

std::vector<std::size_t> select(const Manifest& manifest, const SampleFilter& filter) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i)
    if (filter.accepts(manifest.entries[i].pose_category, manifest.entries[i].cover)) out.push_back(i);
  return out;
}

}  // namespace pressmap
