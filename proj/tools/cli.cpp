#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "pressmap/autodiff.hpp"
#include "pressmap/convert.hpp"
#include "pressmap/error.hpp"
#include "pressmap/gradcheck_suite.hpp"
#include "pressmap/model_io.hpp"
#include "pressmap/network.hpp"
#include "pressmap/pmt1.hpp"
#include "pressmap/projection.hpp"
#include "pressmap/synth_data.hpp"
#include "pressmap/train.hpp"

namespace pressmap::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> split_list(std::string_view list) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(list)};
  while (std::getline(in, item, ',')) {
    if (item.empty()) throw Error(ErrorCode::ConfigInvalid, "empty entry in list '" + std::string(list) + "'");
    out.push_back(item);
  }
  if (out.empty()) throw Error(ErrorCode::ConfigInvalid, "empty list");
  return out;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

// Writes to `path`, or to stdout when it is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text << (text.empty() || text.back() != '\n' ? "\n" : "");
  } else {
    write_text(path, text);
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw Error(ErrorCode::ConfigInvalid, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json toggles_to_json(const FimToggles& t) {
  return {{"use_xyz", t.use_xyz}, {"use_image", t.use_image}, {"use_latent", t.use_latent},
          {"use_global", t.use_global}};
}

FimToggles toggles_from_json(const json& j, FimToggles t) {
  check_keys(j, {"use_xyz", "use_image", "use_latent", "use_global"}, "net.fim");
  get_if(j, "use_xyz", t.use_xyz);
  get_if(j, "use_image", t.use_image);
  get_if(j, "use_latent", t.use_latent);
  get_if(j, "use_global", t.use_global);
  return t;
}

// Options shared by the commands that read a dataset.
struct Selection {
  std::string poses;
  std::string covers;

  SampleFilter filter() const {
    SampleFilter f;
    if (!poses.empty()) f.poses = parse_poses(poses);
    if (!covers.empty()) f.covers = parse_covers(covers);
    return f;
  }
};

void add_selection(CLI::App* cmd, Selection& s) {
  cmd->add_option("--pose-filter", s.poses, "Keep only these pose categories (supine, left_lateral, right_lateral)");
  cmd->add_option("--cover-filter", s.covers, "Keep only these covers (uncovered, cover1, cover2)");
}

struct Dataset {
  Manifest manifest;
  ModelSet models;
  std::vector<SceneSample> samples;
};

Dataset load_dataset(const fs::path& dir) {
  Dataset d;
  d.manifest = load_manifest(dir);
  d.models = load_models(dir);
  d.samples.reserve(d.manifest.entries.size());
  for (const ManifestEntry& e : d.manifest.entries) d.samples.push_back(load_sample(dir / "samples" / e.id, d.models));
  return d;
}

json stats_to_json(const NormStats& s, std::size_t n) {
  return {{"num_samples", n},       {"sigma_beta", s.sigma_beta}, {"sigma_theta", s.sigma_theta},
          {"sigma_yx", s.sigma_yx}, {"sigma_s", s.sigma_s},       {"sigma_v", s.sigma_v},
          {"sigma_p", s.sigma_p},   {"sigma_c", s.sigma_c}};
}

// ---------------------------------------------------------------- training jobs

struct Job {
  fs::path dataset;
  int heldout_every = 5;  // every k-th sample is held out; 0 keeps all for training
  json net = json::object();
  TrainConfig train;
  fs::path mesh_checkpoint;
};

Job parse_job(const fs::path& path, bool ws) {
  const json j = read_json(path);
  const fs::path base = path.parent_path();
  auto resolve = [&](const json& v) {
    const fs::path p = v.get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  Job job;
  if (ws) job.train.epochs = 15;
  try {
    std::set<std::string> keys{"dataset", "heldout_every", "net", "train"};
    if (ws) keys.insert("mesh_checkpoint");
    check_keys(j, keys, path.string());
    job.dataset = resolve(j.at("dataset"));
    get_if(j, "heldout_every", job.heldout_every);
    if (job.heldout_every < 0 || job.heldout_every == 1) {
      throw Error(ErrorCode::ConfigInvalid, "heldout_every must be 0 or at least 2");
    }
    if (j.contains("net")) job.net = j.at("net");
    if (ws) job.mesh_checkpoint = resolve(j.at("mesh_checkpoint"));
    if (j.contains("train")) {
      const json& t = j.at("train");
      check_keys(t,
                 {"epochs", "batch_size", "lr", "weight_decay", "lambda1", "lambda2", "lambda3", "lambda_ws", "seed",
                  "rotation_deg", "erase_prob", "eval_every"},
                 "train");
      TrainConfig& c = job.train;
      get_if(t, "epochs", c.epochs);
      get_if(t, "batch_size", c.batch_size);
      get_if(t, "lr", c.adam.lr);
      get_if(t, "weight_decay", c.adam.weight_decay);
      get_if(t, "lambda1", c.weights.lambda1);
      get_if(t, "lambda2", c.weights.lambda2);
      get_if(t, "lambda3", c.weights.lambda3);
      get_if(t, "lambda_ws", c.weights.lambda_ws);
      get_if(t, "seed", c.seed);
      get_if(t, "rotation_deg", c.rotation_deg);
      get_if(t, "erase_prob", c.erase_prob);
      get_if(t, "eval_every", c.eval_every);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
  job.train.validate();
  return job;
}

NetConfig net_config(const json& j, const SceneConfig& scene) {
  NetConfig c;
  c.input_geom = scene.pressure_geom;
  c.camera_height_m = scene.camera_height_m;
  try {
    check_keys(j,
               {"channels", "strides", "mesh_hidden", "mesh_spatial", "point_hidden", "height_scale_m",
                "pressure_scale_kpa", "seed", "fim"},
               "net");
    get_if(j, "channels", c.channels);
    get_if(j, "strides", c.strides);
    get_if(j, "mesh_hidden", c.mesh_hidden);
    get_if(j, "mesh_spatial", c.mesh_spatial);
    get_if(j, "point_hidden", c.point_hidden);
    get_if(j, "height_scale_m", c.height_scale_m);
    get_if(j, "pressure_scale_kpa", c.pressure_scale_kpa);
    get_if(j, "seed", c.seed);
    if (j.contains("fim")) c.toggles = toggles_from_json(j.at("fim"), c.toggles);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("net: ") + e.what());
  }
  return c;
}

// The pressure head of a weakly supervised net sits on a frozen mesh net, so
// only head settings can differ from it.
NetConfig ws_net_config(const json& j, NetConfig c) {
  try {
    check_keys(j, {"point_hidden", "seed", "fim"}, "net (weakly supervised)");
    get_if(j, "point_hidden", c.point_hidden);
    get_if(j, "seed", c.seed);
    if (j.contains("fim")) c.toggles = toggles_from_json(j.at("fim"), c.toggles);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("net: ") + e.what());
  }
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.adam.lr},
          {"weight_decay", c.adam.weight_decay},
          {"lambda1", c.weights.lambda1},
          {"lambda2", c.weights.lambda2},
          {"lambda3", c.weights.lambda3},
          {"lambda_ws", c.weights.lambda_ws},
          {"seed", c.seed},
          {"rotation_deg", c.rotation_deg},
          {"erase_prob", c.erase_prob},
          {"eval_every", c.eval_every}};
}

json net_config_to_json(const NetConfig& c) {
  return {{"channels", c.channels},
          {"strides", c.strides},
          {"mesh_hidden", c.mesh_hidden},
          {"mesh_spatial", c.mesh_spatial},
          {"point_hidden", c.point_hidden},
          {"height_scale_m", c.height_scale_m},
          {"pressure_scale_kpa", c.pressure_scale_kpa},
          {"seed", c.seed},
          {"fim", toggles_to_json(c.toggles)}};
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> heldout;
};

Split split_samples(const std::vector<SceneSample>& samples, int heldout_every, const SampleFilter& filter) {
  Split s;
  for (std::size_t i : select(samples, filter)) {
    const bool held = heldout_every > 0 && i % heldout_every == static_cast<std::size_t>(heldout_every - 1);
    (held ? s.heldout : s.train).push_back(i);
  }
  if (s.train.empty()) throw Error(ErrorCode::EmptyDataset, "no training samples after filtering");
  return s;
}

void print_history(const TrainHistory& h) {
  for (const EpochRecord& e : h.epochs) {
    std::cout << "epoch " << e.epoch << " loss " << e.train_loss;
    if (e.heldout_v2vp) std::cout << " heldout_v2vp " << *e.heldout_v2vp << " heldout_mpjpe_mm " << *e.heldout_mpjpe_mm;
    std::cout << '\n';
  }
}

// ---------------------------------------------------------------- commands

struct TrainArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string toggles;
  Selection selection;
};

void apply_overrides(const TrainArgs& a, Job& job) {
  if (a.seed) {
    job.train.seed = *a.seed;
    job.net["seed"] = *a.seed;
  }
  if (!a.toggles.empty()) job.net["fim"] = toggles_to_json(parse_fim_toggles(a.toggles));
}

void cmd_train(const TrainArgs& a) {
  Job job = parse_job(a.config, false);
  apply_overrides(a, job);
  const Dataset d = load_dataset(job.dataset);
  const NetConfig nc = net_config(job.net, d.manifest.config.scene);
  const Split split = split_samples(d.samples, job.heldout_every, a.selection.filter());
  const SampleView train(d.samples, split.train), held(d.samples, split.heldout);

  TrainConfig tc = job.train;
  tc.threads = thread_count();
  const bool pressure = tc.weights.lambda2 > 0 || tc.weights.lambda3 > 0;
  const NormStats stats = compute_stats(train, pressure);
  BodyMapNet net = BodyMapNet::init(nc);
  calibrate_psi(net, train);
  const TrainHistory h = train_supervised(net, train, d.models, stats, tc, held.size() ? &held : nullptr);

  const fs::path out = a.out;
  save_checkpoint(net, out / "checkpoint");
  write_text(out / "history.json", h.to_json_text());
  write_text(out / "stats.json", stats_to_json(stats, train.size()).dump(2));
  write_text(out / "config.json", json{{"dataset", fs::absolute(job.dataset).string()},
                                       {"heldout_every", job.heldout_every},
                                       {"num_train", train.size()},
                                       {"num_heldout", held.size()},
                                       {"net", net_config_to_json(nc)},
                                       {"train", train_config_to_json(tc)}}
                                      .dump(2));
  print_history(h);
}

void cmd_train_ws(const TrainArgs& a) {
  Job job = parse_job(a.config, true);
  apply_overrides(a, job);
  const Dataset d = load_dataset(job.dataset);
  const BodyMapNet mesh_net = load_body_map_checkpoint(job.mesh_checkpoint);
  const NetConfig nc = ws_net_config(job.net, mesh_net.config);
  const Split split = split_samples(d.samples, job.heldout_every, a.selection.filter());
  const SampleView train(d.samples, split.train), held(d.samples, split.heldout);

  TrainConfig tc = job.train;
  tc.threads = thread_count();
  WsNet net = WsNet::init(nc);
  const TrainHistory h = train_ws(net, mesh_net, train, d.models, tc, held.size() ? &held : nullptr);

  const fs::path out = a.out;
  save_checkpoint(net, out / "checkpoint");
  write_text(out / "history.json", h.to_json_text());
  write_text(out / "config.json", json{{"dataset", fs::absolute(job.dataset).string()},
                                       {"mesh_checkpoint", fs::absolute(job.mesh_checkpoint).string()},
                                       {"heldout_every", job.heldout_every},
                                       {"num_train", train.size()},
                                       {"num_heldout", held.size()},
                                       {"net", net_config_to_json(nc)},
                                       {"train", train_config_to_json(tc)}}
                                      .dump(2));
  print_history(h);
}

struct EvalArgs {
  std::string checkpoint;
  std::string ws_checkpoint;
  std::string dataset;
  std::string group_by = "none";
  std::string format = "json";
  std::string out;
  Selection selection;
};

void cmd_eval(const EvalArgs& a) {
  if (a.format != "json" && a.format != "csv") throw Error(ErrorCode::ConfigInvalid, "--format must be json or csv");
  const GroupBy by = group_by_from_string(a.group_by);
  const Dataset d = load_dataset(a.dataset);
  const std::vector<std::size_t> idx = select(d.samples, a.selection.filter());
  if (idx.empty()) throw Error(ErrorCode::EmptyDataset, "no samples after filtering");
  const SampleView view(d.samples, idx);
  const BodyMapNet net = load_body_map_checkpoint(a.checkpoint);
  std::vector<SampleEval> evals;
  if (a.ws_checkpoint.empty()) {
    evals = evaluate(net, view, d.models, thread_count());
  } else {
    evals = evaluate(load_ws_checkpoint(a.ws_checkpoint), net, view, d.models, thread_count());
  }
  const GroupedReport r = group_reports(evals, by);
  emit(a.out, a.format == "json" ? r.to_json_text() : r.to_csv_text());
}

struct StatsArgs {
  std::string dataset;
  std::string out;
  Selection selection;
};

void cmd_stats(const StatsArgs& a) {
  const Dataset d = load_dataset(a.dataset);
  const std::vector<std::size_t> idx = select(d.samples, a.selection.filter());
  const SampleView view(d.samples, idx);
  emit(a.out, stats_to_json(compute_stats(view), view.size()).dump(2));
}

struct GenArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void cmd_gen(const GenArgs& a) {
  DatasetConfig c = DatasetConfig::from_json_file(a.config);
  if (a.seed) c.seed = *a.seed;
  const Manifest m = make_dataset(c, a.out);
  std::cout << "wrote " << m.entries.size() << " samples to " << a.out << '\n';
}

struct ProjectArgs {
  std::string direction;
  std::string sample;
  std::string pressure;
  std::string vertices;
  std::string vertex_pressure;
  std::string model;
  std::string geometry;
  double contact_eps = kDefaultContactEps;
  std::optional<double> vmax;
  std::string out;
};

void cmd_project(ProjectArgs a) {
  if (a.direction != "to3d" && a.direction != "to2d") {
    throw Error(ErrorCode::ConfigInvalid, "--direction must be to3d or to2d");
  }
  ImageGeometry geom;
  if (!a.sample.empty()) {
    const fs::path dir = a.sample;
    const json meta = read_json(dir / "meta.json");
    try {
      const json& g = meta.at("pressure_geom");
      const auto origin = g.at("origin_xy_m").get<std::vector<double>>();
      if (origin.size() != 2) throw Error(ErrorCode::ConfigInvalid, "origin_xy_m needs two values");
      geom = {g.at("rows").get<int>(), g.at("cols").get<int>(), g.at("pitch_m").get<double>(), {origin[0], origin[1]}};
      if (a.model.empty()) {
        a.model = (dir.parent_path().parent_path() / "model" / meta.at("gender").get<std::string>()).string();
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigInvalid, (dir / "meta.json").string() + ": " + e.what());
    }
    if (a.pressure.empty()) a.pressure = (dir / "pressure.pmt").string();
    if (a.vertices.empty()) a.vertices = (dir / "vertices.pmt").string();
    if (a.vertex_pressure.empty()) a.vertex_pressure = (dir / "vertex_pressure.pmt").string();
  } else if (!a.geometry.empty()) {
    const json g = read_json(a.geometry);
    try {
      const auto origin = g.at("origin_xy_m").get<std::vector<double>>();
      if (origin.size() != 2) throw Error(ErrorCode::ConfigInvalid, "origin_xy_m needs two values");
      geom = {g.at("rows").get<int>(), g.at("cols").get<int>(), g.at("pitch_m").get<double>(), {origin[0], origin[1]}};
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigInvalid, a.geometry + ": " + e.what());
    }
  } else {
    throw Error(ErrorCode::ConfigInvalid, "project needs --sample or --geometry");
  }
  validate(geom);
  if (a.model.empty() || a.vertices.empty()) throw Error(ErrorCode::ConfigInvalid, "project needs --model and --vertices");

  const BodyModel model = load_model(a.model);
  const Tensor vt = pmt1::load(a.vertices);
  if (vt.shape.size() != 2 || vt.shape[1] != 3 || vt.shape[0] != static_cast<std::size_t>(model.num_vertices())) {
    throw Error(ErrorCode::DimensionMismatch, "vertices must be [" + std::to_string(model.num_vertices()) + " x 3]");
  }
  const PosedMesh mesh{to_matx3(vt), MatX3(), model.faces};

  const fs::path out = a.out;
  fs::create_directories(out);
  VertexPressureMap colors;
  if (a.direction == "to3d") {
    if (a.pressure.empty()) throw Error(ErrorCode::ConfigInvalid, "to3d needs --pressure");
    const Tensor pt = pmt1::load(a.pressure);
    if (pt.shape != Shape{static_cast<std::size_t>(geom.rows), static_cast<std::size_t>(geom.cols)}) {
      throw Error(ErrorCode::GeometryMismatch, "pressure image does not match the taxel grid");
    }
    PressureImage img{geom, ImageArray(geom.rows, geom.cols)};
    for (int r = 0; r < geom.rows; ++r)
      for (int c = 0; c < geom.cols; ++c) img.values(r, c) = pt.data[static_cast<std::size_t>(r * geom.cols + c)];
    colors = project_gt(img, mesh, a.contact_eps);
    pmt1::save(out / "vertex_pressure.pmt", to_tensor(colors));
  } else {
    if (a.vertex_pressure.empty()) throw Error(ErrorCode::ConfigInvalid, "to2d needs --vertex-pressure");
    colors = to_vector(pmt1::load(a.vertex_pressure));
    if (colors.size() != model.num_vertices()) {
      throw Error(ErrorCode::DimensionMismatch, "vertex pressure must have one value per vertex");
    }
    pmt1::save(out / "pressure.pmt", to_tensor(reproject_2d(colors, mesh, geom).values));
  }
  const double vmax = a.vmax ? *a.vmax : std::max(colors.size() ? colors.maxCoeff() : 0.0, 1e-12);
  write_colored_ply(out / "mesh.ply", mesh.vertices, *model.faces, colors, vmax);
  std::cout << "wrote " << (out / (a.direction == "to3d" ? "vertex_pressure.pmt" : "pressure.pmt")).string()
            << " and " << (out / "mesh.ply").string() << '\n';
}

struct GradcheckArgs {
  std::uint64_t seed = 0;
  bool inject_fault = false;
  std::string out;
};

bool cmd_gradcheck(const GradcheckArgs& a) {
  ad::set_fault_injection(a.inject_fault);
  std::vector<ad::GradcheckResult> results;
  try {
    results = run_gradcheck_suite(a.seed);
  } catch (...) {
    ad::set_fault_injection(false);
    throw;
  }
  ad::set_fault_injection(false);
  json list = json::array();
  int failed = 0;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " rel_error " << r.rel_error << " tolerance "
              << r.tolerance << " coords " << r.num_checked << '\n';
    failed += r.passed ? 0 : 1;
    list.push_back({{"name", r.name},
                    {"rel_error", r.rel_error},
                    {"tolerance", r.tolerance},
                    {"num_checked", r.num_checked},
                    {"passed", r.passed}});
  }
  std::cout << results.size() - failed << "/" << results.size() << " gradient checks passed\n";
  if (!a.out.empty()) {
    write_text(a.out, json{{"seed", a.seed}, {"fault_injection", a.inject_fault}, {"passed", failed == 0},
                           {"checks", list}}
                          .dump(2));
  }
  return failed == 0;
}

}  // namespace

FimToggles parse_fim_toggles(std::string_view bits) {
  if (bits.size() != 4 || bits.find_first_not_of("01") != std::string_view::npos) {
    throw Error(ErrorCode::ConfigInvalid, "FIM toggles must be four 0/1 characters (xyz, image, latent, global)");
  }
  const FimToggles t{bits[0] == '1', bits[1] == '1', bits[2] == '1', bits[3] == '1'};
  if (!t.any()) throw Error(ErrorCode::NoFeaturesEnabled, "at least one FIM feature group must be enabled");
  return t;
}

std::vector<PoseCategory> parse_poses(std::string_view list) {
  std::vector<PoseCategory> out;
  for (const std::string& s : split_list(list)) out.push_back(pose_category_from_string(s));
  return out;
}

std::vector<Cover> parse_covers(std::string_view list) {
  std::vector<Cover> out;
  for (const std::string& s : split_list(list)) out.push_back(cover_from_string(s));
  return out;
}

int thread_count() {
  if (const char* env = std::getenv("PRESSMAP_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1 || n > 1024) {
      throw Error(ErrorCode::ConfigInvalid, std::string("PRESSMAP_THREADS must be a positive integer, got '") + env + "'");
    }
    return static_cast<int>(n);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::array<std::uint8_t, 3> pressure_color(double kpa, double vmax) {
  if (!(kpa > 0.0)) return {200, 200, 200};
  static constexpr std::array<std::array<double, 3>, 5> stops{
      {{0, 0, 255}, {0, 255, 255}, {0, 255, 0}, {255, 255, 0}, {255, 0, 0}}};
  const double t = vmax > 0.0 ? std::clamp(kpa / vmax, 0.0, 1.0) * (stops.size() - 1) : stops.size() - 1;
  const std::size_t i = std::min(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  std::array<std::uint8_t, 3> rgb{};
  for (int k = 0; k < 3; ++k) rgb[k] = static_cast<std::uint8_t>(std::lround(stops[i][k] + f * (stops[i + 1][k] - stops[i][k])));
  return rgb;
}

void write_colored_ply(const std::filesystem::path& path, const MatX3& vertices, const FaceArray& faces,
                       const Eigen::VectorXd& values, double vmax) {
  if (values.size() != vertices.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "one value per vertex is needed for the colored mesh");
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(9);
  out << "ply\nformat ascii 1.0\n"
      << "comment pressure colormap: 0 gray, then blue-cyan-green-yellow-red up to " << vmax << " kPa\n"
      << "element vertex " << vertices.rows() << '\n'
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "property float pressure_kpa\n"
      << "element face " << faces.rows() << '\n'
      << "property list uchar int vertex_indices\nend_header\n";
  for (Eigen::Index v = 0; v < vertices.rows(); ++v) {
    const auto rgb = pressure_color(values[v], vmax);
    out << vertices(v, 0) << ' ' << vertices(v, 1) << ' ' << vertices(v, 2) << ' ' << int{rgb[0]} << ' '
        << int{rgb[1]} << ' ' << int{rgb[2]} << ' ' << values[v] << '\n';
  }
  for (Eigen::Index f = 0; f < faces.rows(); ++f) out << "3 " << faces(f, 0) << ' ' << faces(f, 1) << ' ' << faces(f, 2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Body mesh and 3D pressure map estimation from depth and pressure images"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen_cmd->add_option("--config", gen.config, "Dataset config JSON")->required();
  gen_cmd->add_option("--out", gen.out, "Output dataset directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Override the config seed");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Normalization statistics of a dataset");
  stats_cmd->add_option("--dataset", stats.dataset, "Dataset directory")->required();
  stats_cmd->add_option("--out", stats.out, "Output JSON (default: stdout)");
  add_selection(stats_cmd, stats.selection);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Supervised training");
  TrainArgs train_ws;
  auto* ws_cmd = app.add_subcommand("train-ws", "Weakly supervised pressure training on a frozen mesh network");
  for (auto [cmd, args] : {std::pair{train_cmd, &train}, std::pair{ws_cmd, &train_ws}}) {
    cmd->add_option("--config", args->config, "Training config JSON")->required();
    cmd->add_option("--out", args->out, "Output run directory")->required();
    cmd->add_option("--seed", args->seed, "Override the training and initialization seeds");
    cmd->add_option("--fim-toggles", args->toggles, "Feature groups as four 0/1 flags: xyz, image, latent, global");
    add_selection(cmd, args->selection);
  }

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Mesh network checkpoint directory")->required();
  eval_cmd->add_option("--ws-checkpoint", eval.ws_checkpoint, "Weakly supervised pressure head checkpoint");
  eval_cmd->add_option("--dataset", eval.dataset, "Dataset directory")->required();
  eval_cmd->add_option("--group-by", eval.group_by, "none, pose, cover or pose,cover");
  eval_cmd->add_option("--format", eval.format, "json or csv");
  eval_cmd->add_option("--out", eval.out, "Output file (default: stdout)");
  add_selection(eval_cmd, eval.selection);

  ProjectArgs project;
  auto* project_cmd = app.add_subcommand("project", "Project pressure between the taxel grid and a mesh");
  project_cmd->add_option("--direction", project.direction, "to3d or to2d")->required();
  project_cmd->add_option("--sample", project.sample, "Dataset sample directory supplying defaults");
  project_cmd->add_option("--pressure", project.pressure, "Pressure image PMT1 [rows x cols] in kPa");
  project_cmd->add_option("--vertices", project.vertices, "Posed vertices PMT1 [N x 3] in meters");
  project_cmd->add_option("--vertex-pressure", project.vertex_pressure, "Per-vertex pressure PMT1 [N] in kPa");
  project_cmd->add_option("--model", project.model, "Body model directory supplying faces");
  project_cmd->add_option("--geometry", project.geometry, "Taxel grid JSON (rows, cols, pitch_m, origin_xy_m)");
  project_cmd->add_option("--contact-eps", project.contact_eps, "Contact height threshold in meters for to3d");
  project_cmd->add_option("--vmax", project.vmax, "Pressure mapped to the top of the colormap");
  project_cmd->add_option("--out", project.out, "Output directory")->required();

  GradcheckArgs gradcheck;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  grad_cmd->add_option("--seed", gradcheck.seed, "Random seed");
  grad_cmd->add_flag("--inject-fault", gradcheck.inject_fault, "Corrupt one backward rule to test the checker");
  grad_cmd->add_option("--out", gradcheck.out, "Output JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen_cmd->parsed()) cmd_gen(gen);
    if (stats_cmd->parsed()) cmd_stats(stats);
    if (train_cmd->parsed()) cmd_train(train);
    if (ws_cmd->parsed()) cmd_train_ws(train_ws);
    if (eval_cmd->parsed()) cmd_eval(eval);
    if (project_cmd->parsed()) cmd_project(project);
    if (grad_cmd->parsed()) return cmd_gradcheck(gradcheck) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace pressmap::cli
