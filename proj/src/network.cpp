#include "pressmap/network.hpp"

#include <algorithm>
#include <cmath>
#include <array>

#include "json_util.hpp"
#include "pressmap/convert.hpp"
#include "pressmap/error.hpp"
#include "pressmap/pmt1.hpp"

namespace pressmap {

using detail::json;

namespace {

constexpr int kKernel = 3;
constexpr int kFormatVersion = 1;

Tensor he_uniform(Shape shape, std::size_t fan_in, double gain, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  const double bound = gain * std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& x : t.data) x = u(rng);
  return t;
}

Tensor dense_weight(int in, int out, double gain, std::mt19937_64& rng) {
  return he_uniform({static_cast<std::size_t>(in), static_cast<std::size_t>(out)}, static_cast<std::size_t>(in),
                    gain, rng);
}

Tensor zeros(int n) { return Tensor({static_cast<std::size_t>(n)}); }

ad::Var dense_relu(ad::Var x, ad::Var w, ad::Var b) { return ad::relu(ad::dense(x, w, b)); }

json config_to_json(const NetConfig& c) {
  return {{"input_geom", detail::geometry_to_json(c.input_geom)},
          {"camera_height_m", c.camera_height_m},
          {"height_scale_m", c.height_scale_m},
          {"pressure_scale_kpa", c.pressure_scale_kpa},
          {"channels", c.channels},
          {"strides", c.strides},
          {"mesh_hidden", c.mesh_hidden},
          {"mesh_spatial", c.mesh_spatial},
          {"point_hidden", c.point_hidden},
          {"fim",
           {{"use_xyz", c.toggles.use_xyz},
            {"use_image", c.toggles.use_image},
            {"use_latent", c.toggles.use_latent},
            {"use_global", c.toggles.use_global}}},
          {"seed", c.seed}};
}

NetConfig config_from_json(const json& j) {
  NetConfig c;
  c.input_geom = detail::geometry_from_json(j.at("input_geom"));
  c.camera_height_m = j.at("camera_height_m").get<double>();
  c.height_scale_m = j.at("height_scale_m").get<double>();
  c.pressure_scale_kpa = j.at("pressure_scale_kpa").get<double>();
  c.channels = j.at("channels").get<std::vector<int>>();
  c.strides = j.at("strides").get<std::vector<int>>();
  c.mesh_hidden = j.at("mesh_hidden").get<int>();
  c.mesh_spatial = j.at("mesh_spatial").get<bool>();
  c.point_hidden = j.at("point_hidden").get<int>();
  const json& f = j.at("fim");
  c.toggles = {f.at("use_xyz").get<bool>(), f.at("use_image").get<bool>(), f.at("use_latent").get<bool>(),
               f.at("use_global").get<bool>()};
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

void save_params(const ParamSet& p, const std::filesystem::path& dir, json& index, const std::string& group) {
  json names = json::array();
  for (const NamedTensor& t : p.tensors) {
    const std::string file = group + "." + t.name + ".pmt";
    pmt1::save(dir / file, t.value);
    names.push_back({{"name", t.name}, {"file", file}});
  }
  index[group] = names;
}

void load_params(ParamSet& p, const std::filesystem::path& dir, const json& index, const std::string& group) {
  const json& names = index.at(group);
  if (names.size() != p.tensors.size()) {
    throw Error(ErrorCode::ConfigInvalid, "checkpoint group '" + group + "' has the wrong parameter count");
  }
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    if (names[i].at("name").get<std::string>() != p.tensors[i].name) {
      throw Error(ErrorCode::ConfigInvalid, "checkpoint parameter order differs in '" + group + "'");
    }
    Tensor t = pmt1::load(dir / names[i].at("file").get<std::string>());
    if (t.shape != p.tensors[i].value.shape) {
      throw Error(ErrorCode::ShapeMismatch, "checkpoint tensor " + group + "." + p.tensors[i].name + " is " +
                                                shape_string(t.shape) + ", expected " +
                                                shape_string(p.tensors[i].value.shape));
    }
    p.tensors[i].value = std::move(t);
  }
}

json read_arch(const std::filesystem::path& dir, const std::string& kind) {
  const json arch = detail::read_json(dir / "arch.json");
  if (arch.value("kind", "") != kind) {
    throw Error(ErrorCode::ConfigInvalid, (dir / "arch.json").string() + " is not a " + kind + " checkpoint");
  }
  if (arch.value("version", 0) != kFormatVersion) {
    throw Error(ErrorCode::ConfigInvalid, "unsupported checkpoint version in " + (dir / "arch.json").string());
  }
  return arch;
}

}  // namespace

ImageGeometry NetConfig::latent_geom() const {
  int rows = input_geom.rows, cols = input_geom.cols, step = 1;
  for (int s : strides) {
    rows = (rows + 2 - kKernel) / s + 1;
    cols = (cols + 2 - kKernel) / s + 1;
    step *= s;
  }
  return {rows, cols, input_geom.pitch * step, input_geom.origin};
}

int NetConfig::point_input_width() const {
  return (toggles.use_xyz ? 3 : 0) + (toggles.use_image ? 2 : 0) + (toggles.use_latent ? latent_channels() : 0) +
         (toggles.use_global ? latent_channels() : 0);
}

int NetConfig::mesh_input_width() const {
  const ImageGeometry l = latent_geom();
  return latent_channels() + 2 + (mesh_spatial ? latent_channels() * l.rows * l.cols : 0);
}

void NetConfig::validate() const {
  pressmap::validate(input_geom);
  if (channels.empty() || channels.size() != strides.size()) {
    throw Error(ErrorCode::ConfigInvalid, "encoder channels and strides must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i] <= 0 || strides[i] <= 0) throw Error(ErrorCode::ConfigInvalid, "encoder sizes must be positive");
  if (mesh_hidden <= 0 || point_hidden <= 0) throw Error(ErrorCode::ConfigInvalid, "hidden widths must be positive");
  if (!(camera_height_m > 0) || !(height_scale_m > 0) || !(pressure_scale_kpa > 0)) {
    throw Error(ErrorCode::ConfigInvalid, "input scales must be positive");
  }
  if (!toggles.any()) throw Error(ErrorCode::NoFeaturesEnabled, "at least one FIM feature group is required");
  const ImageGeometry l = latent_geom();
  if (l.rows <= 0 || l.cols <= 0) throw Error(ErrorCode::ConfigInvalid, "encoder downsamples the input to nothing");
}

Tensor& ParamSet::add(std::string name, Tensor value) {
  for (const NamedTensor& t : tensors)
    if (t.name == name) throw Error(ErrorCode::ConfigInvalid, "duplicate parameter name " + name);
  tensors.push_back({std::move(name), std::move(value)});
  return tensors.back().value;
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for (const NamedTensor& t : tensors) n += t.value.size();
  return n;
}

PointHead PointHead::init(int in_width, int hidden, int out_width, std::mt19937_64& rng) {
  PointHead h;
  h.out_width = out_width;
  h.params.add("enc1.w", dense_weight(in_width, hidden, 1.0, rng));
  h.params.add("enc1.b", zeros(hidden));
  h.params.add("enc2.w", dense_weight(hidden, hidden, 1.0, rng));
  h.params.add("enc2.b", zeros(hidden));
  h.params.add("dec1.w", dense_weight(2 * hidden, hidden, 1.0, rng));
  h.params.add("dec1.b", zeros(hidden));
  h.params.add("dec2.w", Tensor({static_cast<std::size_t>(hidden), static_cast<std::size_t>(out_width)}));
  h.params.add("dec2.b", zeros(out_width));
  return h;
}

BodyMapNet BodyMapNet::init(const NetConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  BodyMapNet net;
  net.config = config;
  int cin = 2;
  for (std::size_t i = 0; i < config.channels.size(); ++i) {
    const int cout = config.channels[i];
    const auto fan_in = static_cast<std::size_t>(cin * kKernel * kKernel);
    net.encoder.add("conv" + std::to_string(i) + ".w",
                    he_uniform({static_cast<std::size_t>(cout), static_cast<std::size_t>(cin), kKernel, kKernel},
                               fan_in, 1.0, rng));
    net.encoder.add("conv" + std::to_string(i) + ".b", zeros(cout));
    cin = cout;
  }
  net.mesh_head.add("fc1.w", dense_weight(config.mesh_input_width(), config.mesh_hidden, 1.0, rng));
  net.mesh_head.add("fc1.b", zeros(config.mesh_hidden));
  net.mesh_head.add("fc2.w", dense_weight(config.mesh_hidden, kNumParams, 0.1, rng));
  net.mesh_head.add("fc2.b", zeros(kNumParams));
  net.point = PointHead::init(config.point_input_width(), config.point_hidden, 2, rng);
  return net;
}

std::size_t BodyMapNet::parameter_count() const {
  return encoder.count() + mesh_head.count() + point.params.count();
}

WsNet WsNet::init(const NetConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  WsNet net;
  net.config = config;
  net.point = PointHead::init(config.point_input_width(), config.point_hidden, 1, rng);
  return net;
}

ImageArray resample(const ImageArray& src, const ImageGeometry& src_geom, const ImageGeometry& dst, double fill,
                    std::optional<double> skip) {
  if (src.rows() != src_geom.rows || src.cols() != src_geom.cols) {
    throw Error(ErrorCode::GeometryMismatch, "image does not match its geometry");
  }
  if (src_geom == dst) return src;
  ImageArray sum = ImageArray::Zero(dst.rows, dst.cols);
  Eigen::MatrixXi count = Eigen::MatrixXi::Zero(dst.rows, dst.cols);
  for (int r = 0; r < src_geom.rows; ++r)
    for (int c = 0; c < src_geom.cols; ++c) {
      if (skip && src(r, c) == *skip) continue;
      const Eigen::Vector2d center = src_geom.origin + src_geom.pitch * Eigen::Vector2d(c + 0.5, r + 0.5);
      if (const auto t = taxel_of_point(center, dst)) {
        sum(t->row, t->col) += src(r, c);
        ++count(t->row, t->col);
      }
    }
  ImageArray out(dst.rows, dst.cols);
  for (int r = 0; r < dst.rows; ++r)
    for (int c = 0; c < dst.cols; ++c) {
      if (count(r, c) > 0) {
        out(r, c) = sum(r, c) / count(r, c);
        continue;
      }
      const Eigen::Vector2d center = dst.origin + dst.pitch * Eigen::Vector2d(c + 0.5, r + 0.5);
      const auto t = taxel_of_point(center, src_geom);
      out(r, c) = t && !(skip && src(t->row, t->col) == *skip) ? src(t->row, t->col) : fill;
    }
  return out;
}

Tensor prepare_input(const DepthImage& depth, const PressureImage& pressure, const NetConfig& config) {
  const ImageArray d =
      resample(depth.values, depth.geom, config.input_geom, config.camera_height_m, DepthImage::kNoReturn);
  const ImageArray p = resample(pressure.values, pressure.geom, config.input_geom, 0.0);
  const auto rows = static_cast<std::size_t>(config.input_geom.rows);
  const auto cols = static_cast<std::size_t>(config.input_geom.cols);
  Tensor x({2, rows, cols});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const auto ri = static_cast<Eigen::Index>(r), ci = static_cast<Eigen::Index>(c);
      x.at(0, r, c) = std::max(0.0, config.camera_height_m - d(ri, ci)) / config.height_scale_m;
      x.at(1, r, c) = p(ri, ci) / config.pressure_scale_kpa;
    }
  return x;
}

std::vector<ad::Var> bind(ad::Tape& tape, const ParamSet& params, bool trainable) {
  std::vector<ad::Var> vars;
  vars.reserve(params.size());
  for (const NamedTensor& t : params.tensors) vars.push_back(trainable ? tape.variable(t.value) : tape.constant(t.value));
  return vars;
}

BodyMapBindings bind(ad::Tape& tape, const BodyMapNet& net, bool trainable) {
  return {bind(tape, net.encoder, trainable), bind(tape, net.mesh_head, trainable),
          bind(tape, net.point.params, trainable)};
}

EncoderVars forward_encoder(ad::Tape& tape, const NetConfig& config, std::span<const ad::Var> encoder,
                            const Tensor& input) {
  if (encoder.size() != 2 * config.channels.size()) {
    throw Error(ErrorCode::ShapeMismatch, "encoder parameter count does not match the configuration");
  }
  ad::Var x = tape.constant(input);
  for (std::size_t i = 0; i < config.channels.size(); ++i) {
    x = ad::relu(ad::conv2d(x, encoder[2 * i], encoder[2 * i + 1], config.strides[i], 1));
  }
  return {x, ad::global_avg_pool(x)};
}

ad::Var forward_point_head(ad::Tape& tape, const NetConfig& config, std::span<const ad::Var> head, ad::Var vertices,
                           const Tensor& input, ad::Var latent, ad::Var global) {
  if (head.size() != 8) throw Error(ErrorCode::ShapeMismatch, "point head expects 8 parameter tensors");
  const FimToggles& tg = config.toggles;
  if (!tg.any()) throw Error(ErrorCode::NoFeaturesEnabled, "at least one FIM feature group is required");
  const std::size_t nv = vertices.shape()[0];
  const MatX3 xyz = to_matx3(vertices.value());

  std::vector<ad::Var> groups;
  if (tg.use_xyz) groups.push_back(vertices);
  if (tg.use_image) groups.push_back(ad::gather(tape.constant(input), register_vertices(xyz, config.input_geom)));
  if (tg.use_latent) groups.push_back(ad::gather(latent, register_vertices(xyz, config.latent_geom())));
  if (tg.use_global) groups.push_back(ad::broadcast_rows(global, nv));
  ad::Var features = groups.front();
  for (std::size_t i = 1; i < groups.size(); ++i) features = ad::concat_cols(features, groups[i]);

  const ad::Var h1 = dense_relu(features, head[0], head[1]);
  const ad::Var h2 = dense_relu(h1, head[2], head[3]);
  const ad::Var pooled = ad::broadcast_rows(ad::max_pool_rows(h2), nv);
  const ad::Var h3 = dense_relu(ad::concat_cols(h2, pooled), head[4], head[5]);
  return ad::dense(h3, head[6], head[7]);
}

BodyMapVars forward_bodymap(ad::Tape& tape, const BodyMapNet& net, const BodyMapBindings& vars, const Tensor& input,
                            Gender gender, const BodyModel& model) {
  const NetConfig& cfg = net.config;
  const Shape want{2, static_cast<std::size_t>(cfg.input_geom.rows), static_cast<std::size_t>(cfg.input_geom.cols)};
  if (input.shape != want) {
    throw Error(ErrorCode::GeometryMismatch,
                "network input " + shape_string(input.shape) + " does not match " + shape_string(want));
  }
  const EncoderVars enc = forward_encoder(tape, cfg, vars.encoder, input);

  Tensor gender_code({2});
  if (gender == Gender::Female) gender_code[0] = 1.0;
  if (gender == Gender::Male) gender_code[1] = 1.0;
  std::vector<ad::Var> head_in{enc.global, tape.constant(std::move(gender_code))};
  if (cfg.mesh_spatial) head_in.push_back(enc.latent);
  const ad::Var z = ad::reshape(ad::concat(head_in), {1, static_cast<std::size_t>(cfg.mesh_input_width())});
  const ad::Var hidden = dense_relu(z, vars.mesh_head[0], vars.mesh_head[1]);
  const ad::Var raw = ad::reshape(ad::dense(hidden, vars.mesh_head[2], vars.mesh_head[3]), {kNumParams});
  const ad::Var psi = ad::add(ad::mul(raw, tape.constant(to_tensor(net.psi_scale))),
                              tape.constant(to_tensor(net.psi_offset)));

  const ad::Var posed = ad::pose_mesh(psi, model);
  const auto nv = static_cast<std::size_t>(model.num_vertices());
  const ad::Var vertices = ad::slice_rows(posed, 0, nv);
  const ad::Var joints = ad::slice_rows(posed, nv, posed.shape()[0] - nv);

  const ad::Var out = forward_point_head(tape, cfg, vars.point, vertices, input, enc.latent, enc.global);
  const ad::Var pressure = ad::scale(ad::reshape(ad::slice_cols(out, 0, 1), {nv}), cfg.pressure_scale_kpa);
  const ad::Var prob = ad::sigmoid(ad::reshape(ad::slice_cols(out, 1, 1), {nv}));
  return {psi, vertices, joints, pressure, prob, enc.latent, enc.global};
}

VertexPressureMap gate_pressure(const VertexPressureMap& pressure, const Eigen::VectorXd& contact_prob) {
  if (pressure.size() != contact_prob.size()) {
    throw Error(ErrorCode::DimensionMismatch, "pressure and contact probability lengths differ");
  }
  return (contact_prob.array() >= 0.5).select(pressure, 0.0);
}

BodyMapOutput forward_bodymap(const BodyMapNet& net, const DepthImage& depth, const PressureImage& pressure,
                              Gender gender, const BodyModel& model) {
  ad::Tape tape;
  const BodyMapBindings vars = bind(tape, net, false);
  const BodyMapVars v = forward_bodymap(tape, net, vars, prepare_input(depth, pressure, net.config), gender, model);
  BodyMapOutput out;
  out.params = BodyParams::unflatten(v.psi.value().data, gender);
  out.mesh.vertices = to_matx3(v.vertices.value());
  out.mesh.joints = to_matx3(v.joints.value());
  out.mesh.faces = model.faces;
  out.pressure = to_vector(v.pressure.value());
  out.contact_prob = to_vector(v.contact_prob.value());
  out.inference_map = gate_pressure(out.pressure, out.contact_prob);
  out.latent = v.latent.value();
  out.global = v.global.value();
  return out;
}

FrozenMeshOutputs freeze(const BodyMapNet& net, const DepthImage& depth, const PressureImage& pressure, Gender gender,
                         const BodyModel& model) {
  ad::Tape tape;
  const BodyMapBindings vars = bind(tape, net, false);
  FrozenMeshOutputs f;
  f.input = prepare_input(depth, pressure, net.config);
  const BodyMapVars v = forward_bodymap(tape, net, vars, f.input, gender, model);
  f.mesh.vertices = to_matx3(v.vertices.value());
  f.mesh.joints = to_matx3(v.joints.value());
  f.mesh.faces = model.faces;
  f.latent = v.latent.value();
  f.global = v.global.value();
  return f;
}

ad::Var forward_bodymap_ws(ad::Tape& tape, const WsNet& net, std::span<const ad::Var> head,
                           const FrozenMeshOutputs& frozen) {
  const ad::Var vertices = tape.constant(to_tensor(frozen.mesh.vertices));
  const ad::Var out = forward_point_head(tape, net.config, head, vertices, frozen.input, tape.constant(frozen.latent),
                                         tape.constant(frozen.global));
  return ad::scale(ad::reshape(out, {out.shape()[0]}), net.config.pressure_scale_kpa);
}

VertexPressureMap forward_bodymap_ws(const WsNet& net, const FrozenMeshOutputs& frozen) {
  ad::Tape tape;
  const std::vector<ad::Var> head = bind(tape, net.point.params, false);
  return to_vector(forward_bodymap_ws(tape, net, head, frozen).value());
}

void save_checkpoint(const BodyMapNet& net, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json index = json::object();
  save_params(net.encoder, dir, index, "encoder");
  save_params(net.mesh_head, dir, index, "mesh_head");
  save_params(net.point.params, dir, index, "point");
  pmt1::save(dir / "psi_offset.pmt", to_tensor(net.psi_offset));
  pmt1::save(dir / "psi_scale.pmt", to_tensor(net.psi_scale));
  detail::write_json(dir / "arch.json", {{"kind", "bodymap"},
                                         {"version", kFormatVersion},
                                         {"config", config_to_json(net.config)},
                                         {"parameters", index}});
}

BodyMapNet load_body_map_checkpoint(const std::filesystem::path& dir) {
  const json arch = read_arch(dir, "bodymap");
  BodyMapNet net;
  try {
    net = BodyMapNet::init(config_from_json(arch.at("config")));
    load_params(net.encoder, dir, arch.at("parameters"), "encoder");
    load_params(net.mesh_head, dir, arch.at("parameters"), "mesh_head");
    load_params(net.point.params, dir, arch.at("parameters"), "point");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, (dir / "arch.json").string() + ": " + e.what());
  }
  net.psi_offset = to_vector(pmt1::load(dir / "psi_offset.pmt"));
  net.psi_scale = to_vector(pmt1::load(dir / "psi_scale.pmt"));
  if (net.psi_offset.size() != kNumParams || net.psi_scale.size() != kNumParams) {
    throw Error(ErrorCode::ShapeMismatch, "checkpoint parameter normalization has the wrong length");
  }
  return net;
}

void save_checkpoint(const WsNet& net, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json index = json::object();
  save_params(net.point.params, dir, index, "point");
  detail::write_json(dir / "arch.json", {{"kind", "bodymap_ws"},
                                         {"version", kFormatVersion},
                                         {"config", config_to_json(net.config)},
                                         {"parameters", index}});
}

WsNet load_ws_checkpoint(const std::filesystem::path& dir) {
  const json arch = read_arch(dir, "bodymap_ws");
  WsNet net;
  try {
    net = WsNet::init(config_from_json(arch.at("config")));
    load_params(net.point.params, dir, arch.at("parameters"), "point");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, (dir / "arch.json").string() + ": " + e.what());
  }
  return net;
}

}  // namespace pressmap
