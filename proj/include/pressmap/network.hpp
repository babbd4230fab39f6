#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pressmap/autodiff.hpp"
#include "pressmap/body_model.hpp"
#include "pressmap/fim.hpp"
#include "pressmap/projection.hpp"
#include "pressmap/tensor.hpp"

namespace pressmap {

struct NetConfig {
  // Both input images are resampled to this grid and stacked as two channels.
  ImageGeometry input_geom{64, 27, 0.0286, {0.0, 0.0}};
  double camera_height_m = 2.0;
  double height_scale_m = 0.25;    // depth channel = (camera height - depth) / height_scale
  double pressure_scale_kpa = 10;  // pressure channel = kPa / pressure_scale; also the head's output unit
  std::vector<int> channels{8, 16, 16, 32};
  std::vector<int> strides{1, 2, 2, 2};
  int mesh_hidden = 64;
  // Also feed the flattened final feature map, not only its average, to the mesh regressor.
  bool mesh_spatial = true;
  int point_hidden = 32;
  FimToggles toggles;
  std::uint64_t seed = 1;

  // Grid of the final encoder feature map, aligned with input_geom's origin.
  ImageGeometry latent_geom() const;
  int latent_channels() const { return channels.back(); }
  // Width of the per-vertex input: enabled groups plus the broadcast global vector.
  int point_input_width() const;
  int mesh_input_width() const;
  void validate() const;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Parameter list with stable order; names are unique.
struct ParamSet {
  std::vector<NamedTensor> tensors;

  Tensor& add(std::string name, Tensor value);
  std::size_t count() const;  // total scalar count
  Tensor& operator[](std::size_t i) { return tensors[i].value; }
  const Tensor& operator[](std::size_t i) const { return tensors[i].value; }
  std::size_t size() const { return tensors.size(); }
};

// Shared per-vertex MLP, max-pooled global fusion, and a decoder with `out_width` outputs.
struct PointHead {
  ParamSet params;
  int out_width = 2;

  static PointHead init(int in_width, int hidden, int out_width, std::mt19937_64& rng);
};

struct BodyMapNet {
  NetConfig config;
  ParamSet encoder;
  ParamSet mesh_head;
  // Psi = psi_offset + psi_scale * raw head output.
  Eigen::VectorXd psi_offset = Eigen::VectorXd::Zero(kNumParams);
  Eigen::VectorXd psi_scale = Eigen::VectorXd::Ones(kNumParams);
  PointHead point;

  // Random encoder and mesh head, zero-valued final point layer.
  static BodyMapNet init(const NetConfig& config);
  std::size_t parameter_count() const;
};

// Pressure-only per-vertex head that runs on frozen mesh-network outputs.
struct WsNet {
  NetConfig config;
  PointHead point;

  // Final layer starts at zero, so the initial prediction is zero everywhere.
  static WsNet init(const NetConfig& config);
};

// Two-channel [2 x rows x cols] network input.
Tensor prepare_input(const DepthImage& depth, const PressureImage& pressure, const NetConfig& config);

// Box-average resampling onto `dst`: each destination pixel averages the source pixels whose centers fall
// inside it, falling back to the nearest source pixel. Values equal to `skip` are ignored; pixels with no
// usable source get `fill`.
ImageArray resample(const ImageArray& src, const ImageGeometry& src_geom, const ImageGeometry& dst,
                    double fill = 0.0, std::optional<double> skip = std::nullopt);

// Tape handles for each parameter, in ParamSet order.
std::vector<ad::Var> bind(ad::Tape& tape, const ParamSet& params, bool trainable);

struct EncoderVars {
  ad::Var latent;  // [C x h x w]
  ad::Var global;  // [C]
};
EncoderVars forward_encoder(ad::Tape& tape, const NetConfig& config, std::span<const ad::Var> encoder,
                            const Tensor& input);

// Per-vertex output [N_v x out_width].
ad::Var forward_point_head(ad::Tape& tape, const NetConfig& config, std::span<const ad::Var> head,
                           ad::Var vertices, const Tensor& input, ad::Var latent, ad::Var global);

struct BodyMapVars {
  ad::Var psi;           // [88]
  ad::Var vertices;      // [N_v x 3]
  ad::Var joints;        // [24 x 3]
  ad::Var pressure;      // [N_v], kPa
  ad::Var contact_prob;  // [N_v]
  ad::Var latent;
  ad::Var global;
};

struct BodyMapBindings {
  std::vector<ad::Var> encoder;
  std::vector<ad::Var> mesh_head;
  std::vector<ad::Var> point;
};

BodyMapBindings bind(ad::Tape& tape, const BodyMapNet& net, bool trainable);

BodyMapVars forward_bodymap(ad::Tape& tape, const BodyMapNet& net, const BodyMapBindings& vars, const Tensor& input,
                            Gender gender, const BodyModel& model);

struct BodyMapOutput {
  BodyParams params;
  PosedMesh mesh;
  VertexPressureMap pressure;
  Eigen::VectorXd contact_prob;
  // pressure where contact_prob >= 0.5, else 0.
  VertexPressureMap inference_map;
  Tensor latent;
  Tensor global;
};

BodyMapOutput forward_bodymap(const BodyMapNet& net, const DepthImage& depth, const PressureImage& pressure,
                              Gender gender, const BodyModel& model);

// Exact gating rule of the inference map.
VertexPressureMap gate_pressure(const VertexPressureMap& pressure, const Eigen::VectorXd& contact_prob);

// Frozen mesh-network products consumed by the WS head.
struct FrozenMeshOutputs {
  PosedMesh mesh;
  Tensor input;
  Tensor latent;
  Tensor global;
};

FrozenMeshOutputs freeze(const BodyMapNet& net, const DepthImage& depth, const PressureImage& pressure,
                         Gender gender, const BodyModel& model);

// Per-vertex pressure [N_v] in kPa.
ad::Var forward_bodymap_ws(ad::Tape& tape, const WsNet& net, std::span<const ad::Var> head,
                           const FrozenMeshOutputs& frozen);
VertexPressureMap forward_bodymap_ws(const WsNet& net, const FrozenMeshOutputs& frozen);

// Checkpoint directory: arch.json plus one PMT1 file per parameter tensor.
void save_checkpoint(const BodyMapNet& net, const std::filesystem::path& dir);
BodyMapNet load_body_map_checkpoint(const std::filesystem::path& dir);
void save_checkpoint(const WsNet& net, const std::filesystem::path& dir);
WsNet load_ws_checkpoint(const std::filesystem::path& dir);

}  // namespace pressmap
