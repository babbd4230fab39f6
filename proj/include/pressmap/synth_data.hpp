#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pressmap/body_model.hpp"
#include "pressmap/projection.hpp"
#include "pressmap/sample.hpp"

namespace pressmap {

inline constexpr double kGravity = 9.81;

// Female and male variants of one toy topology.
struct ModelSet {
  BodyModel female;
  BodyModel male;

  const BodyModel& get(Gender g) const { return g == Gender::Female ? female : male; }
  static ModelSet generate(int n_v, std::uint64_t seed);
};

struct CoverSpec {
  double thickness_m = 0.0;
  double slope = 1.0;  // height drop per meter away from the body
};

struct SceneConfig {
  ImageGeometry pressure_geom{64, 27, 0.0286, {0.0, 0.0}};
  ImageGeometry depth_geom{128, 54, 0.0143, {0.0, 0.0}};
  double camera_height_m = 2.0;
  // Bodies sink this far into the mattress; vertices at or below contact_eps touch it.
  double sink_depth_m = 0.07;
  double contact_eps_m = 0.0;
  double shape_range = 1.5;     // beta ~ U[-r, r]
  double pose_spread = 0.5;     // fraction of each joint's range around zero
  double roll_jitter_deg = 10.0;
  double yaw_jitter_deg = 5.0;
  double shift_jitter_m = 0.03;
  double mass_min_kg = 50.0;
  double mass_max_kg = 90.0;
  CoverSpec cover1{0.015, 1.2};
  CoverSpec cover2{0.04, 0.7};
};

struct DatasetConfig {
  std::uint64_t seed = 1;
  int model_vertices = 690;
  std::uint64_t model_seed = 7;
  // counts[pose category][cover]
  std::map<PoseCategory, std::map<Cover, int>> counts;
  SceneConfig scene;

  int total() const;
  static DatasetConfig from_json_file(const std::filesystem::path& path);
  static DatasetConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

// Root rotation by category; joint angles within the model's limits; body
// centered over the pressure grid with its lowest vertex at z = 0.
BodyParams sample_params(std::mt19937_64& rng, PoseCategory category, const BodyModel& model,
                         const SceneConfig& config = {});

// Orthographic top-down z-buffer; values are camera height minus surface height.
DepthImage render_depth(const PosedMesh& mesh, const ImageGeometry& geom, Cover cover,
                        const SceneConfig& config = {});

// Area-weighted static force shares of contact vertices binned into taxels, in kPa.
// Throws NoContact when no vertex is at or below contact_eps.
PressureImage simulate_pressure(const PosedMesh& mesh, const ImageGeometry& geom, double body_mass_kg,
                                double contact_eps = kDefaultContactEps);

// Lumped vertex areas: a third of the incident triangle areas.
Eigen::VectorXd vertex_areas(const PosedMesh& mesh);

// One complete scene; deterministic in (dataset seed, index).
SceneSample make_sample(const ModelSet& models, const DatasetConfig& config, std::size_t index,
                        PoseCategory category, Cover cover);

// All samples of a config in manifest order (categories, then covers, then count).
std::vector<SceneSample> generate_samples(const ModelSet& models, const DatasetConfig& config);

struct ManifestEntry {
  std::string id;
  PoseCategory pose_category = PoseCategory::Supine;
  Cover cover = Cover::Uncovered;
  Gender gender = Gender::Neutral;
};

struct Manifest {
  DatasetConfig config;
  std::vector<ManifestEntry> entries;
};

// Writes model/, samples/<id>/ tensors and manifest.json under `out_dir`.
Manifest make_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir);

Manifest load_manifest(const std::filesystem::path& dataset_dir);
void save_sample(const SceneSample& s, const std::filesystem::path& dir);
SceneSample load_sample(const std::filesystem::path& dir, const ModelSet& models);
ModelSet load_models(const std::filesystem::path& dataset_dir);

struct SampleFilter {
  std::optional<std::vector<PoseCategory>> poses;
  std::optional<std::vector<Cover>> covers;

  bool accepts(PoseCategory p, Cover c) const;
  static SampleFilter lateral_only() { return {std::vector{PoseCategory::LeftLateral, PoseCategory::RightLateral}, {}}; }
  static SampleFilter supine_only() { return {std::vector{PoseCategory::Supine}, {}}; }
};

std::vector<std::size_t> select(const std::vector<SceneSample>& samples, const SampleFilter& filter);
std::vector<std::size_t> select(const Manifest& manifest, const SampleFilter& filter);

}  // namespace pressmap
