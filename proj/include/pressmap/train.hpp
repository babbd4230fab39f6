#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pressmap/losses.hpp"
#include "pressmap/metrics.hpp"
#include "pressmap/network.hpp"
#include "pressmap/sample.hpp"
#include "pressmap/synth_data.hpp"

namespace pressmap {

// Read access to a dataset. Inputs and ground truth are separate calls so a
// wrapper can observe which ground truth a consumer touches.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;

  virtual const DepthImage& depth(std::size_t i) const = 0;
  virtual const PressureImage& pressure(std::size_t i) const = 0;
  virtual Gender gender(std::size_t i) const = 0;
  virtual PoseCategory pose_category(std::size_t i) const = 0;
  virtual Cover cover(std::size_t i) const = 0;

  virtual const BodyParams& gt_params(std::size_t i) const = 0;
  virtual const PosedMesh& gt_mesh(std::size_t i) const = 0;
  virtual const VertexPressureMap& gt_vpm(std::size_t i) const = 0;
  virtual const VertexContact& gt_contact(std::size_t i) const = 0;
};

// Subset of an in-memory sample vector; the vector must outlive the view.
class SampleView final : public SampleSource {
 public:
  explicit SampleView(const std::vector<SceneSample>& samples);
  SampleView(const std::vector<SceneSample>& samples, std::vector<std::size_t> indices);

  std::size_t size() const override { return indices_.size(); }
  const DepthImage& depth(std::size_t i) const override { return at(i).depth; }
  const PressureImage& pressure(std::size_t i) const override { return at(i).pressure; }
  Gender gender(std::size_t i) const override { return at(i).gender; }
  PoseCategory pose_category(std::size_t i) const override { return at(i).pose_category; }
  Cover cover(std::size_t i) const override { return at(i).cover; }
  const BodyParams& gt_params(std::size_t i) const override { return at(i).gt_params; }
  const PosedMesh& gt_mesh(std::size_t i) const override { return at(i).gt_mesh; }
  const VertexPressureMap& gt_vpm(std::size_t i) const override { return at(i).gt_vpm; }
  const VertexContact& gt_contact(std::size_t i) const override { return at(i).gt_contact; }

 private:
  const SceneSample& at(std::size_t i) const { return (*samples_)[indices_.at(i)]; }

  const std::vector<SceneSample>* samples_;
  std::vector<std::size_t> indices_;
};

// Statistics of the ground truth in a source. Pressure and contact terms are
// skipped (left at 1) when `with_pressure` is false.
NormStats compute_stats(const SampleSource& source, bool with_pressure = true);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;  // L2 term added to the gradient
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

AdamState adam_init(std::span<Tensor* const> params, const AdamConfig& config);
// Throws ShapeMismatch when params, grads and moments disagree.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 64;  // clamped to the dataset size
  AdamConfig adam;
  LossWeights weights;
  std::uint64_t seed = 1;
  double rotation_deg = 0.0;  // uniform in-plane rotation range; 0 disables (supervised only)
  double erase_prob = 0.0;    // chance of zeroing one random input rectangle
  int eval_every = 1;         // held-out evaluation period in epochs; the last epoch is always evaluated
  int threads = 1;            // per-sample tapes run concurrently; results do not depend on this

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 0 is the untrained network
  double train_loss = 0.0;
  std::optional<double> heldout_v2vp;
  std::optional<double> heldout_mpjpe_mm;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  std::string to_json_text() const;
};

// Sets the mesh head's output offset and scale to the per-component mean and
// standard deviation (floored at 0.01) of the ground-truth parameters.
void calibrate_psi(BodyMapNet& net, const SampleSource& source);

// Supervised training. With lambda2 = lambda3 = 0 only the mesh losses are
// evaluated and the pressure ground truth is never read.
TrainHistory train_supervised(BodyMapNet& net, const SampleSource& train, const ModelSet& models,
                              const NormStats& stats, const TrainConfig& config,
                              const SampleSource* heldout = nullptr);

// Weakly supervised training of `net` on frozen outputs of `mesh_net`. Reads
// only depth, pressure and gender from `train`.
TrainHistory train_ws(WsNet& net, const BodyMapNet& mesh_net, const SampleSource& train, const ModelSet& models,
                      const TrainConfig& config, const SampleSource* heldout = nullptr);

// Mean held-out v2vP (gated map) and MPJPE of a supervised network.
struct QuickEval {
  double v2vp = 0.0;
  double mpjpe_mm = 0.0;
};
QuickEval quick_eval(const BodyMapNet& net, const SampleSource& source, const ModelSet& models, int threads = 1);
QuickEval quick_eval(const WsNet& net, const BodyMapNet& mesh_net, const SampleSource& source,
                     const ModelSet& models, int threads = 1);

struct SampleEval {
  PoseCategory pose_category = PoseCategory::Supine;
  Cover cover = Cover::Uncovered;
  MetricReport report;
};

std::vector<SampleEval> evaluate(const BodyMapNet& net, const SampleSource& source, const ModelSet& models,
                                 int threads = 1);
std::vector<SampleEval> evaluate(const WsNet& net, const BodyMapNet& mesh_net, const SampleSource& source,
                                 const ModelSet& models, int threads = 1);

enum class GroupBy { None, Pose, Cover, PoseCover };
GroupBy group_by_from_string(std::string_view s);

struct GroupedReport {
  MetricReport overall;
  std::map<std::string, MetricReport> groups;  // empty for GroupBy::None

  std::string to_json_text() const;
  // One row per group after an "overall" row; per-part columns follow the fixed metrics.
  std::string to_csv_text() const;
};

GroupedReport group_reports(const std::vector<SampleEval>& evals, GroupBy by);

}  // namespace pressmap
