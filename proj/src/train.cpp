#include "pressmap/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include "json_util.hpp"
#include "pressmap/convert.hpp"
#include "pressmap/error.hpp"
#include "running_std.hpp"

namespace pressmap {

using detail::json;

namespace {

// Runs f(i) for i in [0, n) on up to `threads` workers. Callers write results
// into per-index slots, so the outcome never depends on scheduling.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& f) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<Tensor*> parameters(BodyMapNet& net) {
  std::vector<Tensor*> out;
  for (ParamSet* set : {&net.encoder, &net.mesh_head, &net.point.params})
    for (NamedTensor& t : set->tensors) out.push_back(&t.value);
  return out;
}

std::vector<Tensor*> parameters(WsNet& net) {
  std::vector<Tensor*> out;
  for (NamedTensor& t : net.point.params.tensors) out.push_back(&t.value);
  return out;
}

std::vector<Tensor> zero_like(const std::vector<Tensor*>& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Tensor* p : params) out.emplace_back(p->shape);
  return out;
}

void collect_grads(ad::Tape& tape, std::span<const ad::Var> vars, std::vector<Tensor>& out, std::size_t offset) {
  for (std::size_t i = 0; i < vars.size(); ++i) {
    Tensor& dst = out[offset + i];
    if (tape.has_grad(vars[i])) {
      dst = tape.grad(vars[i]);
    } else {
      dst.fill(0.0);
    }
  }
}

std::mt19937_64 sample_rng(std::uint64_t seed, int epoch, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

Eigen::Vector2d grid_center(const ImageGeometry& g) {
  return g.origin + 0.5 * g.pitch * Eigen::Vector2d(g.cols, g.rows);
}

// Rotates every channel about the grid center; uncovered pixels become 0.
Tensor rotate_input(const Tensor& x, const ImageGeometry& g, double angle) {
  Tensor out(x.shape);
  const Eigen::Vector2d c = grid_center(g);
  const Eigen::Rotation2Dd inv(-angle);
  for (int r = 0; r < g.rows; ++r)
    for (int col = 0; col < g.cols; ++col) {
      const Eigen::Vector2d p = g.origin + g.pitch * Eigen::Vector2d(col + 0.5, r + 0.5);
      const auto src = taxel_of_point(inv * (p - c) + c, g);
      if (!src) continue;
      for (std::size_t ch = 0; ch < x.shape[0]; ++ch)
        out.at(ch, static_cast<std::size_t>(r), static_cast<std::size_t>(col)) =
            x.at(ch, static_cast<std::size_t>(src->row), static_cast<std::size_t>(src->col));
    }
  return out;
}

void erase_rect(Tensor& x, std::mt19937_64& rng) {
  const int rows = static_cast<int>(x.shape[1]), cols = static_cast<int>(x.shape[2]);
  const int h = std::uniform_int_distribution<int>(std::max(1, rows / 8), std::max(1, rows / 3))(rng);
  const int w = std::uniform_int_distribution<int>(std::max(1, cols / 8), std::max(1, cols / 3))(rng);
  const int r0 = std::uniform_int_distribution<int>(0, rows - h)(rng);
  const int c0 = std::uniform_int_distribution<int>(0, cols - w)(rng);
  for (std::size_t ch = 0; ch < x.shape[0]; ++ch)
    for (int r = r0; r < r0 + h; ++r)
      for (int c = c0; c < c0 + w; ++c) x.at(ch, static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 0.0;
}

// Supervised training target after augmentation.
struct Item {
  Tensor input;
  Gender gender = Gender::Neutral;
  BodyParams params;
  MatX3 joints;
  MatX3 vertices;
};

Item make_item(const BodyMapNet& net, const SampleSource& src, std::size_t i, const ModelSet& models,
               const TrainConfig& cfg, int epoch) {
  Item item;
  item.input = prepare_input(src.depth(i), src.pressure(i), net.config);
  item.gender = src.gender(i);
  item.params = src.gt_params(i);
  const PosedMesh& mesh = src.gt_mesh(i);
  item.joints = mesh.joints;
  item.vertices = mesh.vertices;
  if (epoch == 0 || (cfg.rotation_deg <= 0.0 && cfg.erase_prob <= 0.0)) return item;

  std::mt19937_64 rng = sample_rng(cfg.seed, epoch, i);
  if (cfg.rotation_deg > 0.0) {
    const double angle =
        std::uniform_real_distribution<double>(-cfg.rotation_deg, cfg.rotation_deg)(rng) * std::numbers::pi / 180.0;
    const Eigen::Matrix3d rz = Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    const Eigen::Vector2d c2 = grid_center(net.config.input_geom);
    const Eigen::Vector3d c(c2.x(), c2.y(), 0.0);
    const Eigen::Vector3d root = mesh.joints.row(0).transpose() - item.params.root_trans;
    item.params.root_rot_x = rz * item.params.root_rot_x;
    item.params.root_rot_y = rz * item.params.root_rot_y;
    item.params.root_trans = rz * (root + item.params.root_trans - c) + c - root;
    const PosedMesh rotated = pose_mesh(models.get(item.gender), item.params);
    item.joints = rotated.joints;
    item.vertices = rotated.vertices;
    item.input = rotate_input(item.input, net.config.input_geom, angle);
  }
  if (std::bernoulli_distribution(cfg.erase_prob)(rng)) erase_rect(item.input, rng);
  return item;
}

struct StepResult {
  double loss = 0.0;
  std::vector<Tensor> grads;
};

StepResult supervised_step(const BodyMapNet& net, const SampleSource& src, std::size_t i, const ModelSet& models,
                           const NormStats& stats, const TrainConfig& cfg, int epoch, bool want_grad) {
  const bool with_pressure = cfg.weights.lambda2 != 0.0 || cfg.weights.lambda3 != 0.0;
  const Item item = make_item(net, src, i, models, cfg, epoch);
  ad::Tape tape;
  const BodyMapBindings vars = bind(tape, net, want_grad);
  const BodyMapVars out = forward_bodymap(tape, net, vars, item.input, item.gender, models.get(item.gender));
  const ad::Var l_smpl = ad::loss_smpl(out.psi, out.joints, item.params, item.joints, stats);
  const ad::Var l_v2v = ad::loss_v2v(out.vertices, item.vertices, stats);
  ad::Var l_p3d = tape.constant(Tensor({1}));
  ad::Var l_contact = tape.constant(Tensor({1}));
  if (with_pressure) {
    l_p3d = ad::loss_p3d(out.pressure, src.gt_vpm(i), stats);
    l_contact = ad::loss_contact(out.contact_prob, src.gt_contact(i), stats);
  }
  const ad::Var total = ad::loss_total_supervised(l_smpl, l_v2v, l_p3d, l_contact, cfg.weights);
  StepResult r;
  r.loss = total.value()[0];
  if (!want_grad) return r;
  tape.backward(total);
  r.grads.resize(vars.encoder.size() + vars.mesh_head.size() + vars.point.size());
  for (std::size_t k = 0; k < r.grads.size(); ++k) r.grads[k] = Tensor();
  std::size_t offset = 0;
  for (const std::vector<ad::Var>* group : {&vars.encoder, &vars.mesh_head, &vars.point}) {
    for (std::size_t k = 0; k < group->size(); ++k) r.grads[offset + k] = Tensor((*group)[k].shape());
    collect_grads(tape, *group, r.grads, offset);
    offset += group->size();
  }
  return r;
}

StepResult ws_step(const WsNet& net, const FrozenMeshOutputs& frozen, const PressureImage& sensed,
                   const TrainConfig& cfg, int epoch, std::size_t index, bool want_grad) {
  const FrozenMeshOutputs* use = &frozen;
  FrozenMeshOutputs erased;
  if (epoch > 0 && cfg.erase_prob > 0.0) {
    std::mt19937_64 rng = sample_rng(cfg.seed, epoch, index);
    if (std::bernoulli_distribution(cfg.erase_prob)(rng)) {
      erased = frozen;
      erase_rect(erased.input, rng);
      use = &erased;
    }
  }
  ad::Tape tape;
  const std::vector<ad::Var> head = bind(tape, net.point.params, want_grad);
  const ad::Var pred = forward_bodymap_ws(tape, net, head, *use);
  const ad::Var projected = ad::reproject_2d(pred, use->mesh, sensed.geom);
  const ad::Var total =
      ad::loss_total_ws(ad::loss_p2d(projected, sensed), ad::loss_preg(pred, use->mesh), cfg.weights);
  StepResult r;
  r.loss = total.value()[0];
  if (!want_grad) return r;
  tape.backward(total);
  r.grads.resize(head.size());
  for (std::size_t k = 0; k < head.size(); ++k) r.grads[k] = Tensor(head[k].shape());
  collect_grads(tape, head, r.grads, 0);
  return r;
}

// Shared epoch loop. `step(i, epoch, want_grad)` evaluates sample i.
template <typename Step, typename Eval>
TrainHistory run_training(std::vector<Tensor*> params, std::size_t n, const TrainConfig& cfg, Step&& step,
                          Eval&& eval) {
  TrainHistory history;
  std::vector<double> losses(n);
  auto record = [&](int epoch, bool evaluate) {
    EpochRecord rec;
    rec.epoch = epoch;
    double total = 0.0;
    for (double l : losses) total += l;
    rec.train_loss = total / static_cast<double>(n);
    if (evaluate) {
      if (const std::optional<QuickEval> q = eval()) {
        rec.heldout_v2vp = q->v2vp;
        rec.heldout_mpjpe_mm = q->mpjpe_mm;
      }
    }
    history.epochs.push_back(rec);
  };

  parallel_for(n, cfg.threads, [&](std::size_t i) { losses[i] = step(i, 0, false).loss; });
  record(0, true);

  AdamState adam = adam_init(params, cfg.adam);
  const std::size_t batch = std::min<std::size_t>(n, static_cast<std::size_t>(cfg.batch_size));
  std::mt19937_64 shuffle_rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::vector<Tensor> sum = zero_like(params);
  std::vector<StepResult> results(batch);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      parallel_for(count, cfg.threads, [&](std::size_t k) { results[k] = step(order[start + k], epoch, true); });
      for (Tensor& s : sum) s.fill(0.0);
      for (std::size_t k = 0; k < count; ++k) {
        losses[order[start + k]] = results[k].loss;
        for (std::size_t p = 0; p < sum.size(); ++p)
          for (std::size_t e = 0; e < sum[p].size(); ++e) sum[p][e] += results[k].grads[p][e];
      }
      const double inv = 1.0 / static_cast<double>(count);
      for (Tensor& s : sum)
        for (double& x : s.data) x *= inv;
      adam_step(params, sum, adam);
    }
    const bool evaluate = epoch == cfg.epochs || epoch % cfg.eval_every == 0;
    record(epoch, evaluate);
  }
  return history;
}

json report_to_json(const MetricReport& r) {
  json parts = json::object();
  for (const auto& [name, value] : r.per_part_v2vp) parts[name] = value;
  return {{"num_samples", r.num_samples},
          {"mpjpe_mm", r.mpjpe_mm},
          {"pve_mm", r.pve_mm},
          {"shape_err_cm",
           {{"height", r.shape_err_cm.height_cm},
            {"chest", r.shape_err_cm.chest_cm},
            {"waist", r.shape_err_cm.waist_cm},
            {"hips", r.shape_err_cm.hips_cm}}},
          {"v2vp", r.v2vp},
          {"v2vp_1ea", r.v2vp_1ea},
          {"v2vp_2ea", r.v2vp_2ea},
          {"per_part_v2vp", parts}};
}

std::array<NeighborTable, 2> neighbor_tables(const ModelSet& models) {
  return {build_neighbor_table(models.female), build_neighbor_table(models.male)};
}

}  // namespace

SampleView::SampleView(const std::vector<SceneSample>& samples) : samples_(&samples), indices_(samples.size()) {
  for (std::size_t i = 0; i < indices_.size(); ++i) indices_[i] = i;
}

SampleView::SampleView(const std::vector<SceneSample>& samples, std::vector<std::size_t> indices)
    : samples_(&samples), indices_(std::move(indices)) {
  for (std::size_t i : indices_)
    if (i >= samples.size()) throw Error(ErrorCode::IndexOutOfRange, "sample view index out of range");
}

NormStats compute_stats(const SampleSource& source, bool with_pressure) {
  if (source.size() == 0) throw Error(ErrorCode::EmptyDataset, "cannot compute statistics of an empty dataset");
  detail::RunningStd beta, theta, yx, s, v, p, c;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const BodyParams& params = source.gt_params(i);
    const PosedMesh& mesh = source.gt_mesh(i);
    beta.add_all(params.beta);
    theta.add_all(params.theta);
    yx.add_all(params.root_rot_x);
    yx.add_all(params.root_rot_y);
    s.add_all(mesh.joints.reshaped());
    v.add_all(mesh.vertices.reshaped());
    if (with_pressure) {
      p.add_all(source.gt_vpm(i));
      c.add_all(source.gt_contact(i));
    }
  }
  NormStats out{beta.sigma(), theta.sigma(), yx.sigma(), s.sigma(), v.sigma(), 1.0, 1.0};
  if (with_pressure) {
    out.sigma_p = p.sigma();
    out.sigma_c = c.sigma();
  }
  return out;
}

AdamState adam_init(std::span<Tensor* const> params, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  for (const Tensor* p : params) {
    s.m.emplace_back(p->shape);
    s.v.emplace_back(p->shape);
  }
  return s;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
    throw Error(ErrorCode::ShapeMismatch, "adam_step: parameter, gradient and moment counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape != grads[i].shape || params[i]->shape != state.m[i].shape) {
      throw Error(ErrorCode::ShapeMismatch, "adam_step: tensor " + std::to_string(i) + " has mismatched shapes");
    }
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t e = 0; e < p.size(); ++e) {
      const double g = grads[i][e] + c.weight_decay * p[e];
      m[e] = c.beta1 * m[e] + (1.0 - c.beta1) * g;
      v[e] = c.beta2 * v[e] + (1.0 - c.beta2) * g * g;
      p[e] -= c.lr * (m[e] / bc1) / (std::sqrt(v[e] / bc2) + c.eps);
    }
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) throw Error(ErrorCode::ConfigInvalid, "epochs must be non-negative");
  if (batch_size <= 0) throw Error(ErrorCode::ConfigInvalid, "batch size must be positive");
  if (eval_every <= 0) throw Error(ErrorCode::ConfigInvalid, "eval_every must be positive");
  if (threads <= 0) throw Error(ErrorCode::ConfigInvalid, "threads must be positive");
  if (adam.lr < 0 || adam.weight_decay < 0 || adam.eps <= 0 || adam.beta1 < 0 || adam.beta1 >= 1 ||
      adam.beta2 < 0 || adam.beta2 >= 1) {
    throw Error(ErrorCode::ConfigInvalid, "Adam hyperparameters out of range");
  }
  if (weights.lambda1 < 0 || weights.lambda2 < 0 || weights.lambda3 < 0 || weights.lambda_ws < 0) {
    throw Error(ErrorCode::ConfigInvalid, "loss weights must be non-negative");
  }
  if (rotation_deg < 0 || erase_prob < 0 || erase_prob > 1) {
    throw Error(ErrorCode::ConfigInvalid, "augmentation settings out of range");
  }
}

std::string TrainHistory::to_json_text() const {
  json rows = json::array();
  for (const EpochRecord& e : epochs) {
    json r = {{"epoch", e.epoch}, {"train_loss", e.train_loss}};
    if (e.heldout_v2vp) r["heldout_v2vp"] = *e.heldout_v2vp;
    if (e.heldout_mpjpe_mm) r["heldout_mpjpe_mm"] = *e.heldout_mpjpe_mm;
    rows.push_back(r);
  }
  return json{{"epochs", rows}}.dump(2);
}

void calibrate_psi(BodyMapNet& net, const SampleSource& source) {
  if (source.size() == 0) throw Error(ErrorCode::EmptyDataset, "cannot calibrate on an empty dataset");
  std::vector<detail::RunningStd> acc(kNumParams);
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Eigen::VectorXd psi = source.gt_params(i).flatten();
    for (int k = 0; k < kNumParams; ++k) acc[static_cast<std::size_t>(k)].add_all(std::array<double, 1>{psi[k]});
  }
  for (int k = 0; k < kNumParams; ++k) {
    net.psi_offset[k] = acc[static_cast<std::size_t>(k)].mean;
    net.psi_scale[k] = std::max(0.01, acc[static_cast<std::size_t>(k)].sigma());
  }
}

TrainHistory train_supervised(BodyMapNet& net, const SampleSource& train, const ModelSet& models,
                              const NormStats& stats, const TrainConfig& config, const SampleSource* heldout) {
  config.validate();
  if (train.size() == 0) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  auto step = [&](std::size_t i, int epoch, bool want_grad) {
    return supervised_step(net, train, i, models, stats, config, epoch, want_grad);
  };
  auto eval = [&]() -> std::optional<QuickEval> {
    if (!heldout || heldout->size() == 0) return std::nullopt;
    return quick_eval(net, *heldout, models, config.threads);
  };
  return run_training(parameters(net), train.size(), config, step, eval);
}

TrainHistory train_ws(WsNet& net, const BodyMapNet& mesh_net, const SampleSource& train, const ModelSet& models,
                      const TrainConfig& config, const SampleSource* heldout) {
  config.validate();
  if (train.size() == 0) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  if (config.rotation_deg > 0.0) {
    throw Error(ErrorCode::ConfigInvalid, "rotation augmentation needs 3D labels and is unavailable in WS training");
  }
  if (!(net.config.input_geom == mesh_net.config.input_geom) ||
      !(net.config.latent_geom() == mesh_net.config.latent_geom()) ||
      net.config.latent_channels() != mesh_net.config.latent_channels()) {
    throw Error(ErrorCode::ConfigInvalid, "WS head and mesh network disagree on feature geometry");
  }
  std::vector<FrozenMeshOutputs> frozen(train.size());
  parallel_for(train.size(), config.threads, [&](std::size_t i) {
    frozen[i] = freeze(mesh_net, train.depth(i), train.pressure(i), train.gender(i), models.get(train.gender(i)));
  });
  auto step = [&](std::size_t i, int epoch, bool want_grad) {
    return ws_step(net, frozen[i], train.pressure(i), config, epoch, i, want_grad);
  };
  auto eval = [&]() -> std::optional<QuickEval> {
    if (!heldout || heldout->size() == 0) return std::nullopt;
    return quick_eval(net, mesh_net, *heldout, models, config.threads);
  };
  return run_training(parameters(net), train.size(), config, step, eval);
}

QuickEval quick_eval(const BodyMapNet& net, const SampleSource& source, const ModelSet& models, int threads) {
  if (source.size() == 0) throw Error(ErrorCode::EmptyDataset, "evaluation set is empty");
  std::vector<QuickEval> per(source.size());
  parallel_for(source.size(), threads, [&](std::size_t i) {
    const BodyMapOutput out =
        forward_bodymap(net, source.depth(i), source.pressure(i), source.gender(i), models.get(source.gender(i)));
    per[i] = {v2vp(out.inference_map, source.gt_vpm(i)), mpjpe(out.mesh.joints, source.gt_mesh(i).joints)};
  });
  QuickEval q;
  for (const QuickEval& e : per) {
    q.v2vp += e.v2vp;
    q.mpjpe_mm += e.mpjpe_mm;
  }
  q.v2vp /= static_cast<double>(per.size());
  q.mpjpe_mm /= static_cast<double>(per.size());
  return q;
}

QuickEval quick_eval(const WsNet& net, const BodyMapNet& mesh_net, const SampleSource& source, const ModelSet& models,
                     int threads) {
  if (source.size() == 0) throw Error(ErrorCode::EmptyDataset, "evaluation set is empty");
  std::vector<QuickEval> per(source.size());
  parallel_for(source.size(), threads, [&](std::size_t i) {
    const FrozenMeshOutputs f =
        freeze(mesh_net, source.depth(i), source.pressure(i), source.gender(i), models.get(source.gender(i)));
    per[i] = {v2vp(forward_bodymap_ws(net, f), source.gt_vpm(i)), mpjpe(f.mesh.joints, source.gt_mesh(i).joints)};
  });
  QuickEval q;
  for (const QuickEval& e : per) {
    q.v2vp += e.v2vp;
    q.mpjpe_mm += e.mpjpe_mm;
  }
  q.v2vp /= static_cast<double>(per.size());
  q.mpjpe_mm /= static_cast<double>(per.size());
  return q;
}

std::vector<SampleEval> evaluate(const BodyMapNet& net, const SampleSource& source, const ModelSet& models,
                                 int threads) {
  const auto tables = neighbor_tables(models);
  std::vector<SampleEval> out(source.size());
  parallel_for(source.size(), threads, [&](std::size_t i) {
    const Gender g = source.gender(i);
    const BodyModel& model = models.get(g);
    const BodyMapOutput o = forward_bodymap(net, source.depth(i), source.pressure(i), g, model);
    const PosedMesh& gt = source.gt_mesh(i);
    out[i] = {source.pose_category(i), source.cover(i),
              evaluate_sample({o.params.beta, o.mesh.joints, o.mesh.vertices, o.inference_map},
                              {source.gt_params(i).beta, gt.joints, gt.vertices, source.gt_vpm(i)}, model,
                              tables[g == Gender::Female ? 0 : 1])};
  });
  return out;
}

std::vector<SampleEval> evaluate(const WsNet& net, const BodyMapNet& mesh_net, const SampleSource& source,
                                 const ModelSet& models, int threads) {
  const auto tables = neighbor_tables(models);
  std::vector<SampleEval> out(source.size());
  parallel_for(source.size(), threads, [&](std::size_t i) {
    const Gender g = source.gender(i);
    const BodyModel& model = models.get(g);
    const BodyMapOutput o = forward_bodymap(mesh_net, source.depth(i), source.pressure(i), g, model);
    const FrozenMeshOutputs f{o.mesh, prepare_input(source.depth(i), source.pressure(i), mesh_net.config), o.latent,
                              o.global};
    const PosedMesh& gt = source.gt_mesh(i);
    out[i] = {source.pose_category(i), source.cover(i),
              evaluate_sample({o.params.beta, o.mesh.joints, o.mesh.vertices, forward_bodymap_ws(net, f)},
                              {source.gt_params(i).beta, gt.joints, gt.vertices, source.gt_vpm(i)}, model,
                              tables[g == Gender::Female ? 0 : 1])};
  });
  return out;
}

GroupBy group_by_from_string(std::string_view s) {
  if (s == "none") return GroupBy::None;
  if (s == "pose") return GroupBy::Pose;
  if (s == "cover") return GroupBy::Cover;
  if (s == "pose,cover" || s == "pose+cover") return GroupBy::PoseCover;
  throw Error(ErrorCode::ConfigInvalid, "unknown grouping '" + std::string(s) + "' (none, pose, cover, pose,cover)");
}

GroupedReport group_reports(const std::vector<SampleEval>& evals, GroupBy by) {
  GroupedReport out;
  std::vector<MetricReport> all;
  std::map<std::string, std::vector<MetricReport>> groups;
  for (const SampleEval& e : evals) {
    all.push_back(e.report);
    std::string key;
    switch (by) {
      case GroupBy::None:
        continue;
      case GroupBy::Pose:
        key = to_string(e.pose_category);
        break;
      case GroupBy::Cover:
        key = to_string(e.cover);
        break;
      case GroupBy::PoseCover:
        key = std::string(to_string(e.pose_category)) + "/" + std::string(to_string(e.cover));
        break;
    }
    groups[key].push_back(e.report);
  }
  if (all.empty()) throw Error(ErrorCode::EmptyDataset, "no samples to report");
  out.overall = merge_reports(all);
  for (const auto& [key, reports] : groups) out.groups[key] = merge_reports(reports);
  return out;
}

std::string GroupedReport::to_json_text() const {
  json g = json::object();
  for (const auto& [key, r] : groups) g[key] = report_to_json(r);
  return json{{"overall", report_to_json(overall)}, {"groups", g}}.dump(2);
}

std::string GroupedReport::to_csv_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "group,num_samples,mpjpe_mm,pve_mm,height_cm,chest_cm,waist_cm,hips_cm,v2vp,v2vp_1ea,v2vp_2ea";
  for (const auto& [name, value] : overall.per_part_v2vp) out << ",v2vp_" << name;
  out << '\n';
  auto row = [&](const std::string& key, const MetricReport& r) {
    const ShapeErrors& s = r.shape_err_cm;
    out << key << ',' << r.num_samples << ',' << r.mpjpe_mm << ',' << r.pve_mm << ',' << s.height_cm << ','
        << s.chest_cm << ',' << s.waist_cm << ',' << s.hips_cm << ',' << r.v2vp << ',' << r.v2vp_1ea << ','
        << r.v2vp_2ea;
    for (const auto& [name, value] : r.per_part_v2vp) out << ',' << value;
    out << '\n';
  };
  row("overall", overall);
  for (const auto& [key, r] : groups) row(key, r);
  return out.str();
}

}  // namespace pressmap
