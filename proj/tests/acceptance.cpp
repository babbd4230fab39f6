// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "counting_source.hpp"
#include "pressmap/error.hpp"
#include "pressmap/gradcheck_suite.hpp"
#include "pressmap/metrics.hpp"
#include "pressmap/network.hpp"
#include "pressmap/projection.hpp"
#include "pressmap/synth_data.hpp"
#include "pressmap/train.hpp"

namespace pressmap {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << x;
  return s.str();
}

DatasetConfig dataset_config(std::uint64_t seed, int per_cell, int extra) {
  DatasetConfig c;
  c.seed = seed;
  int k = 0;
  for (PoseCategory p : {PoseCategory::Supine, PoseCategory::LeftLateral, PoseCategory::RightLateral})
    for (Cover cv : {Cover::Uncovered, Cover::Cover1, Cover::Cover2}) c.counts[p][cv] = per_cell + (k++ < extra ? 1 : 0);
  return c;
}

struct Data {
  ModelSet models = ModelSet::generate(690, 7);
  std::vector<SceneSample> train = generate_samples(models, dataset_config(101, 56, 8));    // 512
  std::vector<SceneSample> heldout = generate_samples(models, dataset_config(202, 14, 0));  // 126
};

TrainConfig paper_defaults(int epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 8;
  c.eval_every = 10;
  c.seed = 1;
  return c;
}

// ---------------------------------------------------------------- 1

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const auto results = run_gradcheck_suite(0);
  const double elapsed = seconds_since(t0);
  bool pass = elapsed < 120.0;
  double worst_op = 0.0, worst_composite = 0.0;
  std::set<std::string> names;
  for (const auto& r : results) {
    names.insert(r.name);
    const bool composite = r.name.find("end_to_end") != std::string::npos;
    const double want = composite ? kCompositeTolerance : kOpTolerance;
    pass = pass && r.passed && r.rel_error < want && r.tolerance == want;
    (composite ? worst_composite : worst_op) = std::max(composite ? worst_composite : worst_op, r.rel_error);
  }
  for (const char* n : {"loss_smpl", "loss_v2v", "loss_p3d", "loss_contact", "loss_p2d", "loss_preg",
                        "supervised_end_to_end", "ws_end_to_end"}) {
    pass = pass && names.count(n);
  }
  return {pass, std::to_string(results.size()) + " checks, worst op rel err " + fmt(worst_op) +
                    ", worst composite " + fmt(worst_composite) + ", " + fmt(elapsed, 3) + " s"};
}

// ---------------------------------------------------------------- 2

Outcome projection_round_trip(const Data& d) {
  const auto scenes = generate_samples(d.models, dataset_config(303, 6, 0));
  const double eps = SceneConfig{}.contact_eps_m;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n01;
  double max_err = 0.0, max_err_clean = 0.0, max_adj = 0.0;
  int active = 0, bad = 0, precondition_failures = 0;
  for (std::size_t k = 0; k < 50; ++k) {
    const SceneSample& s = scenes[k];
    const ImageGeometry& g = s.pressure.geom;
    const Eigen::VectorXi bins = bin_vertices(s.gt_mesh.vertices, g);
    std::vector<int> contact(g.rows * g.cols, 0), lifted(g.rows * g.cols, 0);
    for (int v = 0; v < bins.size(); ++v) {
      if (bins[v] < 0) continue;
      ++(s.gt_mesh.vertices(v, 2) <= eps ? contact : lifted)[bins[v]];
    }
    const PressureImage rp = reproject_2d(project_gt(s.pressure, s.gt_mesh, eps), s.gt_mesh, g);
    for (int r = 0; r < g.rows; ++r) {
      for (int c = 0; c < g.cols; ++c) {
        if (s.pressure.values(r, c) <= 0.0) continue;
        ++active;
        const int t = r * g.cols + c;
        if (contact[t] == 0) ++precondition_failures;
        const double e = std::abs(rp.values(r, c) - s.pressure.values(r, c));
        max_err = std::max(max_err, e);
        if (e > 1e-6) ++bad;
        if (lifted[t] == 0) max_err_clean = std::max(max_err_clean, e);
      }
    }
    ImageArray u(g.rows, g.cols);
    for (int i = 0; i < u.size(); ++i) u.data()[i] = n01(rng);
    Eigen::VectorXd v(s.gt_mesh.num_vertices());
    for (int i = 0; i < v.size(); ++i) v[i] = n01(rng);
    const double lhs = (u.array() * reproject_2d(v, s.gt_mesh, g).values.array()).sum();
    const double rhs = reproject_2d_vjp(u, s.gt_mesh, g).dot(v);
    max_adj = std::max(max_adj, std::abs(lhs - rhs));
  }
  const bool pass = precondition_failures == 0 && max_err <= 1e-6 && max_adj <= 1e-9;
  return {pass, "50 body scenes, " + std::to_string(active) + " active taxels, " + std::to_string(bad) +
                    " off by > 1e-6 kPa (max " + fmt(max_err) + " kPa; taxels without lifted vertices max " +
                    fmt(max_err_clean) + "), adjoint max diff " + fmt(max_adj)};
}

// ---------------------------------------------------------------- 3

// Closed k-ring neighborhoods from a dense face-adjacency scan.
std::vector<std::vector<int>> brute_rings(const BodyModel& m, int k) {
  const int n = m.num_vertices();
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (int f = 0; f < m.faces->rows(); ++f)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (a != b) adj[(*m.faces)(f, a)][(*m.faces)(f, b)] = 1;
  std::vector<std::vector<int>> out(n);
  for (int v = 0; v < n; ++v) {
    std::vector<int> dist(n, -1);
    dist[v] = 0;
    for (int step = 1; step <= k; ++step)
      for (int a = 0; a < n; ++a)
        if (dist[a] == step - 1)
          for (int b = 0; b < n; ++b)
            if (adj[a][b] && dist[b] < 0) dist[b] = step;
    for (int w = 0; w < n; ++w)
      if (w != v && dist[w] > 0) out[v].push_back(w);
  }
  return out;
}

Outcome metric_oracles(const Data& d) {
  const BodyModel& m = d.models.female;
  const NeighborTable table = build_neighbor_table(m);
  const auto ring1 = brute_rings(m, 1), ring2 = brute_rings(m, 2);
  auto smooth = [](const Eigen::VectorXd& p, const std::vector<std::vector<int>>& rings) {
    Eigen::VectorXd out(p.size());
    for (int v = 0; v < p.size(); ++v) {
      long double s = p[v];
      for (int w : rings[v]) s += p[w];
      out[v] = static_cast<double>(s / (rings[v].size() + 1));
    }
    return out;
  };
  auto mse = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    long double s = 0;
    for (int i = 0; i < a.size(); ++i) s += (long double)(a[i] - b[i]) * (a[i] - b[i]);
    return static_cast<double>(s / a.size());
  };
  auto mean_dist_mm = [](const MatX3& a, const MatX3& b) {
    long double s = 0;
    for (int i = 0; i < a.rows(); ++i) {
      const double dx = a(i, 0) - b(i, 0), dy = a(i, 1) - b(i, 1), dz = a(i, 2) - b(i, 2);
      s += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return static_cast<double>(1000.0L * s / a.rows());
  };

  std::mt19937_64 rng(23);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01;
  auto random_map = [&](double zero_frac) {
    Eigen::VectorXd p(m.num_vertices());
    for (int i = 0; i < p.size(); ++i) p[i] = u01(rng) < zero_frac ? 0.0 : 40.0 * u01(rng);
    return p;
  };
  auto random_points = [&](int n, double scale) {
    MatX3 x(n, 3);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = scale * n01(rng);
    return x;
  };

  double worst = 0.0;
  bool identical_zero = true, constants_exact = true;
  for (int trial = 0; trial < 100; ++trial) {
    const MatX3 jp = random_points(kNumJoints, 0.5), jg = random_points(kNumJoints, 0.5);
    const MatX3 vp = random_points(m.num_vertices(), 0.5), vg = random_points(m.num_vertices(), 0.5);
    const Eigen::VectorXd pp = random_map(0.6), pg = random_map(0.8);
    worst = std::max(worst, std::abs(mpjpe(jp, jg) - mean_dist_mm(jp, jg)));
    worst = std::max(worst, std::abs(pve(vp, vg) - mean_dist_mm(vp, vg)));
    worst = std::max(worst, std::abs(v2vp(pp, pg) - mse(pp, pg)));
    worst = std::max(worst, std::abs(v2vp_smoothed(pp, pg, table.ring1) - mse(smooth(pp, ring1), smooth(pg, ring1))));
    worst = std::max(worst, std::abs(v2vp_smoothed(pp, pg, table.ring2) - mse(smooth(pp, ring2), smooth(pg, ring2))));
    const PartValues parts = per_part_v2vp(pp, pg, m.part_masks);
    for (std::size_t i = 0; i < m.part_masks.size(); ++i) {
      long double s = 0;
      for (int v : m.part_masks[i].vertices) s += (long double)(pp[v] - pg[v]) * (pp[v] - pg[v]);
      worst = std::max(worst, std::abs(parts[i].second - static_cast<double>(s / m.part_masks[i].vertices.size())));
    }
    identical_zero = identical_zero && v2vp(pp, pp) == 0.0 && v2vp_smoothed(pp, pp, table.ring2) == 0.0;
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(m.num_vertices(), 100.0 * u01(rng));
    constants_exact = constants_exact && smooth_kring(c, table.ring1) == c && smooth_kring(c, table.ring2) == c;
  }
  return {worst <= 1e-9 && identical_zero && constants_exact,
          "100 random inputs, max |library - oracle| " + fmt(worst) + ", constant maps exact: " +
              (constants_exact ? "yes" : "no") + ", v2vP of identical maps zero: " + (identical_zero ? "yes" : "no")};
}

// ---------------------------------------------------------------- 4

Outcome force_conservation(const Data& d) {
  int supported = 0;
  double worst = 0.0;
  for (const SceneSample& s : d.train) {
    bool all_in = true;
    for (int v = 0; v < s.gt_mesh.num_vertices(); ++v) {
      if (s.gt_mesh.vertices(v, 2) <= SceneConfig{}.contact_eps_m &&
          !taxel_of_point(s.gt_mesh.vertices.row(v).head<2>().transpose(), s.pressure.geom)) {
        all_in = false;
      }
    }
    if (!all_in) continue;
    ++supported;
    const double force = s.pressure.values.sum() * s.pressure.geom.cell_area() * 1000.0;
    const double weight = s.body_mass_kg * kGravity;
    worst = std::max(worst, std::abs(force - weight) / weight);
  }
  return {supported > 0 && worst <= 1e-6,
          std::to_string(supported) + " of " + std::to_string(d.train.size()) +
              " scenes fully supported, worst relative force error " + fmt(worst)};
}

// ---------------------------------------------------------------- 5

bool same_bits(const ParamSet& a, const ParamSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].shape != b[i].shape) return false;
    if (std::memcmp(a[i].data.data(), b[i].data.data(), a[i].data.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

bool same_history(const TrainHistory& a, const TrainHistory& b) {
  if (a.epochs.size() != b.epochs.size()) return false;
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    const EpochRecord &x = a.epochs[i], &y = b.epochs[i];
    if (std::memcmp(&x.train_loss, &y.train_loss, sizeof(double)) != 0) return false;
    if (x.heldout_v2vp.has_value() != y.heldout_v2vp.has_value()) return false;
    if (x.heldout_v2vp && (*x.heldout_v2vp != *y.heldout_v2vp || *x.heldout_mpjpe_mm != *y.heldout_mpjpe_mm)) return false;
  }
  return true;
}

struct SupervisedRun {
  BodyMapNet net;
  TrainHistory history;
  double seconds = 0.0;
};

SupervisedRun train_mesh_net(const Data& d, const SampleSource& train, const SampleSource* held, int epochs) {
  const auto t0 = Clock::now();
  SupervisedRun r{BodyMapNet::init(NetConfig{}), {}, 0.0};
  calibrate_psi(r.net, train);
  r.history = train_supervised(r.net, train, d.models, compute_stats(train), paper_defaults(epochs), held);
  r.seconds = seconds_since(t0);
  return r;
}

Outcome supervised_training(const Data& d, BodyMapNet& trained) {
  const SampleView train(d.train), held(d.heldout);
  const SupervisedRun a = train_mesh_net(d, train, &held, 100);
  const SupervisedRun b = train_mesh_net(d, train, &held, 100);
  const EpochRecord &first = a.history.epochs.front(), &last = a.history.epochs.back();
  const double v_ratio = *last.heldout_v2vp / *first.heldout_v2vp;
  const double m_ratio = *last.heldout_mpjpe_mm / *first.heldout_mpjpe_mm;
  const bool identical = same_bits(a.net.encoder, b.net.encoder) && same_bits(a.net.mesh_head, b.net.mesh_head) &&
                         same_bits(a.net.point.params, b.net.point.params) && same_history(a.history, b.history);
  trained = a.net;
  return {v_ratio <= 0.5 && m_ratio <= 0.6 && a.seconds < 900.0 && identical,
          "v2vP " + fmt(*first.heldout_v2vp) + " -> " + fmt(*last.heldout_v2vp) + " (" + fmt(100 * v_ratio, 3) +
              "%, need <= 50%), MPJPE " + fmt(*first.heldout_mpjpe_mm) + " -> " + fmt(*last.heldout_mpjpe_mm) +
              " mm (" + fmt(100 * m_ratio, 3) + "%, need <= 60%), " + fmt(a.seconds, 3) + " s, repeat run " +
              (identical ? "bit-identical" : "DIFFERS")};
}

// ---------------------------------------------------------------- 6 and 8

TrainConfig ws_defaults() {
  TrainConfig c;
  c.epochs = 15;
  c.batch_size = 8;
  c.eval_every = 5;
  c.seed = 1;
  c.weights.lambda_ws = 500.0;
  return c;
}

Outcome weak_supervision(const Data& d, const BodyMapNet& mesh_net, WsNet& trained) {
  const SampleView train_view(d.train), held(d.heldout);
  const testing::CountingSource train(train_view);
  trained = WsNet::init(mesh_net.config);
  const TrainHistory h = train_ws(trained, mesh_net, train, d.models, ws_defaults(), &held);
  const long reads = train.params_reads + train.mesh_reads + train.vpm_reads + train.contact_reads;
  const double v0 = *h.epochs.front().heldout_v2vp, v1 = *h.epochs.back().heldout_v2vp;
  return {reads == 0 && v1 / v0 <= 0.7, "v2vP " + fmt(v0) + " -> " + fmt(v1) + " (" + fmt(100 * v1 / v0, 3) +
                                            "%, need <= 70%), ground-truth reads during training: " +
                                            std::to_string(reads)};
}

Outcome lifted_pressure(const Data& d, const BodyMapNet& mesh_net, const WsNet& ws) {
  double lifted = 0.0, contact = 0.0;
  long n_lifted = 0, n_contact = 0;
  for (const SceneSample& s : d.heldout) {
    const FrozenMeshOutputs f = freeze(mesh_net, s.depth, s.pressure, s.gender, d.models.get(s.gender));
    const VertexPressureMap p = forward_bodymap_ws(ws, f);
    for (int v = 0; v < p.size(); ++v) {
      if (f.mesh.vertices(v, 2) > 0.0) {
        lifted += std::abs(p[v]);
        ++n_lifted;
      } else {
        contact += std::abs(p[v]);
        ++n_contact;
      }
    }
  }
  if (n_contact == 0 || n_lifted == 0) return {false, "predicted meshes have no contact or no lifted vertices"};
  const double ml = lifted / n_lifted, mc = contact / n_contact;
  return {ml <= 0.1 * mc, "mean |p| lifted " + fmt(ml) + " kPa vs contact " + fmt(mc) + " kPa (ratio " +
                              fmt(mc > 0 ? ml / mc : INFINITY) + ", need <= 0.1)"};
}

// ---------------------------------------------------------------- 7

bool complete(const GroupedReport& r, std::size_t n) {
  std::size_t total = 0;
  bool finite = std::isfinite(r.overall.v2vp) && std::isfinite(r.overall.mpjpe_mm);
  for (const auto& [key, g] : r.groups) {
    total += g.num_samples;
    finite = finite && std::isfinite(g.v2vp) && std::isfinite(g.mpjpe_mm) && g.per_part_v2vp.size() == kPartNames.size();
  }
  return finite && r.groups.size() == 3 && total == n && r.overall.num_samples == n;
}

Outcome lateral_to_supine(const Data& d) {
  const SampleView lateral(d.train, select(d.train, SampleFilter::lateral_only()));
  const SampleView all(d.train);
  const SampleView supine(d.heldout, select(d.heldout, SampleFilter::supine_only()));
  const SupervisedRun mesh = train_mesh_net(d, lateral, nullptr, 100);
  const GroupedReport supervised = group_reports(evaluate(mesh.net, supine, d.models), GroupBy::Cover);

  WsNet lateral_ws = WsNet::init(mesh.net.config), all_ws = WsNet::init(mesh.net.config);
  train_ws(lateral_ws, mesh.net, lateral, d.models, ws_defaults());
  train_ws(all_ws, mesh.net, all, d.models, ws_defaults());
  const GroupedReport r_lat = group_reports(evaluate(lateral_ws, mesh.net, supine, d.models), GroupBy::Cover);
  const GroupedReport r_all = group_reports(evaluate(all_ws, mesh.net, supine, d.models), GroupBy::Cover);
  const bool reports = complete(supervised, supine.size()) && complete(r_lat, supine.size()) &&
                       complete(r_all, supine.size());
  return {reports && r_all.overall.v2vp <= r_lat.overall.v2vp,
          "supine MPJPE " + fmt(supervised.overall.mpjpe_mm) + " mm, supine v2vP: supervised lateral " +
              fmt(supervised.overall.v2vp) + ", WS lateral " + fmt(r_lat.overall.v2vp) + ", WS all poses " +
              fmt(r_all.overall.v2vp) + ", reports complete: " + (reports ? "yes" : "no")};
}

// ---------------------------------------------------------------- 9

Outcome fim_ablation(const Data& d) {
  const SampleView train(d.train), held(d.heldout);
  const NormStats stats = compute_stats(train);
  std::string detail;
  bool pass = true;
  for (int mask = 1; mask < 16; ++mask) {
    NetConfig nc;
    nc.toggles = {(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0, (mask & 8) != 0};
    BodyMapNet net = BodyMapNet::init(nc);
    calibrate_psi(net, train);
    TrainConfig tc = paper_defaults(5);
    tc.eval_every = 5;
    train_supervised(net, train, d.models, stats, tc);
    const GroupedReport r = group_reports(evaluate(net, held, d.models), GroupBy::None);
    pass = pass && std::isfinite(r.overall.v2vp) && r.overall.num_samples == held.size();
    detail += (detail.empty() ? "" : ", ") + nc.toggles.label() + " " + fmt(r.overall.v2vp);
  }
  return {pass, "15 subsets, 5 epochs each, held-out v2vP: " + detail};
}

}  // namespace
}  // namespace pressmap

int main() {
  using namespace pressmap;
  std::cout << std::unitbuf;
  const auto t0 = Clock::now();
  Data d;
  std::cout << "data: " << d.train.size() << " training and " << d.heldout.size() << " held-out scenes in "
            << fmt(seconds_since(t0), 3) << " s\n";

  BodyMapNet mesh_net = BodyMapNet::init(NetConfig{});
  WsNet ws = WsNet::init(NetConfig{});
  bool have_mesh = false, have_ws = false;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient suite", [] { return gradient_suite(); }},
      {"projection round trip", [&] { return projection_round_trip(d); }},
      {"metric oracles", [&] { return metric_oracles(d); }},
      {"force conservation", [&] { return force_conservation(d); }},
      {"supervised training",
       [&] {
         Outcome o = supervised_training(d, mesh_net);
         have_mesh = true;
         return o;
       }},
      {"weakly supervised training",
       [&] {
         if (!have_mesh) return Outcome{false, "needs the supervised network"};
         Outcome o = weak_supervision(d, mesh_net, ws);
         have_ws = true;
         return o;
       }},
      {"lateral to supine protocol", [&] { return lateral_to_supine(d); }},
      {"lifted-vertex pressure",
       [&] { return have_ws ? lifted_pressure(d, mesh_net, ws) : Outcome{false, "needs the WS network"}; }},
      {"FIM ablation", [&] { return fim_ablation(d); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << o.detail << " [" << fmt(seconds_since(t), 3) << " s]\n";
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed in "
            << fmt(seconds_since(t0), 4) << " s\n";
  return failed == 0 ? 0 : 1;
}
