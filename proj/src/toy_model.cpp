#include "pressmap/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pressmap/error.hpp"

namespace pressmap {
namespace {

using Vec3 = Eigen::Vector3d;

constexpr int kTorsoRingSize = 9;
constexpr int kLimbRingSize = 8;
constexpr int kMinLimbRings = 2;

// Multiplicative body proportions. Index order doubles as the order of the
// un-mixed shape directions.
enum Prop { kStature, kShoulder, kHip, kChest, kWaist, kGirth, kArmLen, kLegLen, kHead, kDepth, kNumProps };
using Props = std::array<double, kNumProps>;

// Proportion change per unit beta along each un-mixed direction.
constexpr Props kPropStep = {0.05, 0.08, 0.08, 0.08, 0.10, 0.10, 0.05, 0.05, 0.06, 0.08};

Props base_props(Gender g) {
  Props male{};
  male.fill(1.0);
  Props female = male;
  female[kStature] = 0.94;
  female[kShoulder] = 0.90;
  female[kHip] = 1.08;
  female[kChest] = 0.94;
  female[kWaist] = 0.90;
  female[kGirth] = 0.92;
  female[kDepth] = 0.96;
  switch (g) {
    case Gender::Male: return male;
    case Gender::Female: return female;
    case Gender::Neutral: break;
  }
  Props neutral{};
  for (int i = 0; i < kNumProps; ++i) neutral[i] = 0.5 * (male[i] + female[i]);
  return neutral;
}

struct Knot {
  Vec3 pos;
  double ru;
  double rw;
};

enum TubeId { kTorso = 0, kLeftArm, kRightArm, kLeftLeg, kRightLeg, kNumTubes };

struct Skeleton {
  std::array<std::vector<Knot>, kNumTubes> tubes;  // right-side tubes are mirrored later
  std::array<Vec3, kNumJoints> joints;
};

Vec3 lerp(const Vec3& a, const Vec3& b, double t) { return a + t * (b - a); }

Skeleton build_skeleton(const Props& p) {
  Skeleton sk;
  // Torso and head along +Y: (y, half-width, half-depth).
  const std::array<std::array<double, 3>, 11> torso = {{{-0.13, 0.10, 0.075},
                                                        {-0.05, 0.165, 0.11},
                                                        {0.05, 0.15, 0.10},
                                                        {0.15, 0.14, 0.095},
                                                        {0.32, 0.17, 0.115},
                                                        {0.43, 0.15, 0.09},
                                                        {0.50, 0.055, 0.055},
                                                        {0.55, 0.055, 0.055},
                                                        {0.59, 0.08, 0.09},
                                                        {0.66, 0.085, 0.10},
                                                        {0.74, 0.035, 0.045}}};
  for (std::size_t i = 0; i < torso.size(); ++i) {
    double y = torso[i][0];
    double ru = torso[i][1];
    double rw = torso[i][2] * p[kDepth];
    if (i <= 2) ru *= (i == 1 ? p[kHip] : 0.5 * (1.0 + p[kHip]));
    if (i == 3) { ru *= p[kWaist]; rw *= p[kWaist]; }
    if (i == 4) { ru *= p[kChest]; rw *= p[kChest]; }
    if (i >= 8) {
      ru *= p[kHead];
      rw *= p[kHead];
      y = 0.55 + (y - 0.55) * p[kHead];
    }
    sk.tubes[kTorso].push_back({Vec3(0.0, y, 0.0), ru, rw});
  }

  const double shoulder_shift = (p[kShoulder] - 1.0) * 0.18;
  const Vec3 shoulder(0.18 + shoulder_shift, 0.44, 0.0);
  std::vector<Knot> arm = {{Vec3(0.06 + 0.5 * shoulder_shift, 0.43, 0.0), 0.04, 0.04},
                           {shoulder, 0.05, 0.05},
                           {Vec3(0.24, 0.17, 0.0), 0.038, 0.038},
                           {Vec3(0.27, -0.07, 0.02), 0.03, 0.03},
                           {Vec3(0.29, -0.20, 0.03), 0.015, 0.015}};
  for (std::size_t i = 2; i < arm.size(); ++i) {
    arm[i].pos.x() += shoulder_shift;
    arm[i].pos = shoulder + p[kArmLen] * (arm[i].pos - shoulder);
  }
  for (auto& k : arm) {
    k.ru *= p[kGirth];
    k.rw *= p[kGirth];
  }
  sk.tubes[kLeftArm] = arm;

  const double hip_shift = (p[kHip] - 1.0) * 0.09;
  const Vec3 hip(0.09 + hip_shift, -0.07, 0.0);
  std::vector<Knot> leg = {{hip, 0.075, 0.075},
                           {Vec3(0.10 + hip_shift, -0.47, 0.0), 0.05, 0.05},
                           {Vec3(0.10 + hip_shift, -0.87, -0.02), 0.035, 0.035},
                           {Vec3(0.10 + hip_shift, -0.91, 0.15), 0.025, 0.025}};
  for (std::size_t i = 1; i < leg.size(); ++i) leg[i].pos = hip + p[kLegLen] * (leg[i].pos - hip);
  for (auto& k : leg) {
    k.ru *= p[kGirth];
    k.rw *= p[kGirth];
  }
  sk.tubes[kLeftLeg] = leg;

  auto& j = sk.joints;
  auto torso_y = [&](double y) { return Vec3(0.0, y, 0.0); };
  j[0] = torso_y(0.0);
  j[3] = torso_y(0.10);
  j[6] = torso_y(0.22);
  j[9] = torso_y(0.33);
  j[12] = torso_y(0.50);
  j[15] = torso_y(0.55 + 0.05 * p[kHead]);
  j[1] = leg[0].pos;
  j[4] = leg[1].pos;
  j[7] = leg[2].pos;
  j[10] = lerp(leg[2].pos, leg[3].pos, 0.4);
  j[13] = arm[0].pos;
  j[16] = arm[1].pos;
  j[18] = arm[2].pos;
  j[20] = arm[3].pos;
  j[22] = lerp(arm[3].pos, arm[4].pos, 0.4);
  auto mirror = [](Vec3 v) { v.x() = -v.x(); return v; };
  j[2] = mirror(j[1]);
  j[5] = mirror(j[4]);
  j[8] = mirror(j[7]);
  j[11] = mirror(j[10]);
  j[14] = mirror(j[13]);
  j[17] = mirror(j[16]);
  j[19] = mirror(j[18]);
  j[21] = mirror(j[20]);
  j[23] = mirror(j[22]);

  const double s = p[kStature];
  for (auto& tube : sk.tubes) {
    for (auto& k : tube) {
      k.pos *= s;
      k.ru *= s;
      k.rw *= s;
    }
  }
  for (auto& v : j) v *= s;
  return sk;
}

// Arc-length parameterized polyline through the knots.
struct Polyline {
  std::vector<Knot> knots;
  std::vector<double> arc;

  explicit Polyline(std::vector<Knot> k) : knots(std::move(k)), arc(knots.size(), 0.0) {
    for (std::size_t i = 1; i < knots.size(); ++i) arc[i] = arc[i - 1] + (knots[i].pos - knots[i - 1].pos).norm();
  }
  double length() const { return arc.back(); }

  Knot at(double s) const {
    s = std::clamp(s, 0.0, length());
    std::size_t i = 1;
    while (i + 1 < knots.size() && arc[i] < s) ++i;
    const double span = arc[i] - arc[i - 1];
    const double t = span > 0 ? (s - arc[i - 1]) / span : 0.0;
    return {lerp(knots[i - 1].pos, knots[i].pos, t), knots[i - 1].ru + t * (knots[i].ru - knots[i - 1].ru),
            knots[i - 1].rw + t * (knots[i].rw - knots[i - 1].rw)};
  }

  Vec3 tangent(double s, double delta) const {
    const double a = std::max(0.0, s - delta);
    const double b = std::min(length(), s + delta);
    return (at(b).pos - at(a).pos).normalized();
  }

  double project(const Vec3& q) const {
    double best_s = 0.0;
    double best_d = 1e300;
    for (std::size_t i = 1; i < knots.size(); ++i) {
      const Vec3 a = knots[i - 1].pos;
      const Vec3 d = knots[i].pos - a;
      const double t = std::clamp((q - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
      const double dist = (a + t * d - q).norm();
      if (dist < best_d) {
        best_d = dist;
        best_s = arc[i - 1] + t * (arc[i] - arc[i - 1]);
      }
    }
    return best_s;
  }
};

struct Layout {
  std::array<int, kNumTubes> rings{};
  std::array<int, kNumTubes> ring_size{};
  std::array<int, kNumTubes> first_vertex{};  // start pole index
  int num_vertices = 0;
};

Layout choose_layout(int n_v) {
  const int poles = 2 * kNumTubes;
  const double torso_share = 0.30;
  int best_torso = -1;
  double best_gap = 1e300;
  for (int b = 4; 9 * b + poles <= n_v; ++b) {
    const int rest = n_v - poles - 9 * b;
    if (rest % 8 != 0) continue;
    const int a = rest / 8;
    if (a < 4 * kMinLimbRings) continue;
    const double target = torso_share * (n_v - poles) / 9.0;
    const double gap = std::abs(b - target);
    if (gap < best_gap) {
      best_gap = gap;
      best_torso = b;
    }
  }
  if (best_torso < 0) throw Error(ErrorCode::ConfigInvalid, "no ring layout reaches n_v = " + std::to_string(n_v));
  Layout layout;
  // An odd limb ring total puts the spare ring on the left leg.
  const int limb_rings = (n_v - poles - 9 * best_torso) / 8;
  const int per_side = limb_rings / 2;
  int arm = std::max(kMinLimbRings, static_cast<int>(std::lround(per_side * 0.42)));
  arm = std::min(arm, per_side - kMinLimbRings);
  const int leg = per_side - arm;
  layout.rings = {best_torso, arm, arm, leg + limb_rings % 2, leg};
  layout.ring_size = {kTorsoRingSize, kLimbRingSize, kLimbRingSize, kLimbRingSize, kLimbRingSize};
  int next = 0;
  for (int t = 0; t < kNumTubes; ++t) {
    layout.first_vertex[t] = next;
    next += layout.rings[t] * layout.ring_size[t] + 2;
  }
  layout.num_vertices = next;
  return layout;
}

struct VertexInfo {
  int tube = 0;
  double arc = 0.0;
  Vec3 offset = Vec3::Zero();  // from the ring center, rest frame
  double ru = 0.0;
  bool pole = false;
};

struct Surface {
  MatX3 vertices;
  std::vector<VertexInfo> info;
  std::array<std::vector<Vec3>, kNumTubes> ring_centers;
};

Surface tessellate(const Skeleton& sk, const Layout& layout) {
  Surface out;
  out.vertices.resize(layout.num_vertices, 3);
  out.info.resize(layout.num_vertices);
  for (int t = 0; t < kNumTubes; ++t) {
    const bool mirrored = (t == kRightArm || t == kRightLeg);
    const int source = mirrored ? t - 1 : t;
    const Polyline line(sk.tubes[source]);
    const int rings = layout.rings[t];
    const int k_size = layout.ring_size[t];
    const double spacing = line.length() / (rings - 1);
    const Vec3 ref = (t == kTorso) ? Vec3::UnitX() : (t <= kRightArm ? Vec3::UnitZ() : Vec3::UnitX());
    auto emit = [&](int index, const Vec3& p, const VertexInfo& vi) {
      Vec3 q = p;
      VertexInfo info = vi;
      info.tube = t;
      if (mirrored) {
        q.x() = -q.x();
        info.offset.x() = -info.offset.x();
      }
      out.vertices.row(index) = q.transpose();
      out.info[index] = info;
    };
    int idx = layout.first_vertex[t];
    const Knot first = line.at(0.0);
    const Knot last = line.at(line.length());
    const Vec3 t0 = line.tangent(0.0, 0.5 * spacing);
    const Vec3 t1 = line.tangent(line.length(), 0.5 * spacing);
    const double cap0 = 0.6 * std::min(first.ru, first.rw);
    const double cap1 = 0.6 * std::min(last.ru, last.rw);
    emit(idx++, first.pos - cap0 * t0, {t, -cap0, -cap0 * t0, first.ru, true});
    for (int r = 0; r < rings; ++r) {
      const double s = r * spacing;
      const Knot k = line.at(s);
      Vec3 center = k.pos;
      if (mirrored) center.x() = -center.x();
      out.ring_centers[t].push_back(center);
      Vec3 u, w;
      if (t == kTorso) {
        u = Vec3::UnitX();
        w = Vec3::UnitZ();
      } else {
        const Vec3 tan = line.tangent(s, 0.5 * spacing);
        u = (ref - ref.dot(tan) * tan).normalized();
        w = tan.cross(u);
      }
      for (int i = 0; i < k_size; ++i) {
        const double phi = -0.5 * std::numbers::pi + 2.0 * std::numbers::pi * i / k_size;
        const Vec3 off = k.ru * std::cos(phi) * u + k.rw * std::sin(phi) * w;
        emit(idx++, k.pos + off, {t, s, off, k.ru, false});
      }
    }
    emit(idx++, last.pos + cap1 * t1, {t, line.length() + cap1, cap1 * t1, last.ru, true});
  }
  return out;
}

FaceArray build_faces(const Layout& layout) {
  std::vector<std::array<int, 3>> faces;
  for (int t = 0; t < kNumTubes; ++t) {
    const int k = layout.ring_size[t];
    const int pole0 = layout.first_vertex[t];
    const int ring0 = pole0 + 1;
    const int rings = layout.rings[t];
    const int pole1 = ring0 + rings * k;
    for (int i = 0; i < k; ++i) faces.push_back({pole0, ring0 + (i + 1) % k, ring0 + i});
    for (int r = 0; r + 1 < rings; ++r) {
      const int a = ring0 + r * k;
      const int b = a + k;
      for (int i = 0; i < k; ++i) {
        const int i1 = (i + 1) % k;
        faces.push_back({a + i, a + i1, b + i1});
        faces.push_back({a + i, b + i1, b + i});
      }
    }
    const int last = ring0 + (rings - 1) * k;
    for (int i = 0; i < k; ++i) faces.push_back({pole1, last + i, last + (i + 1) % k});
  }
  FaceArray out(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int e = 0; e < 3; ++e) out(static_cast<Eigen::Index>(f), e) = faces[f][e];
  }
  return out;
}

// Joints driving each tube, ordered along the chain; the first entry is the
// parent joint outside the tube.
struct TubeChain {
  int parent;
  std::vector<int> joints;
};

TubeChain chain_of(int tube) {
  switch (tube) {
    case kTorso: return {-1, {0, 3, 6, 9, 12, 15}};
    case kLeftArm: return {9, {13, 16, 18, 20, 22}};
    case kRightArm: return {9, {14, 17, 19, 21, 23}};
    case kLeftLeg: return {0, {1, 4, 7, 10}};
    case kRightLeg: return {0, {2, 5, 8, 11}};
  }
  return {};
}


}  // namespace

BodyModel generate_toy_model(const ToyModelConfig& config) {
  if (config.n_v < 200) throw Error(ErrorCode::ConfigInvalid, "toy model needs n_v >= 200");
  const Layout layout = choose_layout(config.n_v);
  const Props props = base_props(config.gender);
  const Skeleton skeleton = build_skeleton(props);
  const Surface surface = tessellate(skeleton, layout);
  const int nv = layout.num_vertices;
  const double stature = props[kStature];

  BodyModel model;
  model.gender = config.gender;
  model.template_vertices = surface.vertices;
  model.faces = std::make_shared<const FaceArray>(build_faces(layout));
  model.kinematic_parents.assign(kSmplParents.begin(), kSmplParents.end());

  // Shape basis: central differences of the generator along seeded mixtures
  // of the proportion directions.
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd mix = Eigen::MatrixXd::Identity(kNumBetas, kNumProps);
  for (int r = 0; r < kNumBetas; ++r)
    for (int c = 0; c < kNumProps; ++c) mix(r, c) += 0.35 * normal(rng);
  for (int r = 0; r < kNumBetas; ++r) {
    for (int q = 0; q < r; ++q) mix.row(r) -= mix.row(r).dot(mix.row(q)) * mix.row(q);
    mix.row(r).normalize();
  }
  model.shape_basis.resize(3 * nv, kNumBetas);
  for (int l = 0; l < kNumBetas; ++l) {
    Props plus = props;
    Props minus = props;
    for (int m = 0; m < kNumProps; ++m) {
      plus[m] += mix(l, m) * kPropStep[m];
      minus[m] -= mix(l, m) * kPropStep[m];
    }
    const MatX3 diff = 0.5 * (tessellate(build_skeleton(plus), layout).vertices -
                              tessellate(build_skeleton(minus), layout).vertices);
    model.shape_basis.col(l) = Eigen::Map<const Eigen::VectorXd>(diff.data(), 3 * nv);
  }

  // Joint regressor: interpolate the two rings bracketing each joint.
  std::array<Polyline, kNumTubes> lines = {Polyline(skeleton.tubes[kTorso]), Polyline(skeleton.tubes[kLeftArm]),
                                           Polyline(skeleton.tubes[kLeftArm]), Polyline(skeleton.tubes[kLeftLeg]),
                                           Polyline(skeleton.tubes[kLeftLeg])};
  std::array<double, kNumJoints> joint_arc{};
  std::array<int, kNumJoints> joint_tube{};
  for (int t = 0; t < kNumTubes; ++t) {
    for (int j : chain_of(t).joints) {
      Vec3 q = skeleton.joints[j];
      if (t == kRightArm || t == kRightLeg) q.x() = -q.x();
      joint_arc[j] = lines[t].project(q);
      joint_tube[j] = t;
    }
  }
  model.joint_regressor = Eigen::MatrixXd::Zero(kNumJoints, nv);
  for (int j = 0; j < kNumJoints; ++j) {
    const int t = joint_tube[j];
    const int rings = layout.rings[t];
    const int k = layout.ring_size[t];
    const double spacing = lines[t].length() / (rings - 1);
    const double pos = std::clamp(joint_arc[j] / spacing, 0.0, static_cast<double>(rings - 1));
    const int r0 = std::min(static_cast<int>(std::floor(pos)), rings - 2);
    const double alpha = pos - r0;
    const int base = layout.first_vertex[t] + 1;
    for (int i = 0; i < k; ++i) {
      model.joint_regressor(j, base + r0 * k + i) += (1.0 - alpha) / k;
      model.joint_regressor(j, base + (r0 + 1) * k + i) += alpha / k;
    }
  }

  // Skinning: Gaussian falloff of the arc distance to each bone's extent.
  const double falloff = 0.035 * stature;
  model.skin_weights = Eigen::MatrixXd::Zero(nv, kNumJoints);
  for (int v = 0; v < nv; ++v) {
    const VertexInfo& vi = surface.info[v];
    const TubeChain chain = chain_of(vi.tube);
    const auto& js = chain.joints;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(kNumJoints);
    for (std::size_t i = 0; i < js.size(); ++i) {
      const double lo = (i == 0 && chain.parent < 0) ? -1e9 : joint_arc[js[i]];
      const double hi = (i + 1 < js.size()) ? joint_arc[js[i + 1]] : 1e9;
      const double d = vi.arc < lo ? lo - vi.arc : (vi.arc > hi ? vi.arc - hi : 0.0);
      w[js[i]] = std::exp(-(d / falloff) * (d / falloff));
    }
    if (chain.parent >= 0) {
      const double d = std::max(0.0, vi.arc - joint_arc[js[0]]);
      w[chain.parent] = std::exp(-(d / falloff) * (d / falloff));
    }
    for (int j = 0; j < kNumJoints; ++j)
      if (w[j] < 1e-3) w[j] = 0.0;
    model.skin_weights.row(v) = (w / w.sum()).transpose();
  }

  // Measurement rings: torso rings nearest the chest, waist, and hip knots.
  const Polyline& torso_line = lines[kTorso];
  const double torso_spacing = torso_line.length() / (layout.rings[kTorso] - 1);
  auto torso_ring = [&](double y_rest) {
    const double s = y_rest * stature - torso_line.knots.front().pos.y();
    const int r = std::clamp(static_cast<int>(std::lround(s / torso_spacing)), 0, layout.rings[kTorso] - 1);
    std::vector<int> ring(kTorsoRingSize);
    for (int i = 0; i < kTorsoRingSize; ++i) ring[i] = layout.first_vertex[kTorso] + 1 + r * kTorsoRingSize + i;
    return ring;
  };
  model.measurement_rings["chest"] = torso_ring(0.32);
  model.measurement_rings["waist"] = torso_ring(0.15);
  model.measurement_rings["hips"] = torso_ring(-0.05);

  // Part masks: first matching rule wins, so masks are disjoint.
  std::vector<int> owner(nv, -1);
  auto part_index = [](std::string_view name) {
    return static_cast<int>(std::find(kPartNames.begin(), kPartNames.end(), name) - kPartNames.begin());
  };
  const double s_unit = stature;
  for (int v = 0; v < nv; ++v) {
    const VertexInfo& vi = surface.info[v];
    const Vec3 p = model.template_vertices.row(v).transpose();
    const bool left = p.x() > 0.0;
    int part = -1;
    if (vi.tube == kTorso) {
      const double y = p.y();
      const bool back = vi.offset.z() < 0.0 && std::abs(vi.offset.x()) < 0.45 * std::max(vi.ru, 1e-9);
      const double side = vi.ru > 0 ? vi.offset.x() / vi.ru : 0.0;
      if (y >= 0.56 * s_unit) part = part_index("head");
      else if (y < -0.04 * s_unit && (back || (vi.pole && vi.arc < 0))) part = part_index("ischium");
      else if (back && y < 0.08 * s_unit) part = part_index("sacrum");
      else if (back && y < 0.46 * s_unit) part = part_index("spine");
      else if (y < 0.06 * s_unit && side > 0.6) part = part_index("left_hip");
      else if (y < 0.06 * s_unit && side < -0.6) part = part_index("right_hip");
    } else if (vi.tube == kLeftLeg || vi.tube == kRightLeg) {
      const int ankle = vi.tube == kLeftLeg ? 7 : 8;
      const double len = lines[vi.tube].length();
      if (vi.arc >= len - 0.07 * s_unit) part = part_index(left ? "left_toes" : "right_toes");
      else if (vi.arc >= joint_arc[ankle] - 0.05 * s_unit && vi.arc <= joint_arc[ankle] + 0.03 * s_unit &&
               vi.offset.z() < -0.3 * vi.ru)
        part = part_index(left ? "left_heel" : "right_heel");
    } else {
      const int elbow = vi.tube == kLeftArm ? 18 : 19;
      const int shoulder = vi.tube == kLeftArm ? 16 : 17;
      if (std::abs(vi.arc - joint_arc[elbow]) <= 0.05 * s_unit) part = part_index(left ? "left_elbow" : "right_elbow");
      else if (std::abs(vi.arc - joint_arc[shoulder]) <= 0.05 * s_unit)
        part = part_index(left ? "left_shoulder" : "right_shoulder");
    }
    owner[v] = part;
  }
  // Coarse meshes can leave a window empty; fall back to the nearest free
  // vertex to the part's anchor joint.
  const std::array<int, 14> anchor = {7, 8, 10, 11, 18, 19, 16, 17, 6, 15, 1, 2, 0, 0};
  model.part_masks.resize(kPartNames.size());
  for (std::size_t k = 0; k < kPartNames.size(); ++k) model.part_masks[k].name = std::string(kPartNames[k]);
  for (int v = 0; v < nv; ++v)
    if (owner[v] >= 0) model.part_masks[owner[v]].vertices.push_back(v);
  for (std::size_t k = 0; k < kPartNames.size(); ++k) {
    if (!model.part_masks[k].vertices.empty()) continue;
    const Vec3 target = skeleton.joints[anchor[k]];
    int best = -1;
    double best_d = 1e300;
    for (int v = 0; v < nv; ++v) {
      if (owner[v] >= 0) continue;
      const double d = (model.template_vertices.row(v).transpose() - target).norm();
      if (d < best_d) {
        best_d = d;
        best = v;
      }
    }
    owner[best] = static_cast<int>(k);
    model.part_masks[k].vertices.push_back(best);
  }

  // Per-joint axis-angle bounds in the rest frame (x flexes, y twists, z abducts).
  struct Limit {
    double lx, ux, ly, uy, lz, uz;
  };
  std::array<Limit, kNumJoints> lim{};
  auto set_pair = [&](int left_joint, int right_joint, Limit l) {
    lim[left_joint] = l;
    lim[right_joint] = {l.lx, l.ux, -l.uy, -l.ly, -l.uz, -l.lz};
  };
  set_pair(1, 2, {-1.2, 0.3, -0.3, 0.3, -0.2, 0.5});
  set_pair(4, 5, {0.0, 1.8, -0.05, 0.05, -0.05, 0.05});
  set_pair(7, 8, {-0.3, 0.5, -0.1, 0.1, -0.1, 0.1});
  set_pair(10, 11, {-0.1, 0.1, -0.1, 0.1, -0.1, 0.1});
  set_pair(13, 14, {-0.1, 0.1, -0.1, 0.1, -0.1, 0.1});
  set_pair(16, 17, {-1.0, 0.6, -0.4, 0.4, -0.3, 1.2});
  set_pair(18, 19, {-1.8, 0.0, -0.3, 0.3, -0.1, 0.1});
  set_pair(20, 21, {-0.3, 0.3, -0.3, 0.3, -0.3, 0.3});
  set_pair(22, 23, {-0.2, 0.2, -0.2, 0.2, -0.2, 0.2});
  for (int j : {3, 6, 9}) lim[j] = {-0.2, 0.3, -0.2, 0.2, -0.15, 0.15};
  lim[12] = {-0.3, 0.3, -0.4, 0.4, -0.2, 0.2};
  lim[15] = {-0.3, 0.3, -0.3, 0.3, -0.3, 0.3};
  model.pose_limits.resize(kNumPoseParams, 2);
  for (int j = 1; j < kNumJoints; ++j) {
    const Limit& l = lim[j];
    const int r = 3 * (j - 1);
    model.pose_limits.row(r) << l.lx, l.ux;
    model.pose_limits.row(r + 1) << l.ly, l.uy;
    model.pose_limits.row(r + 2) << l.lz, l.uz;
  }

  validate(model);
  return model;
}

}  // namespace pressmap
