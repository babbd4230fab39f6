#include "pressmap/gradcheck.hpp"

#include <cmath>
#include <random>

namespace pressmap::ad {

namespace {

double contracted(const Graph& f, const std::vector<Tensor>& inputs, const Tensor& cotangent) {
  Tape tape;
  std::vector<Var> vars;
  for (const Tensor& t : inputs) vars.push_back(tape.constant(t));
  const Tensor& out = f(tape, vars).value();
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += cotangent[i] * out[i];
  return s;
}

}  // namespace

GradcheckResult check_gradient(const std::string& name, const Graph& f, const std::vector<Tensor>& inputs,
                               double tolerance, std::uint64_t seed, double h, std::size_t max_coords) {
  Tape tape;
  std::vector<Var> vars;
  for (const Tensor& t : inputs) vars.push_back(tape.variable(t));
  const Var out = f(tape, vars);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor cotangent(out.shape());
  if (out.size() == 1) {
    cotangent[0] = 1.0;
  } else {
    for (double& c : cotangent.data) c = normal(rng);
  }
  tape.backward(out, cotangent);

  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  std::size_t checked = 0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const std::size_t size = inputs[k].size();
    const std::size_t stride = (max_coords == 0 || size <= max_coords) ? 1 : size / max_coords;
    for (std::size_t i = 0; i < size; i += stride) {
      const double analytic = tape.has_grad(vars[k]) ? tape.grad(vars[k])[i] : 0.0;
      const double x = inputs[k][i];
      probe[k][i] = x + h;
      const double fp = contracted(f, probe, cotangent);
      probe[k][i] = x - h;
      const double fm = contracted(f, probe, cotangent);
      probe[k][i] = x;
      const double numeric = (fp - fm) / (2.0 * h);
      diff2 += (analytic - numeric) * (analytic - numeric);
      a2 += analytic * analytic;
      n2 += numeric * numeric;
      ++checked;
    }
  }
  GradcheckResult r;
  r.name = name;
  r.tolerance = tolerance;
  r.num_checked = checked;
  const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-300});
  r.rel_error = std::sqrt(diff2) / denom;
  r.passed = std::isfinite(r.rel_error) && r.rel_error < tolerance;
  return r;
}

}  // namespace pressmap::ad
