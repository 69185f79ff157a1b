#include <cmath>

#include "cmsa/config.hpp"
#include "cmsa/errors.hpp"
#include "cmsa/gradcheck.hpp"
#include "cmsa/head.hpp"
#include "cmsa/model.hpp"
#include "cmsa/ops.hpp"
#include "cmsa/synthdata.hpp"

namespace cmsa {

namespace {

constexpr double kH = 1e-5;
constexpr double kPrimitiveTol = 1e-6;
constexpr double kNetworkTol = 1e-4;

void run_primitive_checks(GradCheckSuite& suite, std::mt19937_64& rng) {
  auto push = [&suite](GradCheck check) {
    suite.checks.push_back(std::move(check));
    suite.all_pass = suite.all_pass && suite.checks.back().pass;
  };

  {
    Tensor a = random_normal({3, 4}, 1.0, rng);
    Tensor b = random_normal({4, 2}, 1.0, rng);
    push(check_op_gradients("matmul", [&] { return matmul(a, b); }, {a, b}, kH, kPrimitiveTol, rng));
  }
  {
    Tensor x = random_normal({2, 5, 5}, 1.0, rng);
    Tensor w = random_normal({3, 2, 3, 3}, 0.5, rng);
    Tensor b = random_normal({3}, 0.5, rng);
    push(check_op_gradients("conv2d_k3", [&] { return conv2d(x, w, b); }, {x, w, b}, kH,
                            kPrimitiveTol, rng));
    Tensor w1 = random_normal({4, 2, 1, 1}, 0.5, rng);
    Tensor b1 = random_normal({4}, 0.5, rng);
    push(check_op_gradients("conv2d_k1", [&] { return conv2d(x, w1, b1); }, {x, w1, b1}, kH,
                            kPrimitiveTol, rng));
    push(check_op_gradients("conv2d_stride2", [&] { return conv2d(x, w, b, 2); }, {x, w, b}, kH,
                            kPrimitiveTol, rng));
  }
  {
    Tensor x = random_normal({3, 4}, 2.0, rng);
    push(check_op_gradients("softmax", [&] { return softmax(x, 1); }, {x}, kH, kPrimitiveTol, rng));
    Tensor mask = Tensor::from_data({3, 4}, {1, 0, 1, 1, 1, 1, 0, 1, 0, 1, 1, 1});
    push(check_op_gradients("masked_softmax", [&] { return masked_softmax(x, 1, mask); }, {x}, kH,
                            kPrimitiveTol, rng));
  }
  {
    Tensor x = random_normal({5}, 1.0, rng);
    push(check_op_gradients("l2_normalize", [&] { return l2_normalize(x, 0); }, {x}, kH,
                            kPrimitiveTol, rng));
  }
  {
    Tensor a = random_normal({2, 3}, 1.0, rng);
    Tensor b = random_normal({2, 3}, 1.0, rng);
    push(check_op_gradients("add", [&] { return add(a, b); }, {a, b}, kH, kPrimitiveTol, rng));
    push(check_op_gradients("sub", [&] { return sub(a, b); }, {a, b}, kH, kPrimitiveTol, rng));
    push(check_op_gradients("hadamard", [&] { return hadamard(a, b); }, {a, b}, kH, kPrimitiveTol,
                            rng));
    push(check_op_gradients("scalar_mul", [&] { return scalar_mul(a, -1.7); }, {a}, kH,
                            kPrimitiveTol, rng));
    push(check_op_gradients("add_scalar", [&] { return add_scalar(a, 0.3); }, {a}, kH,
                            kPrimitiveTol, rng));
    push(check_op_gradients("tanh", [&] { return tanh(a); }, {a}, kH, kPrimitiveTol, rng));
    push(check_op_gradients("sigmoid", [&] { return sigmoid(a); }, {a}, kH, kPrimitiveTol, rng));
    push(check_op_gradients("relu", [&] { return relu(a); }, {a}, kH, kPrimitiveTol, rng));
    Tensor s = Tensor::from_data({1}, {0.8}, true);
    push(check_op_gradients("mul_by_scalar_tensor", [&] { return mul_by_scalar_tensor(a, s); },
                            {a, s}, kH, kPrimitiveTol, rng));
  }
  {
    Tensor p = random_uniform({6}, 0.1, 0.9, rng, true);
    push(check_op_gradients("log_clamped", [&] { return log_clamped(p); }, {p}, kH, kPrimitiveTol,
                            rng));
  }
  {
    Tensor a = random_normal({2, 2}, 1.0, rng);
    Tensor b = random_normal({2, 3}, 1.0, rng);
    push(check_op_gradients("concat", [&] { return concat({a, b}, 1); }, {a, b}, kH, kPrimitiveTol,
                            rng));
    Tensor x = random_normal({3, 4, 2}, 1.0, rng);
    push(check_op_gradients("sum_axis", [&] { return sum(x, 1); }, {x}, kH, kPrimitiveTol, rng));
    push(check_op_gradients("mean_axis", [&] { return mean(x, 1); }, {x}, kH, kPrimitiveTol, rng));
    push(check_op_gradients("permute", [&] { return permute(x, {2, 0, 1}); }, {x}, kH,
                            kPrimitiveTol, rng));
    push(check_op_gradients("reshape", [&] { return reshape(x, {6, 4}); }, {x}, kH, kPrimitiveTol,
                            rng));
  }
  {
    Tensor table = random_normal({7, 3}, 1.0, rng);
    std::vector<int> ids{1, 4, 4, 0};
    push(check_op_gradients("rows", [&] { return rows(table, ids); }, {table}, kH, kPrimitiveTol,
                            rng));
    Tensor c = random_normal({4}, 1.0, rng);
    push(check_op_gradients("tile_spatial", [&] { return tile_spatial(c, 2, 3); }, {c}, kH,
                            kPrimitiveTol, rng));
    Tensor plane = random_normal({2, 3}, 1.0, rng);
    push(check_op_gradients("broadcast_channels", [&] { return broadcast_channels(plane, 4); },
                            {plane}, kH, kPrimitiveTol, rng));
  }
}

}  // namespace

GradCheckSuite run_gradcheck_suite(const RunConfig& config, std::uint64_t seed) {
  GradCheckSuite suite;
  std::mt19937_64 rng(seed);
  run_primitive_checks(suite, rng);

  // Full network: one generated sample at the configured extents, a few
  // probes per parameter group.
  RunConfig net_config = config;
  net_config.seed = seed;
  Model model(net_config);

  GenConfig gen_config;
  gen_config.seed = seed;
  gen_config.count = 8;
  gen_config.height = config.image_h;
  gen_config.width = config.image_w;
  gen_config.n_objects_min = config.n_objects_min;
  gen_config.n_objects_max = config.n_objects_max;
  std::vector<Sample> samples = generate(gen_config);
  // Prefer a 4-word expression so the word axis is exercised.
  const Sample* sample = &samples[0];
  for (const Sample& s : samples) {
    if (s.tokens.size() > sample->tokens.size()) sample = &s;
  }

  auto loss_fn = [&model, sample]() {
    return bce_loss(model.forward(sample->image, sample->tokens), sample->mask);
  };
  for (const auto& [name, param] : model.parameters()) {
    GradCheck check = check_gradients("network/" + name, loss_fn, {param}, kH, kNetworkTol,
                                      std::min<std::size_t>(4, param.size()), rng);
    suite.checks.push_back(check);
    suite.all_pass = suite.all_pass && check.pass;
  }
  return suite;
}

}  // namespace cmsa
