#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "ptfse/diff/conv.hpp"
#include "ptfse/diff/gradcheck.hpp"
#include "ptfse/diff/lstm.hpp"
#include "ptfse/diff/ops.hpp"
#include "ptfse/masking/loss.hpp"
#include "ptfse/model/ptfse.hpp"
#include "ptfse/rng.hpp"

// Finite-difference gradient suites, one per component, shared by the CLI
// and the test binaries.
namespace ptfse::verify {

using diff::Shape;
using DTensor = diff::Tensor<double>;
// Module and end-to-end checks run in extended precision: gradients deep in
// the network reach 1e-9 while the loss is O(1), below what central
// differences resolve in double.
using LScalar = long double;
using LTensor = diff::Tensor<LScalar>;

inline constexpr double kFdStep = 1e-3;
inline constexpr double kFdStepExtended = 1e-4;

template <typename T>
constexpr double fd_step_for() {
  return std::is_same_v<T, LScalar> ? kFdStepExtended : kFdStep;
}

struct CheckOutcome {
  std::string name;
  double max_error = 0.0;
};

struct SuiteResult {
  std::string suite;
  std::size_t seeds = 0;
  std::vector<CheckOutcome> checks;

  double max_error() const {
    double m = 0.0;
    for (const auto& c : checks) m = std::max(m, c.max_error);
    return m;
  }
  const CheckOutcome* worst() const {
    const CheckOutcome* w = nullptr;
    for (const auto& c : checks)
      if (!w || c.max_error > w->max_error) w = &c;
    return w;
  }
};

namespace detail {

template <typename T = double>
diff::Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<T> v(diff::numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return diff::Tensor<T>(std::move(shape), std::move(v));
}

// Values in [-hi, -gap] U [gap, hi], keeping finite differences away from kinks.
inline DTensor away_from_zero(Shape shape, Rng& rng, double gap = 0.05, double hi = 1.0) {
  std::vector<double> v(diff::numel(shape));
  for (auto& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(gap, hi);
  return DTensor(std::move(shape), std::move(v));
}

// Scalar read-out with random weights so no gradient entry cancels by symmetry.
template <typename T>
diff::Tensor<T> probe(const diff::Tensor<T>& out, const diff::Tensor<T>& weights) {
  return diff::sum(diff::mul(out, weights));
}

class Recorder {
 public:
  explicit Recorder(SuiteResult& r) : r_(r) {}

  template <typename T, typename F>
  void check(const std::string& name, const F& f, const diff::Tensor<T>& x) {
    record(name, diff::grad_check(f, x, fd_step_for<T>()));
  }

  // Gradient of `loss` with respect to every tensor of a parameter store.
  template <typename T, typename F>
  void check_params(const std::string& prefix, diff::ParamStore<T>& store, const F& loss) {
    for (const auto& [name, t] : store.entries())
      record(prefix + ":" + name, diff::grad_check([&](const diff::Tensor<T>&) { return loss(); }, t, fd_step_for<T>()));
    store.zero_grad();
  }

 private:
  void record(const std::string& name, double err) {
    for (auto& c : r_.checks)
      if (c.name == name) {
        c.max_error = std::max(c.max_error, err);
        return;
      }
    r_.checks.push_back({name, err});
  }

  SuiteResult& r_;
};

inline diff::LstmWeights<double> random_lstm(std::size_t input, std::size_t hidden, Rng& rng, double scale = 0.3) {
  return {random_tensor({4 * hidden, input}, rng, -scale, scale), random_tensor({4 * hidden, hidden}, rng, -scale, scale),
          random_tensor({4 * hidden}, rng, -scale, scale), random_tensor({4 * hidden}, rng, -scale, scale)};
}

// Partition of the 9-bin toy spectrum with every band divisible by its step.
inline masking::BandPartition toy_partition() {
  masking::BandPartition p;
  p.ranges = {masking::BinRange{0, 3}, masking::BinRange{3, 5}, masking::BinRange{5, 9}};
  return p;
}

template <typename T = double>
masking::MaskTensor<T> random_mask(std::size_t frames, const std::vector<std::size_t>& bins, Rng& rng) {
  return {random_tensor<T>({2, frames, bins.size()}, rng, -2.0, 2.0), bins, true};
}

// ---------------------------------------------------------------------------

inline void diffcore_seed(Recorder& rec, Rng& rng) {
  using namespace diff;
  const Shape s{3, 4};
  auto w = random_tensor(s, rng);
  auto a = random_tensor(s, rng), b = random_tensor(s, rng);

  rec.check("sigmoid", [&](const DTensor& x) { return probe(sigmoid(x), w); }, random_tensor(s, rng, -4, 4));
  rec.check("tanh", [&](const DTensor& x) { return probe(diff::tanh(x), w); }, random_tensor(s, rng, -3, 3));
  rec.check("relu", [&](const DTensor& x) { return probe(relu(x), w); }, away_from_zero(s, rng));
  rec.check("scale", [&](const DTensor& x) { return probe(scale(x, -1.7), w); }, a);
  rec.check("square", [&](const DTensor& x) { return probe(square(x), w); }, a);
  rec.check("add.lhs", [&](const DTensor& x) { return probe(add(x, b), w); }, a);
  rec.check("add.rhs", [&](const DTensor& x) { return probe(add(a, x), w); }, b);
  rec.check("sub.lhs", [&](const DTensor& x) { return probe(sub(x, b), w); }, a);
  rec.check("sub.rhs", [&](const DTensor& x) { return probe(sub(a, x), w); }, b);
  rec.check("mul.lhs", [&](const DTensor& x) { return probe(mul(x, b), w); }, a);
  rec.check("mul.rhs", [&](const DTensor& x) { return probe(mul(a, x), w); }, b);
  rec.check("mul.same", [&](const DTensor& x) { return probe(mul(x, x), w); }, a);
  rec.check("sum", [&](const DTensor& x) { return diff::sum(square(x)); }, a);
  rec.check("mean", [&](const DTensor& x) { return mean(mul(x, w)); }, a);
  rec.check("reshape", [&](const DTensor& x) { return probe(reshape(x, {4, 3}), reshape(w, {4, 3})); }, a);

  auto w_cat_last = random_tensor({3, 9}, rng);
  auto c = random_tensor({3, 5}, rng);
  rec.check("concat_last", [&](const DTensor& x) { return probe(concat_last<double>({x, c}), w_cat_last); }, a);
  auto w_cat_first = random_tensor({5, 4}, rng);
  auto d = random_tensor({2, 4}, rng);
  rec.check("concat_first", [&](const DTensor& x) { return probe(concat_first<double>({d, x}), w_cat_first); }, a);
  auto w_slice = random_tensor({2, 4}, rng);
  rec.check("slice_first", [&](const DTensor& x) { return probe(slice_first(x, 1, 3), w_slice); }, a);
  rec.check("delay_first", [&](const DTensor& x) { return probe(delay_first(x), w); }, a);
  auto w_front = random_tensor({4, 3}, rng);
  rec.check("last_to_front", [&](const DTensor& x) { return probe(last_to_front(x), w_front); }, a);

  auto W = random_tensor({5, 4}, rng), bias = random_tensor({5}, rng);
  auto x3 = random_tensor({2, 3, 4}, rng);
  auto w_lin = random_tensor({2, 3, 5}, rng);
  rec.check("linear.x", [&](const DTensor& x) { return probe(linear(x, W, bias), w_lin); }, x3);
  rec.check("linear.weight", [&](const DTensor& p) { return probe(linear(x3, p, bias), w_lin); }, W);
  rec.check("linear.bias", [&](const DTensor& p) { return probe(linear(x3, W, p), w_lin); }, bias);

  const std::vector<std::vector<std::size_t>> groups{{0}, {1, 3}, {2}};
  auto w_group = random_tensor({3, 3}, rng);
  rec.check("group_mean_last", [&](const DTensor& x) { return probe(group_mean_last(x, groups), w_group); }, a);
  auto w_pool = random_tensor({3, 2}, rng);
  rec.check("avg_pool_freq", [&](const DTensor& x) { return probe(avg_pool_freq(x, 2), w_pool); }, a);
  rec.check("mse.lhs", [&](const DTensor& x) { return mse(x, b); }, a);
  rec.check("mse.rhs", [&](const DTensor& x) { return mse(a, x); }, b);

  auto cx = random_tensor({2, 2, 7}, rng), ck = random_tensor({3, 2, 3}, rng), cb = random_tensor({3}, rng);
  auto w_c1 = random_tensor({2, 3, 7}, rng);
  rec.check("conv1d.x", [&](const DTensor& x) { return probe(conv1d_freq(x, ck, cb), w_c1); }, cx);
  rec.check("conv1d.kernel", [&](const DTensor& p) { return probe(conv1d_freq(cx, p, cb), w_c1); }, ck);
  rec.check("conv1d.bias", [&](const DTensor& p) { return probe(conv1d_freq(cx, ck, p), w_c1); }, cb);

  auto gx = random_tensor({2, 4, 5}, rng), gk = random_tensor({2, 2, 3, 3}, rng), gb = random_tensor({2}, rng);
  auto w_c2 = random_tensor({2, 4, 5}, rng);
  rec.check("conv2d.x", [&](const DTensor& x) { return probe(conv2d(x, gk, gb), w_c2); }, gx);
  rec.check("conv2d.kernel", [&](const DTensor& p) { return probe(conv2d(gx, p, gb), w_c2); }, gk);
  rec.check("conv2d.bias", [&](const DTensor& p) { return probe(conv2d(gx, gk, p), w_c2); }, gb);

  auto lx = random_tensor({5, 2, 3}, rng, -0.5, 0.5);
  auto lw = random_lstm(3, 4, rng);
  auto w_l = random_tensor({5, 2, 4}, rng, 0.5, 1.5);
  auto lstm_with = [&](int which) {
    return [&, which](const DTensor& p) {
      auto weights = lw;
      switch (which) {
        case 0: return probe(lstm_layer(p, weights), w_l);
        case 1: weights.w_ih = p; break;
        case 2: weights.w_hh = p; break;
        case 3: weights.b_ih = p; break;
        default: weights.b_hh = p; break;
      }
      return probe(lstm_layer(lx, weights), w_l);
    };
  };
  rec.check("lstm.x", lstm_with(0), lx);
  rec.check("lstm.w_ih", lstm_with(1), lw.w_ih);
  rec.check("lstm.w_hh", lstm_with(2), lw.w_hh);
  rec.check("lstm.b_ih", lstm_with(3), lw.b_ih);
  rec.check("lstm.b_hh", lstm_with(4), lw.b_hh);

  auto sx = random_tensor({4, 3}, rng, -0.5, 0.5);
  std::vector<LstmWeights<double>> stack{random_lstm(3, 4, rng), random_lstm(4, 2, rng)};
  auto w_s = random_tensor({2}, rng, 0.5, 1.5);
  rec.check("lstm_stack.last_frame", [&](const DTensor& x) { return probe(last_frame(lstm_forward(x, stack)), w_s); }, sx);
}

inline void masking_seed(Recorder& rec, Rng& rng) {
  const std::size_t frames = 4;
  const auto bands = toy_partition();
  const auto all = masking::all_bins(9);
  auto pred = random_mask(frames, all, rng);
  const auto target = random_mask(frames, all, rng);
  rec.check("pp_cirm_loss", [&](const DTensor& x) { return masking::pp_cirm_loss(masking::MaskTensor<double>{x, all, true}, target, bands); },
            pred.values);

  masking::BandPartition weighted = bands;
  weighted.weights = {rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)};
  rec.check("pp_cirm_loss.weighted",
            [&](const DTensor& x) { return masking::pp_cirm_loss(masking::MaskTensor<double>{x, all, true}, target, weighted); },
            pred.values);

  const std::vector<std::size_t> subset{1, 3, 5, 7};
  auto sub_pred = random_mask(frames, subset, rng);
  const auto sub_target = random_mask(frames, subset, rng);
  rec.check("pp_cirm_loss.drop_band",
            [&](const DTensor& x) { return masking::pp_cirm_loss(masking::MaskTensor<double>{x, subset, true}, sub_target, bands); },
            sub_pred.values);

  rec.check("cirm_mse_loss", [&](const DTensor& x) { return masking::cirm_mse_loss(masking::MaskTensor<double>{x, all, true}, target); },
            pred.values);
}

inline model::ModelConfig toy_model(bool f_trans, bool t_trans) {
  auto c = model::ModelConfig::toy();
  c.enable_f_trans = f_trans;
  c.enable_t_trans = t_trans;
  return c;
}

inline void ftrans_seed(Recorder& rec, Rng& rng) {
  diff::ParamStore<LScalar> store;
  auto p = model::FTransParams<LScalar>::create(store, 9, 9, rng);
  auto x = random_tensor<LScalar>({5, 9}, rng, 0.0, 2.0);
  auto w = random_tensor<LScalar>({5, 9}, rng);
  rec.check("f_trans.x", [&](const LTensor& in) { return probe(model::f_trans_forward(in, p), w); }, x);
  rec.check_params("f_trans", store, [&] { return probe(model::f_trans_forward(x, p), w); });
}

inline void ttrans_seed(Recorder& rec, Rng& rng) {
  diff::ParamStore<LScalar> store;
  auto p = model::TTransParams<LScalar>::create(store, 9, 6, 7, rng);
  auto x = random_tensor<LScalar>({5, 9}, rng, 0.0, 2.0);
  auto w = random_tensor<LScalar>({5, 9}, rng);
  rec.check("t_trans.x", [&](const LTensor& in) { return probe(model::t_trans_forward(in, p), w); }, x);
  rec.check_params("t_trans", store, [&] { return probe(model::t_trans_forward(x, p), w); });
}

inline void gfull_seed(Recorder& rec, Rng& rng) {
  diff::ParamStore<LScalar> store;
  auto p = model::GFullParams<LScalar>::create(store, 9, 8, 2, rng);
  // Bias the output layer up so relu operates away from its kink.
  for (auto& v : store.get("gfull.fc.bias").node().value) v = static_cast<LScalar>(rng.uniform(0.3, 0.6));
  auto x = random_tensor<LScalar>({5, 9}, rng, 0.0, 2.0);
  auto w = random_tensor<LScalar>({5, 9}, rng);
  rec.check("g_full.x", [&](const LTensor& in) { return probe(model::g_full_forward(in, p), w); }, x);
  rec.check_params("g_full", store, [&] { return probe(model::g_full_forward(x, p), w); });
}

inline void gsub_seed(Recorder& rec, Rng& rng) {
  diff::ParamStore<LScalar> store;
  const std::size_t N = 1, frames = 6, tau = 1;
  auto p = model::GSubParams<LScalar>::create(store, 2 * N + 2, 6, 2, rng);
  auto x = random_tensor<LScalar>({frames, 9}, rng, 0.0, 2.0);
  auto emb = random_tensor<LScalar>({frames, 9}, rng, 0.0, 1.0);
  const std::vector<std::size_t> bins{0, 2, 4, 6, 8};
  auto w = random_tensor<LScalar>({2, frames - tau, bins.size()}, rng);
  auto run = [&](const LTensor& xi, const LTensor& ei) {
    return probe(model::g_sub_forward(model::subband_unfold(xi, ei, N, bins), p, tau), w);
  };
  rec.check("subband_unfold.x", [&](const LTensor& in) { return run(in, emb); }, x);
  rec.check("subband_unfold.embedding", [&](const LTensor& in) { return run(x, in); }, emb);
  rec.check_params("g_sub", store, [&] { return run(x, emb); });
}

// One variant per seed, rotating through all four; the full variant also
// gets a drop-band check with the plain MSE loss.
inline void model_seed(Recorder& rec, Rng& rng, std::uint64_t seed) {
  const std::size_t frames = 4;
  const auto bands = toy_partition();
  const auto mag = random_tensor<LScalar>({frames, 9}, rng, 0.05, 2.0);
  const bool f = seed % 2 == 1;
  const bool t = (seed / 2) % 2 == 1;
  model::PtFse<LScalar> net(toy_model(f, t), seed);
  for (auto& v : net.params().get("gfull.fc.bias").node().value) v = static_cast<LScalar>(rng.uniform(0.3, 0.6));
  const std::string variant = f && t ? "full" : f ? "f_trans" : t ? "t_trans" : "baseline";
  const auto target = random_mask<LScalar>(frames, masking::all_bins(9), rng);
  rec.check_params("model." + variant + ".pp_cirm", net.params(),
                   [&] { return masking::pp_cirm_loss(net.forward(mag), target, bands); });
  if (f && t) {
    const std::vector<std::size_t> subset{0, 3, 6};
    const auto sub_target = random_mask<LScalar>(frames, subset, rng);
    rec.check_params("model.full.drop_band.mse", net.params(),
                     [&] { return masking::cirm_mse_loss(net.forward(mag, subset), sub_target); });
  }
}

}  // namespace detail

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"diffcore", "masking", "ftrans", "ttrans", "gfull", "gsub", "model"};
  return names;
}

// Runs the named suite over `seeds` seeds starting at `first_seed`.
inline SuiteResult run_suite(std::string_view name, std::size_t seeds = 20, std::uint64_t first_seed = 1) {
  SuiteResult result;
  result.suite = std::string(name);
  result.seeds = seeds;
  detail::Recorder rec(result);
  for (std::uint64_t s = first_seed; s < first_seed + seeds; ++s) {
    Rng rng(s * 7919 + 17);
    if (name == "diffcore") detail::diffcore_seed(rec, rng);
    else if (name == "masking") detail::masking_seed(rec, rng);
    else if (name == "ftrans") detail::ftrans_seed(rec, rng);
    else if (name == "ttrans") detail::ttrans_seed(rec, rng);
    else if (name == "gfull") detail::gfull_seed(rec, rng);
    else if (name == "gsub") detail::gsub_seed(rec, rng);
    else if (name == "model") detail::model_seed(rec, rng, s);
    else throw InvalidConfig("unknown gradient-check suite '" + std::string(name) + "'");
  }
  return result;
}

}  // namespace ptfse::verify
