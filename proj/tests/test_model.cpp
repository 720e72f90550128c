#include <gtest/gtest.h>

#include <cmath>

#include "ptfse/model/config.hpp"
#include "ptfse/model/ptfse.hpp"
#include "ptfse/rng.hpp"
#include "ptfse/verify/gradcheck_suites.hpp"

using namespace ptfse;
using namespace ptfse::model;

namespace {

template <typename T>
Tensor<T> random_frames(std::size_t frames, std::size_t F, Rng& rng, double lo = 0.0, double hi = 2.0) {
  std::vector<T> v(frames * F);
  for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return Tensor<T>({frames, F}, std::move(v));
}

template <typename T>
std::vector<T> vals(const Tensor<T>& x) {
  return {x.values().begin(), x.values().end()};
}

// Entries of mask frame m (both planes) from a [2, T, W] tensor.
template <typename T>
std::vector<T> mask_frame(const MaskTensor<T>& m, std::size_t frame) {
  std::vector<T> out;
  const std::size_t W = m.width(), frames = m.frames();
  for (std::size_t p = 0; p < 2; ++p)
    for (std::size_t c = 0; c < W; ++c) out.push_back(m.values.values()[(p * frames + frame) * W + c]);
  return out;
}

ModelConfig default_config() { return ModelConfig{}; }

template <typename T>
void check_look_ahead_causality(const ModelConfig& cfg, std::size_t frames, int trials) {
  const std::size_t F = cfg.freq_bins(), tau = cfg.look_ahead;
  Rng rng(77);
  for (int trial = 0; trial < trials; ++trial) {
    PtFse<T> net(cfg, 100 + trial);
    const auto x = random_frames<T>(frames, F, rng);
    const auto base = net.forward(x);
    const std::size_t m = rng.index(frames - tau - 1);
    auto y = x.clone();
    for (std::size_t f = 0; f < F; ++f) y.values()[(m + tau + 1) * F + f] += static_cast<T>(rng.uniform(0.5, 1.5));
    const auto out = net.forward(y);
    for (std::size_t k = 0; k <= m; ++k) EXPECT_EQ(mask_frame(out, k), mask_frame(base, k)) << "trial " << trial << " frame " << k;
    EXPECT_NE(mask_frame(out, m + 1), mask_frame(base, m + 1));
  }
}

}  // namespace

TEST(Config, Defaults) {
  const ModelConfig c;
  EXPECT_EQ(c.freq_bins(), 257u);
  EXPECT_EQ(c.look_ahead, 2u);
  EXPECT_EQ(c.context, 15u);
  EXPECT_EQ(c.subband_width(), 32u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ValidationErrors) {
  ModelConfig c;
  c.context = 257;
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = ModelConfig{};
  c.sub_hidden = 0;
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = ModelConfig{};
  c.hop = 200;
  EXPECT_THROW(c.validate(), InvalidConfig);
}

TEST(Latency, DefaultConfigIs32Ms) {
  const ModelConfig c;
  EXPECT_EQ(c.latency_samples(), 512u);
  EXPECT_DOUBLE_EQ(c.latency_ms(), 32.0);
}

TEST(ParamCount, DefaultBaselineAndFull) {
  const ModelConfig c;
  const auto base = param_count(c, Variant::baseline).total;
  const auto full = param_count(c, Variant::full).total;
  EXPECT_EQ(base, 5637635u);
  EXPECT_EQ(full, 6433322u);
  EXPECT_LE(std::abs(base / 5.64e6 - 1.0), 0.02);
  EXPECT_LE(std::abs(full / 6.34e6 - 1.0), 0.15);
  EXPECT_EQ(param_count(c, Variant::f_trans).total - base, 66321u);
  EXPECT_EQ(param_count(c, Variant::t_trans).total - base, 729366u);
}

TEST(ParamCount, ToyConfigHandCount) {
  // F = 9, N = 1 (sub-band input 4), full hidden 8, sub hidden 6, 2 layers each.
  // LSTM(in, h) = 4h(in + h) + 8h; Linear(in, out) = in*out + out.
  //   gfull: LSTM(9,8)=608 + LSTM(8,8)=576 + Linear(8,9)=81           = 1265
  //   gsub:  LSTM(4,6)=288 + LSTM(6,6)=336 + Linear(6,2)=14           =  638
  //   ftrans: conv1d 9+1, attention 1x1 conv 1+1, Linear(9,9)=90, mix 2+1 = 105
  //   ttrans (hidden 9, fc 9): LSTM(9,9)=720 + 3 x Linear(9,9)=270   =  990
  const ModelConfig toy = ModelConfig::toy();
  EXPECT_EQ(param_count(toy, Variant::baseline).total, 1903u);
  EXPECT_EQ(param_count(toy, Variant::f_trans).total, 2008u);
  EXPECT_EQ(param_count(toy, Variant::t_trans).total, 2893u);
  EXPECT_EQ(param_count(toy, Variant::full).total, 2998u);
  const auto per = param_count(toy, Variant::full).per_module;
  EXPECT_EQ(per.at("gfull"), 1265u);
  EXPECT_EQ(per.at("gsub"), 638u);
  EXPECT_EQ(per.at("ftrans"), 105u);
  EXPECT_EQ(per.at("ttrans"), 990u);
}

TEST(ParamCount, ClosedFormMatchesInstantiatedModel) {
  for (auto v : {Variant::baseline, Variant::f_trans, Variant::t_trans, Variant::full}) {
    const auto cfg = with_variant(ModelConfig::toy(), v);
    const PtFse<double> net(cfg, 1);
    EXPECT_EQ(net.params().scalar_count(), param_count(cfg, v).total);
    const auto by_prefix = net.params().scalar_count_by_prefix();
    EXPECT_EQ(by_prefix, param_count(cfg, v).per_module);
  }
  const PtFse<float> full_size(default_config(), 0);
  EXPECT_EQ(full_size.params().scalar_count(), 6433322u);
}

TEST(Init, ForgetGateBiasAndRanges) {
  const PtFse<double> net(ModelConfig::toy(), 3);
  const auto& b = net.params().get("gfull.lstm1.b_ih");
  for (std::size_t j = 0; j < 32; ++j) EXPECT_EQ(b.values()[j], (j >= 8 && j < 16) ? 1.0 : 0.0);
  const auto& w = net.params().get("gfull.lstm1.w_ih");
  for (double v : w.values()) EXPECT_LE(std::abs(v), 1.0 / 3.0);
  for (double v : net.params().get("gsub.fc.bias").values()) EXPECT_EQ(v, 0.0);
}

TEST(FTrans, ShapeAndFrameWiseBehaviour) {
  Rng rng(1);
  diff::ParamStore<double> store;
  const auto p = FTransParams<double>::create(store, 9, 9, rng);
  const auto x = random_frames<double>(4, 9, rng);
  EXPECT_EQ(f_trans_forward(x, p).shape(), x.shape());
  const auto out = vals(f_trans_forward(Tensor<double>::zeros({5, 9}), p));
  for (std::size_t t = 1; t < 5; ++t)
    for (std::size_t f = 0; f < 9; ++f) EXPECT_EQ(out[t * 9 + f], out[f]);
  EXPECT_THROW(f_trans_forward(Tensor<double>::zeros({5, 8}), p), ShapeError);
}

TEST(TTrans, ShapeAndCausality) {
  Rng rng(2);
  diff::ParamStore<double> store;
  const auto p = TTransParams<double>::create(store, 9, 6, 7, rng);
  const auto x = random_frames<double>(6, 9, rng);
  const auto base = vals(t_trans_forward(x, p));
  EXPECT_EQ(base.size(), 54u);
  for (std::size_t t0 = 0; t0 < 6; ++t0) {
    auto y = x.clone();
    y.values()[t0 * 9 + 4] += 1.0;
    const auto out = vals(t_trans_forward(y, p));
    for (std::size_t i = 0; i < t0 * 9; ++i) EXPECT_EQ(out[i], base[i]);
  }
  EXPECT_THROW(t_trans_forward(Tensor<double>::zeros({3, 8}), p), ShapeError);
}

TEST(GFull, ZeroParametersGiveZeroEmbedding) {
  Rng rng(3);
  diff::ParamStore<double> store;
  const auto p = GFullParams<double>::create(store, 9, 8, 2, rng);
  for (const auto& [_, t] : store.entries()) {
    Tensor<double> w = t;
    for (double& v : w.values()) v = 0.0;
  }
  const auto emb = g_full_forward(random_frames<double>(5, 9, rng), p);
  for (double v : emb.values()) EXPECT_EQ(v, 0.0);
}

TEST(GFull, CausalAndNonNegative) {
  Rng rng(4);
  diff::ParamStore<double> store;
  const auto p = GFullParams<double>::create(store, 9, 8, 2, rng);
  const auto x = random_frames<double>(6, 9, rng);
  const auto base = vals(g_full_forward(x, p));
  for (double v : base) EXPECT_GE(v, 0.0);
  auto y = x.clone();
  y.values()[3 * 9] += 1.0;
  const auto out = vals(g_full_forward(y, p));
  for (std::size_t i = 0; i < 27; ++i) EXPECT_EQ(out[i], base[i]);
}

TEST(SubbandUnfold, CircularNeighbours) {
  std::vector<double> xv(5), ev(5);
  for (int f = 0; f < 5; ++f) xv[f] = f, ev[f] = 10 + f;
  const Tensor<double> x({1, 5}, xv), emb({1, 5}, ev);
  const auto z = vals(subband_unfold(x, emb, 1, {0, 4}));
  EXPECT_EQ(z, (std::vector<double>{4, 0, 1, 10, 3, 4, 0, 14}));
  EXPECT_EQ(subband_unfold(x, emb, 0, {2}).dim(2), 2u);
  EXPECT_EQ(vals(subband_unfold(x, emb, 0, {2})), (std::vector<double>{2, 12}));
  EXPECT_THROW(subband_unfold(x, emb, 5, {0}), InvalidConfig);
  EXPECT_EQ(subband_unfold(Tensor<double>::zeros({2, 40}), Tensor<double>::zeros({2, 40}), 15, {0}).dim(2), 32u);
}

TEST(SubbandUnfold, GradientIsScatter) {
  Rng rng(5);
  auto x = random_frames<double>(2, 5, rng);
  auto e = random_frames<double>(2, 5, rng);
  x.set_requires_grad(true);
  e.set_requires_grad(true);
  diff::backward(diff::sum(subband_unfold(x, e, 1, masking::all_bins(5))));
  // Each bin appears in three neighbourhoods; each embedding element once.
  for (double g : x.grad()) EXPECT_EQ(g, 3.0);
  for (double g : e.grad()) EXPECT_EQ(g, 1.0);
}

TEST(GSub, AlignmentShapeAndShortInput) {
  Rng rng(6);
  diff::ParamStore<double> store;
  const auto p = GSubParams<double>::create(store, 4, 6, 2, rng);
  const auto z = Tensor<double>::zeros({7, 3, 4});
  EXPECT_EQ(g_sub_forward(z, p, 2).shape(), (diff::Shape{2, 5, 3}));
  EXPECT_THROW(g_sub_forward(Tensor<double>::zeros({2, 3, 4}), p, 2), InvalidInput);
}

TEST(PtFse, ShapeContractAllVariants) {
  Rng rng(7);
  for (auto v : {Variant::baseline, Variant::f_trans, Variant::t_trans, Variant::full}) {
    const PtFse<double> net(with_variant(ModelConfig::toy(), v), 1);
    const auto m = net.forward(random_frames<double>(6, 9, rng));
    EXPECT_EQ(m.values.shape(), (diff::Shape{2, 6, 9}));
    EXPECT_TRUE(m.compressed);
    const auto sub = net.forward(random_frames<double>(6, 9, rng), {1, 4, 7});
    EXPECT_EQ(sub.values.shape(), (diff::Shape{2, 6, 3}));
  }
  const PtFse<double> net(ModelConfig::toy(), 1);
  EXPECT_THROW(net.forward(random_frames<double>(1, 9, rng)), InvalidInput);
  EXPECT_THROW(net.forward(random_frames<double>(4, 8, rng)), ShapeError);
}

TEST(PtFse, BaselineIsDirectComposition) {
  Rng rng(8);
  auto cfg = with_variant(ModelConfig::toy(), Variant::baseline);
  cfg.input_norm = false;
  const PtFse<double> net(cfg, 2);
  const auto x = random_frames<double>(6, 9, rng);
  const auto padded = pad_frames(x, cfg.look_ahead);
  const auto emb = g_full_forward(padded, net.g_full());
  const auto direct = g_sub_forward(subband_unfold(padded, emb, cfg.context, masking::all_bins(9)), net.g_sub(), cfg.look_ahead);
  EXPECT_EQ(vals(net.forward(x).values), vals(direct));
}

TEST(PtFse, Deterministic) {
  Rng rng(9);
  const PtFse<float> a(ModelConfig::toy(), 5), b(ModelConfig::toy(), 5);
  const auto x = random_frames<float>(8, 9, rng);
  EXPECT_EQ(vals(a.forward(x).values), vals(a.forward(x).values));
  EXPECT_EQ(vals(a.forward(x).values), vals(b.forward(x).values));
}

TEST(PtFse, TogglingBlocksKeepsOtherInitialization) {
  const PtFse<double> full(ModelConfig::toy(), 4);
  const PtFse<double> base(with_variant(ModelConfig::toy(), Variant::baseline), 4);
  for (const auto& [name, t] : base.params().entries())
    EXPECT_EQ(vals(t), vals(full.params().get(name))) << name;
}

TEST(Causality, ToyConfigLookAheadOne) {
  check_look_ahead_causality<double>(ModelConfig::toy(), 8, 10);
}

TEST(Causality, ToyConfigLookAheadUsed) {
  // Mask frame m does depend on input frame m + tau.
  Rng rng(10);
  const PtFse<double> net(ModelConfig::toy(), 1);
  const auto x = random_frames<double>(6, 9, rng);
  auto y = x.clone();
  for (std::size_t f = 0; f < 9; ++f) y.values()[3 * 9 + f] += 1.0;
  EXPECT_NE(mask_frame(net.forward(y), 2), mask_frame(net.forward(x), 2));
  EXPECT_EQ(mask_frame(net.forward(y), 1), mask_frame(net.forward(x), 1));
}

TEST(Causality, DefaultConfigLookAheadTwo) {
  check_look_ahead_causality<float>(default_config(), 7, 3);
}

TEST(Gradients, ModuleSuites) {
  for (const char* suite : {"ftrans", "ttrans", "gfull", "gsub", "model"}) {
    const auto r = verify::run_suite(suite, 4);
    EXPECT_LE(r.max_error(), 1e-4) << suite << ": " << r.worst()->name;
  }
}
