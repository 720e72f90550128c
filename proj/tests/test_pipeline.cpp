#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "ptfse/diff/checkpoint.hpp"
#include "ptfse/metrics/si_sdr.hpp"
#include "ptfse/pipeline/dataset.hpp"
#include "ptfse/pipeline/enhance.hpp"
#include "ptfse/pipeline/train.hpp"
#include "ptfse/signal/mix.hpp"
#include "ptfse/signal/synth.hpp"

using namespace ptfse;
using namespace ptfse::pipeline;
using signal::ClipKind;
using signal::Waveform;

namespace {

ClipPool pool(ClipKind kind, int count, double seconds, std::uint64_t seed) {
  ClipPool p;
  for (int i = 0; i < count; ++i) p.push_back({std::string(signal::to_string(kind)) + std::to_string(i), signal::synth_clip(kind, seconds, seed + i)});
  return p;
}

ClipPool noise_pool(double seconds, std::uint64_t seed) {
  ClipPool p = pool(ClipKind::noise_white, 1, seconds, seed);
  for (auto k : {ClipKind::noise_pink, ClipKind::noise_babble}) {
    auto more = pool(k, 1, seconds, seed + 10);
    p.insert(p.end(), more.begin(), more.end());
  }
  return p;
}

MixSettings toy_mix(double seconds = 0.25) { return {0.0, 20.0, seconds, 16, 8}; }

// Toy model widened to 17 bins so the pooled loss has a band partition.
model::ModelConfig small_model() {
  auto c = model::ModelConfig::toy();
  c.n_fft = 32;
  c.hop = 16;
  c.ttrans_hidden = c.ttrans_fc = 17;
  return c;
}

TrainConfig toy_train(std::size_t epochs, std::size_t steps) {
  TrainConfig c;
  c.epochs = epochs;
  c.steps_per_epoch = steps;
  c.batch_size = 2;
  c.clip_seconds = 0.25;
  c.seed = 11;
  return c;
}

Waveform noisy_copy(const Waveform& clean, double snr, std::uint64_t seed) {
  return signal::mix_at_snr(clean, signal::synth_clip(ClipKind::noise_white, clean.seconds(), seed), snr).mixture;
}

}  // namespace

TEST(Mixing, DeterministicForSeed) {
  const auto clean = pool(ClipKind::speechlike, 3, 1.0, 1);
  const auto noise = noise_pool(1.0, 2);
  Rng a(5), b(5), c(6);
  const auto x = mix_item(clean, noise, toy_mix(), a);
  const auto y = mix_item(clean, noise, toy_mix(), b);
  const auto z = mix_item(clean, noise, toy_mix(), c);
  EXPECT_EQ(x.noisy.samples, y.noisy.samples);
  EXPECT_EQ(x.snr_db, y.snr_db);
  EXPECT_NE(x.noisy.samples, z.noisy.samples);
  EXPECT_EQ(x.noisy.size(), 4000u);
}

TEST(Mixing, MeasuredSnrMatchesDrawn) {
  const auto clean = pool(ClipKind::speechlike, 3, 1.0, 1);
  const auto noise = noise_pool(1.0, 2);
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const auto item = mix_item(clean, noise, toy_mix(), rng);
    Waveform residual = item.noisy;
    for (std::size_t k = 0; k < residual.size(); ++k) residual.samples[k] -= item.clean.samples[k];
    EXPECT_NEAR(signal::snr_db(item.clean, residual), item.snr_db, 1e-6);
  }
}

TEST(Mixing, SnrIsUniformOverRange) {
  const auto clean = pool(ClipKind::speechlike, 2, 0.1, 1);
  const auto noise = noise_pool(0.1, 2);
  Rng rng(8);
  double acc = 0.0, lo = 1e9, hi = -1e9;
  for (int i = 0; i < 1000; ++i) {
    const double s = mix_item(clean, noise, toy_mix(0.05), rng).snr_db;
    acc += s;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  EXPECT_NEAR(acc / 1000.0, 10.0, 1.0);
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, 20.0);
}

TEST(Mixing, EmptyPoolsRejected) {
  Rng rng(1);
  EXPECT_THROW(mix_item({}, noise_pool(0.1, 1), toy_mix(), rng), InvalidConfig);
  EXPECT_THROW(mix_item(pool(ClipKind::speechlike, 1, 0.1, 1), {}, toy_mix(), rng), InvalidConfig);
}

TEST(DropBand, HandEnumerationAndCoverage) {
  EXPECT_EQ(drop_band_bins(10, 2, 1), (std::vector<std::size_t>{1, 3, 5, 7, 9}));
  EXPECT_EQ(drop_band_bins(10, 1, 0), masking::all_bins(10));
  for (std::size_t groups = 1; groups <= 9; ++groups) {
    std::vector<int> hits(257, 0);
    for (std::size_t o = 0; o < groups; ++o) {
      const auto bins = drop_band_bins(257, groups, o);
      EXPECT_EQ(bins.size(), (257 - o + groups - 1) / groups);
      for (auto b : bins) ++hits[b];
    }
    for (int h : hits) EXPECT_EQ(h, 1);
  }
  EXPECT_THROW(drop_band_bins(10, 11, 0), InvalidConfig);
  EXPECT_THROW(drop_band_bins(10, 0, 0), InvalidConfig);
  Rng rng(1);
  EXPECT_THROW(drop_band_select(10, 11, rng), InvalidConfig);
}

TEST(DropBand, OffsetsAverageToFullLoss) {
  const auto clean = pool(ClipKind::speechlike, 2, 0.5, 3);
  const auto noise = noise_pool(0.5, 4);
  Rng rng(9);
  const auto batch = dynamic_mix_batch(clean, noise, toy_mix(), 3, rng);
  const model::PtFse<double> net(model::ModelConfig::toy(), 2);
  const std::size_t F = 9;
  for (std::size_t groups : {2u, 3u, 4u}) {
    double full = 0.0, weighted = 0.0, plain = 0.0;
    for (const auto& item : batch) {
      full += item_loss(net, item, masking::all_bins(F), LossKind::mse, {}).item();
      for (std::size_t o = 0; o < groups; ++o) {
        const auto bins = drop_band_bins(F, groups, o);
        const double l = item_loss(net, item, bins, LossKind::mse, {}).item();
        weighted += l * static_cast<double>(bins.size()) / F;
        plain += l / static_cast<double>(groups);
      }
    }
    EXPECT_NEAR(weighted, full, 1e-12 * full) << groups;
    if (F % groups == 0) {
      EXPECT_NEAR(plain, full, 1e-12 * full) << groups;
    }
  }
}

TEST(DropBand, SubsetForwardMatchesFullColumns) {
  Rng rng(10);
  const model::PtFse<double> net(model::ModelConfig::toy(), 3);
  std::vector<double> v(6 * 9);
  for (auto& x : v) x = rng.uniform(0.0, 2.0);
  const diff::Tensor<double> x({6, 9}, v);
  const auto full = net.forward(x);
  const auto bins = drop_band_bins(9, 2, 1);
  const auto sub = net.forward(x, bins);
  for (std::size_t p = 0; p < 2; ++p)
    for (std::size_t t = 0; t < 6; ++t)
      for (std::size_t c = 0; c < bins.size(); ++c)
        EXPECT_NEAR(sub.values.values()[(p * 6 + t) * bins.size() + c], full.values.values()[(p * 6 + t) * 9 + bins[c]], 1e-14);
}

TEST(Loss, PpCirmGradientIsSumOfBandTermGradients) {
  const auto clean = pool(ClipKind::speechlike, 2, 0.5, 5);
  const auto noise = noise_pool(0.5, 6);
  Rng rng(11);
  const auto item = mix_item(clean, noise, toy_mix(), rng);
  model::PtFse<double> net(model::ModelConfig::toy(), 4);
  masking::BandPartition bands;
  bands.ranges = {masking::BinRange{0, 5}, masking::BinRange{5, 7}, masking::BinRange{7, 9}};
  bands.pool_steps = {1, 2, 2};

  auto grads = [&](std::array<double, 3> w) {
    auto b = bands;
    b.weights = w;
    net.params().zero_grad();
    diff::backward(item_loss(net, item, masking::all_bins(9), LossKind::pp_cirm, b));
    std::vector<double> g;
    for (const auto& [_, t] : net.params().entries()) g.insert(g.end(), t.grad().begin(), t.grad().end());
    return g;
  };
  const auto total = grads({1, 1, 1});
  const auto g0 = grads({1, 0, 0}), g1 = grads({0, 1, 0}), g2 = grads({0, 0, 1});
  double scale = 0.0;
  for (double v : total) scale = std::max(scale, std::abs(v));
  ASSERT_GT(scale, 0.0);
  for (std::size_t i = 0; i < total.size(); ++i) EXPECT_NEAR(total[i], g0[i] + g1[i] + g2[i], 1e-12 * scale);
}

TEST(Train, ZeroEpochCheckpointEqualsInit) {
  const auto clean = pool(ClipKind::speechlike, 2, 0.5, 1);
  const auto noise = noise_pool(0.5, 2);
  model::PtFse<float> net(small_model(), 9);
  const auto init = diff::encode_checkpoint(net.params());
  const auto path = std::filesystem::temp_directory_path() / "ptfse_zero_epoch.ckpt";
  const auto report = train(net, toy_train(0, 5), clean, noise, nullptr, path);
  EXPECT_TRUE(report.losses.empty());
  EXPECT_EQ(diff::encode_checkpoint(net.params()), init);
  std::ifstream in(path, std::ios::binary);
  const std::vector<unsigned char> on_disk((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(on_disk, init);
  std::filesystem::remove(path);
}

TEST(Train, StagedScheduleAndLog) {
  const auto clean = pool(ClipKind::speechlike, 2, 0.5, 1);
  const auto noise = noise_pool(0.5, 2);
  model::PtFse<float> net(small_model(), 9);
  auto cfg = toy_train(3, 2);
  cfg.lr_switch_epoch = 2;
  std::ostringstream log;
  const auto report = train(net, cfg, clean, noise, &log);
  EXPECT_EQ(report.epoch_lr, (std::vector<double>{0.001, 0.001, 0.0003}));
  ASSERT_EQ(report.losses.size(), 6u);
  for (double l : report.losses) EXPECT_TRUE(std::isfinite(l));
  std::istringstream lines(log.str());
  std::string line;
  std::vector<std::string> all;
  while (std::getline(lines, line)) all.push_back(line);
  ASSERT_EQ(all.size(), 6u);
  EXPECT_EQ(all[0].rfind("step=0 epoch=0 lr=0.001 loss=", 0), 0u) << all[0];
  EXPECT_EQ(all[5].rfind("step=5 epoch=2 lr=0.0003 loss=", 0), 0u) << all[5];
}

TEST(Train, LongRunScheduleSwitchesAtEpoch100) {
  const auto p = TrainConfig::long_run();
  EXPECT_EQ(diff::staged_learning_rate(99, p.lr_initial, p.lr_after, p.lr_switch_epoch), 0.001);
  EXPECT_EQ(diff::staged_learning_rate(100, p.lr_initial, p.lr_after, p.lr_switch_epoch), 0.0003);
  EXPECT_EQ(p.batch_size, 42u);
}

TEST(Train, ReproducibleFromSeed) {
  const auto clean = pool(ClipKind::speechlike, 3, 0.5, 1);
  const auto noise = noise_pool(0.5, 2);
  auto run = [&](std::uint64_t seed) {
    model::PtFse<float> net(small_model(), 9);
    auto cfg = toy_train(1, 4);
    cfg.seed = seed;
    const auto report = train(net, cfg, clean, noise);
    return std::make_pair(diff::encode_checkpoint(net.params()), report.losses);
  };
  const auto a = run(1), b = run(1), c = run(2);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_NE(a.first, c.first);
}

TEST(Train, RejectsBadSetups) {
  const auto clean = pool(ClipKind::speechlike, 1, 0.5, 1);
  const auto noise = noise_pool(0.5, 2);
  model::PtFse<float> net(small_model(), 9);
  auto cfg = toy_train(1, 1);
  EXPECT_THROW(train(net, cfg, {}, noise), InvalidConfig);
  cfg.drop_band_groups = 18;
  EXPECT_THROW(train(net, cfg, clean, noise), InvalidConfig);
}

TEST(Train, NonFiniteLossNamesStepAndBlock) {
  const auto clean = pool(ClipKind::speechlike, 1, 0.5, 1);
  const auto noise = noise_pool(0.5, 2);
  model::PtFse<float> net(small_model(), 9);
  const_cast<diff::Tensor<float>&>(net.params().get("gsub.fc.bias")).values()[0] = std::nanf("");
  try {
    train(net, toy_train(1, 3), clean, noise);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("at step 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("largest gradient in "), std::string::npos) << msg;
    EXPECT_NE(msg.find("grad norm"), std::string::npos) << msg;
  }
}

TEST(Enhance, OracleMaskReconstructs) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto clean = signal::synth_clip(ClipKind::speechlike, 1.0, seed);
    const auto noisy = noisy_copy(clean, 0.0, 100 + seed);
    EXPECT_GE(metrics::si_sdr(enhance_oracle(noisy, clean, 512, 256, false), clean), 50.0) << seed;
  }
}

TEST(Enhance, CompressedOracleSurvivesLowSnr) {
  for (double snr : {0.0, -20.0}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto clean = signal::synth_clip(ClipKind::speechlike, 1.0, seed);
      const auto noisy = noisy_copy(clean, snr, 100 + seed);
      EXPECT_GE(metrics::si_sdr(enhance_oracle(noisy, clean, 512, 256, true), clean), 50.0) << snr << " " << seed;
    }
  }
}

TEST(Enhance, UntrainedModelPreservesLengthAndStaysFinite) {
  const model::PtFse<float> net(model::ModelConfig::toy(), 1);
  for (std::size_t len : {400u, 4001u, 16000u}) {
    Waveform noisy{std::vector<double>(len), 16000};
    Rng rng(len);
    for (auto& v : noisy.samples) v = rng.uniform(-0.5, 0.5);
    const auto out = enhance(noisy, net);
    ASSERT_EQ(out.size(), len);
    for (double v : out.samples) ASSERT_TRUE(std::isfinite(v));
  }
  EXPECT_THROW(enhance(Waveform{std::vector<double>(4000), 8000}, net), InvalidInput);
}

TEST(Evaluate, ReferenceCases) {
  const auto ref = signal::synth_clip(ClipKind::speechlike, 2.0, 3);
  const auto self = evaluate(ref, ref);
  EXPECT_EQ(self.si_sdr_db, 100.0);
  EXPECT_GE(self.stoi, 0.99);
  EXPECT_EQ(eval_line(self), "si_sdr_db=100.000000 stoi=1.000000");

  const auto plus10 = evaluate(noisy_copy(ref, 10.0, 4), ref);
  EXPECT_NEAR(plus10.si_sdr_db, 10.0, 0.5);

  const auto noise = signal::synth_clip(ClipKind::noise_white, 2.0, 5);
  EXPECT_LT(evaluate(noise, ref).stoi, 0.3);
}

TEST(Evaluate, TrimsAndWarns) {
  const auto ref = signal::synth_clip(ClipKind::speechlike, 2.0, 3);
  Waveform est = ref;
  est.samples.resize(31000);
  const auto near = evaluate(est, ref);
  EXPECT_TRUE(near.trimmed);
  EXPECT_TRUE(near.warning.empty());
  EXPECT_EQ(near.si_sdr_db, 100.0);
  est.samples.resize(20000);
  EXPECT_NE(evaluate(est, ref).warning.find("more than 10%"), std::string::npos);
  EXPECT_THROW(evaluate(Waveform{ref.samples, 8000}, ref), InvalidInput);
}
