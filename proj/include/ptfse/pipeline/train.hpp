#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ptfse/diff/adam.hpp"
#include "ptfse/diff/checkpoint.hpp"
#include "ptfse/masking/loss.hpp"
#include "ptfse/model/ptfse.hpp"
#include "ptfse/pipeline/dataset.hpp"

namespace ptfse::pipeline {

enum class LossKind { pp_cirm, mse };

inline std::string_view to_string(LossKind k) { return k == LossKind::pp_cirm ? "pp_cirm" : "mse"; }

inline std::optional<LossKind> parse_loss_kind(std::string_view s) {
  if (s == "pp_cirm") return LossKind::pp_cirm;
  if (s == "mse") return LossKind::mse;
  return std::nullopt;
}

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t steps_per_epoch = 200;
  std::size_t batch_size = 4;
  double lr_initial = 0.001;
  double lr_after = 0.0003;
  std::size_t lr_switch_epoch = 100;
  double snr_min = 0.0;
  double snr_max = 20.0;
  double clip_seconds = 2.0;
  std::uint64_t seed = 0;
  LossKind loss_kind = LossKind::pp_cirm;
  std::size_t drop_band_groups = 2;

  void validate() const {
    auto fail = [](const std::string& m) { throw InvalidConfig("train config: " + m); };
    if (lr_switch_epoch < 1) fail("lr_switch_epoch must be >= 1");
    if (!(snr_min <= snr_max)) fail("snr range is empty");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (!(clip_seconds > 0.0)) fail("clip_seconds must be positive");
    if (drop_band_groups < 1) fail("drop_band_groups must be >= 1");
    if (!(lr_initial > 0.0) || !(lr_after > 0.0)) fail("learning rates must be positive");
  }

  std::size_t total_steps() const { return epochs * steps_per_epoch; }

  // Long-run regime: batch 42, lr drop after epoch 100. Epoch count and
  // length are placeholders. Not exercised by the tests.
  static TrainConfig long_run() {
    TrainConfig c;
    c.epochs = 200;
    c.steps_per_epoch = 1000;
    c.batch_size = 42;
    return c;
  }

  // 200 steps in two stages, paired with ModelConfig::desk().
  static TrainConfig desk() {
    TrainConfig c;
    c.epochs = 2;
    c.steps_per_epoch = 100;
    c.lr_initial = 0.003;
    c.lr_after = 0.001;
    c.lr_switch_epoch = 1;
    return c;
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainReport {
  std::vector<double> losses;      // one per step
  std::vector<double> epoch_lr;    // one per epoch
  std::filesystem::path checkpoint_path;
  double elapsed_seconds = 0.0;
};

inline std::string step_line(std::size_t step, std::size_t epoch, double lr, double loss) {
  std::ostringstream os;
  os.precision(9);
  os << "step=" << step << " epoch=" << epoch << " lr=" << lr << " loss=" << loss;
  return os.str();
}

// Compressed cIRM training target for one mixture, restricted to `bins`.
template <typename T>
masking::MaskTensor<T> training_target(const MixItem& item, const std::vector<std::size_t>& bins) {
  return masking::to_tensor<T>(masking::compress_mask(masking::cirm(item.noisy_spec, item.clean_spec)), bins);
}

template <typename T>
diff::Tensor<T> item_loss(const model::PtFse<T>& net, const MixItem& item, const std::vector<std::size_t>& bins,
                          LossKind kind, const masking::BandPartition& bands) {
  const auto pred = net.forward(item.noisy_mag, bins);
  const auto target = training_target<T>(item, bins);
  return kind == LossKind::pp_cirm ? masking::pp_cirm_loss(pred, target, bands) : masking::cirm_mse_loss(pred, target);
}

namespace detail {

template <typename T>
std::string largest_gradient_block(const diff::ParamStore<T>& params) {
  std::string worst = "<none>";
  double worst_norm = -1.0;
  for (const auto& [name, t] : params.entries()) {
    double acc = 0.0;
    for (T g : t.grad()) acc += static_cast<double>(g) * static_cast<double>(g);
    const double norm = std::sqrt(acc);
    if (std::isnan(norm) || norm > worst_norm) {
      worst = name + " (grad norm " + std::to_string(norm) + ")";
      if (std::isnan(norm)) break;
      worst_norm = norm;
    }
  }
  return worst;
}

}  // namespace detail

// Trains `net` in place. Each step mixes a fresh batch, picks the drop-band
// bins, accumulates the batch-mean loss gradient and applies one Adam update.
// Step records go to `log` when given; the checkpoint is written to
// `checkpoint_path` when non-empty.
template <typename T>
TrainReport train(model::PtFse<T>& net, const TrainConfig& cfg, const ClipPool& clean_pool, const ClipPool& noise_pool,
                  std::ostream* log = nullptr, const std::filesystem::path& checkpoint_path = {}) {
  cfg.validate();
  if (clean_pool.empty()) throw InvalidConfig("train: clean pool is empty");
  if (noise_pool.empty()) throw InvalidConfig("train: noise pool is empty");
  const auto& mcfg = net.config();
  const std::size_t F = mcfg.freq_bins();
  if (cfg.drop_band_groups > F)
    throw InvalidConfig("train: drop_band_groups=" + std::to_string(cfg.drop_band_groups) + " exceeds F=" + std::to_string(F));
  const masking::BandPartition bands = cfg.loss_kind == LossKind::pp_cirm
                                           ? masking::band_partition(F, mcfg.n_fft, mcfg.sample_rate)
                                           : masking::BandPartition{};
  const MixSettings mix{cfg.snr_min, cfg.snr_max, cfg.clip_seconds, mcfg.n_fft, mcfg.hop};

  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  Rng data_rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);
  Rng band_rng(cfg.seed ^ 0x8CB92BA72F3D8DD7ULL);
  diff::AdamState<T> adam;
  auto& params = net.params();
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = diff::staged_learning_rate(epoch, cfg.lr_initial, cfg.lr_after, cfg.lr_switch_epoch);
    report.epoch_lr.push_back(lr);
    for (std::size_t s = 0; s < cfg.steps_per_epoch; ++s, ++step) {
      const auto batch = dynamic_mix_batch(clean_pool, noise_pool, mix, cfg.batch_size, data_rng);
      const auto bins = drop_band_select(F, cfg.drop_band_groups, band_rng);
      params.zero_grad();
      double total = 0.0;
      for (const auto& item : batch) {
        const auto loss = diff::scale(item_loss(net, item, bins, cfg.loss_kind, bands),
                                      static_cast<T>(1.0 / static_cast<double>(batch.size())));
        total += static_cast<double>(loss.item());
        diff::backward(loss);
      }
      if (!std::isfinite(total))
        throw NumericError("train: non-finite loss " + std::to_string(total) + " at step " + std::to_string(step) +
                           "; largest gradient in " + detail::largest_gradient_block(params));
      diff::adam_step(params, adam, lr);
      report.losses.push_back(total);
      if (log) *log << step_line(step, epoch, lr, total) << '\n';
    }
  }
  if (!checkpoint_path.empty()) {
    diff::save_checkpoint(checkpoint_path, params);
    report.checkpoint_path = checkpoint_path;
  }
  report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace ptfse::pipeline
