#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ptfse/cli/config_file.hpp"
#include "ptfse/ptfse.hpp"
#include "ptfse/verify/gradcheck_suites.hpp"

namespace fs = std::filesystem;
using namespace ptfse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

constexpr double kGradTolerance = 1e-4;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(dir.string() + ": cannot create directory");
}

cli::RunConfig config_or_default(const std::string& path) {
  return path.empty() ? cli::RunConfig{} : cli::load_config(path);
}

int cmd_synth(const std::string& out_dir, std::size_t clips, double seconds, std::uint64_t seed) {
  using signal::ClipKind;
  const fs::path root(out_dir);
  ensure_dir(root / "clean");
  ensure_dir(root / "noise");
  const ClipKind noise_kinds[] = {ClipKind::noise_white, ClipKind::noise_pink, ClipKind::noise_babble};
  std::ostringstream manifest;
  manifest << "# seconds=" << seconds << " seed=" << seed << "\n";
  for (std::size_t i = 0; i < clips; ++i) {
    const std::uint64_t clip_seed = seed * 1000003ULL + i;
    char name[32];
    std::snprintf(name, sizeof name, "%03zu.wav", i);
    const std::string clean_rel = std::string("clean/clean_") + name;
    const std::string noise_rel = std::string("noise/noise_") + name;
    const ClipKind nk = noise_kinds[i % 3];
    signal::write_wav(root / clean_rel, signal::synth_clip(ClipKind::speechlike, seconds, clip_seed));
    signal::write_wav(root / noise_rel, signal::synth_clip(nk, seconds, clip_seed));
    manifest << clean_rel << " kind=speechlike seed=" << clip_seed << "\n";
    manifest << noise_rel << " kind=" << signal::to_string(nk) << " seed=" << clip_seed << "\n";
  }
  std::ofstream out(root / "manifest.txt");
  if (!out) throw IoError((root / "manifest.txt").string() + ": cannot write");
  out << manifest.str();
  std::cout << "wrote " << clips << " clean and " << clips << " noise clips to " << root.string() << "\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& data_dir, const std::string& out_dir, bool no_f_trans,
              bool no_t_trans, const std::string& loss) {
  cli::RunConfig rc = config_or_default(config_path);
  if (no_f_trans) rc.model.enable_f_trans = false;
  if (no_t_trans) rc.model.enable_t_trans = false;
  if (!loss.empty()) {
    auto k = pipeline::parse_loss_kind(loss);
    if (!k) throw InvalidConfig("--loss: expected pp_cirm or mse, got '" + loss + "'");
    rc.train.loss_kind = *k;
  }
  std::cout << "# effective config\n" << cli::format_config(rc);

  const fs::path out(out_dir);
  ensure_dir(out);
  cli::save_config(out / "config.txt", rc);
  const auto clean = pipeline::load_pool(fs::path(data_dir) / "clean");
  const auto noise = pipeline::load_pool(fs::path(data_dir) / "noise");

  model::PtFse<float> net(rc.model, rc.train.seed);
  std::ofstream report(out / "report.txt");
  if (!report) throw IoError((out / "report.txt").string() + ": cannot write");
  std::ostringstream lines;
  const auto result = pipeline::train(net, rc.train, clean, noise, &lines, out / "checkpoint.bin");
  report << lines.str() << "checkpoint=" << result.checkpoint_path.string() << "\n";
  std::cout << lines.str();
  std::cerr << "trained " << result.losses.size() << " steps in " << std::fixed << std::setprecision(1)
            << result.elapsed_seconds << " s; checkpoint " << result.checkpoint_path.string() << "\n";
  return kExitOk;
}

int cmd_enhance(const std::string& checkpoint, const std::string& in, const std::string& out, std::string config_path) {
  if (config_path.empty()) {
    const fs::path beside = fs::path(checkpoint).parent_path() / "config.txt";
    if (fs::exists(beside)) config_path = beside.string();
  }
  const cli::RunConfig rc = config_or_default(config_path);
  const auto net = pipeline::load_model(rc.model, checkpoint);
  const auto noisy = signal::read_wav(in);
  const auto enhanced = pipeline::enhance(noisy, net);
  signal::write_wav(out, enhanced);
  std::cerr << "latency_samples=" << rc.model.latency_samples() << " latency_ms=" << rc.model.latency_ms() << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& ref, const std::string& est) {
  const auto r = pipeline::evaluate(signal::read_wav(est), signal::read_wav(ref));
  if (!r.warning.empty()) std::cerr << "warning: " << r.warning << "\n";
  std::cout << pipeline::eval_line(r) << "\n";
  return kExitOk;
}

int cmd_gradcheck(const std::string& module, std::size_t seeds) {
  std::vector<std::string> suites;
  if (module == "all")
    suites = verify::suite_names();
  else
    suites.push_back(module);
  double worst = 0.0;
  for (const auto& name : suites) {
    const auto r = verify::run_suite(name, seeds);
    const auto* w = r.worst();
    std::cout << "module=" << name << " seeds=" << r.seeds << " checks=" << r.checks.size()
              << " max_relative_error=" << std::scientific << std::setprecision(3) << r.max_error()
              << " worst=" << (w ? w->name : "-") << std::defaultfloat << "\n";
    worst = std::max(worst, r.max_error());
  }
  return worst <= kGradTolerance ? kExitOk : kExitVerify;
}

int cmd_params(const std::string& config_path) {
  const cli::RunConfig rc = config_or_default(config_path);
  const model::ModelConfig& cfg = rc.model;
  const auto configured = model::param_count(cfg, model::variant_of(cfg));
  // Cross-check the closed form against an instantiated model.
  const model::PtFse<float> net(cfg, 0);
  if (net.params().scalar_count() != configured.total)
    throw ContractError("parameter count mismatch: closed form " + std::to_string(configured.total) + ", model " +
                        std::to_string(net.params().scalar_count()));
  for (const auto& [name, n] : configured.per_module) std::cout << "module=" << name << " params=" << n << "\n";
  std::cout << "total=" << configured.total << "\n";
  const std::size_t base = model::param_count(cfg, model::Variant::baseline).total;
  for (auto v : {model::Variant::baseline, model::Variant::f_trans, model::Variant::t_trans, model::Variant::full}) {
    const std::size_t n = model::param_count(cfg, v).total;
    std::cout << "variant=" << model::to_string(v) << " total=" << n << " size_m=" << std::fixed << std::setprecision(2)
              << n / 1e6 << std::defaultfloat << " increment=" << n - base << "\n";
  }
  return kExitOk;
}

int cmd_specdump(const std::string& in, const std::string& out, int n_fft, int hop) {
  const auto w = signal::read_wav(in);
  const auto mag = signal::magnitude(signal::stft(w, n_fft, hop));
  std::ofstream csv(out);
  if (!csv) throw IoError(out + ": cannot write");
  csv << std::fixed << std::setprecision(3);
  for (std::size_t f = 0; f < mag.bins(); ++f) {
    for (std::size_t t = 0; t < mag.frames(); ++t) {
      if (t) csv << ',';
      csv << 20.0 * std::log10(std::max(mag.values(f, t), 1e-4));
    }
    csv << '\n';
  }
  if (!csv) throw IoError(out + ": write failed");
  std::cerr << "rows=" << mag.bins() << " cols=" << mag.frames() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-band/sub-band speech enhancement toolkit"};
  app.require_subcommand(1);

  std::string out_dir, data_dir, config, checkpoint, in, out, ref, est, loss, module = "all";
  std::size_t clips = 8, seeds = 20;
  double seconds = 2.0;
  std::uint64_t seed = 0;
  bool no_f_trans = false, no_t_trans = false;
  int n_fft = 512, hop = 256;

  auto* synth = app.add_subcommand("synth", "write a synthetic clean/noise corpus");
  synth->add_option("--out-dir", out_dir)->required();
  synth->add_option("--clips", clips)->check(CLI::PositiveNumber);
  synth->add_option("--seconds", seconds)->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed);

  auto* train = app.add_subcommand("train", "train a model on a corpus directory");
  train->add_option("--config", config)->check(CLI::ExistingFile);
  train->add_option("--data-dir", data_dir)->required();
  train->add_option("--out", out_dir)->required();
  train->add_flag("--no-f-trans", no_f_trans);
  train->add_flag("--no-t-trans", no_t_trans);
  train->add_option("--loss", loss)->check(CLI::IsMember({"pp_cirm", "mse"}));

  auto* enhance = app.add_subcommand("enhance", "enhance a WAV file with a trained checkpoint");
  enhance->add_option("--checkpoint", checkpoint)->required();
  enhance->add_option("--in", in)->required();
  enhance->add_option("--out", out)->required();
  enhance->add_option("--config", config);

  auto* evaluate = app.add_subcommand("evaluate", "score an estimate against a reference");
  evaluate->add_option("--ref", ref)->required();
  evaluate->add_option("--est", est)->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "run finite-difference gradient suites");
  std::vector<std::string> modules = verify::suite_names();
  modules.push_back("all");
  gradcheck->add_option("--module", module)->check(CLI::IsMember(modules));
  gradcheck->add_option("--seeds", seeds)->check(CLI::PositiveNumber);

  auto* params = app.add_subcommand("params", "print trainable parameter counts");
  params->add_option("--config", config)->check(CLI::ExistingFile);

  auto* specdump = app.add_subcommand("specdump", "write a dB magnitude spectrogram as CSV");
  specdump->add_option("--in", in)->required();
  specdump->add_option("--out", out)->required();
  specdump->add_option("--n-fft", n_fft);
  specdump->add_option("--hop", hop);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(out_dir, clips, seconds, seed);
    if (*train) return cmd_train(config, data_dir, out_dir, no_f_trans, no_t_trans, loss);
    if (*enhance) return cmd_enhance(checkpoint, in, out, config);
    if (*evaluate) return cmd_evaluate(ref, est);
    if (*gradcheck) return cmd_gradcheck(module, seeds);
    if (*params) return cmd_params(config);
    if (*specdump) return cmd_specdump(in, out, n_fft, hop);
  } catch (const InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
