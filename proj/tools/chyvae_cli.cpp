// chyvae: train and probe the covariance-hyperprior VAE at desk scale.
//
// Subcommands: generate-data, train, eval-metric, traverse, sample, check.
// Every command is deterministic given its flags; a manifest with the config
// echo and content hashes makes reruns exact. Exit codes: 0 success, 2 bad
// usage or configuration, 3 non-finite gradient during training.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chyvae/losses.hpp"
#include "chyvae/metric.hpp"
#include "chyvae/selfcheck.hpp"
#include "chyvae/trainer.hpp"

namespace {

using namespace chyvae;

std::string iso_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// FNV-1a 64 over the file bytes; fingerprints datasets and checkpoints in
// the manifest.
std::string content_hash(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return "missing";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!is) break;
  }
  char out[24];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

struct Manifest {
  std::string command;
  std::string start_time = iso_now();
  std::vector<std::pair<std::string, std::string>> entries;

  void add(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }
  void add(const std::string& key, double value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    entries.emplace_back(key, os.str());
  }
  void add(const std::string& key, std::int64_t value) { add(key, std::to_string(value)); }

  void write(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write manifest " + path);
    os << "command " << command << "\n";
    os << "start_time " << start_time << "\n";
    for (const auto& [k, v] : entries) os << k << " " << v << "\n";
    os << "end_time " << iso_now() << "\n";
  }
};

std::vector<double> parse_grid(const std::string& s) {
  // start:end:count
  double start, end;
  int count;
  char c1, c2;
  std::istringstream is(s);
  if (!(is >> start >> c1 >> end >> c2 >> count) || c1 != ':' || c2 != ':' || count < 1) {
    throw CLI::ValidationError("--grid", "expected start:end:count, got '" + s + "'");
  }
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) grid[i] = count == 1 ? start : start + (end - start) * i / (count - 1);
  return grid;
}

void use_key_value_config(CLI::App* cmd) {
  // parsed ahead of CLI11 by merge_config_args; registered here so the flag
  // is documented and accepted
  static std::string sink;
  cmd->add_option("--config", sink, "flat 'key value' config file; explicit flags win");
}

// Expand `--config FILE` into trailing `--key value` arguments for every
// config line whose key was not given explicitly, so command-line flags win.
std::vector<std::string> merge_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") path = args[i + 1];
  }
  if (path.empty()) return args;
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config file " + path);
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key) || key[0] == '#') continue;
    std::getline(ls, value);
    auto start = value.find_first_not_of(" \t");
    value = start == std::string::npos ? "" : value.substr(start);
    std::string flag = "--" + key;
    if (std::find(args.begin(), args.end(), flag) == args.end()) {
      args.push_back(flag);
      if (!value.empty()) args.push_back(value);
    }
  }
  return args;
}

trainer::Checkpoint load_ckpt_or_exit(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw CLI::ValidationError("--ckpt", "checkpoint not found: " + path);
  }
  return trainer::load_checkpoint(path);
}

metric::Encoder model_encoder(const nn::ModelParams& params) {
  return [&params](const data::ImageSample& s) { return nn::encode_mean(params, s.pixels); };
}

metric::Encoder exact_factor_oracle() {
  return [](const data::ImageSample& s) {
    return std::vector<double>(s.factor_values.begin(), s.factor_values.end());
  };
}

int run_generate_data(int n, int height, int width, double rho_pos, double rho_so,
                      std::uint64_t seed, const std::string& out) {
  data::CorrConfig cfg{rho_pos, rho_so};
  auto ds = data::generate_dataset(n, cfg, data::FactorSpec::standard(), height, width, seed);
  data::write_dataset(out, ds);

  Manifest mf;
  mf.command = "generate-data";
  mf.add("n", static_cast<std::int64_t>(n));
  mf.add("height", static_cast<std::int64_t>(height));
  mf.add("width", static_cast<std::int64_t>(width));
  mf.add("rho_pos", rho_pos);
  mf.add("rho_so", rho_so);
  mf.add("seed", static_cast<std::int64_t>(seed));
  mf.add("output", out);
  mf.add("dataset_hash", content_hash(out));
  mf.write(out + ".manifest");
  std::cout << "wrote " << out << " (" << n << " samples, hash " << content_hash(out) << ")\n";
  return 0;
}

int run_train(const std::string& model, double nu, double beta, const std::string& data_path,
              int steps, int batch, int latent, const std::vector<int>& hidden, double lr,
              int eval_interval, std::uint64_t seed, const std::string& out_dir,
              const std::string& resume_path) {
  trainer::TrainConfig config;
  config.model = model == "chyvae" ? trainer::ModelKind::kChyvae : trainer::ModelKind::kBetaVae;
  config.nu = nu;
  config.beta = beta;
  config.latent_dim = latent;
  config.hidden = hidden;
  config.batch_size = batch;
  config.steps = steps;
  config.eval_interval = eval_interval;
  config.seed = seed;
  config.optimizer.lr = lr;
  config.validate();  // DomainError -> exit 2 at the call site

  auto ds = data::read_dataset(data_path);
  std::filesystem::create_directories(out_dir);

  std::optional<trainer::Checkpoint> resume;
  if (!resume_path.empty()) resume = load_ckpt_or_exit(resume_path);

  auto result = trainer::train(config, ds, out_dir, resume);

  std::string csv_path = out_dir + "/train_log.csv";
  {
    std::ofstream os(csv_path, resume ? std::ios::app : std::ios::out);
    if (!os) throw IoError("cannot write " + csv_path);
    if (!resume) os << trainer::step_log_csv_header() << "\n";
    for (const auto& row : result.log) os << trainer::step_log_csv_row(row) << "\n";
  }

  Manifest mf;
  mf.command = "train";
  mf.add("model", model);
  if (config.model == trainer::ModelKind::kChyvae) mf.add("nu", nu);
  else mf.add("beta", beta);
  mf.add("data", data_path);
  mf.add("dataset_hash", content_hash(data_path));
  mf.add("steps", static_cast<std::int64_t>(steps));
  mf.add("batch", static_cast<std::int64_t>(batch));
  mf.add("latent", static_cast<std::int64_t>(latent));
  mf.add("lr", lr);
  mf.add("seed", static_cast<std::int64_t>(seed));
  mf.add("log", csv_path);
  mf.add("checkpoint", out_dir + "/last.ckpt");
  mf.write(out_dir + "/manifest.txt");

  if (!result.log.empty()) {
    const auto& last = result.log.back();
    std::cout << "final step " << last.step << ": recon_per_pixel " << last.recon_per_pixel
              << ", total " << last.total << "\n";
  }
  std::cout << "checkpoint " << out_dir << "/last.ckpt\n";
  return 0;
}

int run_eval_metric(const std::string& ckpt_path, bool oracle, int L, int M, int B, int N,
                    double rho_pos, double rho_so, std::uint64_t seed, const std::string& out) {
  metric::MetricConfig cfg{L, M, B, N};
  int height = 32, width = 32;
  metric::Encoder encode;
  nn::ModelParams params;
  if (oracle) {
    encode = exact_factor_oracle();
  } else {
    auto ckpt = load_ckpt_or_exit(ckpt_path);
    params = std::move(ckpt.params);
    height = ckpt.img_height;
    width = ckpt.img_width;
    encode = model_encoder(params);
  }
  data::BatchSynthesizer synth(data::FactorSpec::standard(), data::CorrConfig{rho_pos, rho_so},
                               height, width);
  RngStream rng(seed);
  auto result = metric::metric_score(encode, cfg, synth, rng);

  std::ofstream os(out);
  if (!os) throw IoError("cannot write " + out);
  os.precision(10);
  os << "score," << result.score << "\n\n" << result.votes.to_csv();
  std::cout << "metric score " << result.score << " (votes in " << out << ")\n";

  Manifest mf;
  mf.command = "eval-metric";
  mf.add("ckpt", oracle ? std::string("oracle") : ckpt_path);
  mf.add("L", static_cast<std::int64_t>(L));
  mf.add("M", static_cast<std::int64_t>(M));
  mf.add("B", static_cast<std::int64_t>(B));
  mf.add("N", static_cast<std::int64_t>(N));
  mf.add("seed", static_cast<std::int64_t>(seed));
  mf.add("score", result.score);
  mf.add("output", out);
  mf.write(out + ".manifest");
  return 0;
}

int run_traverse(const std::string& ckpt_path, int dim, const std::string& grid_spec,
                 const std::string& data_path, int index, const std::string& out) {
  auto ckpt = load_ckpt_or_exit(ckpt_path);
  auto grid = parse_grid(grid_spec);

  std::vector<double> base;
  if (!data_path.empty()) {
    auto ds = data::read_dataset(data_path);
    if (index < 0 || index >= ds.count()) throw CLI::ValidationError("--index", "out of range");
    base = ds.sample_pixels01(index);
  } else {
    data::BatchSynthesizer synth(data::FactorSpec::standard(), data::CorrConfig{0.7, 0.7},
                                 ckpt.img_height, ckpt.img_width);
    RngStream rng(static_cast<std::uint64_t>(index));
    base = synth.random_sample(rng).pixels;
  }

  auto strip = trainer::traverse(ckpt.params, base, dim, grid, ckpt.img_height, ckpt.img_width);
  data::write_pgm(out, strip.height, strip.width, strip.pixels);
  std::cout << "wrote " << out << " (" << grid.size() << " tiles)\n";

  Manifest mf;
  mf.command = "traverse";
  mf.add("ckpt", ckpt_path);
  mf.add("ckpt_hash", content_hash(ckpt_path));
  mf.add("dim", static_cast<std::int64_t>(dim));
  mf.add("grid", grid_spec);
  mf.add("base", data_path.empty() ? "synthesized" : data_path);
  mf.add("index", static_cast<std::int64_t>(index));
  mf.add("output", out);
  mf.write(out + ".manifest");
  return 0;
}

int run_sample(const std::string& ckpt_path, const std::string& mode, int n, std::uint64_t seed,
               const std::string& out_dir) {
  auto ckpt = load_ckpt_or_exit(ckpt_path);
  std::filesystem::create_directories(out_dir);
  HyperpriorParams hp = HyperpriorParams::from_sigma0(ckpt.sigma0, ckpt.nu);
  RngStream rng(seed);
  auto images = trainer::sample_images(
      ckpt.params, hp, n,
      mode == "bartlett" ? trainer::SampleMode::kBartlett : trainer::SampleMode::kStandardNormal,
      rng, ckpt.img_height, ckpt.img_width);
  for (int i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%03d.pgm", i);
    data::write_pgm(out_dir + "/" + name, images[i].height, images[i].width, images[i].pixels);
  }
  std::cout << "wrote " << n << " images to " << out_dir << "\n";

  Manifest mf;
  mf.command = "sample";
  mf.add("ckpt", ckpt_path);
  mf.add("ckpt_hash", content_hash(ckpt_path));
  mf.add("mode", mode);
  mf.add("n", static_cast<std::int64_t>(n));
  mf.add("seed", static_cast<std::int64_t>(seed));
  mf.add("output", out_dir);
  mf.write(out_dir + "/manifest.txt");
  return 0;
}

int run_check(const std::string& level, bool tamper) {
  bool full = level == "full";
  auto results = selfcheck::run_checks(full, tamper);
  bool all_pass = true;
  std::printf("%-32s %-6s %s\n", "check", "status", "detail");
  for (const auto& r : results) {
    std::printf("%-32s %-6s %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.detail.c_str());
    all_pass = all_pass && r.pass;
  }
  std::printf("%s\n", all_pass ? "ALL CHECKS PASSED" : "CHECK FAILURES PRESENT");
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CHyVAE: inverse-Wishart covariance hyperprior VAE, desk scale"};
  app.require_subcommand(1);

  // generate-data
  auto* gen = app.add_subcommand("generate-data", "generate a CorrelatedEllipses dataset");
  int gd_n = 20000, gd_h = 32, gd_w = 32;
  double gd_rp = 0.7, gd_rs = 0.7;
  std::uint64_t gd_seed = 0;
  std::string gd_out;
  gen->add_option("--n", gd_n, "sample count")->check(CLI::PositiveNumber);
  gen->add_option("--height", gd_h, "image height");
  gen->add_option("--width", gd_w, "image width");
  gen->add_option("--rho-pos", gd_rp, "x/y position correlation");
  gen->add_option("--rho-so", gd_rs, "scale/orientation correlation");
  gen->add_option("--seed", gd_seed, "rng seed");
  gen->add_option("--out", gd_out, "output dataset path")->required();
  use_key_value_config(gen);

  // train
  auto* tr = app.add_subcommand("train", "train chyvae or the beta-VAE baseline");
  std::string tr_model, tr_data, tr_out, tr_resume;
  double tr_nu = 500.0, tr_beta = 4.0, tr_lr = 1e-4;
  int tr_steps = 5000, tr_batch = 50, tr_latent = 10, tr_eval = 1000;
  std::vector<int> tr_hidden = {512, 256};
  std::uint64_t tr_seed = 0;
  tr->add_option("--model", tr_model, "chyvae or betavae")
      ->required()
      ->check(CLI::IsMember({"chyvae", "betavae"}));
  tr->add_option("--nu", tr_nu, "inverse-Wishart degrees of freedom (chyvae)");
  tr->add_option("--beta", tr_beta, "KL weight (betavae)");
  tr->add_option("--data", tr_data, "dataset path")->required();
  tr->add_option("--steps", tr_steps, "training steps");
  tr->add_option("--batch", tr_batch, "batch size");
  tr->add_option("--latent", tr_latent, "latent dimension p");
  tr->add_option("--hidden", tr_hidden, "hidden layer sizes")->delimiter(',');
  tr->add_option("--lr", tr_lr, "Adam learning rate");
  tr->add_option("--eval-interval", tr_eval, "checkpoint interval");
  tr->add_option("--seed", tr_seed, "rng seed");
  tr->add_option("--out-dir", tr_out, "output directory")->required();
  tr->add_option("--resume", tr_resume, "checkpoint to resume from");
  use_key_value_config(tr);

  // eval-metric
  auto* ev = app.add_subcommand("eval-metric", "majority-vote disentanglement score");
  std::string ev_ckpt, ev_out = "metric.csv";
  bool ev_oracle = false;
  int ev_L = 50, ev_M = 1000, ev_B = 200, ev_N = 200;
  double ev_rp = 0.7, ev_rs = 0.7;
  std::uint64_t ev_seed = 0;
  ev->add_option("--ckpt", ev_ckpt, "model checkpoint");
  ev->add_flag("--oracle", ev_oracle, "score the exact-factor oracle encoder (test hook)");
  ev->add_option("--L", ev_L, "batch size per fixed factor");
  ev->add_option("--M", ev_M, "normalization sample count");
  ev->add_option("--B", ev_B, "vote pairs");
  ev->add_option("--N", ev_N, "test pairs");
  ev->add_option("--rho-pos", ev_rp, "x/y position correlation");
  ev->add_option("--rho-so", ev_rs, "scale/orientation correlation");
  ev->add_option("--seed", ev_seed, "rng seed");
  ev->add_option("--out", ev_out, "score + vote matrix CSV path");
  use_key_value_config(ev);

  // traverse
  auto* tv = app.add_subcommand("traverse", "latent traversal strip for one dimension");
  std::string tv_ckpt, tv_grid = "-2:2:7", tv_data, tv_out = "traversal.pgm";
  int tv_dim = 0, tv_index = 0;
  tv->add_option("--ckpt", tv_ckpt, "model checkpoint")->required();
  tv->add_option("--dim", tv_dim, "latent dimension to sweep")->required();
  tv->add_option("--grid", tv_grid, "sweep as start:end:count");
  tv->add_option("--data", tv_data, "dataset to take the base image from");
  tv->add_option("--index", tv_index, "base image index (or synthesis seed without --data)");
  tv->add_option("--out", tv_out, "output PGM path");
  use_key_value_config(tv);

  // sample
  auto* sm = app.add_subcommand("sample", "decode prior samples to images");
  std::string sm_ckpt, sm_mode = "bartlett", sm_out = "samples";
  int sm_n = 16;
  std::uint64_t sm_seed = 0;
  sm->add_option("--ckpt", sm_ckpt, "model checkpoint")->required();
  sm->add_option("--mode", sm_mode, "bartlett or standard_normal")
      ->check(CLI::IsMember({"bartlett", "standard_normal"}));
  sm->add_option("--n", sm_n, "number of images");
  sm->add_option("--seed", sm_seed, "rng seed");
  sm->add_option("--out-dir", sm_out, "output directory");
  use_key_value_config(sm);

  // check
  auto* ck = app.add_subcommand("check", "run the numerical self-check suite");
  std::string ck_level = "quick";
  bool ck_tamper = false;
  ck->add_option("--level", ck_level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
  ck->add_flag("--tamper", ck_tamper, "perturb one KL constant (negative control, test hook)");

  try {
    std::vector<std::string> args = merge_config_args(argc, argv);
    std::reverse(args.begin(), args.end());  // CLI11's vector overload wants reversed args
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const IoError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (gen->parsed()) return run_generate_data(gd_n, gd_h, gd_w, gd_rp, gd_rs, gd_seed, gd_out);
    if (tr->parsed())
      return run_train(tr_model, tr_nu, tr_beta, tr_data, tr_steps, tr_batch, tr_latent, tr_hidden,
                       tr_lr, tr_eval, tr_seed, tr_out, tr_resume);
    if (ev->parsed()) {
      if (!ev_oracle && ev_ckpt.empty()) {
        std::cerr << "eval-metric: --ckpt or --oracle required\n";
        return 2;
      }
      return run_eval_metric(ev_ckpt, ev_oracle, ev_L, ev_M, ev_B, ev_N, ev_rp, ev_rs, ev_seed, ev_out);
    }
    if (tv->parsed()) return run_traverse(tv_ckpt, tv_dim, tv_grid, tv_data, tv_index, tv_out);
    if (sm->parsed()) return run_sample(sm_ckpt, sm_mode, sm_n, sm_seed, sm_out);
    if (ck->parsed()) return run_check(ck_level, ck_tamper);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const NonFiniteGradient& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return 3;
  } catch (const DomainError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
