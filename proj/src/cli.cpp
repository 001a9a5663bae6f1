#include "spectralopt/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "spectralopt/config.hpp"
#include "spectralopt/curvature.hpp"
#include "spectralopt/matrix.hpp"
#include "spectralopt/nn.hpp"
#include "spectralopt/optim.hpp"
#include "spectralopt/parallel.hpp"
#include "spectralopt/rng.hpp"
#include "spectralopt/theory.hpp"

namespace spectralopt::cli {
namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = 0;
  bool has_config = false;
  bool has_out = false;
  bool has_seed = false;
};

struct RunContext {
  config::Config cfg;
  fs::path out;
  std::uint64_t seed = 0;
};

// Flags win over [run] keys, which win over built-in defaults.
RunContext make_context(const CommonArgs& args) {
  RunContext ctx;
  if (args.has_config) ctx.cfg = config::Config::parse_file(args.config_path);
  long long seed = ctx.cfg.get_int("run", "seed", 0);
  std::string out = ctx.cfg.get_string("run", "out", "out");
  if (args.has_seed) seed = args.seed;
  if (args.has_out) out = args.out_dir;
  ctx.seed = static_cast<std::uint64_t>(seed);
  ctx.out = out;
  fs::create_directories(ctx.out);
  return ctx;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw NumericError("cannot open for writing: " + path.string());
  os << content;
  if (!os) throw NumericError("write failed: " + path.string());
}

std::string opt_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string{};
}

std::string opt_field(const std::optional<int>& v) {
  return v ? std::to_string(*v) : std::string{};
}

// ---------------------------------------------------------------------------
// verify

int cmd_verify(const CommonArgs& args) {
  RunContext ctx = make_context(args);
  auto sizes =
      ctx.cfg.get_size_list("verify", "sizes", {{2, 2}, {4, 6}, {8, 8}});
  ctx.cfg.reject_unknown();

  theory::VerificationReport report = theory::verify_all(ctx.seed, sizes);
  std::ostringstream os;
  report.write(os);
  write_file(ctx.out / "verify_report.txt", os.str());
  std::cout << os.str();
  return report.all_pass() ? kExitOk : kExitVerifyFailed;
}

// ---------------------------------------------------------------------------
// shared neural-net run plumbing

struct NnSettings {
  nn::BlobSpec blobs;
  std::vector<int> hidden;
  double gain = 1.0;
  nn::PreNorm norm = nn::PreNorm::None;
  nn::TrainConfig train;  // kind/eta_target/epochs filled per run
};

nn::PreNorm parse_norm(const std::string& text) {
  if (text == "none") return nn::PreNorm::None;
  if (text == "frobnorm") return nn::PreNorm::FrobNorm;
  if (text == "standardize") return nn::PreNorm::Standardize;
  throw config::ConfigError("model.norm: expected none|frobnorm|standardize, got '" +
                            text + "'");
}

nn::TrainConfig::Schedule parse_schedule(const std::string& text) {
  if (text == "constant") return nn::TrainConfig::Schedule::Constant;
  if (text == "linear") return nn::TrainConfig::Schedule::LinearDecay;
  throw config::ConfigError("train.schedule: expected constant|linear, got '" +
                            text + "'");
}

NnSettings read_nn_settings(const config::Config& cfg,
                            const std::string& default_norm,
                            const std::string& default_schedule) {
  NnSettings s;
  s.blobs.features = cfg.get_int("data", "features", s.blobs.features);
  s.blobs.classes = cfg.get_int("data", "classes", s.blobs.classes);
  s.blobs.count = cfg.get_int("data", "count", s.blobs.count);
  s.blobs.scale_max = cfg.get_double("data", "scale_max", s.blobs.scale_max);
  s.blobs.center_scale =
      cfg.get_double("data", "center_scale", s.blobs.center_scale);
  s.blobs.spread = cfg.get_double("data", "spread", s.blobs.spread);

  s.hidden = cfg.get_int_list("model", "hidden", {32, 32});
  s.gain = cfg.get_double("model", "gain", 1.0);
  s.norm = parse_norm(cfg.get_string("model", "norm", default_norm));

  nn::TrainConfig& t = s.train;
  t.batch = cfg.get_int("train", "batch", t.batch);
  t.eta_reference = cfg.get_double("train", "eta_reference", t.eta_reference);
  t.mu = cfg.get_double("train", "mu", t.mu);
  t.ns.iterations = cfg.get_int("train", "ns_iterations", t.ns.iterations);
  t.use_exact_polar =
      cfg.get_bool("train", "exact_polar", t.use_exact_polar);
  t.schedule = parse_schedule(cfg.get_string("train", "schedule", default_schedule));
  t.milestones = cfg.get_double_list("train", "milestones", t.milestones);
  t.val_fraction = cfg.get_double("train", "val_fraction", t.val_fraction);
  t.divergence_loss =
      cfg.get_double("train", "divergence_loss", t.divergence_loss);
  t.epochs = cfg.get_int("train", "epochs", t.epochs);
  return s;
}

std::vector<nn::LayerSpec> layer_specs(const NnSettings& s, int classes) {
  std::vector<nn::LayerSpec> specs;
  for (int h : s.hidden) specs.push_back({h, nn::Activation::Relu, s.norm});
  specs.push_back({classes, nn::Activation::Identity, s.norm});
  return specs;
}

struct SeedTriple {
  std::uint64_t data;
  std::uint64_t model;
  std::uint64_t train;
};

// Data and initialization depend only on (global seed, run seed), so every
// optimizer and learning rate sees the identical problem for a given seed.
SeedTriple derive_seeds(std::uint64_t global, int seed_value) {
  Rng per = Rng(global).fork(static_cast<std::uint64_t>(seed_value));
  return {per.fork(1).seed(), per.fork(2).seed(), per.fork(3).seed()};
}

nn::TrainResult run_nn(const NnSettings& settings, optim::Kind kind, double eta,
                       int epochs, std::uint64_t global, int seed_value) {
  SeedTriple seeds = derive_seeds(global, seed_value);
  nn::Dataset data = nn::make_blobs(settings.blobs, seeds.data);
  nn::MLPModel model =
      nn::MLPModel::make(settings.blobs.features,
                         layer_specs(settings, settings.blobs.classes),
                         seeds.model, settings.gain);
  nn::TrainConfig cfg = settings.train;
  cfg.target_kind = kind;
  cfg.eta_target = eta;
  cfg.epochs = epochs;
  return nn::train(model, data, cfg, seeds.train);
}

std::string milestone_header(const std::vector<double>& milestones) {
  std::string header;
  for (double t : milestones) header += ",milestone_" + format_double(t);
  return header;
}

std::string milestone_fields(const std::vector<std::optional<int>>& epochs) {
  std::string fields;
  for (const auto& e : epochs) fields += "," + opt_field(e);
  return fields;
}

// ---------------------------------------------------------------------------
// lr-sweep

int cmd_lr_sweep(const CommonArgs& args) {
  RunContext ctx = make_context(args);
  auto etas = ctx.cfg.get_double_list(
      "sweep", "etas", {0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.25});
  auto seeds = ctx.cfg.get_int_list("sweep", "seeds", {0, 1, 2, 3, 4});
  int steps = ctx.cfg.get_int("sweep", "steps", 50);
  NnSettings settings = read_nn_settings(ctx.cfg, "none", "constant");
  ctx.cfg.reject_unknown();

  if (etas.empty()) throw config::ConfigError("sweep.etas: empty learning-rate list");
  if (seeds.empty()) throw config::ConfigError("sweep.seeds: empty seed list");
  if (steps <= 0) throw config::ConfigError("sweep.steps: must be positive");
  for (double eta : etas)
    if (eta <= 0.0) throw config::ConfigError("sweep.etas: learning rates must be positive");

  // Enough epochs to cover the requested number of optimizer steps.
  const int val_count =
      static_cast<int>(settings.blobs.count * settings.train.val_fraction);
  const int train_count = settings.blobs.count - val_count;
  const int batches_per_epoch = train_count / settings.train.batch;
  if (batches_per_epoch < 1)
    throw config::ConfigError("train.batch: larger than the training split");
  const int epochs = (steps + batches_per_epoch - 1) / batches_per_epoch;

  const std::vector<optim::Kind> kinds = {optim::Kind::Sgd, optim::Kind::Muon};
  const int per_kind = static_cast<int>(etas.size() * seeds.size());
  const int total = 2 * per_kind;
  std::vector<nn::TrainResult> results(static_cast<std::size_t>(total));

  parallel_for(total, [&](int idx) {
    const int k = idx / per_kind;
    const int rest = idx % per_kind;
    const int ei = rest / static_cast<int>(seeds.size());
    const int si = rest % static_cast<int>(seeds.size());
    results[static_cast<std::size_t>(idx)] =
        run_nn(settings, kinds[static_cast<std::size_t>(k)],
               etas[static_cast<std::size_t>(ei)], epochs, ctx.seed,
               seeds[static_cast<std::size_t>(si)]);
  });

  std::ostringstream os;
  os << "optimizer,eta,seed,diverged,diverged_step,step50_loss,final_loss"
     << milestone_header(settings.train.milestones) << "\n";
  for (int idx = 0; idx < total; ++idx) {
    const int k = idx / per_kind;
    const int rest = idx % per_kind;
    const int ei = rest / static_cast<int>(seeds.size());
    const int si = rest % static_cast<int>(seeds.size());
    const nn::TrainResult& r = results[static_cast<std::size_t>(idx)];
    os << (kinds[static_cast<std::size_t>(k)] == optim::Kind::Muon ? "muon" : "sgd")
       << "," << format_double(etas[static_cast<std::size_t>(ei)]) << ","
       << seeds[static_cast<std::size_t>(si)] << "," << (r.diverged ? 1 : 0)
       << "," << (r.diverged ? std::to_string(r.diverged_step) : std::string{})
       << "," << opt_field(r.step50_loss) << "," << format_double(r.final_loss)
       << milestone_fields(r.milestone_epochs) << "\n";
  }
  write_file(ctx.out / "lr_sweep.csv", os.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// converge

double epoch_loss_floor(const std::vector<nn::TrainResult>& results) {
  double l_star = results.front().initial_loss;
  for (const auto& r : results) {
    l_star = std::min(l_star, r.initial_loss);
    for (const auto& e : r.epochs) l_star = std::min(l_star, e.train_loss);
  }
  return l_star;
}

int cmd_converge(const CommonArgs& args) {
  RunContext ctx = make_context(args);
  const std::string mode = ctx.cfg.get_string("converge", "mode", "equal");
  auto seeds = ctx.cfg.get_int_list("converge", "seeds", {0, 1, 2, 3, 4});
  const double eta_equal = ctx.cfg.get_double("converge", "eta", 0.05);
  const double eta_muon = ctx.cfg.get_double("converge", "eta_muon", 0.1);
  const double eta_sgd = ctx.cfg.get_double("converge", "eta_sgd", 0.01);

  const int q_rows = ctx.cfg.get_int("quadratic", "rows", 4);
  const int q_cols = ctx.cfg.get_int("quadratic", "cols", 6);
  const double q_cond_a = ctx.cfg.get_double("quadratic", "cond_a", 10.0);
  const double q_cond_b = ctx.cfg.get_double("quadratic", "cond_b", 10.0);
  const int q_steps = ctx.cfg.get_int("quadratic", "steps", 200);
  const double q_eta = ctx.cfg.get_double("quadratic", "eta", 0.0);

  NnSettings settings = read_nn_settings(ctx.cfg, "standardize", "linear");
  ctx.cfg.reject_unknown();

  if (mode != "equal" && mode != "best" && mode != "quadratic")
    throw config::ConfigError("converge.mode: expected equal|best|quadratic, got '" +
                              mode + "'");
  if (seeds.empty()) throw config::ConfigError("converge.seeds: empty seed list");

  const int n_seeds = static_cast<int>(seeds.size());
  const int total = 2 * n_seeds;

  if (mode == "quadratic") {
    if (q_rows < 1 || q_cols < q_rows)
      throw config::ConfigError("quadratic.rows/cols: need 1 <= rows <= cols");
    if (q_steps < 1) throw config::ConfigError("quadratic.steps: must be positive");

    std::vector<theory::RunTrace> traces(static_cast<std::size_t>(total));
    parallel_for(total, [&](int idx) {
      const bool muon = idx / n_seeds == 1;
      const int seed_value = seeds[static_cast<std::size_t>(idx % n_seeds)];
      SeedTriple sd = derive_seeds(ctx.seed, seed_value);
      curvature::KroneckerQuadratic q =
          curvature::make_instance(q_rows, q_cols, q_cond_a, q_cond_b, sd.data);
      Rng wr(sd.model);
      Matrix w0 = q.w_star();
      for (int r = 0; r < w0.rows(); ++r)
        for (int c = 0; c < w0.cols(); ++c) w0(r, c) += wr.normal();
      const theory::StepKind kind =
          muon ? theory::StepKind::MuonExact : theory::StepKind::Gd;
      const theory::EtaPolicy policy =
          q_eta > 0.0 ? theory::EtaPolicy::constant(q_eta)
                      : (muon ? theory::EtaPolicy::muon_theory()
                              : theory::EtaPolicy::gd_theory());
      traces[static_cast<std::size_t>(idx)] =
          theory::run(q, w0, kind, policy, q_steps);
    });
    for (int idx = 0; idx < total; ++idx) {
      const bool muon = idx / n_seeds == 1;
      const int seed_value = seeds[static_cast<std::size_t>(idx % n_seeds)];
      std::ostringstream os;
      traces[static_cast<std::size_t>(idx)].write_csv(os);
      write_file(ctx.out / ("trace_" + std::string(muon ? "muon" : "gd") +
                            "_seed" + std::to_string(seed_value) + ".csv"),
                 os.str());
    }
    return kExitOk;
  }

  // Neural-net modes: equal shares one learning rate, best uses per-optimizer rates.
  std::vector<nn::TrainResult> results(static_cast<std::size_t>(total));
  parallel_for(total, [&](int idx) {
    const bool muon = idx / n_seeds == 1;
    const int seed_value = seeds[static_cast<std::size_t>(idx % n_seeds)];
    const double eta = mode == "equal" ? eta_equal : (muon ? eta_muon : eta_sgd);
    results[static_cast<std::size_t>(idx)] =
        run_nn(settings, muon ? optim::Kind::Muon : optim::Kind::Sgd, eta,
               settings.train.epochs, ctx.seed, seed_value);
  });

  const double l_star = epoch_loss_floor(results);
  std::ostringstream table;
  table << "optimizer,seed,final_val_acc"
        << milestone_header(settings.train.milestones) << "\n";
  for (int idx = 0; idx < total; ++idx) {
    const bool muon = idx / n_seeds == 1;
    const int seed_value = seeds[static_cast<std::size_t>(idx % n_seeds)];
    const nn::TrainResult& r = results[static_cast<std::size_t>(idx)];
    std::ostringstream os;
    nn::write_trace_csv(os, r, l_star);
    write_file(ctx.out / ("trace_" + std::string(muon ? "muon" : "sgd") +
                          "_seed" + std::to_string(seed_value) + ".csv"),
               os.str());
    table << (muon ? "muon" : "sgd") << "," << seed_value << ","
          << (r.epochs.empty() ? std::string{}
                               : format_double(r.epochs.back().val_acc))
          << milestone_fields(r.milestone_epochs) << "\n";
  }
  write_file(ctx.out / "milestones.csv", table.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// spectrum

int cmd_spectrum(const std::string& matrix_path, const CommonArgs& args) {
  if (!fs::exists(matrix_path)) {
    std::cerr << "spectrum: no such file: " << matrix_path << "\n";
    return kExitUsage;
  }
  Matrix g;
  try {
    g = load_matrix(matrix_path);
  } catch (const std::exception& e) {
    std::cerr << "spectrum: " << e.what() << "\n";
    return kExitUsage;
  }
  curvature::SpectralReport rep = curvature::spectral_report(g);

  std::ostringstream os;
  os << "rows=" << g.rows() << "\n";
  os << "cols=" << g.cols() << "\n";
  os << "sigma=";
  for (std::size_t i = 0; i < rep.sigma.size(); ++i) {
    if (i) os << ",";
    os << format_double(rep.sigma[i]);
  }
  os << "\n";
  os << "flatness=" << format_double(rep.flatness) << "\n";
  os << "eta_ratio=" << format_double(rep.eta_ratio) << "\n";
  os << "lam_max_a=" << format_double(rep.lam_max_a) << "\n";
  os << "lam_min_a=" << format_double(rep.lam_min_a) << "\n";
  os << "lam_max_b=" << format_double(rep.lam_max_b) << "\n";
  os << "lam_min_b=" << format_double(rep.lam_min_b) << "\n";
  os << "eta_max_gd=" << format_double(rep.eta_max_gd) << "\n";
  os << "eta_max_muon=" << format_double(rep.eta_max_muon) << "\n";
  os << "ratio_gd=" << format_double(rep.ratio_gd) << "\n";
  os << "ratio_muon=" << format_double(rep.ratio_muon) << "\n";

  std::cout << os.str();
  if (args.has_out) {
    fs::create_directories(args.out_dir);
    write_file(fs::path(args.out_dir) / "spectrum.txt", os.str());
  }
  return kExitOk;
}

void add_common(CLI::App* cmd, CommonArgs& args, CLI::Option** config_opt,
                CLI::Option** out_opt, CLI::Option** seed_opt) {
  *config_opt = cmd->add_option("--config", args.config_path, "config file (INI)");
  *out_opt = cmd->add_option("--out", args.out_dir, "output directory");
  *seed_opt = cmd->add_option("--seed", args.seed, "global seed");
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"optimizer theory laboratory: verification, sweeps and spectra"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string matrix_path;

  CLI::Option *cfg_v, *out_v, *seed_v;
  CLI::App* verify = app.add_subcommand(
      "verify", "run the analytical checks and write a report");
  add_common(verify, args, &cfg_v, &out_v, &seed_v);

  CLI::Option *cfg_s, *out_s, *seed_s;
  CLI::App* sweep = app.add_subcommand(
      "lr-sweep", "learning-rate stability grid over optimizers and seeds");
  add_common(sweep, args, &cfg_s, &out_s, &seed_s);

  CLI::Option *cfg_c, *out_c, *seed_c;
  CLI::App* converge = app.add_subcommand(
      "converge", "convergence traces for matched runs");
  add_common(converge, args, &cfg_c, &out_c, &seed_c);

  CLI::App* spectrum = app.add_subcommand(
      "spectrum", "spectral summary of a matrix file");
  spectrum->add_option("matrix", matrix_path, "path to a matrix file")
      ->required();
  CLI::Option* out_p = spectrum->add_option("--out", args.out_dir,
                                            "also write spectrum.txt here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  auto fill_presence = [&](CLI::Option* c, CLI::Option* o, CLI::Option* s) {
    args.has_config = c && c->count() > 0;
    args.has_out = o && o->count() > 0;
    args.has_seed = s && s->count() > 0;
  };

  try {
    if (verify->parsed()) {
      fill_presence(cfg_v, out_v, seed_v);
      return cmd_verify(args);
    }
    if (sweep->parsed()) {
      fill_presence(cfg_s, out_s, seed_s);
      return cmd_lr_sweep(args);
    }
    if (converge->parsed()) {
      fill_presence(cfg_c, out_c, seed_c);
      return cmd_converge(args);
    }
    if (spectrum->parsed()) {
      fill_presence(nullptr, out_p, nullptr);
      return cmd_spectrum(matrix_path, args);
    }
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "filesystem error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerifyFailed;
  }
  return kExitUsage;
}

}  // namespace spectralopt::cli
