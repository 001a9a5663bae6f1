#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "spectralopt/matrix.hpp"
#include "spectralopt/optim.hpp"

namespace spectralopt::nn {

enum class Activation { Relu, Identity };
enum class PreNorm { None, FrobNorm, Standardize };

struct LayerSpec {
  int out = 1;
  Activation act = Activation::Relu;
  PreNorm norm = PreNorm::None;
};

struct Layer {
  Matrix w;  // out x in
  Matrix b;  // out x 1
  Activation act = Activation::Relu;
  PreNorm norm = PreNorm::None;
};

struct MLPModel {
  std::vector<Layer> layers;

  // Weights are seeded normal with std gain/sqrt(fan_in); biases start zero.
  static MLPModel make(int inputs, const std::vector<LayerSpec>& specs,
                       std::uint64_t seed, double gain = 1.0);
  int inputs() const { return layers.front().w.cols(); }
  int outputs() const { return layers.back().w.rows(); }
};

struct BlobSpec {
  int features = 16;
  int classes = 3;
  int count = 640;
  double scale_max = 1000.0;   // geometric per-feature scales from 1 up to this
  double center_scale = 0.5;   // class separation before feature scaling
  double spread = 1.0;         // within-class noise before feature scaling
};

struct Dataset {
  Matrix x;                 // count x features
  std::vector<int> labels;  // values in [0, classes)
  int classes = 0;
};

// Gaussian blob mixture with deliberately anisotropic feature scales.
Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed);

struct FrobNormed {
  Matrix x;
  bool was_zero = false;  // zero input passes through unchanged, flagged
};
// x / ||x||_F; guarantees lambda_max(x^T x) <= 1 for nonzero input.
FrobNormed frobnorm(const Matrix& x);

// Per-column standardization (mean 0, variance 1 up to the 1e-8 variance
// floor; constant columns come out zero). Requires batch >= 2.
Matrix standardize(const Matrix& x);

struct Gradients {
  std::vector<Matrix> w;
  std::vector<Matrix> b;
};

struct ForwardBackward {
  double loss = 0.0;  // softmax cross-entropy, mean over the batch
  Gradients grads;
  std::vector<Matrix> layer_inputs;  // post-normalization input to each layer
  Matrix logits;
};

ForwardBackward forward_backward(const MLPModel& model, const Matrix& x,
                                 const std::vector<int>& labels);

double eval_accuracy(const MLPModel& model, const Matrix& x,
                     const std::vector<int>& labels);

struct TrainConfig {
  optim::Kind target_kind = optim::Kind::Muon;
  double eta_target = 0.05;
  double eta_reference = 0.01;  // SGD on biases and other non-matrix params
  double mu = 0.0;
  polar::NewtonSchulzConfig ns;
  bool use_exact_polar = false;
  int epochs = 15;
  int batch = 32;
  enum class Schedule { Constant, LinearDecay } schedule = Schedule::Constant;
  std::vector<double> milestones = {0.5, 0.7, 0.85};  // ascending accuracies
  double val_fraction = 0.2;
  int probe_batches = 0;  // capture layer inputs for this many leading batches
  double divergence_loss = 1e6;
  int norm_trace_steps = 50;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-indexed
  double train_loss = 0.0;
  double val_acc = 0.0;
  int steps_done = 0;
};

struct StepRecord {
  int step = 0;  // 0 is the initial point
  double loss = 0.0;
  double eta = 0.0;
  double grad_fro = 0.0;   // over matrix-shaped parameters
  double param_fro = 0.0;  // after the update
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::vector<StepRecord> steps;  // initial row plus the first norm_trace_steps steps
  bool diverged = false;
  int diverged_step = -1;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::optional<double> step50_loss;  // batch loss observed at the 50th step
  std::vector<std::vector<double>> probe_lambda;  // per probed batch, per layer
  std::int64_t bias_muon_steps = 0;   // must stay 0: biases never meet Muon
  std::vector<std::optional<int>> milestone_epochs;  // per threshold
  MLPModel model;  // final parameters
};

// Splits off a validation fraction (seed-determined), routes matrix-shaped
// parameters to the target optimizer and everything else to reference SGD,
// and trains with per-epoch loss/accuracy records plus per-step norm traces
// for the leading steps. Divergence (loss above the threshold or non-finite
// values) stops the run and flags it.
TrainResult train(const MLPModel& model, const Dataset& data,
                  const TrainConfig& cfg, std::uint64_t seed);

// First 1-indexed epoch whose accuracy reaches each threshold; absent if never.
std::vector<std::optional<int>> milestone_epochs(
    const std::vector<double>& val_accs, const std::vector<double>& thresholds);

// Batch-averaged lambda_max(x^T x) per layer over captured layer inputs.
std::vector<double> lambda_max_probe(
    const std::vector<std::vector<Matrix>>& layer_inputs_per_batch);

// Same column layout as the quadratic-run traces plus val_acc and epoch.
// Step rows carry per-step fields; epoch rows carry loss/val_acc/epoch and,
// when l_star is given, gap and r_t.
void write_trace_csv(std::ostream& os, const TrainResult& result,
                     std::optional<double> l_star);

}  // namespace spectralopt::nn
