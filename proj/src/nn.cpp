#include "spectralopt/nn.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <utility>

#include "spectralopt/densela.hpp"
#include "spectralopt/rng.hpp"
#include "spectralopt/theory.hpp"

namespace spectralopt::nn {

namespace {

struct ForwardCache {
  std::vector<Matrix> inputs;  // post-normalization input to each layer
  std::vector<Matrix> preact;  // z = input * w^T + b
  std::vector<Matrix> act;     // activation output per layer
};

Matrix apply_norm(const Matrix& x, PreNorm norm) {
  switch (norm) {
    case PreNorm::None:
      return x;
    case PreNorm::FrobNorm:
      return frobnorm(x).x;
    case PreNorm::Standardize:
      return standardize(x);
  }
  throw DimensionError("forward: unknown normalization");
}

Matrix affine(const Matrix& x, const Layer& layer) {
  Matrix z = la::matmul(x, la::transpose(layer.w));
  for (int i = 0; i < z.rows(); ++i)
    for (int o = 0; o < z.cols(); ++o) z(i, o) += layer.b(o, 0);
  z.check_finite("affine");
  return z;
}

Matrix activate(const Matrix& z, Activation act) {
  if (act == Activation::Identity) return z;
  Matrix out = z;
  for (double& v : out.data()) v = std::max(v, 0.0);
  return out;
}

ForwardCache forward(const MLPModel& model, const Matrix& x) {
  ForwardCache cache;
  Matrix a = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const Layer& layer = model.layers[l];
    try {
      Matrix in = apply_norm(a, layer.norm);
      Matrix z = affine(in, layer);
      a = activate(z, layer.act);
      cache.inputs.push_back(std::move(in));
      cache.preact.push_back(std::move(z));
      cache.act.push_back(a);
    } catch (const NumericError& e) {
      throw NumericError("forward layer " + std::to_string(l) + ": " + e.what());
    }
  }
  return cache;
}

struct SoftmaxLoss {
  double loss = 0.0;
  Matrix dlogits;  // (softmax - onehot) / batch
};

SoftmaxLoss softmax_cross_entropy(const Matrix& logits,
                                  const std::vector<int>& labels) {
  const int batch = logits.rows();
  const int classes = logits.cols();
  SoftmaxLoss out;
  out.dlogits = Matrix(batch, classes);
  double total = 0.0;
  for (int i = 0; i < batch; ++i) {
    double zmax = logits(i, 0);
    for (int c = 1; c < classes; ++c) zmax = std::max(zmax, logits(i, c));
    double denom = 0.0;
    for (int c = 0; c < classes; ++c) denom += std::exp(logits(i, c) - zmax);
    total += zmax + std::log(denom) - logits(i, labels[i]);
    for (int c = 0; c < classes; ++c) {
      const double p = std::exp(logits(i, c) - zmax) / denom;
      out.dlogits(i, c) = (p - (labels[i] == c ? 1.0 : 0.0)) / batch;
    }
  }
  out.loss = total / batch;
  if (!std::isfinite(out.loss)) {
    throw NumericError("softmax loss is not finite");
  }
  return out;
}

// Gradient of the loss with respect to the pre-normalization activations,
// given the gradient with respect to the normalized ones.
Matrix norm_backward(const Matrix& d_normed, const Matrix& pre_norm, PreNorm norm) {
  switch (norm) {
    case PreNorm::None:
      return d_normed;
    case PreNorm::FrobNorm: {
      const double r = la::frobenius_norm(pre_norm);
      if (r == 0.0) return d_normed;  // zero input passed through unchanged
      double inner = 0.0;
      for (std::size_t i = 0; i < pre_norm.data().size(); ++i) {
        inner += d_normed.data()[i] * pre_norm.data()[i];
      }
      Matrix out(pre_norm.rows(), pre_norm.cols());
      const double coef = inner / (r * r * r);
      for (std::size_t i = 0; i < pre_norm.data().size(); ++i) {
        out.data()[i] = d_normed.data()[i] / r - pre_norm.data()[i] * coef;
      }
      return out;
    }
    case PreNorm::Standardize: {
      const int rows = pre_norm.rows();
      const int cols = pre_norm.cols();
      Matrix out(rows, cols);
      for (int j = 0; j < cols; ++j) {
        double mean = 0.0;
        for (int i = 0; i < rows; ++i) mean += pre_norm(i, j);
        mean /= rows;
        double var = 0.0;
        for (int i = 0; i < rows; ++i) {
          const double d = pre_norm(i, j) - mean;
          var += d * d;
        }
        var /= rows;
        const double s = std::sqrt(var + 1e-8);
        double g_mean = 0.0, gx_mean = 0.0;
        for (int i = 0; i < rows; ++i) {
          const double xh = (pre_norm(i, j) - mean) / s;
          g_mean += d_normed(i, j);
          gx_mean += d_normed(i, j) * xh;
        }
        g_mean /= rows;
        gx_mean /= rows;
        for (int i = 0; i < rows; ++i) {
          const double xh = (pre_norm(i, j) - mean) / s;
          out(i, j) = (d_normed(i, j) - g_mean - xh * gx_mean) / s;
        }
      }
      return out;
    }
  }
  throw DimensionError("backward: unknown normalization");
}

void check_batch(const MLPModel& model, const Matrix& x,
                 const std::vector<int>& labels) {
  if (model.layers.empty()) throw DimensionError("model has no layers");
  if (x.rows() < 1) throw DimensionError("batch must be nonempty");
  if (x.cols() != model.inputs()) {
    throw DimensionError("batch feature count disagrees with the model input size");
  }
  if (labels.size() != static_cast<std::size_t>(x.rows())) {
    throw DimensionError("one label per batch row required");
  }
  for (int y : labels) {
    if (y < 0 || y >= model.outputs()) {
      throw DimensionError("label out of range: " + std::to_string(y));
    }
  }
}

}  // namespace

MLPModel MLPModel::make(int inputs, const std::vector<LayerSpec>& specs,
                        std::uint64_t seed, double gain) {
  if (inputs < 1) throw DimensionError("model: input size must be positive");
  if (specs.empty()) throw DimensionError("model: at least one layer required");
  if (!(gain > 0.0)) throw DimensionError("model: gain must be positive");
  Rng rng(seed);
  MLPModel model;
  int fan_in = inputs;
  for (const LayerSpec& spec : specs) {
    if (spec.out < 1) throw DimensionError("model: layer width must be positive");
    Layer layer;
    layer.w = Matrix(spec.out, fan_in);
    const double stddev = gain / std::sqrt(static_cast<double>(fan_in));
    for (double& v : layer.w.data()) v = stddev * rng.normal();
    layer.b = Matrix(spec.out, 1);
    layer.act = spec.act;
    layer.norm = spec.norm;
    model.layers.push_back(std::move(layer));
    fan_in = spec.out;
  }
  return model;
}

Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed) {
  if (spec.features < 1 || spec.classes < 1 || spec.count < 1) {
    throw DimensionError("make_blobs: dimensions must be positive");
  }
  if (!(spec.scale_max >= 1.0)) {
    throw DimensionError("make_blobs: scale_max must be >= 1");
  }
  Rng rng(seed);
  Matrix centers(spec.classes, spec.features);
  for (double& v : centers.data()) v = spec.center_scale * rng.normal();
  Dataset data;
  data.classes = spec.classes;
  data.labels.resize(spec.count);
  for (int& y : data.labels) y = rng.uniform_int(0, spec.classes - 1);
  data.x = Matrix(spec.count, spec.features);
  for (int i = 0; i < spec.count; ++i) {
    for (int j = 0; j < spec.features; ++j) {
      const double scale =
          spec.features == 1
              ? 1.0
              : std::pow(spec.scale_max,
                         static_cast<double>(j) / (spec.features - 1));
      data.x(i, j) =
          (centers(data.labels[i], j) + spec.spread * rng.normal()) * scale;
    }
  }
  return data;
}

FrobNormed frobnorm(const Matrix& x) {
  const double r = la::frobenius_norm(x);
  if (r == 0.0) return {x, true};
  return {(1.0 / r) * x, false};
}

Matrix standardize(const Matrix& x) {
  if (x.rows() < 2) {
    throw DimensionError("standardize: needs at least two rows for batch statistics");
  }
  Matrix out(x.rows(), x.cols());
  for (int j = 0; j < x.cols(); ++j) {
    double mean = 0.0;
    for (int i = 0; i < x.rows(); ++i) mean += x(i, j);
    mean /= x.rows();
    double var = 0.0;
    for (int i = 0; i < x.rows(); ++i) {
      const double d = x(i, j) - mean;
      var += d * d;
    }
    var /= x.rows();
    const double s = std::sqrt(var + 1e-8);
    for (int i = 0; i < x.rows(); ++i) out(i, j) = (x(i, j) - mean) / s;
  }
  return out;
}

ForwardBackward forward_backward(const MLPModel& model, const Matrix& x,
                                 const std::vector<int>& labels) {
  check_batch(model, x, labels);
  ForwardCache cache = forward(model, x);
  const int layer_count = static_cast<int>(model.layers.size());

  ForwardBackward out;
  out.logits = cache.act.back();
  SoftmaxLoss head = softmax_cross_entropy(out.logits, labels);
  out.loss = head.loss;
  out.layer_inputs = cache.inputs;
  out.grads.w.resize(layer_count);
  out.grads.b.resize(layer_count);

  Matrix dz = head.dlogits;  // gradient wrt the pre-activation of the last layer
  if (model.layers.back().act == Activation::Relu) {
    for (std::size_t i = 0; i < dz.data().size(); ++i) {
      if (cache.preact.back().data()[i] <= 0.0) dz.data()[i] = 0.0;
    }
  }
  for (int l = layer_count - 1; l >= 0; --l) {
    out.grads.w[l] = la::matmul(la::transpose(dz), cache.inputs[l]);
    Matrix gb(model.layers[l].b.rows(), 1);
    for (int i = 0; i < dz.rows(); ++i)
      for (int o = 0; o < dz.cols(); ++o) gb(o, 0) += dz(i, o);
    out.grads.b[l] = std::move(gb);
    if (l == 0) break;

    Matrix da = la::matmul(dz, model.layers[l].w);  // wrt normalized input
    Matrix dprev = norm_backward(da, cache.act[l - 1], model.layers[l].norm);
    if (model.layers[l - 1].act == Activation::Relu) {
      for (std::size_t i = 0; i < dprev.data().size(); ++i) {
        if (cache.preact[l - 1].data()[i] <= 0.0) dprev.data()[i] = 0.0;
      }
    }
    dz = std::move(dprev);
  }
  return out;
}

double eval_accuracy(const MLPModel& model, const Matrix& x,
                     const std::vector<int>& labels) {
  check_batch(model, x, labels);
  ForwardCache cache = forward(model, x);
  const Matrix& logits = cache.act.back();
  int hits = 0;
  for (int i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / logits.rows();
}

void TrainConfig::validate() const {
  if (!(eta_target >= 0.0)) throw DimensionError("train: eta_target must be >= 0");
  if (!(eta_reference > 0.0)) throw DimensionError("train: eta_reference must be positive");
  if (!(mu >= 0.0 && mu < 1.0)) throw DimensionError("train: mu must lie in [0, 1)");
  ns.validate();
  if (epochs < 1) throw DimensionError("train: epochs must be >= 1");
  if (batch < 1) throw DimensionError("train: batch must be >= 1");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw DimensionError("train: val_fraction must lie in [0, 1)");
  }
  if (probe_batches < 0) throw DimensionError("train: probe_batches must be >= 0");
  if (!(divergence_loss > 0.0)) throw DimensionError("train: divergence_loss must be positive");
  if (norm_trace_steps < 0) throw DimensionError("train: norm_trace_steps must be >= 0");
  double prev = 0.0;
  for (double t : milestones) {
    if (!(t > prev && t < 1.0)) {
      throw DimensionError("train: milestones must be ascending within (0, 1)");
    }
    prev = t;
  }
}

namespace {

double weight_norm(const MLPModel& model, const std::vector<bool>& matrix_shaped) {
  double acc = 0.0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (!matrix_shaped[l]) continue;
    for (double v : model.layers[l].w.data()) acc += v * v;
  }
  return std::sqrt(acc);
}

double grads_norm(const Gradients& grads, const std::vector<bool>& matrix_shaped) {
  double acc = 0.0;
  for (std::size_t l = 0; l < grads.w.size(); ++l) {
    if (!matrix_shaped[l]) continue;
    for (double v : grads.w[l].data()) acc += v * v;
  }
  return std::sqrt(acc);
}

}  // namespace

TrainResult train(const MLPModel& model, const Dataset& data,
                  const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int count = data.x.rows();
  if (count < 2) throw DimensionError("train: dataset must have at least two rows");
  if (data.labels.size() != static_cast<std::size_t>(count)) {
    throw DimensionError("train: one label per dataset row required");
  }

  Rng rng(seed);
  std::vector<int> perm(count);
  for (int i = 0; i < count; ++i) perm[i] = i;
  for (int i = count - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.uniform_int(0, i)]);
  }
  const int val_count = static_cast<int>(count * cfg.val_fraction);
  const int train_count = count - val_count;
  if (train_count < cfg.batch) {
    throw DimensionError("train: fewer training rows than one batch");
  }

  auto take = [&](int offset, int size) {
    Matrix x(size, data.x.cols());
    std::vector<int> y(size);
    for (int i = 0; i < size; ++i) {
      const int src = perm[offset + i];
      for (int j = 0; j < data.x.cols(); ++j) x(i, j) = data.x(src, j);
      y[i] = data.labels[src];
    }
    return std::make_pair(std::move(x), std::move(y));
  };
  auto [train_x, train_y] = take(0, train_count);
  // the validation split may be empty, and a matrix cannot have zero rows
  auto [val_x, val_y] =
      val_count > 0 ? take(train_count, val_count)
                    : std::make_pair(Matrix(1, 1), std::vector<int>{});

  TrainResult result;
  result.model = model;

  // Matrix-shaped parameters go to the target optimizer, biases to the
  // reference SGD. A zero target rate freezes the matrix parameters instead
  // of passing an invalid rate into the optimizer.
  const bool frozen_target = cfg.eta_target == 0.0;
  optim::RoutePolicy policy;
  policy.target.kind = cfg.target_kind;
  policy.target.eta = frozen_target ? 1.0 : cfg.eta_target;
  policy.target.mu = cfg.mu;
  policy.target.ns = cfg.ns;
  policy.target.use_exact_polar = cfg.use_exact_polar;
  policy.eta_reference = cfg.eta_reference;
  std::vector<optim::ParamSpec> specs;
  for (std::size_t l = 0; l < result.model.layers.size(); ++l) {
    const Layer& layer = result.model.layers[l];
    specs.push_back({"w" + std::to_string(l), layer.w.rows(), layer.w.cols()});
    specs.push_back({"b" + std::to_string(l), layer.b.rows(), layer.b.cols()});
  }
  std::vector<optim::ParamGroup> groups = optim::route(specs, policy);
  std::vector<bool> w_is_matrix;
  for (std::size_t l = 0; l < result.model.layers.size(); ++l) {
    w_is_matrix.push_back(groups[2 * l].matrix_shaped);
  }

  const int batches_per_epoch = train_count / cfg.batch;
  if (batches_per_epoch < 1) throw DimensionError("train: batch larger than the training split");
  const int total_steps = cfg.epochs * batches_per_epoch;

  std::vector<int> order(train_count);
  for (int i = 0; i < train_count; ++i) order[i] = i;
  Matrix xb(cfg.batch, data.x.cols());
  std::vector<int> yb(cfg.batch);

  int updates_done = 0;
  double last_loss = 0.0;
  bool have_loss = false;
  std::vector<double> val_accs;

  for (int epoch = 1; epoch <= cfg.epochs && !result.diverged; ++epoch) {
    for (int i = train_count - 1; i > 0; --i) {
      std::swap(order[i], order[rng.uniform_int(0, i)]);
    }
    double epoch_loss = 0.0;
    int epoch_batches = 0;
    for (int bi = 0; bi < batches_per_epoch; ++bi) {
      for (int i = 0; i < cfg.batch; ++i) {
        const int src = order[bi * cfg.batch + i];
        for (int j = 0; j < data.x.cols(); ++j) xb(i, j) = train_x(src, j);
        yb[i] = train_y[src];
      }

      try {
        ForwardBackward fb = forward_backward(result.model, xb, yb);
        if (updates_done == 0) {
          result.initial_loss = fb.loss;
          result.steps.push_back({0, fb.loss, 0.0,
                                  grads_norm(fb.grads, w_is_matrix),
                                  weight_norm(result.model, w_is_matrix)});
        }
        if (!std::isfinite(fb.loss) || fb.loss > cfg.divergence_loss) {
          result.diverged = true;
          result.diverged_step = updates_done;
          break;
        }
        if (updates_done == 49) result.step50_loss = fb.loss;
        if (updates_done < cfg.probe_batches) {
          std::vector<double> lams;
          for (const Matrix& in : fb.layer_inputs) {
            lams.push_back(la::lambda_max_power(
                la::matmul(la::transpose(in), in)));
          }
          result.probe_lambda.push_back(std::move(lams));
        }

        const double eta_t =
            cfg.schedule == TrainConfig::Schedule::LinearDecay
                ? cfg.eta_target * (1.0 - static_cast<double>(updates_done) /
                                              total_steps)
                : cfg.eta_target;
        for (std::size_t l = 0; l < result.model.layers.size(); ++l) {
          Layer& layer = result.model.layers[l];
          optim::OptimizerState& ws = groups[2 * l].state;
          optim::OptimizerState& bs = groups[2 * l + 1].state;
          if (groups[2 * l].matrix_shaped) {
            if (!frozen_target) {
              ws.eta = eta_t;
              const double gn = la::frobenius_norm(fb.grads.w[l]);
              const double mn =
                  ws.momentum ? la::frobenius_norm(*ws.momentum) : 0.0;
              // A Muon step on an all-zero update matrix is undefined; skip it.
              if (!(ws.kind == optim::Kind::Muon && ws.mu * mn + gn == 0.0)) {
                layer.w = optim::step(layer.w, fb.grads.w[l], ws);
              }
            }
          } else {
            layer.w = optim::step(layer.w, fb.grads.w[l], ws);  // reference SGD
          }
          layer.b = optim::step(layer.b, fb.grads.b[l], bs);
        }

        ++updates_done;
        last_loss = fb.loss;
        have_loss = true;
        epoch_loss += fb.loss;
        ++epoch_batches;
        if (updates_done <= cfg.norm_trace_steps) {
          result.steps.push_back({updates_done, fb.loss, eta_t,
                                  grads_norm(fb.grads, w_is_matrix),
                                  weight_norm(result.model, w_is_matrix)});
        }
      } catch (const NumericError&) {
        result.diverged = true;
        result.diverged_step = updates_done;
        break;
      } catch (const ConvergenceError&) {
        // An update whose factorization no longer converges is a blown-up
        // run, not a harness failure.
        result.diverged = true;
        result.diverged_step = updates_done;
        break;
      }
    }
    if (result.diverged) break;
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / epoch_batches;
    try {
      rec.val_acc = val_count > 0
                        ? eval_accuracy(result.model, val_x, val_y)
                        : 0.0;
    } catch (const NumericError&) {
      result.diverged = true;
      result.diverged_step = updates_done;
      break;
    }
    rec.steps_done = updates_done;
    result.epochs.push_back(rec);
    val_accs.push_back(rec.val_acc);
  }

  result.final_loss = have_loss ? last_loss : result.initial_loss;
  for (const optim::ParamGroup& grp : groups) {
    if (!grp.matrix_shaped) result.bias_muon_steps += grp.state.muon_steps;
  }
  result.milestone_epochs = milestone_epochs(val_accs, cfg.milestones);
  return result;
}

std::vector<std::optional<int>> milestone_epochs(
    const std::vector<double>& val_accs, const std::vector<double>& thresholds) {
  std::vector<std::optional<int>> out;
  for (double th : thresholds) {
    std::optional<int> hit;
    for (std::size_t i = 0; i < val_accs.size(); ++i) {
      if (val_accs[i] >= th) {
        hit = static_cast<int>(i) + 1;
        break;
      }
    }
    out.push_back(hit);
  }
  return out;
}

std::vector<double> lambda_max_probe(
    const std::vector<std::vector<Matrix>>& layer_inputs_per_batch) {
  if (layer_inputs_per_batch.empty()) return {};
  const std::size_t layers = layer_inputs_per_batch.front().size();
  std::vector<double> acc(layers, 0.0);
  for (const auto& batch : layer_inputs_per_batch) {
    if (batch.size() != layers) {
      throw DimensionError("lambda_max_probe: inconsistent layer counts across batches");
    }
    for (std::size_t l = 0; l < layers; ++l) {
      acc[l] += la::lambda_max_power(
          la::matmul(la::transpose(batch[l]), batch[l]));
    }
  }
  for (double& v : acc) v /= layer_inputs_per_batch.size();
  return acc;
}

void write_trace_csv(std::ostream& os, const TrainResult& result,
                     std::optional<double> l_star) {
  os << "step,loss,gap,r_t,eta,alpha_tilde,beta_tilde,grad_fro,param_fro,"
        "val_acc,epoch\n";
  for (const StepRecord& row : result.steps) {
    os << row.step << ',' << format_double(row.loss) << ",,,"
       << format_double(row.eta) << ",,," << format_double(row.grad_fro) << ','
       << format_double(row.param_fro) << ",,\n";
  }
  std::vector<double> epoch_losses;
  for (const EpochRecord& rec : result.epochs) epoch_losses.push_back(rec.train_loss);
  std::vector<std::optional<double>> rts;
  if (l_star) rts = theory::rt_series(epoch_losses, *l_star);
  for (std::size_t i = 0; i < result.epochs.size(); ++i) {
    const EpochRecord& rec = result.epochs[i];
    os << ',' << format_double(rec.train_loss) << ',';
    if (l_star) os << format_double(rec.train_loss - *l_star);
    os << ',';
    if (l_star && i > 0 && rts[i - 1]) os << format_double(*rts[i - 1]);
    os << ",,,,,," << format_double(rec.val_acc) << ',' << rec.epoch << '\n';
  }
}

}  // namespace spectralopt::nn
