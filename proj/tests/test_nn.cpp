#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "spectralopt/densela.hpp"
#include "spectralopt/nn.hpp"
#include "test_support.hpp"

using namespace spectralopt;
using test_support::random_matrix;

namespace {

nn::Dataset small_blobs(std::uint64_t seed, double scale_max = 10.0) {
  nn::BlobSpec spec;
  spec.features = 4;
  spec.classes = 3;
  spec.count = 160;
  spec.scale_max = scale_max;
  spec.center_scale = 1.0;
  spec.spread = 0.5;
  return nn::make_blobs(spec, seed);
}

nn::MLPModel small_model(std::uint64_t seed, nn::PreNorm norm = nn::PreNorm::None) {
  return nn::MLPModel::make(
      4,
      {{8, nn::Activation::Relu, norm}, {3, nn::Activation::Identity, norm}},
      seed);
}

double loss_of(const nn::MLPModel& model, const Matrix& x,
               const std::vector<int>& labels) {
  return nn::forward_backward(model, x, labels).loss;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("blob datasets have the requested layout") {
  nn::Dataset data = small_blobs(3);
  CHECK(data.x.rows() == 160);
  CHECK(data.x.cols() == 4);
  CHECK(data.labels.size() == 160);
  CHECK(data.classes == 3);
  for (int y : data.labels) {
    CHECK(y >= 0);
    CHECK(y < 3);
  }
}

TEST_CASE("blob generation is deterministic in the seed") {
  nn::Dataset a = small_blobs(7);
  nn::Dataset b = small_blobs(7);
  nn::Dataset c = small_blobs(8);
  CHECK(a.x == b.x);
  CHECK(a.labels == b.labels);
  CHECK_FALSE(a.x == c.x);
}

TEST_CASE("feature scaling is a deterministic per-column multiplier") {
  // The same seed with a different scale_max produces the same pre-scale
  // values, so columns differ by exactly the geometric scale ladder.
  nn::Dataset flat = small_blobs(5, 1.0);
  nn::Dataset wide = small_blobs(5, 1000.0);
  CHECK(flat.labels == wide.labels);
  for (int j = 0; j < 4; ++j) {
    const double scale = std::pow(1000.0, static_cast<double>(j) / 3.0);
    for (int i = 0; i < flat.x.rows(); ++i) {
      CHECK(wide.x(i, j) == flat.x(i, j) * scale);
    }
  }
}

TEST_CASE("blob spec validation") {
  nn::BlobSpec spec;
  spec.scale_max = 0.5;
  CHECK_THROWS_AS(nn::make_blobs(spec, 0), DimensionError);
  spec = nn::BlobSpec{};
  spec.count = 0;
  CHECK_THROWS_AS(nn::make_blobs(spec, 0), DimensionError);
}

TEST_CASE("frobenius normalization caps the spectral norm at one") {
  Rng rng(11);
  Matrix x = 50.0 * random_matrix(6, 4, rng);
  nn::FrobNormed out = nn::frobnorm(x);
  CHECK_FALSE(out.was_zero);
  CHECK(la::frobenius_norm(out.x) == doctest::Approx(1.0).epsilon(1e-12));
  const double lam = la::lambda_max_power(la::matmul(la::transpose(out.x), out.x));
  CHECK(lam <= 1.0 + 1e-12);
  // the direction is scale-free
  nn::FrobNormed scaled = nn::frobnorm(1e8 * x);
  CHECK(test_support::max_abs_diff(out.x, scaled.x) <= 1e-12);
}

TEST_CASE("frobenius normalization flags zero input") {
  Matrix z(3, 3);
  nn::FrobNormed out = nn::frobnorm(z);
  CHECK(out.was_zero);
  CHECK(out.x == z);
}

TEST_CASE("standardize produces zero-mean unit-variance columns") {
  Rng rng(13);
  Matrix x = random_matrix(64, 3, rng);
  for (int i = 0; i < x.rows(); ++i) x(i, 1) = 4.0 * x(i, 1) + 100.0;
  Matrix out = nn::standardize(x);
  for (int j = 0; j < out.cols(); ++j) {
    double mean = 0.0;
    for (int i = 0; i < out.rows(); ++i) mean += out(i, j);
    mean /= out.rows();
    CHECK(std::abs(mean) <= 1e-12);
    double var = 0.0;
    for (int i = 0; i < out.rows(); ++i) var += out(i, j) * out(i, j);
    var /= out.rows();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("standardize zeroes constant columns and cancels column scales") {
  Matrix x(8, 2);
  Rng rng(14);
  for (int i = 0; i < 8; ++i) {
    x(i, 0) = 7.5;  // constant
    x(i, 1) = rng.normal();
  }
  Matrix out = nn::standardize(x);
  for (int i = 0; i < 8; ++i) CHECK(out(i, 0) == 0.0);

  Matrix scaled = x;
  for (int i = 0; i < 8; ++i) scaled(i, 1) *= 1000.0;
  Matrix out2 = nn::standardize(scaled);
  for (int i = 0; i < 8; ++i) {
    CHECK(out2(i, 1) == doctest::Approx(out(i, 1)).epsilon(1e-6));
  }
}

TEST_CASE("standardize requires batch statistics") {
  CHECK_THROWS_AS(nn::standardize(Matrix(1, 4)), DimensionError);
}

TEST_CASE("model construction seeds weights and zeroes biases") {
  nn::MLPModel m = small_model(21);
  REQUIRE(m.layers.size() == 2);
  CHECK(m.layers[0].w.rows() == 8);
  CHECK(m.layers[0].w.cols() == 4);
  CHECK(m.layers[1].w.rows() == 3);
  CHECK(m.layers[1].w.cols() == 8);
  CHECK(m.inputs() == 4);
  CHECK(m.outputs() == 3);
  for (const nn::Layer& layer : m.layers) {
    CHECK(layer.b == Matrix(layer.b.rows(), 1));
  }
  nn::MLPModel again = small_model(21);
  CHECK(m.layers[0].w == again.layers[0].w);
  nn::MLPModel other = small_model(22);
  CHECK_FALSE(m.layers[0].w == other.layers[0].w);
}

TEST_CASE("model construction validates its arguments") {
  CHECK_THROWS_AS(nn::MLPModel::make(0, {{3}}, 1), DimensionError);
  CHECK_THROWS_AS(nn::MLPModel::make(4, {}, 1), DimensionError);
  CHECK_THROWS_AS(nn::MLPModel::make(4, {{0}}, 1), DimensionError);
  CHECK_THROWS_AS(nn::MLPModel::make(4, {{3}}, 1, 0.0), DimensionError);
}

TEST_CASE("zero weights give the uniform softmax loss") {
  nn::MLPModel m;
  nn::Layer layer;
  layer.w = Matrix(3, 4);
  layer.b = Matrix(3, 1);
  layer.act = nn::Activation::Identity;
  m.layers.push_back(layer);
  Rng rng(31);
  Matrix x = random_matrix(4, 4, rng);
  nn::ForwardBackward fb = nn::forward_backward(m, x, {0, 1, 2, 0});
  CHECK(fb.loss == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK(fb.logits == Matrix(4, 3));
}

TEST_CASE("forward_backward validates the batch") {
  nn::MLPModel m = small_model(1);
  Rng rng(32);
  Matrix x = random_matrix(4, 4, rng);
  CHECK_THROWS_AS(nn::forward_backward(m, random_matrix(4, 5, rng), {0, 1, 2, 0}),
                  DimensionError);
  CHECK_THROWS_AS(nn::forward_backward(m, x, {0, 1}), DimensionError);
  CHECK_THROWS_AS(nn::forward_backward(m, x, {0, 1, 2, 3}), DimensionError);
}

TEST_CASE("layer inputs are recorded after normalization") {
  nn::MLPModel m = small_model(33, nn::PreNorm::FrobNorm);
  Rng rng(34);
  Matrix x = 5.0 * random_matrix(6, 4, rng);
  nn::ForwardBackward fb = nn::forward_backward(m, x, {0, 1, 2, 0, 1, 2});
  REQUIRE(fb.layer_inputs.size() == 2);
  CHECK(la::frobenius_norm(fb.layer_inputs[0]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(la::frobenius_norm(fb.layer_inputs[1]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("backpropagated gradients match central finite differences") {
  const double h = 1e-5;
  for (nn::PreNorm norm : {nn::PreNorm::None, nn::PreNorm::FrobNorm,
                           nn::PreNorm::Standardize}) {
    CAPTURE(static_cast<int>(norm));
    nn::MLPModel m = small_model(41, norm);
    Rng rng(42);
    Matrix x = random_matrix(6, 4, rng);
    std::vector<int> y = {0, 1, 2, 0, 1, 2};
    nn::ForwardBackward fb = nn::forward_backward(m, x, y);

    double worst = 0.0;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      for (int part = 0; part < 2; ++part) {
        Matrix& param = part == 0 ? m.layers[l].w : m.layers[l].b;
        const Matrix& grad = part == 0 ? fb.grads.w[l] : fb.grads.b[l];
        for (std::size_t i = 0; i < param.data().size(); ++i) {
          const double keep = param.data()[i];
          param.data()[i] = keep + h;
          const double up = loss_of(m, x, y);
          param.data()[i] = keep - h;
          const double down = loss_of(m, x, y);
          param.data()[i] = keep;
          const double fd = (up - down) / (2.0 * h);
          const double bp = grad.data()[i];
          const double rel =
              std::abs(fd - bp) / std::max({std::abs(fd), std::abs(bp), 1e-6});
          worst = std::max(worst, rel);
        }
      }
    }
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("accuracy counts argmax hits with first-index ties") {
  nn::MLPModel m;
  nn::Layer layer;
  layer.w = Matrix::identity(3);
  layer.b = Matrix(3, 1);
  layer.act = nn::Activation::Identity;
  m.layers.push_back(layer);
  Matrix x = Matrix::from_rows({{5.0, 0.0, 0.0},
                                {0.0, 2.0, 1.0},
                                {0.0, 0.0, 0.0},   // tie resolves to class 0
                                {0.0, 1.0, 3.0}});
  CHECK(nn::eval_accuracy(m, x, {0, 1, 0, 2}) == 1.0);
  CHECK(nn::eval_accuracy(m, x, {0, 1, 1, 2}) == 0.75);
}

TEST_CASE("train config validation") {
  nn::TrainConfig cfg;
  cfg.eta_target = -0.1;
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = {};
  cfg.eta_reference = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = {};
  cfg.mu = 1.0;
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = {};
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = {};
  cfg.val_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = {};
  cfg.milestones = {0.5, 0.5};
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = {};
  cfg.milestones = {0.5, 1.0};
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = {};
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("training is deterministic and records the expected trace shape") {
  nn::Dataset data = small_blobs(51);
  nn::MLPModel model = small_model(52);
  nn::TrainConfig cfg;
  cfg.target_kind = optim::Kind::Muon;
  cfg.use_exact_polar = true;
  cfg.eta_target = 0.05;
  cfg.epochs = 3;
  cfg.batch = 32;
  cfg.norm_trace_steps = 5;
  nn::TrainResult a = nn::train(model, data, cfg, 53);
  nn::TrainResult b = nn::train(model, data, cfg, 53);

  CHECK_FALSE(a.diverged);
  CHECK(a.final_loss == b.final_loss);
  REQUIRE(a.epochs.size() == 3);
  // 160 rows, 20% validation: 128 training rows, four batches per epoch
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(a.epochs[e].epoch == static_cast<int>(e) + 1);
    CHECK(a.epochs[e].steps_done == 4 * (static_cast<int>(e) + 1));
    CHECK(a.epochs[e].val_acc == b.epochs[e].val_acc);
  }
  REQUIRE(a.steps.size() == 6);  // initial row plus norm_trace_steps
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    CHECK(a.steps[k].step == static_cast<int>(k));
    CHECK(a.steps[k].param_fro == b.steps[k].param_fro);
    if (k > 0) CHECK(a.steps[k].eta == 0.05);
  }
  CHECK(a.bias_muon_steps == 0);
  CHECK_FALSE(a.step50_loss.has_value());  // only 12 updates in 3 epochs
  CHECK(a.milestone_epochs.size() == cfg.milestones.size());
}

TEST_CASE("linear decay reduces the step size along the run") {
  nn::Dataset data = small_blobs(54);
  nn::MLPModel model = small_model(55);
  nn::TrainConfig cfg;
  cfg.target_kind = optim::Kind::Sgd;
  cfg.eta_target = 0.1;
  cfg.epochs = 2;
  cfg.batch = 32;
  cfg.schedule = nn::TrainConfig::Schedule::LinearDecay;
  cfg.norm_trace_steps = 8;  // the full run
  nn::TrainResult r = nn::train(model, data, cfg, 56);
  REQUIRE(r.steps.size() == 9);
  CHECK(r.steps[1].eta == 0.1);  // first update sees the undecayed rate
  for (std::size_t k = 2; k < r.steps.size(); ++k) {
    CHECK(r.steps[k].eta < r.steps[k - 1].eta);
  }
}

TEST_CASE("a zero target rate freezes matrix parameters but not biases") {
  nn::Dataset data = small_blobs(57);
  nn::MLPModel model = small_model(58);
  nn::TrainConfig cfg;
  cfg.target_kind = optim::Kind::Muon;
  cfg.use_exact_polar = true;
  cfg.eta_target = 0.0;
  cfg.epochs = 1;
  cfg.batch = 32;
  nn::TrainResult r = nn::train(model, data, cfg, 59);
  CHECK_FALSE(r.diverged);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    CHECK(r.model.layers[l].w == model.layers[l].w);
    CHECK_FALSE(r.model.layers[l].b == model.layers[l].b);
  }
}

TEST_CASE("an absurd step size is reported as divergence") {
  nn::Dataset data = small_blobs(61, 1000.0);
  nn::MLPModel model = small_model(62);
  nn::TrainConfig cfg;
  cfg.target_kind = optim::Kind::Sgd;
  cfg.eta_target = 1e5;
  cfg.epochs = 3;
  cfg.batch = 32;
  nn::TrainResult r = nn::train(model, data, cfg, 63);
  CHECK(r.diverged);
  CHECK(r.diverged_step >= 0);
  CHECK(r.diverged_step < 3 * 4);
  CHECK_FALSE(r.step50_loss.has_value());
  CHECK(std::isfinite(r.final_loss));
}

TEST_CASE("validation-free training reports zero accuracy") {
  nn::Dataset data = small_blobs(64);
  nn::MLPModel model = small_model(65);
  nn::TrainConfig cfg;
  cfg.target_kind = optim::Kind::Sgd;
  cfg.eta_target = 0.01;
  cfg.epochs = 1;
  cfg.batch = 32;
  cfg.val_fraction = 0.0;
  nn::TrainResult r = nn::train(model, data, cfg, 66);
  REQUIRE(r.epochs.size() == 1);
  CHECK(r.epochs[0].val_acc == 0.0);
  CHECK(r.epochs[0].steps_done == 5);  // all 160 rows train: five batches
}

TEST_CASE("probed batches track the normalized layer spectra") {
  nn::Dataset data = small_blobs(67);
  nn::MLPModel model = small_model(68, nn::PreNorm::FrobNorm);
  nn::TrainConfig cfg;
  cfg.target_kind = optim::Kind::Muon;
  cfg.use_exact_polar = true;
  cfg.eta_target = 0.05;
  cfg.epochs = 1;
  cfg.batch = 32;
  cfg.probe_batches = 2;
  nn::TrainResult r = nn::train(model, data, cfg, 69);
  REQUIRE(r.probe_lambda.size() == 2);
  for (const std::vector<double>& lams : r.probe_lambda) {
    REQUIRE(lams.size() == 2);
    for (double lam : lams) CHECK(lam <= 1.0 + 1e-12);
  }
}

TEST_CASE("train rejects inconsistent datasets") {
  nn::Dataset data = small_blobs(71);
  nn::MLPModel model = small_model(72);
  nn::TrainConfig cfg;
  cfg.batch = 32;
  nn::Dataset bad = data;
  bad.labels.pop_back();
  CHECK_THROWS_AS(nn::train(model, bad, cfg, 0), DimensionError);
  cfg.batch = 1000;  // larger than the training split
  CHECK_THROWS_AS(nn::train(model, data, cfg, 0), DimensionError);
}

TEST_CASE("milestones report the first epoch reaching each threshold") {
  std::vector<std::optional<int>> hit =
      nn::milestone_epochs({0.3, 0.6, 0.8}, {0.5, 0.7, 0.9});
  REQUIRE(hit.size() == 3);
  CHECK(*hit[0] == 2);
  CHECK(*hit[1] == 3);
  CHECK_FALSE(hit[2].has_value());
  CHECK(nn::milestone_epochs({}, {0.5}).front() == std::nullopt);
}

TEST_CASE("lambda probe averages the top eigenvalue across batches") {
  std::vector<std::vector<Matrix>> inputs;
  inputs.push_back({Matrix::from_rows({{1.0}})});
  inputs.push_back({Matrix::from_rows({{3.0}})});
  std::vector<double> lams = nn::lambda_max_probe(inputs);
  REQUIRE(lams.size() == 1);
  CHECK(lams[0] == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(nn::lambda_max_probe({}).empty());
  inputs.push_back({Matrix::from_rows({{1.0}}), Matrix::from_rows({{1.0}})});
  CHECK_THROWS_AS(nn::lambda_max_probe(inputs), DimensionError);
}

TEST_CASE("training trace csv carries step and epoch rows") {
  nn::Dataset data = small_blobs(81);
  nn::MLPModel model = small_model(82);
  nn::TrainConfig cfg;
  cfg.target_kind = optim::Kind::Sgd;
  cfg.eta_target = 0.01;
  cfg.epochs = 2;
  cfg.batch = 32;
  cfg.norm_trace_steps = 3;
  nn::TrainResult r = nn::train(model, data, cfg, 83);
  REQUIRE_FALSE(r.diverged);

  std::ostringstream os;
  nn::write_trace_csv(os, r, 0.0);
  std::istringstream is(os.str());
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line ==
        "step,loss,gap,r_t,eta,alpha_tilde,beta_tilde,grad_fro,param_fro,"
        "val_acc,epoch");
  int step_rows = 0, epoch_rows = 0;
  while (std::getline(is, line)) {
    if (line.front() == ',') {
      ++epoch_rows;
      CHECK(line.back() == static_cast<char>('0' + epoch_rows));
    } else {
      ++step_rows;
    }
  }
  CHECK(step_rows == 4);   // initial row plus three traced steps
  CHECK(epoch_rows == 2);

  // without a reference optimum the gap and ratio columns stay empty
  std::ostringstream bare;
  nn::write_trace_csv(bare, r, std::nullopt);
  CHECK(bare.str().find(",,,,,,,,") != std::string::npos);
}

}  // TEST_SUITE
