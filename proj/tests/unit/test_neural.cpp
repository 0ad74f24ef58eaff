#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "embedlayout/metrics.hpp"
#include "embedlayout/neural.hpp"
#include "embedlayout/rng.hpp"
#include "oracles.hpp"

using namespace embedlayout;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-1.0, 1.0);
  return m;
}

MlpConfig tiny_config(double dropout) {
  MlpConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden_width = 4;
  cfg.depth = 2;
  cfg.dropout = dropout;
  return cfg;
}

// A model whose scale/shift parameters are perturbed away from 1/0 so that
// their gradients are exercised generically.
MlpModel perturbed_model(const MlpConfig& cfg, std::uint64_t seed) {
  MlpModel m(cfg, seed);
  Rng rng(derive_seed(seed, {7}));
  for (std::size_t k = 0; k < cfg.depth; ++k) {
    for (Eigen::Index r = 0; r < m.block_scale(k).size(); ++r) {
      m.block_scale(k)(r) = rng.uniform(0.5, 1.5);
      m.block_shift(k)(r) = rng.uniform(-0.3, 0.3);
      m.block_bias(k)(r) = rng.uniform(-0.3, 0.3);
    }
  }
  return m;
}

double weighted_output(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& upstream,
                       std::uint64_t dropout_seed) {
  return (mlp_forward(m, x, ForwardMode::train, dropout_seed).array() * upstream.array()).sum();
}

Graph small_graph(std::uint64_t seed) { return generate_er(12, 0.5, seed); }

}  // namespace

TEST_SUITE("neural") {
  TEST_CASE("zero parameters give zero outputs") {
    MlpConfig cfg;
    cfg.depth = 3;
    const auto m = MlpModel::zeros(cfg);
    const auto x = random_matrix(8, 5, 1);
    CHECK(mlp_forward(m, x, ForwardMode::eval).isZero(0.0));
    CHECK(mlp_forward(m, x, ForwardMode::train, 3).isZero(0.0));
  }

  TEST_CASE("identical inputs give identical outputs") {
    const MlpModel m(MlpConfig{}, 4);
    Eigen::MatrixXd x = random_matrix(8, 4, 2);
    x.col(2) = x.col(0);
    const auto y = mlp_forward(m, x, ForwardMode::eval);
    CHECK(y.col(0) == y.col(2));
  }

  TEST_CASE("one-block width-2 net matches hand arithmetic") {
    MlpConfig cfg;
    cfg.input_dim = 2;
    cfg.hidden_width = 2;
    cfg.depth = 1;
    cfg.dropout = 0.0;
    cfg.batch_norm = false;
    auto m = MlpModel::zeros(cfg);
    m.input_weight() << 0.5, -1.0, 2.0, 0.25;
    m.input_bias() << 0.1, -0.2;
    m.block_weight(0) << 1.0, 2.0, -3.0, 0.5;
    m.block_bias(0) << 0.3, -0.4;
    m.block_scale(0) << 1.0, 1.0;
    m.output_weight() << 1.5, -0.5, 0.25, 2.0;
    m.output_bias() << 0.05, -0.05;

    const double x0 = 0.8, x1 = -0.6;
    // h0 = W_in x + b
    const double h0a = 0.5 * x0 - 1.0 * x1 + 0.1;   // 1.1
    const double h0b = 2.0 * x0 + 0.25 * x1 - 0.2;  // 1.25
    // z = W h0 + b, then h1 = h0 + relu(z)
    const double za = 1.0 * h0a + 2.0 * h0b + 0.3;   // 3.9
    const double zb = -3.0 * h0a + 0.5 * h0b - 0.4;  // -3.075, clipped
    const double h1a = h0a + std::max(0.0, za);
    const double h1b = h0b + std::max(0.0, zb);
    const double ya = 1.5 * h1a - 0.5 * h1b + 0.05;
    const double yb = 0.25 * h1a + 2.0 * h1b - 0.05;

    Eigen::MatrixXd x(2, 1);
    x << x0, x1;
    for (auto mode : {ForwardMode::eval, ForwardMode::train}) {
      const auto y = mlp_forward(m, x, mode);
      CHECK(std::abs(y(0, 0) - ya) < 1e-10);
      CHECK(std::abs(y(1, 0) - yb) < 1e-10);
    }
  }

  TEST_CASE("residual identity") {
    MlpConfig cfg;
    cfg.depth = 4;
    cfg.batch_norm = false;
    MlpModel m(cfg, 9);
    for (std::size_t k = 0; k < cfg.depth; ++k) {
      m.block_weight(k).setZero();
      m.block_bias(k).setZero();
    }
    const auto x = random_matrix(8, 6, 3);
    const Eigen::MatrixXd hidden = (m.input_weight() * x).colwise() + Eigen::VectorXd(m.input_bias());
    const Eigen::MatrixXd expected = (m.output_weight() * hidden).colwise() + Eigen::VectorXd(m.output_bias());
    CHECK((mlp_forward(m, x, ForwardMode::eval) - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((mlp_forward(m, x, ForwardMode::train, 1) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("eval mode is a pure function; train mode depends on the dropout seed") {
    const MlpModel m(MlpConfig{}, 5);
    const auto x = random_matrix(8, 7, 4);
    CHECK(mlp_forward(m, x, ForwardMode::eval, 1) == mlp_forward(m, x, ForwardMode::eval, 2));
    CHECK(mlp_forward(m, x, ForwardMode::train, 1) == mlp_forward(m, x, ForwardMode::train, 1));
    CHECK(mlp_forward(m, x, ForwardMode::train, 1) != mlp_forward(m, x, ForwardMode::train, 2));
  }

  TEST_CASE("eval mode uses running statistics") {
    MlpConfig cfg = tiny_config(0.0);
    MlpModel m(cfg, 3);
    const auto x = random_matrix(3, 5, 8);
    const auto before = mlp_forward(m, x, ForwardMode::eval);
    m.running_mean(1)(0) += 0.5;
    CHECK(mlp_forward(m, x, ForwardMode::eval) != before);
    CHECK_THROWS_AS(mlp_forward(m, random_matrix(4, 5, 1), ForwardMode::eval), std::invalid_argument);
  }

  TEST_CASE("backward matches finite differences on every parameter") {
    for (double dropout : {0.0, 0.3}) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const MlpConfig cfg = tiny_config(dropout);
        const MlpModel m = perturbed_model(cfg, seed);
        const auto x = random_matrix(3, 3, seed + 10);
        const auto upstream = random_matrix(2, 3, seed + 20);
        ForwardCache cache;
        mlp_forward(m, x, ForwardMode::train, 77, &cache);
        const auto grad = mlp_backward(m, cache, upstream);
        REQUIRE(grad.size() == m.parameter_count());

        MlpModel probe = m;
        auto params = probe.parameters();
        for (std::size_t k = 0; k < params.size(); ++k) {
          const double orig = params[k];
          const double h = 1e-6;
          params[k] = orig + h;
          const double up = weighted_output(probe, x, upstream, 77);
          params[k] = orig - h;
          const double down = weighted_output(probe, x, upstream, 77);
          params[k] = orig;
          const double fd = (up - down) / (2 * h);
          CHECK(std::abs(grad[k] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
        }
      }
    }
  }

  TEST_CASE("zero upstream gives zero gradient") {
    const MlpModel m(tiny_config(0.3), 1);
    ForwardCache cache;
    mlp_forward(m, random_matrix(3, 4, 1), ForwardMode::train, 5, &cache);
    for (double g : mlp_backward(m, cache, Eigen::MatrixXd::Zero(2, 4))) CHECK(g == 0.0);
  }

  TEST_CASE("fully dropped units carry no gradient") {
    MlpConfig cfg = tiny_config(0.9);
    cfg.hidden_width = 16;
    const MlpModel m = perturbed_model(cfg, 2);
    ForwardCache cache;
    mlp_forward(m, random_matrix(3, 3, 2), ForwardMode::train, 11, &cache);
    const auto grad = mlp_backward(m, cache, random_matrix(2, 3, 3));

    // Locate the scale and shift gradients of every block by perturbing a
    // copy of the model and finding the changed flat index.
    int dropped_rows = 0;
    for (std::size_t k = 0; k < cfg.depth; ++k) {
      for (Eigen::Index r = 0; r < 16; ++r) {
        if (!cache.masks[k].row(r).isZero(0.0)) continue;
        ++dropped_rows;
        MlpModel probe = MlpModel::zeros(cfg);
        probe.block_shift(k)(r) = 1.0;
        probe.block_scale(k)(r) = 1.0;
        probe.block_bias(k)(r) = 1.0;
        const auto flat = probe.parameters();
        for (std::size_t i = 0; i < flat.size(); ++i) {
          if (flat[i] != 0.0) CHECK(grad[i] == 0.0);
        }
      }
    }
    CHECK(dropped_rows > 0);
  }

  TEST_CASE("backward requires a train-mode cache") {
    const MlpModel m(tiny_config(0.0), 1);
    ForwardCache cache;
    CHECK_THROWS_AS(mlp_backward(m, cache, Eigen::MatrixXd::Zero(2, 3)), std::logic_error);
    mlp_forward(m, random_matrix(3, 3, 1), ForwardMode::eval, 0, &cache);
    CHECK_THROWS_AS(mlp_backward(m, cache, Eigen::MatrixXd::Zero(2, 3)), std::logic_error);
  }

  TEST_CASE("running statistics update") {
    const MlpConfig cfg = tiny_config(0.0);
    MlpModel m(cfg, 6);
    const auto x = random_matrix(3, 5, 6);
    ForwardCache cache;
    mlp_forward(m, x, ForwardMode::train, 0, &cache);
    // Block 0 sees z = W h0 + b with h0 = W_in x + b_in.
    const Eigen::MatrixXd h0 = (m.input_weight() * x).colwise() + Eigen::VectorXd(m.input_bias());
    const Eigen::MatrixXd z = (m.block_weight(0) * h0).colwise() + Eigen::VectorXd(m.block_bias(0));
    const Eigen::VectorXd mean = z.rowwise().mean();
    const Eigen::VectorXd unbiased = (z.colwise() - mean).array().square().rowwise().sum() / 4.0;
    update_running_stats(m, cache);
    for (Eigen::Index r = 0; r < 4; ++r) {
      CHECK(m.running_mean(0)(r) == doctest::Approx(0.1 * mean(r)).epsilon(1e-12));
      CHECK(m.running_var(0)(r) == doctest::Approx(0.9 + 0.1 * unbiased(r)).epsilon(1e-12));
    }
  }

  TEST_CASE("adam first step is lr times the gradient sign") {
    AdamOptimizer adam(3, 0.01);
    std::vector<double> p = {1.0, -2.0, 0.5};
    const std::vector<double> g = {0.3, -4.0, 0.0};
    adam.step(p, g);
    CHECK(p[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-7));
    CHECK(p[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-7));
    CHECK(p[2] == 0.5);
    CHECK(adam.steps_taken() == 1);
  }

  TEST_CASE("sns position gradient matches finite differences") {
    const Graph g = small_graph(3);
    const auto pairs = admissible_pairs(bfs_all_pairs(g));
    const auto pos = random_matrix(2, 12, 5);
    const auto grad = sns_position_gradient(pos, pairs);
    auto f = [&](const std::vector<double>& v) {
      return sns(testing::unflatten(v), pairs);
    };
    const auto fd = testing::finite_difference(f, testing::flatten(layout_from_columns(pos)), 1e-6);
    for (Eigen::Index i = 0; i < 12; ++i)
      for (Eigen::Index k = 0; k < 2; ++k) {
        const double ref = fd[2 * i + k];
        CHECK(std::abs(grad(k, i) - ref) <= 1e-4 * std::max(1.0, std::abs(ref)));
      }
  }

  TEST_CASE("node features ignore a global rotation and row scale of the embedding") {
    const Graph g = small_graph(4);
    const auto corpus = generate_walks(g, {}, 1);
    const auto e = train_skipgram(corpus, 12, {}, 2);
    const auto base = node_features(e);

    // random orthogonal matrix from a QR decomposition
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(8, 8, 9)).householderQ();
    EmbeddingMatrix turned = e;
    for (std::size_t i = 0; i < 12; ++i) {
      Eigen::Map<Eigen::VectorXd> row(turned.center.data() + 8 * i, 8);
      row = (q * row).eval() * (1.0 + static_cast<double>(i));
    }
    CHECK((node_features(turned) - base).cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("node features are centred and ordered by variance") {
    const auto e = train_skipgram(generate_walks(small_graph(5), {}, 1), 12, {}, 2);
    const auto f = node_features(e);
    CHECK(f.rowwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::VectorXd var = f.array().square().rowwise().mean();
    for (Eigen::Index k = 1; k < var.size(); ++k) CHECK(var(k) <= var(k - 1) + 1e-12);
  }

  TEST_CASE("adam on a fixed batch halves the training loss") {
    MlpConfig mcfg;
    mcfg.dropout = 0.0;
    MlpModel m(mcfg, 21);
    std::vector<PreparedGraph> graphs;
    for (std::uint64_t s = 0; s < 4; ++s) graphs.push_back(prepare_graph(generate_er(18 + s, 0.5, s), {}, {}, s));
    const std::vector<const PreparedGraph*> batch = {&graphs[0], &graphs[1], &graphs[2], &graphs[3]};
    AdamOptimizer adam(m.parameter_count(), 1e-3);
    const double initial = train_step(m, adam, batch, 0);
    for (int step = 1; step < 200; ++step) train_step(m, adam, batch, 0);
    AdamOptimizer probe(m.parameter_count(), 1e-300);
    const double final_loss = train_step(m, probe, batch, 0);
    CHECK(final_loss <= 0.5 * initial);
  }

  TEST_CASE("short training run keeps its best checkpoint") {
    TrainConfig cfg;
    cfg.model.depth = 2;
    cfg.steps = 30;
    cfg.graphs_per_step = 4;
    cfg.eval_every = 10;
    cfg.train_graphs = 8;
    cfg.validation_graphs = 4;
    cfg.learning_rate = 1e-3;
    const auto result = train_model(GraphFamily{}, cfg, 5);
    REQUIRE(result.trace.size() >= 2);
    double best = result.trace.front().mean_sns;
    for (const auto& p : result.trace) best = std::min(best, p.mean_sns);
    CHECK(best <= result.trace.front().mean_sns);
    CHECK(result.model.all_finite());
    CHECK(format_validation_trace(result.trace).rfind("step,mean_val_sns\n", 0) == 0);

    const auto again = train_model(GraphFamily{}, cfg, 5);
    CHECK(again.model == result.model);
  }

  TEST_CASE("training configuration is validated") {
    TrainConfig cfg;
    cfg.steps = 10;
    cfg.eval_every = 100;
    CHECK_THROWS_AS(train_model(GraphFamily{}, cfg, 1), std::invalid_argument);
    TrainConfig no_lr;
    no_lr.learning_rate = 0.0;
    CHECK_THROWS_AS(train_model(GraphFamily{}, no_lr, 1), std::invalid_argument);
    CHECK_THROWS_AS(train_model(GraphFamily{{}, {0.5}}, TrainConfig{}, 1), std::invalid_argument);
  }

  TEST_CASE("prediction matches eval-mode forward and is repeatable") {
    const MlpModel m(MlpConfig{}, 8);
    const Graph g = small_graph(6);
    const auto a = predict_with_timing(m, g, {}, {}, 3);
    const auto b = predict_with_timing(m, g, {}, {}, 3);
    CHECK(a.layout == b.layout);
    const auto e = train_skipgram(generate_walks(g, {}, derive_seed(3, {1})), 12, {}, derive_seed(3, {2}));
    CHECK(mlp_forward(m, e, ForwardMode::eval) == a.layout);
    CHECK(a.timing.total_time >= a.timing.forward_time);
    CHECK(a.timing.total_time >= a.timing.embed_time);
  }

  TEST_CASE("forward at n = 100 is fast") {
    const MlpModel m(MlpConfig{}, 8);
    const auto pred = predict_with_timing(m, generate_er(100, 0.5, 1), {}, {}, 1);
    CHECK(pred.timing.forward_time < 0.05);
  }

  TEST_CASE("checkpoint round trip") {
    MlpConfig cfg;
    cfg.depth = 3;
    cfg.dropout = 0.2;
    MlpModel m(cfg, 12);
    m.running_var(2)(1) = 3.5;
    const auto bytes = serialize_model(m);
    CHECK(bytes.compare(0, 8, std::string("EMBLMLP\0", 8)) == 0);
    CHECK(deserialize_model(bytes) == m);

    const auto path = std::filesystem::temp_directory_path() / "embedlayout_model_test.bin";
    save_model(m, path);
    CHECK(load_model(path) == m);
    std::filesystem::remove(path);

    CHECK_THROWS(deserialize_model(bytes.substr(0, bytes.size() - 1)));
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS(deserialize_model(bad));
  }
}
