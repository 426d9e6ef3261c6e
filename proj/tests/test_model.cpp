#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "pln/model.hpp"
#include "pln/serialize.hpp"
#include "pln/solvers.hpp"
#include "pln/trainer.hpp"

using namespace pln;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c,
                              std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace

TEST_CASE("build_layer shapes and determinism") {
  std::mt19937_64 rng(0);
  // Vowel-shaped: Q = 11, P = 10, n = 100
  Eigen::MatrixXd prev = random_matrix(11, 10, rng);
  PlnLayer layer = build_layer(prev, 100, std::uint64_t{5});
  CHECK(layer.top_map.rows() == 22);
  CHECK(layer.top_map.cols() == 10);
  CHECK(layer.random_block.rows() == 78);
  CHECK(layer.random_block.cols() == 10);
  CHECK(layer.n_nodes() == 100);
  CHECK_FALSE(layer.optimized());

  PlnLayer again = build_layer(prev, 100, std::uint64_t{5});
  CHECK(layer.random_block == again.random_block);

  PlnLayer bare = build_layer(prev, 22, std::uint64_t{5});
  CHECK(bare.random_block.rows() == 0);
  CHECK_THROWS_AS(build_layer(prev, 21, std::uint64_t{5}),
                  std::invalid_argument);
  CHECK(layer.random_block.minCoeff() >= -1.0);
  CHECK(layer.random_block.maxCoeff() <= 1.0);
}

TEST_CASE("extend_layer appends rows and invalidates the output matrix") {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd prev = random_matrix(3, 4, rng);
  PlnLayer layer = build_layer(prev, 10, std::uint64_t{9});
  Eigen::MatrixXd before = layer.random_block;
  layer.output_matrix = random_matrix(3, 10, rng);
  extend_layer(layer, 50, std::uint64_t{10});
  CHECK(layer.n_nodes() == 60);
  CHECK(layer.random_block.topRows(before.rows()) == before);
  CHECK_FALSE(layer.optimized());
  CHECK_THROWS_AS(extend_layer(layer, 0, std::uint64_t{1}),
                  std::invalid_argument);
}

TEST_CASE("two delta extensions equal one 2*delta extension on one stream") {
  std::mt19937_64 rng_a(77), rng_b(77);
  Eigen::MatrixXd prev = random_matrix(2, 6, rng_a);
  rng_b.discard(0);
  std::mt19937_64 build_a(3), build_b(3);
  PlnLayer a = build_layer(prev, 8, build_a);
  PlnLayer b = build_layer(prev, 8, build_b);

  extend_layer(a, 5, build_a);
  extend_layer(a, 5, build_a);
  extend_layer(b, 10, build_b);
  CHECK(a.random_block == b.random_block);
}

TEST_CASE("forward with PP fallback output equals the linear baseline") {
  std::mt19937_64 rng(2);
  const Eigen::Index P = 7, Q = 3, J = 25;
  PlnModel model;
  model.activation = ActivationSpec::relu();
  model.w_ls_star = random_matrix(Q, P, rng);
  std::mt19937_64 lrng(4);
  PlnLayer layer = build_layer(model.w_ls_star, 20, lrng);
  layer.output_matrix = pp_fallback_matrix(model.activation, Q, 20);
  model.layers.push_back(layer);

  Eigen::MatrixXd X = random_matrix(P, J, rng);
  Eigen::MatrixXd pred = forward(model, X).predictions;
  Eigen::MatrixXd baseline = model.w_ls_star * X;
  CHECK((pred - baseline).lpNorm<Eigen::Infinity>() <= 1e-12);

  CHECK((forward(model, X, 0).predictions - baseline).norm() == 0.0);
}

TEST_CASE("forward with zeroed top block equals a regularized-ELM pass") {
  // independent ELM forward: pred = B g(R x), no deterministic block
  std::mt19937_64 rng(3);
  const Eigen::Index P = 5, Q = 2, J = 30, n = 12;
  PlnModel model;
  model.activation = ActivationSpec::relu();
  model.w_ls_star = random_matrix(Q, P, rng);
  std::mt19937_64 lrng(8);
  PlnLayer layer = build_layer(model.w_ls_star, n, lrng, false);
  Eigen::MatrixXd B = random_matrix(Q, n - 2 * Q, rng);
  layer.output_matrix = Eigen::MatrixXd::Zero(Q, n);
  layer.output_matrix.rightCols(n - 2 * Q) = B;
  Eigen::MatrixXd R = layer.random_block;
  model.layers.push_back(layer);

  Eigen::MatrixXd X = random_matrix(P, J, rng);
  Eigen::MatrixXd pred = forward(model, X).predictions;
  Eigen::MatrixXd elm =
      B * apply_activation(model.activation, (R * X).eval());
  CHECK((pred - elm).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("structural identity across depths") {
  // replacing O_l with [U_Q, 0] reproduces the depth-(l-1) predictions
  std::mt19937_64 rng(4);
  const Eigen::Index P = 6, Q = 2, J = 15;
  PlnModel model;
  model.activation = ActivationSpec::lrelu(0.1);
  model.w_ls_star = random_matrix(Q, P, rng);
  std::mt19937_64 lrng(1);
  PlnLayer l1 = build_layer(model.w_ls_star, 10, lrng);
  l1.output_matrix = 0.3 * random_matrix(Q, 10, rng);
  model.layers.push_back(l1);
  PlnLayer l2 = build_layer(l1.output_matrix, 14, lrng);
  l2.output_matrix = pp_fallback_matrix(model.activation, Q, 14);
  model.layers.push_back(l2);

  Eigen::MatrixXd X = random_matrix(P, J, rng);
  Eigen::MatrixXd depth2 = forward(model, X, 2).predictions;
  Eigen::MatrixXd depth1 = forward(model, X, 1).predictions;
  CHECK((depth2 - depth1).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("normalization keeps random sub-vectors at unit norm or zero") {
  std::mt19937_64 rng(5);
  const Eigen::Index P = 4, Q = 2, J = 10;
  Eigen::MatrixXd prev = random_matrix(Q, P, rng);
  std::mt19937_64 lrng(6);
  PlnLayer layer = build_layer(prev, 16, lrng, true);
  Eigen::MatrixXd X = random_matrix(P, J, rng);
  X.col(0).setZero();  // zero sample stays zero
  Eigen::MatrixXd y = layer_output(ActivationSpec::relu(), layer, X);
  for (Eigen::Index j = 0; j < J; ++j) {
    double norm = y.col(j).tail(16 - 2 * Q).norm();
    CHECK((std::abs(norm - 1.0) <= 1e-12 || norm == 0.0));
  }
}

TEST_CASE("count_parameters formula") {
  std::mt19937_64 rng(6);
  PlnModel model;
  model.w_ls_star = random_matrix(10, 784, rng);
  CHECK(count_parameters(model) == 7840);
  std::mt19937_64 lrng(2);
  PlnLayer l1 = build_layer(model.w_ls_star, 1000, lrng);
  l1.output_matrix = Eigen::MatrixXd::Zero(10, 1000);
  model.layers.push_back(l1);
  PlnLayer l2 = build_layer(l1.output_matrix, 1000, lrng);
  l2.output_matrix = Eigen::MatrixXd::Zero(10, 1000);
  model.layers.push_back(l2);
  CHECK(count_parameters(model) == 27840);

  Eigen::Index before = count_parameters(model);
  PlnLayer l3 = build_layer(l2.output_matrix, 120, lrng);
  l3.output_matrix = Eigen::MatrixXd::Zero(10, 120);
  model.layers.push_back(l3);
  CHECK(count_parameters(model) - before == 10 * 120);
}

TEST_CASE("serialize round trip preserves predictions bitwise") {
  std::mt19937_64 rng(7);
  const Eigen::Index P = 6, Q = 3, J = 12;
  PlnModel model;
  model.activation = ActivationSpec::genrelu(0.2, 1.5);
  model.q = 2;
  model.alpha = 2.0;
  model.seed = 99;
  model.class_names = {"a", "b", "c"};
  model.w_ls_star = random_matrix(Q, P, rng);
  std::mt19937_64 lrng(3);
  PlnLayer layer = build_layer(model.w_ls_star, 14, lrng);
  layer.output_matrix = 0.2 * random_matrix(Q, 14, rng);
  model.layers.push_back(layer);

  std::stringstream buf;
  serialize(model, buf);
  PlnModel copy = deserialize(buf);
  CHECK(copy.activation.kind == model.activation.kind);
  CHECK(copy.class_names == model.class_names);

  Eigen::MatrixXd X = random_matrix(P, J, rng);
  Eigen::MatrixXd p1 = forward(model, X).predictions;
  Eigen::MatrixXd p2 = forward(copy, X).predictions;
  CHECK(p1 == p2);
}

TEST_CASE("serialize detects corruption") {
  PlnModel model;
  std::mt19937_64 rng(8);
  model.w_ls_star = random_matrix(2, 3, rng);
  std::stringstream buf;
  serialize(model, buf);
  std::string bytes = buf.str();

  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(deserialize(truncated), std::runtime_error);

  std::string garbled = bytes;
  garbled[1] = 'X';
  std::stringstream bad(garbled);
  CHECK_THROWS_AS(deserialize(bad), std::runtime_error);

  // empty-layer model round trip preserves dims and the baseline map
  std::stringstream ok(bytes);
  PlnModel copy = deserialize(ok);
  CHECK(copy.w_ls_star == model.w_ls_star);
  CHECK(copy.layers.empty());
}

TEST_CASE("forward rejects bad inputs") {
  std::mt19937_64 rng(9);
  PlnModel model;
  model.w_ls_star = random_matrix(2, 4, rng);
  std::mt19937_64 lrng(4);
  model.layers.push_back(build_layer(model.w_ls_star, 9, lrng));
  Eigen::MatrixXd X = random_matrix(4, 5, rng);
  CHECK_THROWS_AS(forward(model, X), std::invalid_argument);  // unoptimized
  model.layers.back().output_matrix = Eigen::MatrixXd::Zero(2, 9);
  CHECK_THROWS_AS(forward(model, random_matrix(3, 5, rng)),
                  std::invalid_argument);
  CHECK_THROWS_AS(forward(model, X, 2), std::invalid_argument);
}
