#include <cmath>
#include <numeric>
#include <vector>

#include "adalign/encoder.hpp"
#include "adalign/errors.hpp"
#include "adalign/graph.hpp"
#include "adalign/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace ad = adalign;

namespace {

ad::SparseMatrix identity_adjacency(int n) {
  ad::DomainGraph g;
  g.num_nodes = n;
  g.num_classes = 1;
  g.features = ad::Tensor({n, 1});
  return ad::to_csr(ad::normalize_adjacency(g));
}

ad::EncoderParams random_params(const std::vector<int>& dims, int classes, int seed) {
  ad::CounterRng rng(static_cast<std::uint64_t>(seed), "params");
  return ad::init_encoder(dims, classes, rng);
}

void fill_random(ad::Tensor& t, ad::CounterRng& rng, double scale = 1.0) {
  for (auto& v : *t.data) v = scale * rng.next_normal();
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("identity configuration passes features through") {
  const int n = 4, d = 3;
  ad::SparseMatrix adj = identity_adjacency(n);
  ad::EncoderParams p;
  ad::Tensor w({d, d});
  for (int i = 0; i < d; ++i) w.at(i, i) = 1.0;
  p.weights.push_back(w);
  p.biases.push_back(ad::Tensor({1, d}));
  p.cls_weight = ad::Tensor({d, 2});
  p.cls_bias = ad::Tensor({1, 2});
  ad::CounterRng rng(1, "x");
  ad::Tensor x({n, d});
  fill_random(x, rng);
  ad::Tape tape;
  ad::Tensor z = ad::encode(tape, adj, x, p);
  for (std::size_t i = 0; i < x.numel(); ++i)
    CHECK((*z.data)[i] == doctest::Approx((*x.data)[i]).epsilon(1e-14));
}

TEST_CASE("zero weights leave only the bias rows") {
  const int n = 3, d = 2;
  ad::SparseMatrix adj = identity_adjacency(n);
  ad::EncoderParams p;
  p.weights.push_back(ad::Tensor({d, d}));
  p.biases.push_back(ad::Tensor::from_values({1, d}, {0.25, -1.5}));
  p.cls_weight = ad::Tensor({d, 2});
  p.cls_bias = ad::Tensor({1, 2});
  ad::CounterRng rng(2, "x");
  ad::Tensor x({n, d});
  fill_random(x, rng);
  ad::Tape tape;
  ad::Tensor z = ad::encode(tape, adj, x, p);
  for (int i = 0; i < n; ++i) {
    CHECK(z.at(i, 0) == 0.25);
    CHECK(z.at(i, 1) == -1.5);
  }
}

TEST_CASE("two-node path matches the hand computation") {
  ad::DomainGraph g;
  g.num_nodes = 2;
  g.num_classes = 1;
  g.features = ad::Tensor({2, 1});
  g.edges = {{0, 1}};
  ad::SparseMatrix adj = ad::to_csr(ad::normalize_adjacency(g));
  ad::EncoderParams p;
  p.weights.push_back(ad::Tensor::from_values({2, 2}, {1.0, 2.0, -0.5, 0.25}));
  p.biases.push_back(ad::Tensor({1, 2}));
  p.cls_weight = ad::Tensor({2, 2});
  p.cls_bias = ad::Tensor({1, 2});
  ad::Tensor x = ad::Tensor::from_values({2, 2}, {3.0, -1.0, 0.5, 2.0});
  ad::Tape tape;
  ad::Tensor z = ad::encode(tape, adj, x, p);
  // every entry of the 2-node-path propagation matrix is 0.5
  auto xw = oracle::matmul(*x.data, *p.weights[0].data, 2, 2, 2);
  const std::vector<double> ahat{0.5, 0.5, 0.5, 0.5};
  auto expect = oracle::matmul(ahat, xw, 2, 2, 2);
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK((*z.data)[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("classifier head") {
  ad::CounterRng rng(3, "head");
  ad::EncoderParams p = random_params({3, 4}, 2, 3);
  ad::Tensor z({5, 4});
  fill_random(z, rng);
  SUBCASE("zero head gives zero logits") {
    p.cls_weight = ad::Tensor({4, 2});
    p.cls_bias = ad::Tensor({1, 2});
    ad::Tape tape;
    ad::Tensor logits = ad::classify(tape, z, p);
    for (double v : *logits.data) CHECK(v == 0.0);
  }
  SUBCASE("identity head passes embeddings through") {
    p.cls_weight = ad::Tensor({4, 4});
    for (int i = 0; i < 4; ++i) p.cls_weight.at(i, i) = 1.0;
    p.cls_bias = ad::Tensor({1, 4});
    ad::Tape tape;
    ad::Tensor logits = ad::classify(tape, z, p);
    for (std::size_t i = 0; i < z.numel(); ++i) CHECK((*logits.data)[i] == (*z.data)[i]);
  }
  SUBCASE("random head matches the oracle") {
    fill_random(p.cls_weight, rng);
    fill_random(p.cls_bias, rng);
    ad::Tape tape;
    ad::Tensor logits = ad::classify(tape, z, p);
    auto zw = oracle::matmul(*z.data, *p.cls_weight.data, 5, 4, 2);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(logits.at(i, j) == doctest::Approx(zw[static_cast<std::size_t>(i) * 2 + j] +
                                                 p.cls_bias.at(0, j))
                                     .epsilon(1e-12));
  }
  SUBCASE("width mismatch is a contract error") {
    ad::Tensor bad({5, 3});
    ad::Tape tape;
    CHECK_THROWS_AS(ad::classify(tape, bad, p), ad::ContractError);
  }
}

TEST_CASE("source loss values") {
  ad::Tape tape;
  SUBCASE("uniform logits give log C") {
    ad::Tensor logits({4, 5});
    ad::Tensor loss = ad::source_loss(tape, logits, {0, 1, 2, 3});
    CHECK((*loss.data)[0] == doctest::Approx(1.6094379124341003).epsilon(1e-14));
  }
  SUBCASE("saturated true class drives the loss to zero") {
    ad::Tensor logits({3, 4});
    std::vector<int> labels{1, 0, 3};
    for (int i = 0; i < 3; ++i) logits.at(i, labels[static_cast<std::size_t>(i)]) = 30.0;
    ad::Tensor loss = ad::source_loss(tape, logits, labels);
    CHECK((*loss.data)[0] >= 0.0);
    CHECK((*loss.data)[0] < 1e-10);
  }
  SUBCASE("two-class value from the scalar oracle") {
    ad::Tensor logits = ad::Tensor::from_values({1, 2}, {1.0, 2.0});
    ad::Tensor loss = ad::source_loss(tape, logits, {0});
    CHECK((*loss.data)[0] == doctest::Approx(1.3132616875182228).epsilon(1e-14));
  }
  SUBCASE("label range enforced") {
    ad::Tensor logits({2, 3});
    CHECK_THROWS_AS(ad::source_loss(tape, logits, {0, 3}), ad::RangeError);
    CHECK_THROWS_AS(ad::source_loss(tape, logits, {0}), ad::DimensionError);
  }
}

TEST_CASE("predict argmax with low-index ties") {
  ad::Tensor a = ad::Tensor::from_values({1, 2}, {0.1, 0.9});
  CHECK(ad::predict(a) == std::vector<int>{1});
  ad::Tensor b = ad::Tensor::from_values({1, 2}, {0.5, 0.5});
  CHECK(ad::predict(b) == std::vector<int>{0});
  ad::CounterRng rng(4, "pred");
  ad::Tensor r({20, 6});
  fill_random(r, rng);
  auto got = ad::predict(r);
  for (int i = 0; i < 20; ++i) {
    int best = 0;
    for (int j = 1; j < 6; ++j)
      if (r.at(i, j) > r.at(i, best)) best = j;
    CHECK(got[static_cast<std::size_t>(i)] == best);
  }
}

TEST_CASE("node permutation equivariance") {
  ad::CsbmSpec spec;
  spec.num_nodes = 8;
  spec.feature_dim = 3;
  spec.num_classes = 2;
  spec.class_means = ad::simplex_means(2, 3, 1.0);
  spec.p_in = 0.6;
  spec.p_out = 0.3;
  spec.seed = 77;
  auto [g, unused] = ad::generate_csbm(spec);
  ad::EncoderParams p = random_params({3, 4, 2}, 2, 5);

  const std::vector<int> perm{3, 7, 1, 0, 6, 2, 5, 4};  // new id of node i
  ad::DomainGraph h;
  h.num_nodes = 8;
  h.num_classes = 2;
  h.features = ad::Tensor({8, 3});
  for (int i = 0; i < 8; ++i)
    for (int f = 0; f < 3; ++f)
      h.features.at(perm[static_cast<std::size_t>(i)], f) = g.features.at(i, f);
  for (const auto& [a, b] : g.edges) {
    const int pa = perm[static_cast<std::size_t>(a)], pb = perm[static_cast<std::size_t>(b)];
    h.edges.emplace_back(std::min(pa, pb), std::max(pa, pb));
  }
  ad::Tape tape;
  ad::Tensor zg = ad::encode(tape, ad::to_csr(ad::normalize_adjacency(g)), g.features, p);
  ad::Tensor zh = ad::encode(tape, ad::to_csr(ad::normalize_adjacency(h)), h.features, p);
  for (int i = 0; i < 8; ++i)
    for (int f = 0; f < 2; ++f)
      CHECK(zh.at(perm[static_cast<std::size_t>(i)], f) ==
            doctest::Approx(zg.at(i, f)).epsilon(1e-12));
}

TEST_CASE("extra propagation multiplies by the adjacency again") {
  ad::CsbmSpec spec;
  spec.num_nodes = 6;
  spec.feature_dim = 2;
  spec.num_classes = 2;
  spec.class_means = ad::simplex_means(2, 2, 1.0);
  spec.p_in = 0.7;
  spec.p_out = 0.4;
  spec.seed = 13;
  auto [g, unused] = ad::generate_csbm(spec);
  ad::SparseMatrix adj = ad::to_csr(ad::normalize_adjacency(g));
  ad::EncoderParams p = random_params({2, 3}, 2, 6);
  ad::Tape tape;
  ad::Tensor z0 = ad::encode(tape, adj, g.features, p, 0);
  ad::Tensor z1 = ad::encode(tape, adj, g.features, p, 1);
  ad::Tensor prop = ad::sparse_dense_matmul(tape, adj, z0);
  for (std::size_t i = 0; i < z1.numel(); ++i)
    CHECK((*z1.data)[i] == doctest::Approx((*prop.data)[i]).epsilon(1e-13));
}

TEST_CASE("source loss gradient wrt every parameter") {
  ad::CsbmSpec spec;
  spec.num_nodes = 10;
  spec.feature_dim = 3;
  spec.num_classes = 2;
  spec.class_means = ad::simplex_means(2, 3, 1.5);
  spec.p_in = 0.5;
  spec.p_out = 0.2;
  spec.seed = 55;
  auto [g, unused] = ad::generate_csbm(spec);
  ad::SparseMatrix adj = ad::to_csr(ad::normalize_adjacency(g));
  ad::EncoderParams base = random_params({3, 4, 3}, 2, 7);

  const int num_params = static_cast<int>(base.all().size());
  for (int pi = 0; pi < num_params; ++pi) {
    auto f = [&](ad::Tape& t, const ad::Tensor& var) {
      ad::EncoderParams p = base;
      *p.all()[static_cast<std::size_t>(pi)] = var;
      ad::Tensor z = ad::encode(t, adj, g.features, p);
      return ad::source_loss(t, ad::classify(t, z, p), g.labels);
    };
    CHECK(ad::grad_check(f, *base.all()[static_cast<std::size_t>(pi)], 1e-5) < 1e-4);
  }
}

TEST_CASE("feature width mismatch is a contract error") {
  ad::SparseMatrix adj = identity_adjacency(3);
  ad::EncoderParams p = random_params({4, 2}, 2, 8);
  ad::Tensor x({3, 3});
  ad::Tape tape;
  CHECK_THROWS_AS(ad::encode(tape, adj, x, p), ad::ContractError);
}

}  // TEST_SUITE
