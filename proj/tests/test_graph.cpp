#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <tuple>
#include <vector>

#include "adalign/errors.hpp"
#include "adalign/graph.hpp"
#include "adalign/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace ad = adalign;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/adalign_test_") + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::vector<double> densify(const ad::NormalizedAdjacency& adj) {
  std::vector<double> dense(static_cast<std::size_t>(adj.num_nodes) * adj.num_nodes, 0.0);
  for (const auto& [r, c, w] : adj.entries)
    dense[static_cast<std::size_t>(r) * adj.num_nodes + c] = w;
  return dense;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("two nodes with one edge normalize to all quarters of one") {
  ad::DomainGraph g;
  g.num_nodes = 2;
  g.num_classes = 1;
  g.features = ad::Tensor({2, 1});
  g.edges = {{0, 1}};
  ad::NormalizedAdjacency adj = ad::normalize_adjacency(g);
  REQUIRE(adj.entries.size() == 4);
  for (const auto& [r, c, w] : adj.entries) CHECK(w == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("isolated node keeps a unit self-loop") {
  ad::DomainGraph g;
  g.num_nodes = 3;
  g.num_classes = 1;
  g.features = ad::Tensor({3, 1});
  g.edges = {{0, 1}};
  ad::NormalizedAdjacency adj = ad::normalize_adjacency(g);
  bool found = false;
  for (const auto& [r, c, w] : adj.entries)
    if (r == 2 && c == 2) {
      found = true;
      CHECK(w == 1.0);
    }
  CHECK(found);
}

TEST_CASE("largest eigenvalue of the propagation matrix is one") {
  ad::CounterRng rng(41, "adjacency");
  ad::DomainGraph g;
  g.num_nodes = 5;
  g.num_classes = 1;
  g.features = ad::Tensor({5, 1});
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j)
      if (rng.next_uniform() < 0.5) g.edges.emplace_back(i, j);
  ad::NormalizedAdjacency adj = ad::normalize_adjacency(g);
  const auto dense = densify(adj);
  const double lambda = oracle::power_iteration_max_eig(dense, 5, 1.0, 4000);
  CHECK(std::fabs(lambda - 1.0) < 1e-8);

  // symmetry and positive weights while the dense copy is around
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(dense[static_cast<std::size_t>(i) * 5 + j] ==
            dense[static_cast<std::size_t>(j) * 5 + i]);
  for (const auto& [r, c, w] : adj.entries) CHECK(w > 0.0);
}

TEST_CASE("csr conversion preserves every entry") {
  ad::DomainGraph g;
  g.num_nodes = 4;
  g.num_classes = 1;
  g.features = ad::Tensor({4, 1});
  g.edges = {{0, 1}, {1, 2}, {2, 3}, {0, 3}};
  ad::NormalizedAdjacency adj = ad::normalize_adjacency(g);
  ad::SparseMatrix m = ad::to_csr(adj);
  REQUIRE(m.col_idx.size() == adj.entries.size());
  std::size_t k = 0;
  for (int i = 0; i < m.rows; ++i)
    for (int e = m.row_ptr[i]; e < m.row_ptr[i + 1]; ++e, ++k) {
      CHECK(std::get<0>(adj.entries[k]) == i);
      CHECK(std::get<1>(adj.entries[k]) == m.col_idx[static_cast<std::size_t>(e)]);
      CHECK(std::get<2>(adj.entries[k]) == m.values[static_cast<std::size_t>(e)]);
    }
}

TEST_CASE("edge list parsing") {
  const std::string path = temp_path("edges.txt");
  SUBCASE("plain parse") {
    write_file(path, "0 1\n1 2\n");
    auto r = ad::load_edge_list(path, 3);
    REQUIRE(r.edges.size() == 2);
    CHECK(r.edges[0] == std::pair<int, int>{0, 1});
    CHECK(r.edges[1] == std::pair<int, int>{1, 2});
  }
  SUBCASE("undirected dedup") {
    write_file(path, "0 1\n1 0\n");
    auto r = ad::load_edge_list(path, 2);
    REQUIRE(r.edges.size() == 1);
    CHECK(r.edges[0] == std::pair<int, int>{0, 1});
  }
  SUBCASE("self-loop dropped with count") {
    write_file(path, "2 2\n0 1\n");
    auto r = ad::load_edge_list(path, 3);
    CHECK(r.self_loops_dropped == 1);
    CHECK(r.edges.size() == 1);
  }
  SUBCASE("comments and blanks ignored") {
    write_file(path, "# header\n\n0 1\n");
    CHECK(ad::load_edge_list(path, 2).edges.size() == 1);
  }
  SUBCASE("unparsable line reports its number") {
    write_file(path, "0 1\nnope\n");
    try {
      ad::load_edge_list(path, 2);
      FAIL("expected a format error");
    } catch (const ad::FormatError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("endpoint beyond declared node count") {
    write_file(path, "0 7\n");
    CHECK_THROWS_AS(ad::load_edge_list(path, 3), ad::RangeError);
  }
}

TEST_CASE("feature and label parsing") {
  const std::string fpath = temp_path("features.csv");
  const std::string lpath = temp_path("labels.txt");
  SUBCASE("dense csv") {
    write_file(fpath, "1.0,2.0\n3.0,4.0\n");
    ad::Tensor x = ad::load_features(fpath);
    REQUIRE(x.shape == std::vector<int>{2, 2});
    CHECK(x.at(0, 0) == 1.0);
    CHECK(x.at(1, 1) == 4.0);
  }
  SUBCASE("empty file") {
    write_file(fpath, "");
    CHECK_THROWS_AS(ad::load_features(fpath), ad::FormatError);
  }
  SUBCASE("ragged rows") {
    write_file(fpath, "1.0,2.0\n3.0\n");
    CHECK_THROWS_AS(ad::load_features(fpath), ad::FormatError);
  }
  SUBCASE("labels parse and range-check") {
    write_file(lpath, "0\n1\n0\n");
    auto y = ad::load_labels(lpath, 2);
    CHECK(y == std::vector<int>{0, 1, 0});
    write_file(lpath, "0\n2\n");
    CHECK_THROWS_AS(ad::load_labels(lpath, 2), ad::RangeError);
  }
  SUBCASE("mismatched rows rejected at assembly") {
    write_file(fpath, "1.0\n2.0\n3.0\n");
    write_file(lpath, "0\n1\n");
    ad::Tensor x = ad::load_features(fpath);
    auto y = ad::load_labels(lpath, 2);
    CHECK_THROWS_AS(ad::assemble_graph(2, x, {}, y), ad::DimensionError);
  }
}

TEST_CASE("save and load round-trip") {
  ad::CounterRng rng(5, "roundtrip");
  ad::Tensor x({4, 3});
  for (auto& v : *x.data) v = rng.next_normal();
  std::vector<std::pair<int, int>> edges{{0, 1}, {1, 3}};
  std::vector<int> labels{0, 1, 1, 0};
  const std::string fe = temp_path("rt_edges.txt");
  const std::string fx = temp_path("rt_features.csv");
  const std::string fy = temp_path("rt_labels.txt");
  ad::save_edge_list(fe, edges);
  ad::save_features(fx, x);
  ad::save_labels(fy, labels);
  auto edges2 = ad::load_edge_list(fe, 4).edges;
  ad::Tensor x2 = ad::load_features(fx);
  auto labels2 = ad::load_labels(fy, 2);
  CHECK(edges2 == edges);
  CHECK(labels2 == labels);
  REQUIRE(x2.shape == x.shape);
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK((*x2.data)[i] == (*x.data)[i]);
}

TEST_CASE("graph validation rejects broken structures") {
  ad::DomainGraph g;
  g.num_nodes = 3;
  g.num_classes = 2;
  g.features = ad::Tensor({3, 2});
  g.edges = {{0, 1}};
  g.labels = {0, 1, 0};
  CHECK_NOTHROW(ad::validate(g));
  SUBCASE("edge out of range") {
    g.edges.push_back({1, 3});
    CHECK_THROWS_AS(ad::validate(g), ad::RangeError);
  }
  SUBCASE("duplicate edge either orientation") {
    g.edges.push_back({1, 0});
    CHECK_THROWS_AS(ad::validate(g), ad::ContractError);
  }
  SUBCASE("self-loop") {
    g.edges.push_back({2, 2});
    CHECK_THROWS_AS(ad::validate(g), ad::ContractError);
  }
  SUBCASE("label outside class range") {
    g.labels[0] = 2;
    CHECK_THROWS_AS(ad::validate(g), ad::RangeError);
  }
  SUBCASE("feature rows off by one") {
    g.features = ad::Tensor({2, 2});
    CHECK_THROWS_AS(ad::validate(g), ad::DimensionError);
  }
}

TEST_CASE("csbm determinism and spec validation") {
  ad::CsbmSpec spec;
  spec.num_nodes = 60;
  spec.feature_dim = 3;
  spec.num_classes = 2;
  spec.class_means = ad::simplex_means(2, 3, 2.0);
  spec.seed = 9;
  auto [s1, t1] = ad::generate_csbm(spec);
  auto [s2, t2] = ad::generate_csbm(spec);
  CHECK(s1.edges == s2.edges);
  CHECK(t1.edges == t2.edges);
  CHECK(*s1.features.data == *s2.features.data);
  CHECK(*t1.features.data == *t2.features.data);
  CHECK(s1.labels == s2.labels);
  CHECK_NOTHROW(ad::validate(s1));
  CHECK_NOTHROW(ad::validate(t1));

  SUBCASE("labels are balanced") {
    int ones = 0;
    for (int y : s1.labels) ones += y;
    CHECK(ones == 30);
  }
  SUBCASE("shifted probabilities must stay in range") {
    spec.shift_delta_p_in = 1.0;
    CHECK_THROWS_AS(ad::generate_csbm(spec), ad::ConfigError);
  }
  SUBCASE("probability ordering enforced") {
    spec.p_out = 0.9;
    spec.p_in = 0.1;
    CHECK_THROWS_AS(ad::generate_csbm(spec), ad::ConfigError);
  }
  SUBCASE("sigma must be positive") {
    spec.feature_sigma = 0.0;
    CHECK_THROWS_AS(ad::generate_csbm(spec), ad::ConfigError);
  }
  SUBCASE("means shape checked") {
    spec.class_means = ad::Tensor({2, 2});
    CHECK_THROWS_AS(ad::generate_csbm(spec), ad::ConfigError);
  }
}

TEST_CASE("zero shift leaves the target distribution unchanged") {
  ad::CsbmSpec spec;
  spec.num_nodes = 4000;
  spec.feature_dim = 2;
  spec.num_classes = 2;
  spec.class_means = ad::simplex_means(2, 2, 3.0);
  spec.feature_sigma = 1.0;
  spec.p_in = 0.01;
  spec.p_out = 0.005;
  spec.seed = 17;
  auto [src, tgt] = ad::generate_csbm(spec);
  const int per_class = spec.num_nodes / 2;
  for (int c = 0; c < 2; ++c) {
    double dist_sq = 0.0;
    for (int f = 0; f < 2; ++f) {
      double ms = 0.0, mt = 0.0;
      for (int i = 0; i < spec.num_nodes; ++i) {
        if (i % 2 != c) continue;
        ms += src.features.at(i, f);
        mt += tgt.features.at(i, f);
      }
      const double diff = (ms - mt) / per_class;
      dist_sq += diff * diff;
    }
    CHECK(std::sqrt(dist_sq) <
          3.0 * spec.feature_sigma / std::sqrt(static_cast<double>(per_class)));
  }
}

TEST_CASE("translation shift moves empirical class means by the vector") {
  ad::CsbmSpec spec;
  spec.num_nodes = 4000;
  spec.feature_dim = 3;
  spec.num_classes = 2;
  spec.class_means = ad::simplex_means(2, 3, 2.0);
  spec.feature_sigma = 1.0;
  spec.p_in = 0.004;
  spec.p_out = 0.002;
  spec.shift_translation = {0.7, -0.4, 0.2};
  spec.seed = 23;
  auto [src, tgt] = ad::generate_csbm(spec);
  const int per_class = spec.num_nodes / 2;
  const double se = spec.feature_sigma / std::sqrt(static_cast<double>(per_class));
  for (int c = 0; c < 2; ++c)
    for (int f = 0; f < 3; ++f) {
      double ms = 0.0, mt = 0.0;
      for (int i = 0; i < spec.num_nodes; ++i) {
        if (i % 2 != c) continue;
        ms += src.features.at(i, f);
        mt += tgt.features.at(i, f);
      }
      ms /= per_class;
      mt /= per_class;
      // two empirical means, each with standard error se
      CHECK(std::fabs(mt - ms - spec.shift_translation[static_cast<std::size_t>(f)]) <
            3.0 * se * std::sqrt(2.0));
    }
}

TEST_CASE("rotation shift turns the class means in the leading plane") {
  ad::CsbmSpec spec;
  spec.num_nodes = 4000;
  spec.feature_dim = 2;
  spec.num_classes = 2;
  spec.class_means = ad::simplex_means(2, 2, 3.0);
  spec.feature_sigma = 0.5;
  spec.p_in = 0.004;
  spec.p_out = 0.002;
  spec.shift_rotation_degrees = 90.0;
  spec.seed = 31;
  auto [src, tgt] = ad::generate_csbm(spec);
  // class 0 mean (3, 0) becomes (0, 3) under a quarter turn
  double m0 = 0.0, m1 = 0.0;
  const int per_class = spec.num_nodes / 2;
  for (int i = 0; i < spec.num_nodes; i += 2) {
    m0 += tgt.features.at(i, 0);
    m1 += tgt.features.at(i, 1);
  }
  m0 /= per_class;
  m1 /= per_class;
  const double se = spec.feature_sigma / std::sqrt(static_cast<double>(per_class));
  CHECK(std::fabs(m0 - 0.0) < 4.0 * se);
  CHECK(std::fabs(m1 - 3.0) < 4.0 * se);
}

}  // TEST_SUITE
