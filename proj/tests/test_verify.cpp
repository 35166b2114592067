#include <sstream>
#include <string>

#include "adalign/errors.hpp"
#include "adalign/verify.hpp"
#include "doctest.h"

using namespace adalign;

namespace {

int count_of(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t at = text.find(needle); at != std::string::npos;
       at = text.find(needle, at + needle.size()))
    ++n;
  return n;
}

}  // namespace

TEST_SUITE("verify") {

TEST_CASE("every property suite passes and reports tolerances") {
  for (const char* name : {"gradcheck", "cf", "decomposition", "mc"}) {
    CAPTURE(name);
    std::ostringstream out;
    CHECK(run_verify_suite(name, out));
    const std::string text = out.str();
    CHECK(count_of(text, "PASS") >= 2);
    CHECK(count_of(text, "FAIL") == 0);
    CHECK(text.find("tol=") != std::string::npos);
  }
}

TEST_CASE("gradcheck covers the op set and both parameter groups") {
  std::ostringstream out;
  CHECK(run_verify_suite("gradcheck", out));
  const std::string text = out.str();
  for (const char* probe :
       {"matmul_lhs", "sparse_dense_matmul", "log_softmax_rows", "cos_sin",
        "alignment_wrt_frequencies", "source_loss_wrt_cls_w", "sampler_wrt_log_scales",
        "sampler_wrt_mixture_logits"})
    CHECK(text.find(probe) != std::string::npos);
  CHECK(count_of(text, "PASS") >= 30);
}

TEST_CASE("suite output is reproducible") {
  std::ostringstream first, second;
  run_verify_suite("decomposition", first);
  run_verify_suite("decomposition", second);
  CHECK(first.str() == second.str());
}

TEST_CASE("unknown suite names are rejected") {
  std::ostringstream out;
  CHECK_THROWS_AS(run_verify_suite("spectra", out), ConfigError);
  CHECK_THROWS_AS(run_verify_suite("", out), ConfigError);
}

}
