#include "adalign/verify.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <vector>

#include "adalign/encoder.hpp"
#include "adalign/errors.hpp"
#include "adalign/rng.hpp"
#include "adalign/sampler.hpp"
#include "adalign/spectral.hpp"
#include "adalign/tensor.hpp"

namespace adalign {

namespace {

class Reporter {
 public:
  explicit Reporter(std::ostream& out) : out_(out) {}

  void check_le(const std::string& name, double err, double tol) {
    print(name, err, "tol", tol, err <= tol);
  }

  void check_range(const std::string& name, double value, double lo, double hi) {
    char bounds[64];
    std::snprintf(bounds, sizeof(bounds), "[%g,%g]", lo, hi);
    char line[256];
    const bool pass = value >= lo && value <= hi;
    ok_ = ok_ && pass;
    std::snprintf(line, sizeof(line), "%s value=%.6g bounds=%s %s", name.c_str(), value,
                  bounds, pass ? "PASS" : "FAIL");
    out_ << line << '\n';
  }

  bool ok() const { return ok_; }

 private:
  void print(const std::string& name, double err, const char* limit_name, double limit,
             bool pass) {
    char line[256];
    ok_ = ok_ && pass;
    std::snprintf(line, sizeof(line), "%s err=%.6g %s=%.6g %s", name.c_str(), err,
                  limit_name, limit, pass ? "PASS" : "FAIL");
    out_ << line << '\n';
  }

  std::ostream& out_;
  bool ok_ = true;
};

Tensor randn(int r, int c, CounterRng& rng, double scale = 1.0, double shift = 0.0) {
  Tensor t({r, c});
  for (auto& v : *t.data) v = scale * rng.next_normal() + shift;
  return t;
}

using Builder = std::function<Tensor(Tape&, const Tensor&)>;

double op_error(const Builder& build, const Tensor& x) {
  const auto f = [&](Tape& tape, const Tensor& v) {
    Tensor y = build(tape, v);
    if (y.numel() == 1) return y;
    return mean_all(tape, elementwise_mul(tape, y, y));
  };
  return grad_check(f, x, 1e-5);
}

SparseMatrix small_sparse() {
  SparseMatrix s;
  s.rows = 3;
  s.cols = 3;
  s.row_ptr = {0, 2, 3, 5};
  s.col_idx = {0, 2, 1, 0, 2};
  s.values = {0.5, -1.25, 2.0, 0.75, 1.5};
  return s;
}

SparseMatrix identity_sparse(int n) {
  SparseMatrix s;
  s.rows = n;
  s.cols = n;
  s.row_ptr.resize(n + 1);
  s.col_idx.resize(n);
  s.values.assign(n, 1.0);
  for (int i = 0; i <= n; ++i) s.row_ptr[i] = i;
  for (int i = 0; i < n; ++i) s.col_idx[i] = i;
  return s;
}

bool suite_gradcheck(std::ostream& out) {
  Reporter rep(out);
  const double tol = 1e-4;
  CounterRng rng(2026, "verify.gradcheck");

  Tensor a34 = randn(3, 4, rng);
  Tensor b42 = randn(4, 2, rng);
  Tensor row4 = randn(1, 4, rng);
  Tensor pos34 = randn(3, 4, rng, 0.4, 2.0);
  Tensor off34 = randn(3, 4, rng, 1.0, 0.3);
  Tensor x32 = randn(3, 2, rng);

  rep.check_le("gradcheck matmul_lhs",
               op_error([&](Tape& t, const Tensor& v) { return matmul(t, v, b42); }, a34),
               tol);
  rep.check_le("gradcheck matmul_rhs",
               op_error([&](Tape& t, const Tensor& v) { return matmul(t, a34, v); }, b42),
               tol);
  rep.check_le(
      "gradcheck sparse_dense_matmul",
      op_error([&](Tape& t, const Tensor& v) { return sparse_dense_matmul(t, small_sparse(), v); },
               x32),
      tol);
  rep.check_le("gradcheck transpose",
               op_error([&](Tape& t, const Tensor& v) { return transpose(t, v); }, a34),
               tol);
  rep.check_le(
      "gradcheck reshape",
      op_error([&](Tape& t, const Tensor& v) { return reshape(t, v, {6, 2}); }, a34),
      tol);
  rep.check_le(
      "gradcheck add",
      op_error([&](Tape& t, const Tensor& v) { return add(t, v, pos34); }, a34), tol);
  rep.check_le(
      "gradcheck add_row_broadcast",
      op_error([&](Tape& t, const Tensor& v) { return add(t, a34, v); }, row4), tol);
  rep.check_le(
      "gradcheck sub",
      op_error([&](Tape& t, const Tensor& v) { return sub(t, v, pos34); }, a34), tol);
  rep.check_le(
      "gradcheck elementwise_mul",
      op_error([&](Tape& t, const Tensor& v) { return elementwise_mul(t, v, pos34); },
               a34),
      tol);
  rep.check_le(
      "gradcheck mul_row_broadcast",
      op_error([&](Tape& t, const Tensor& v) { return elementwise_mul(t, a34, v); },
               row4),
      tol);
  rep.check_le(
      "gradcheck scalar_mul",
      op_error([&](Tape& t, const Tensor& v) { return scalar_mul(t, -2.5, v); }, a34),
      tol);
  rep.check_le("gradcheck relu",
               op_error([&](Tape& t, const Tensor& v) { return relu(t, v); }, off34),
               tol);
  rep.check_le("gradcheck exp",
               op_error([&](Tape& t, const Tensor& v) { return exp(t, v); }, a34), tol);
  rep.check_le("gradcheck cos",
               op_error([&](Tape& t, const Tensor& v) { return cos(t, v); }, a34), tol);
  rep.check_le("gradcheck sin",
               op_error([&](Tape& t, const Tensor& v) { return sin(t, v); }, a34), tol);
  rep.check_le("gradcheck cos_sin",
               op_error(
                   [&](Tape& t, const Tensor& v) {
                     auto cs = cos_sin(t, v);
                     return add(t, cs.first, cs.second);
                   },
                   a34),
               tol);
  rep.check_le(
      "gradcheck sqrt_eps",
      op_error([&](Tape& t, const Tensor& v) { return sqrt_eps(t, v); }, pos34), tol);
  rep.check_le("gradcheck sum_all",
               op_error([&](Tape& t, const Tensor& v) { return sum_all(t, v); }, a34),
               tol);
  rep.check_le("gradcheck mean_all",
               op_error([&](Tape& t, const Tensor& v) { return mean_all(t, v); }, a34),
               tol);
  rep.check_le("gradcheck mean_rows",
               op_error([&](Tape& t, const Tensor& v) { return mean_rows(t, v); }, a34),
               tol);
  rep.check_le(
      "gradcheck log_softmax_rows",
      op_error([&](Tape& t, const Tensor& v) { return log_softmax_rows(t, v); }, a34),
      tol);
  rep.check_le(
      "gradcheck gather_rows",
      op_error([&](Tape& t, const Tensor& v) { return gather_rows(t, v, {2, 0, 2}); },
               a34),
      tol);
  rep.check_le(
      "gradcheck concat_rows",
      op_error([&](Tape& t, const Tensor& v) { return concat_rows(t, v, pos34); }, a34),
      tol);

  Tensor zs = randn(8, 2, rng);
  Tensor zt = randn(8, 2, rng, 1.5, 0.4);
  Tensor freqs = randn(6, 2, rng);
  Tensor w = uniform_weights(6);
  rep.check_le(
      "gradcheck alignment_wrt_source",
      op_error([&](Tape& t, const Tensor& v) { return alignment_loss(t, v, zt, freqs, w, 0.7); },
               zs),
      tol);
  rep.check_le(
      "gradcheck alignment_wrt_target",
      op_error([&](Tape& t, const Tensor& v) { return alignment_loss(t, zs, v, freqs, w, 0.7); },
               zt),
      tol);
  rep.check_le(
      "gradcheck alignment_wrt_frequencies",
      op_error([&](Tape& t, const Tensor& v) { return alignment_loss(t, zs, zt, v, w, 0.7); },
               freqs),
      tol);

  EncoderParams enc = init_encoder({3, 4, 2}, 2, rng);
  Tensor x = randn(5, 3, rng);
  const std::vector<int> labels{0, 1, 0, 1, 1};
  const SparseMatrix adj = identity_sparse(5);
  const EncoderParams& cenc = enc;
  std::vector<const Tensor*> enc_params = cenc.all();
  const char* names[] = {"w0", "w1", "b0", "b1", "cls_w", "cls_b"};
  for (std::size_t i = 0; i < enc_params.size(); ++i) {
    const double err = grad_check(
        [&](Tape& t, const Tensor& v) {
          EncoderParams p = enc;
          std::vector<Tensor*> slots = p.all();
          *slots[i] = v;
          Tensor z = encode(t, adj, x, p, 0);
          return source_loss(t, classify(t, z, p), labels);
        },
        *enc_params[i], 1e-5);
    rep.check_le(std::string("gradcheck source_loss_wrt_") + names[i], err, tol);
  }

  SamplerParams base = init_sampler(2, 2);
  base.log_scales = Tensor::from_values({2, 2}, {0.1, -0.2, 0.3, 0.0});
  base.mixture_logits = Tensor::from_values({1, 2}, {0.2, -0.1});
  CounterRng noise_rng(2026, "verify.gradcheck.noise");
  const FrequencyDraw draw = draw_noise(base, 12, noise_rng);
  rep.check_le("gradcheck sampler_wrt_log_scales",
               grad_check(
                   [&](Tape& t, const Tensor& v) {
                     SamplerParams q;
                     q.log_scales = v;
                     q.mixture_logits = base.mixture_logits;
                     FrequencyBatch b = assemble_batch(t, q, draw);
                     return sampler_ascent_objective(t, b, zs, zt, 0.7);
                   },
                   base.log_scales, 1e-5),
               tol);
  rep.check_le("gradcheck sampler_wrt_mixture_logits",
               grad_check(
                   [&](Tape& t, const Tensor& v) {
                     SamplerParams q;
                     q.log_scales = base.log_scales;
                     q.mixture_logits = v;
                     FrequencyBatch b = assemble_batch(t, q, draw);
                     return sampler_ascent_objective(t, b, zs, zt, 0.7);
                   },
                   base.mixture_logits, 1e-5),
               tol);
  return rep.ok();
}

bool suite_cf(std::ostream& out) {
  Reporter rep(out);
  CounterRng rng(2027, "verify.cf");
  double oracle_err = 0.0;
  double amp_excess = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 20 + static_cast<int>(rng.next_below(41));
    const int d = 1 + static_cast<int>(rng.next_below(4));
    const int m = 1 + static_cast<int>(rng.next_below(16));
    Tensor z = randn(n, d, rng);
    Tensor freqs = randn(m, d, rng, 1.5);
    Tape tape;
    CfEvaluation cf = empirical_cf(tape, z, freqs);
    for (int j = 0; j < m; ++j) {
      std::complex<double> acc(0.0, 0.0);
      for (int i = 0; i < n; ++i) {
        double dot = 0.0;
        for (int c = 0; c < d; ++c) dot += z.at(i, c) * freqs.at(j, c);
        acc += std::complex<double>(std::cos(dot), std::sin(dot));
      }
      acc /= static_cast<double>(n);
      oracle_err = std::max(oracle_err, std::abs(cf.real.ptr()[j] - acc.real()));
      oracle_err = std::max(oracle_err, std::abs(cf.imag.ptr()[j] - acc.imag()));
      const double amp = std::hypot(cf.real.ptr()[j], cf.imag.ptr()[j]);
      amp_excess = std::max(amp_excess, amp - 1.0);
    }
  }
  rep.check_le("cf oracle_max_err", oracle_err, 1e-12);
  rep.check_le("cf amplitude_max_excess", amp_excess, 1e-9);

  Tensor z = randn(33, 3, rng);
  Tensor zero_freq({1, 3});
  Tape tape;
  CfEvaluation cf0 = empirical_cf(tape, z, zero_freq);
  const double zero_err =
      std::max(std::abs(cf0.real.ptr()[0] - 1.0), std::abs(cf0.imag.ptr()[0]));
  rep.check_le("cf zero_frequency_err", zero_err, 1e-12);
  return rep.ok();
}

bool suite_decomposition(std::ostream& out) {
  Reporter rep(out);
  CounterRng rng(2028, "verify.decomposition");
  const int m = 1000;
  Tensor re_s({1, m}), im_s({1, m}), re_t({1, m}), im_t({1, m});
  for (int j = 0; j < m; ++j) {
    const double as = rng.next_uniform();
    const double ts = (2.0 * rng.next_uniform() - 1.0) * 3.141592653589793;
    const double at = rng.next_uniform();
    const double tt = (2.0 * rng.next_uniform() - 1.0) * 3.141592653589793;
    re_s.ptr()[j] = as * std::cos(ts);
    im_s.ptr()[j] = as * std::sin(ts);
    re_t.ptr()[j] = at * std::cos(tt);
    im_t.ptr()[j] = at * std::sin(tt);
  }
  Tape tape;
  CfEvaluation s{re_s, im_s};
  CfEvaluation t{re_t, im_t};
  Tensor full = pointwise_loss(tape, s, t);
  Tensor amp = weighted_pointwise_loss(tape, s, t, 1.0);
  Tensor phase = weighted_pointwise_loss(tape, s, t, 0.0);
  Tensor half = weighted_pointwise_loss(tape, s, t, 0.5);
  double identity_err = 0.0;
  double half_err = 0.0;
  double negative = 0.0;
  for (int j = 0; j < m; ++j) {
    identity_err = std::max(
        identity_err, std::abs(amp.ptr()[j] + phase.ptr()[j] - full.ptr()[j]));
    half_err = std::max(half_err, std::abs(half.ptr()[j] - 0.5 * full.ptr()[j]));
    negative = std::min({negative, amp.ptr()[j], phase.ptr()[j]});
  }
  rep.check_le("decomposition identity_max_err", identity_err, 1e-10);
  rep.check_le("decomposition kappa_half_max_err", half_err, 1e-10);
  rep.check_le("decomposition negative_term", -negative, 1e-15);
  return rep.ok();
}

double nsd_value(const Tensor& zs, const Tensor& zt, const SamplerParams& params, int m,
                 CounterRng& rng) {
  Tape tape;
  FrequencyBatch batch = sample_frequencies(tape, params, m, params.dim(), rng);
  return alignment_loss(tape, zs, zt, batch.freqs, batch.weights, 0.5).ptr()[0];
}

bool suite_mc(std::ostream& out) {
  Reporter rep(out);
  CounterRng data_rng(2029, "verify.mc.data");
  Tensor zs = randn(200, 1, data_rng);
  Tensor zt = randn(200, 1, data_rng, 1.6, 0.8);
  SamplerParams params = init_sampler(1, 1);
  params.log_scales.ptr()[0] = std::log(2.5);

  CounterRng draw_rng(2029, "verify.mc.draws");
  const auto spread = [&](int m, double& mean_out) {
    std::vector<double> vals(50);
    double mean = 0.0;
    for (int i = 0; i < 50; ++i) {
      vals[i] = nsd_value(zs, zt, params, m, draw_rng);
      mean += vals[i];
    }
    mean /= vals.size();
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    mean_out = mean;
    return std::sqrt(var / (vals.size() - 1));
  };
  double mean_small = 0.0, mean_big = 0.0;
  const double sd_small = spread(512, mean_small);
  const double sd_big = spread(2048, mean_big);
  rep.check_range("mc std_ratio_2048_over_512", sd_big / sd_small, 0.35, 0.65);

  const double reference = nsd_value(zs, zt, params, 65536, draw_rng);
  const double se = sd_big * std::sqrt(1.0 / 50.0 + 2048.0 / 65536.0);
  rep.check_le("mc mean_2048_vs_65536", std::abs(mean_big - reference), 3.0 * se);
  return rep.ok();
}

}  // namespace

bool run_verify_suite(const std::string& name, std::ostream& out) {
  if (name == "gradcheck") return suite_gradcheck(out);
  if (name == "cf") return suite_cf(out);
  if (name == "decomposition") return suite_decomposition(out);
  if (name == "mc") return suite_mc(out);
  throw ConfigError("verify: unknown suite '" + name +
                    "' (expected gradcheck, cf, decomposition, or mc)");
}

}  // namespace adalign
