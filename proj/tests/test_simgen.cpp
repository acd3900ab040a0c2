#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "nougat/errors.hpp"
#include "nougat/simgen.hpp"
#include "nougat/theory.hpp"
#include "test_util.hpp"

using namespace nougat;

TEST_CASE("gaussian stream: R = 0 gives the constant mean") {
  GaussianSpec spec;
  spec.mu = Eigen::VectorXd(2);
  spec.mu << 1.5, -2.0;
  spec.R = Eigen::MatrixXd::Zero(2, 2);
  auto stream = gen_gaussian_stream(spec, 20, 130);
  for (const auto& y : stream) CHECK(y == spec.mu);
}

TEST_CASE("gaussian stream: sample moments match the validation spec") {
  // correlation 0.25 at std 0.5 -> off-diagonal covariance 0.0625
  const auto spec = GaussianSpec::equicorrelated(2, 0.5, 0.25);
  const long n = 1'000'000;
  auto stream = gen_gaussian_stream(spec, n, 131);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& y : stream) mean += y;
  mean /= static_cast<double>(n);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& y : stream) cov += (y - mean) * (y - mean).transpose();
  cov /= static_cast<double>(n - 1);

  // SE of the mean ~ 0.5/sqrt(n); SE of covariance entries ~ var/sqrt(n).
  const double se_mean = 0.5 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean[0]) < 3.0 * se_mean);
  CHECK(std::abs(mean[1]) < 3.0 * se_mean);
  CHECK(cov(0, 1) == doctest::Approx(0.0625).epsilon(0.02));
  CHECK(cov(0, 0) == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("gaussian stream: reproducible bit-for-bit; seeds injective") {
  const auto spec = GaussianSpec::equicorrelated(3, 1.0, 0.1);
  auto a = gen_gaussian_stream(spec, 50, 132);
  auto b = gen_gaussian_stream(spec, 50, 132);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100'000; ++i) seen.insert(derive_seed(977, i));
  CHECK(seen.size() == 100'000);
}

TEST_CASE("embed: identity, explicit window, slice oracle") {
  std::vector<double> s{1, 2, 3, 4};
  auto id = embed(s, 1);
  REQUIRE(id.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(id[i][0] == s[i]);

  auto pairs = embed(s, 2);
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[0] == Eigen::Vector2d(1, 2));
  CHECK(pairs[1] == Eigen::Vector2d(2, 3));
  CHECK(pairs[2] == Eigen::Vector2d(3, 4));

  Rng rng(133);
  std::vector<double> r;
  for (int i = 0; i < 40; ++i) r.push_back(rng.normal());
  auto emb = embed(r, 5);
  REQUIRE(emb.size() == 36);
  for (std::size_t i = 0; i < emb.size(); ++i) {
    for (int j = 0; j < 5; ++j) CHECK(emb[i][j] == r[i + j]);
  }

  CHECK_THROWS_AS(embed(std::vector<double>{1.0, 2.0}, 3), ValidationError);
}

TEST_CASE("gmm: single component has unit weight; t0 = n_t keeps parameters") {
  GmmChangeSpec spec;
  spec.dim = 3;
  spec.n_components = 1;
  spec.alpha = 2.0;
  spec.t0 = 50;
  spec.n_t = 50;
  spec.seed = 134;
  const auto r = gen_gmm_change(spec);
  CHECK(r.pre.weights.size() == 1);
  CHECK(r.pre.weights[0] == 1.0);
  CHECK(r.post.means[0] == r.pre.means[0]);
  CHECK(r.post.covs[0] == r.pre.covs[0]);
  CHECK(static_cast<long>(r.stream.size()) == 50);
}

TEST_CASE("gmm: component covariances scale like 1/q") {
  // E{Wishart(I, k+2)} = (k+2) I, so component q has E{C_q/q} = (k+2)/q I.
  const int k = 6, n = 3;
  Rng rng(135);
  std::vector<double> trace_mean(n, 0.0);
  const int draws = 3000;
  for (int d = 0; d < draws; ++d) {
    const auto p = draw_gmm_params(k, n, 5.0, rng);
    for (int q = 0; q < n; ++q) trace_mean[q] += p.covs[q].trace();
  }
  for (double& v : trace_mean) v /= static_cast<double>(draws);
  const double expect1 = k * (k + 2.0);
  // Relative SE of a Wishart trace mean over 3000 draws is about 1%.
  CHECK(trace_mean[0] == doctest::Approx(expect1).epsilon(0.06));
  CHECK(trace_mean[1] == doctest::Approx(expect1 / 2.0).epsilon(0.06));
  CHECK(trace_mean[2] == doctest::Approx(expect1 / 3.0).epsilon(0.06));
}

TEST_CASE("gmm: pre/post segments honor t0") {
  GmmChangeSpec spec;
  spec.dim = 2;
  spec.n_components = 2;
  spec.alpha = 5.0;
  spec.t0 = 10;
  spec.n_t = 30;
  spec.seed = 136;
  const auto r = gen_gmm_change(spec);
  CHECK(static_cast<long>(r.stream.size()) == 30);
  // Same seed, same spec: identical realization.
  const auto r2 = gen_gmm_change(spec);
  for (std::size_t i = 0; i < r.stream.size(); ++i) CHECK(r.stream[i] == r2.stream[i]);
  CHECK_FALSE(r.post.means[0] == r.pre.means[0]);
}

TEST_CASE("median_bandwidth: pair distance, degenerate input, sort oracle") {
  Eigen::VectorXd a(2), b(2);
  a << 0.0, 0.0;
  b << 3.0, 4.0;
  CHECK(median_bandwidth({a, b}) == 5.0);

  std::vector<Eigen::VectorXd> same(5, a);
  CHECK(median_bandwidth(same) == 0.0);
  CHECK_THROWS_AS(median_bandwidth({a}), ValidationError);

  auto samples = testutil::random_stream(1000, 6, 137);
  std::vector<double> dists;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      dists.push_back((samples[i] - samples[j]).norm());
    }
  }
  std::sort(dists.begin(), dists.end());
  const std::size_t n = dists.size();
  const double oracle = n % 2 == 1 ? dists[n / 2] : 0.5 * (dists[n / 2 - 1] + dists[n / 2]);
  CHECK(median_bandwidth(samples) == doctest::Approx(oracle).epsilon(1e-14));
}

TEST_CASE("detector suite: manual-loop oracle, warm alignment, online growth") {
  const WindowConfig w{20, 15};
  auto dict = testutil::random_dictionary(6, 2, 0.4, 138);
  auto stream = testutil::random_stream(120, 2, 139);

  SuiteConfig cfg;
  cfg.win = w;
  cfg.nougat = true;
  cfg.ma = true;
  cfg.nougat_cfg.mu = 0.01;
  cfg.nougat_cfg.nu = 1e-3;
  const auto res = run_detector_suite(stream, dict, cfg);
  CHECK(res.first_index == w.n_ref + w.n_test - 1);
  CHECK(res.detectors == std::vector<std::string>{"nougat", "ma"});
  REQUIRE(res.raw.rows() == 120 - res.first_index);

  // Manual replication must be bit-identical.
  WindowStats stats(w, dict);
  NougatDetector det(cfg.nougat_cfg, 6);
  long rec = 0;
  for (const auto& y : stream) {
    stats.push(y, dict);
    if (!stats.warm()) continue;
    det.step(stats);
    CHECK(res.raw(rec, 0) == det.statistic());
    CHECK(res.raw(rec, 1) == ma_statistic(stats));
    CHECK(res.alarm(rec, 0) == std::abs(det.statistic() + 1.0));
    ++rec;
  }

  // Online dictionary growth from a seeded dictionary.
  SuiteConfig online = cfg;
  online.online_dictionary = true;
  Dictionary seeded(stream[0], KernelParams{0.3}, 0.55);
  Dictionary final_dict = seeded;
  const auto res2 = run_detector_suite(stream, seeded, online, &final_dict);
  CHECK(final_dict.size() > seeded.size());
  CHECK(final_dict.coherence() <= 0.55);
  CHECK(res2.raw.allFinite());
}

TEST_CASE("detector suite: drulsif column solves the windowed system exactly") {
  const WindowConfig w{24, 24};
  auto dict = testutil::random_dictionary(8, 2, 0.35, 155);
  auto stream = testutil::random_stream(150, 2, 156);
  SuiteConfig cfg;
  cfg.win = w;
  cfg.drulsif = true;
  cfg.drulsif_nu = 1e-2;
  const auto res = run_detector_suite(stream, dict, cfg);

  WindowStats stats(w, dict);
  long rec = 0;
  for (const auto& y : stream) {
    stats.push(y, dict);
    if (!stats.warm()) continue;
    const Eigen::VectorXd theta = drulsif_solve(stats, cfg.drulsif_nu);
    CHECK(res.raw(rec, 0) == theta.dot(stats.h_test()));
    Eigen::MatrixXd a = stats.H_ref();
    a.diagonal().array() += cfg.drulsif_nu;
    CHECK((a * theta + stats.e_opt()).norm() <= 1e-10);
    ++rec;
  }
}

TEST_CASE("monte_carlo: deterministic generator yields zero variance") {
  GaussianSpec spec;
  spec.mu = Eigen::VectorXd::Zero(2);
  spec.R = Eigen::MatrixXd::Zero(2, 2);
  auto dict = testutil::random_dictionary(3, 2, 0.5, 140);

  SuiteConfig suite;
  suite.win = WindowConfig{4, 4};
  suite.nougat = true;
  suite.nougat_cfg.mu = 0.05;
  suite.nougat_cfg.nu = 1e-2;

  McConfig mc;
  mc.n_runs = 4;
  mc.base_seed = 141;
  const auto rep = monte_carlo(
      [&](std::uint64_t seed) {
        return McRunInput{gen_gaussian_stream(spec, 30, seed), std::nullopt};
      },
      &dict, suite, mc);
  CHECK(rep.n_runs == 4);
  CHECK(rep.variance.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("monte_carlo: standard error shrinks like 1/sqrt(runs)") {
  const auto spec = GaussianSpec::equicorrelated(2, 0.5, 0.25);
  auto dict = testutil::random_dictionary(4, 2, 0.4, 142, 0.5);
  SuiteConfig suite;
  suite.win = WindowConfig{16, 16};
  suite.nougat = true;
  suite.nougat_cfg.mu = 0.02;
  suite.nougat_cfg.nu = 1e-3;

  auto gen = [&](std::uint64_t seed) {
    return McRunInput{gen_gaussian_stream(spec, 80, seed), std::nullopt};
  };
  McConfig half;
  half.n_runs = 200;
  half.base_seed = 143;
  McConfig full;
  full.n_runs = 400;
  full.base_seed = 143;
  const auto rep_half = monte_carlo(gen, &dict, suite, half);
  const auto rep_full = monte_carlo(gen, &dict, suite, full);

  const Eigen::Index t = rep_half.mean.rows() - 1;
  const double se_half = std::sqrt(rep_half.variance(t, 0) / rep_half.n_runs);
  const double se_full = std::sqrt(rep_full.variance(t, 0) / rep_full.n_runs);
  CHECK(se_full / se_half > 0.55);
  CHECK(se_full / se_half < 0.90);
}

TEST_CASE("monte_carlo: deterministic aggregation across thread counts") {
  const auto spec = GaussianSpec::equicorrelated(2, 0.6, 0.2);
  auto dict = testutil::random_dictionary(4, 2, 0.4, 144);
  SuiteConfig suite;
  suite.win = WindowConfig{8, 8};
  suite.nougat = true;
  suite.nougat_cfg.mu = 0.02;
  auto gen = [&](std::uint64_t seed) {
    return McRunInput{gen_gaussian_stream(spec, 40, seed), std::nullopt};
  };
  McConfig one;
  one.n_runs = 24;
  one.base_seed = 145;
  one.n_threads = 1;
  McConfig four = one;
  four.n_threads = 4;
  const auto a = monte_carlo(gen, &dict, suite, one);
  const auto b = monte_carlo(gen, &dict, suite, four);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.variance - b.variance).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("monte_carlo: failing run is reported and skipped") {
  const auto spec = GaussianSpec::equicorrelated(2, 0.5, 0.25);
  auto dict = testutil::random_dictionary(3, 2, 0.4, 146);
  SuiteConfig suite;
  suite.win = WindowConfig{4, 4};
  suite.nougat = true;
  suite.nougat_cfg.mu = 0.02;

  McConfig mc;
  mc.n_runs = 6;
  mc.base_seed = 147;
  int calls = 0;
  const auto rep = monte_carlo(
      [&](std::uint64_t seed) -> McRunInput {
        if (calls++ == 3) throw DataError("injected failure");
        return McRunInput{gen_gaussian_stream(spec, 20, seed), std::nullopt};
      },
      &dict, suite, mc);
  CHECK(rep.n_runs == 5);
  REQUIRE(rep.failed_runs.size() == 1);
  CHECK(rep.failed_runs[0] == 3);
}

TEST_CASE("monte_carlo: NOUGAT mean tracks the theory model (small protocol)") {
  // Small-scale version of the validation protocol: warm prefix so Monte
  // Carlo update steps align with the theory clock.
  const auto spec = GaussianSpec::equicorrelated(2, 0.5, 0.25);
  const KernelParams kp{0.25};
  auto dict = sample_dictionary(spec, 4, kp, 148);
  const MomentSet moments = closed_form_moments(dict, spec);

  AlgoConfig acfg;
  acfg.mu = 5e-3;
  acfg.nu = 1e-3;
  acfg.n_ref = 32;
  acfg.n_test = 32;
  acfg.theta0 = Eigen::VectorXd::Constant(4, 0.3);
  const long horizon = 150;
  const auto theory = mean_null(acfg, moments, horizon);

  SuiteConfig suite;
  suite.win = WindowConfig{acfg.n_ref, acfg.n_test};
  suite.nougat = true;
  suite.nougat_cfg.mu = acfg.mu;
  suite.nougat_cfg.nu = acfg.nu;
  suite.theta0 = acfg.theta0;

  const long prefix = acfg.n_ref + acfg.n_test - 1;
  McConfig mc;
  mc.n_runs = 400;
  mc.base_seed = 149;
  const auto rep = monte_carlo(
      [&](std::uint64_t seed) {
        return McRunInput{gen_gaussian_stream(spec, prefix + horizon, seed), std::nullopt};
      },
      &dict, suite, mc);
  REQUIRE(rep.mean.rows() == horizon);

  int outside = 0;
  for (long t = 0; t < horizon; ++t) {
    const double se = std::sqrt(rep.variance(t, 0) / rep.n_runs);
    if (std::abs(rep.mean(t, 0) - theory.mean_g[t]) > 3.0 * se) ++outside;
  }
  // Pointwise 3-SE exceedances are rare and heavily correlated across t.
  CHECK(outside <= 3);
}

TEST_CASE("monte_carlo: CSV report shape") {
  const auto spec = GaussianSpec::equicorrelated(2, 0.5, 0.25);
  auto dict = testutil::random_dictionary(3, 2, 0.4, 150);
  SuiteConfig suite;
  suite.win = WindowConfig{4, 4};
  suite.nougat = true;
  suite.ma = true;
  suite.nougat_cfg.mu = 0.02;
  McConfig mc;
  mc.n_runs = 3;
  mc.base_seed = 151;
  const auto rep = monte_carlo(
      [&](std::uint64_t seed) {
        return McRunInput{gen_gaussian_stream(spec, 20, seed), std::nullopt};
      },
      &dict, suite, mc);
  std::stringstream ss;
  rep.save_csv(ss);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "t,nougat_mean,nougat_var,ma_mean,ma_var,runs");
}
