#include "nougat/theory.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "nougat/csv.hpp"
#include "nougat/errors.hpp"

namespace nougat {

void AlgoConfig::validate() const {
  if (!(mu > 0.0)) throw ValidationError("theory: mu must be > 0");
  if (nu < 0.0) throw ValidationError("theory: nu must be >= 0");
  if (n_ref < 1 || n_test < 1) throw ValidationError("theory: window lengths must be >= 1");
}

ChangeScenario null_scenario(const MomentSet& moments) {
  return ChangeScenario{std::numeric_limits<long>::max() / 4, moments, moments};
}

RegimeSchedule regime_schedule(long t, long t0, int n_ref, int n_test) {
  RegimeSchedule s;
  if (t < t0) {
    s.regime = Regime::pre;
    s.n0 = n_test;
    s.n0p = n_ref;
  } else if (t <= t0 + n_test - 1) {
    s.regime = Regime::test_mixed;
    s.n1 = static_cast<int>(t - t0 + 1);
    s.n0 = n_test - s.n1;
    s.n0p = n_ref;
  } else if (t <= t0 + n_test + n_ref - 1) {
    s.regime = Regime::ref_mixed;
    s.n1 = n_test;
    s.n1p = static_cast<int>(t - (t0 + n_test) + 1);
    s.n0p = n_ref - s.n1p;
  } else {
    s.regime = Regime::post;
    s.n1 = n_test;
    s.n1p = n_ref;
  }
  return s;
}

double step_bound(const Eigen::MatrixXd& H, double nu) {
  Eigen::MatrixXd a = 0.5 * (H + H.transpose());
  a.diagonal().array() += nu;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return 2.0 / es.eigenvalues().maxCoeff();
}

Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows) {
  if (rows < 1 || v.size() % rows != 0) throw ValidationError("unvec: size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, v.size() / rows);
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

namespace {

// Windowed mixture of two per-sample moments; the homogeneous branches are
// evaluated without the redundant n/n scaling so pure regimes reproduce the
// single-distribution recursions bit-exactly.
Eigen::VectorXd mix_vec(int na, int nb, const Eigen::VectorXd& va, const Eigen::VectorXd& vb) {
  if (nb == 0) return va;
  if (na == 0) return vb;
  // Delta form: exact when the two moment sets coincide.
  return va + (static_cast<double>(nb) / (na + nb)) * (vb - va);
}

Eigen::MatrixXd mix_mat(int na, int nb, const Eigen::MatrixXd& va, const Eigen::MatrixXd& vb) {
  if (nb == 0) return va;
  if (na == 0) return vb;
  return va + (static_cast<double>(nb) / (na + nb)) * (vb - va);
}

// E{w w^T} for the mean w of a window holding na draws from (ha, Ha) and
// nb draws from (hb, Hb), all independent; n = na + nb.
Eigen::MatrixXd window_mean_outer(int na, int nb, const Eigen::VectorXd& ha,
                                  const Eigen::VectorXd& hb, const Eigen::MatrixXd& Ha,
                                  const Eigen::MatrixXd& Hb) {
  const double n = na + nb;
  if (nb == 0) return Ha / n + (1.0 - 1.0 / n) * ha * ha.transpose();
  if (na == 0) return Hb / n + (1.0 - 1.0 / n) * hb * hb.transpose();
  const Eigen::VectorXd sum = na * ha + nb * hb;
  Eigen::MatrixXd out = sum * sum.transpose();
  out += na * (Ha - ha * ha.transpose());
  out += nb * (Hb - hb * hb.transpose());
  return out / (n * n);
}

struct EngineState {
  Eigen::VectorXd m;
  Eigen::MatrixXd C;
};

}  // namespace

TheoryTrace theory_trace(const AlgoConfig& cfg, const ChangeScenario& scenario, long horizon,
                         const TheoryOptions& opts) {
  cfg.validate();
  const Eigen::Index l = scenario.pre.h.size();
  if (scenario.post.h.size() != l) throw ValidationError("theory: moment set size mismatch");
  if (horizon < 1) throw ValidationError("theory: horizon must be >= 1");

  const double mu = cfg.mu, nu = cfg.nu;
  const double n_ref = cfg.n_ref, n_test = cfg.n_test;
  const MomentSet& m0 = scenario.pre;
  const MomentSet& m1 = scenario.post;

  EngineState st;
  const Eigen::VectorXd theta0 = cfg.theta0.size() ? cfg.theta0 : Eigen::VectorXd::Zero(l);
  if (theta0.size() != l) throw ValidationError("theory: theta0 length != L");
  st.C = theta0 * theta0.transpose();  // deterministic start: E{theta theta^T} = theta0 theta0^T
  st.m = opts.neglect_mean ? Eigen::VectorXd::Zero(l) : theta0;

  TheoryTrace tr;
  tr.mean_g.resize(horizon);
  tr.var_g.resize(horizon);
  if (opts.store_mean) tr.m_theta.resize(horizon, l);
  if (opts.store_covariance) tr.c_theta.reserve(horizon);

  const double decay = 1.0 - mu * nu;
  for (long t = 1; t <= horizon; ++t) {
    const RegimeSchedule sc = regime_schedule(t, scenario.t0, cfg.n_ref, cfg.n_test);
    const int a = sc.n0p, b = sc.n1p;  // reference window composition

    const Eigen::VectorXd h_ref_bar = mix_vec(a, b, m0.h, m1.h);
    const Eigen::MatrixXd H_ref_bar = mix_mat(a, b, m0.H, m1.H);
    const Eigen::VectorXd h_test_bar = mix_vec(sc.n0, sc.n1, m0.h, m1.h);
    const Eigen::MatrixXd H_test_bar = mix_mat(sc.n0, sc.n1, m0.H, m1.H);

    // Correlation recursion uses the pre-update mean.
    const Eigen::VectorXd c_vec = vec(st.C);
    Eigen::MatrixXd t_mat = Eigen::MatrixXd::Zero(l, l);
    if (a > 0) t_mat += a * unvec(m0.Gamma * c_vec, l);
    if (b > 0) t_mat += b * unvec(m1.Gamma * c_vec, l);
    if (a > 1) t_mat += static_cast<double>(a) * (a - 1) * m0.H * st.C * m0.H;
    if (b > 1) t_mat += static_cast<double>(b) * (b - 1) * m1.H * st.C * m1.H;
    if (a > 0 && b > 0) {
      t_mat += static_cast<double>(a) * b * (m0.H * st.C * m1.H + m1.H * st.C * m0.H);
    }
    t_mat /= n_ref * n_ref;

    const Eigen::MatrixXd q1 = window_mean_outer(sc.n0, sc.n1, m0.h, m1.h, m0.H, m1.H);
    const Eigen::MatrixXd q2 = window_mean_outer(a, b, m0.h, m1.h, m0.H, m1.H);
    const Eigen::MatrixXd q3 = h_test_bar * h_ref_bar.transpose();
    const Eigen::MatrixXd q_mat = q1 + q2 - q3 - q3.transpose();

    Eigen::MatrixXd zn_terms = Eigen::MatrixXd::Zero(l, l);
    if (!opts.neglect_mean) {
      Eigen::MatrixXd z = Eigen::MatrixXd::Zero(l, l);
      if (a > 0) z += a * unvec(m0.Delta * st.m, l);
      if (b > 0) z += b * unvec(m1.Delta * st.m, l);
      if (a > 1) z += static_cast<double>(a) * (a - 1) * m0.h * (st.m.transpose() * m0.H);
      if (b > 1) z += static_cast<double>(b) * (b - 1) * m1.h * (st.m.transpose() * m1.H);
      if (a > 0 && b > 0) {
        z += static_cast<double>(a) * b *
             (m0.h * (st.m.transpose() * m1.H) + m1.h * (st.m.transpose() * m0.H));
      }
      z /= n_ref * n_ref;
      z -= h_test_bar * (st.m.transpose() * H_ref_bar);
      // N = E{e_opt} m^T with E{e_opt} = h_ref_bar - h_test_bar.
      const Eigen::MatrixXd n_mat = (h_ref_bar - h_test_bar) * st.m.transpose();
      zn_terms = mu * mu * (z + z.transpose()) - mu * decay * (n_mat + n_mat.transpose());
    }

    st.C = decay * decay * st.C - mu * decay * (H_ref_bar * st.C + st.C * H_ref_bar) +
           mu * mu * (t_mat + q_mat) + zn_terms;
    st.C = 0.5 * (st.C + st.C.transpose());

    if (!opts.neglect_mean) {
      st.m = st.m - mu * (H_ref_bar * st.m + nu * st.m) + mu * (h_test_bar - h_ref_bar);
    }

    const double mean_g = h_test_bar.dot(st.m);
    double var_g = (H_test_bar * st.C).trace();
    if (!opts.neglect_mean) var_g -= mean_g * mean_g;
    var_g /= n_test;

    tr.mean_g[t - 1] = mean_g;
    tr.var_g[t - 1] = var_g;
    if (opts.store_mean) tr.m_theta.row(t - 1) = st.m.transpose();
    if (opts.store_covariance) tr.c_theta.push_back(st.C);
  }
  tr.m_final = st.m;
  tr.c_final = st.C;
  return tr;
}

TheoryTrace mean_null(const AlgoConfig& cfg, const MomentSet& moments, long horizon) {
  return theory_trace(cfg, null_scenario(moments), horizon);
}

TheoryTrace variance_null(const AlgoConfig& cfg, const MomentSet& moments, long horizon,
                          const TheoryOptions& opts) {
  return theory_trace(cfg, null_scenario(moments), horizon, opts);
}

TheoryTrace mean_change(const AlgoConfig& cfg, const ChangeScenario& scenario, long horizon) {
  return theory_trace(cfg, scenario, horizon);
}

TheoryTrace variance_change(const AlgoConfig& cfg, const ChangeScenario& scenario, long horizon,
                            const TheoryOptions& opts) {
  return theory_trace(cfg, scenario, horizon, opts);
}

Eigen::MatrixXd null_Q(const AlgoConfig& cfg, const MomentSet& moments) {
  const double c = static_cast<double>(cfg.n_ref + cfg.n_test) /
                   (static_cast<double>(cfg.n_ref) * cfg.n_test);
  return c * (moments.H - moments.h * moments.h.transpose());
}

Eigen::MatrixXd null_S_matrix(const AlgoConfig& cfg, const MomentSet& moments) {
  cfg.validate();
  const Eigen::Index l = moments.h.size();
  const Eigen::Index l2 = l * l;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(l, l);
  const double mu = cfg.mu, nu = cfg.nu;
  Eigen::MatrixXd s = (1.0 - mu * nu) * (1.0 - mu * nu) * Eigen::MatrixXd::Identity(l2, l2);
  s += (mu * mu / cfg.n_ref) *
       (moments.Gamma + (cfg.n_ref - 1.0) * kron(moments.H, moments.H));
  s -= mu * (1.0 - mu * nu) * (kron(moments.H, eye) + kron(eye, moments.H));
  return s;
}

SteadyState steady_state_null(const AlgoConfig& cfg, const MomentSet& moments) {
  const Eigen::MatrixXd s = null_S_matrix(cfg, moments);
  Eigen::EigenSolver<Eigen::MatrixXd> es(s, false);
  if (es.info() != Eigen::Success) throw NumericalError("steady state: eigensolver failed");
  const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  if (rho >= 1.0) {
    throw NumericalError("steady state: mean-square unstable, spectral radius " +
                         std::to_string(rho) + " >= 1");
  }
  const Eigen::Index l = moments.h.size();
  const Eigen::VectorXd q = vec(null_Q(cfg, moments));
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(s.rows(), s.cols()) - s;
  SteadyState out;
  out.c_inf = cfg.mu * cfg.mu * Eigen::PartialPivLU<Eigen::MatrixXd>(lhs).solve(q);
  out.var_inf = (moments.H * unvec(out.c_inf, l)).trace() / cfg.n_test;
  out.spectral_radius = rho;
  return out;
}

Eigen::VectorXd iterate_null_covariance(const AlgoConfig& cfg, const MomentSet& moments,
                                        int log2_steps) {
  if (log2_steps < 0 || log2_steps > 62) throw ValidationError("log2_steps out of range");
  Eigen::MatrixXd m = null_S_matrix(cfg, moments);
  Eigen::VectorXd v = cfg.mu * cfg.mu * vec(null_Q(cfg, moments));
  // After k doublings: c_{2^k} = (I + M + ... + M^(2^k - 1)) v0 with c_0 = 0.
  for (int k = 0; k < log2_steps; ++k) {
    v += m * v;
    if (k + 1 < log2_steps) m = m * m;
  }
  return v;
}

double smallmu_variance(const AlgoConfig& cfg, const MomentSet& moments) {
  cfg.validate();
  const Eigen::Index l = moments.h.size();
  Eigen::MatrixXd a = moments.H;
  a.diagonal().array() += cfg.nu;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw NumericalError("smallmu: eigensolver failed");
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw NumericalError("smallmu: nu I + H is not positive definite");
  }
  const Eigen::MatrixXd q = null_Q(cfg, moments);
  const Eigen::MatrixXd qt = es.eigenvectors().transpose() * q * es.eigenvectors();
  Eigen::MatrixXd x(l, l);
  for (Eigen::Index i = 0; i < l; ++i) {
    for (Eigen::Index j = 0; j < l; ++j) {
      x(i, j) = qt(i, j) / (es.eigenvalues()[i] + es.eigenvalues()[j]);
    }
  }
  const Eigen::MatrixXd x_full = es.eigenvectors() * x * es.eigenvectors().transpose();
  return cfg.mu / cfg.n_test * (moments.H * x_full).trace();
}

double smallmu_variance_kron(const AlgoConfig& cfg, const MomentSet& moments) {
  cfg.validate();
  const Eigen::Index l = moments.h.size();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(l, l);
  Eigen::MatrixXd lhs = kron(moments.H, eye) + kron(eye, moments.H);
  lhs.diagonal().array() += 2.0 * cfg.nu;
  const Eigen::VectorXd sol =
      Eigen::LDLT<Eigen::MatrixXd>(lhs).solve(vec(null_Q(cfg, moments)));
  return cfg.mu / cfg.n_test * vec(moments.H).dot(sol);
}

void TheoryTrace::save_csv(std::ostream& os, bool with_mean_vector) const {
  std::vector<std::string> names{"t", "mean_g", "var_g"};
  if (with_mean_vector) {
    for (Eigen::Index j = 0; j < m_theta.cols(); ++j) names.push_back("m" + std::to_string(j));
  }
  csv::write_header(os, names);
  for (Eigen::Index i = 0; i < mean_g.size(); ++i) {
    std::vector<double> row{static_cast<double>(i + 1), mean_g[i], var_g[i]};
    if (with_mean_vector) {
      for (Eigen::Index j = 0; j < m_theta.cols(); ++j) row.push_back(m_theta(i, j));
    }
    csv::write_values(os, row);
  }
}

void TheoryTrace::save_csv_file(const std::string& path, bool with_mean_vector) const {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  save_csv(f, with_mean_vector);
}

}  // namespace nougat
