#include "ineq/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>

#include <unsupported/Eigen/FFT>

#include "ineq/parallel.hpp"

namespace ineq {

void SamplerConfig::validate() const {
  if (chains < 1) fail(ErrorCode::InvalidArgument, "need at least one chain");
  if (warmup < 0 || warmup >= iterations) {
    fail(ErrorCode::InvalidArgument, "warmup must be in [0, iterations)");
  }
  if (max_leapfrog < 1 || !(integration_time > 0.0)) {
    fail(ErrorCode::InvalidArgument, "HMC trajectory settings must be positive");
  }
  if (target_accept && !(*target_accept > 0.0 && *target_accept < 1.0)) {
    fail(ErrorCode::InvalidArgument, "target acceptance must lie in (0,1)");
  }
}

double SamplerConfig::accept_target() const {
  if (target_accept) return *target_accept;
  return algorithm == Algorithm::Hmc ? 0.8 : 0.3;
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "hmc") return Algorithm::Hmc;
  if (name == "adaptive-metropolis" || name == "metropolis") return Algorithm::AdaptiveMetropolis;
  fail(ErrorCode::InvalidArgument, "unknown sampler '" + name + "'");
}

std::string algorithm_name(Algorithm a) {
  return a == Algorithm::Hmc ? "hmc" : "adaptive-metropolis";
}

std::vector<Vec<double>> PosteriorDraws::param_chains(int j) const {
  std::vector<Vec<double>> out;
  for (const auto& m : params) out.emplace_back(m.col(j));
  return out;
}

std::vector<Vec<double>> PosteriorDraws::generated_chains(int j) const {
  std::vector<Vec<double>> out;
  for (const auto& m : generated) out.emplace_back(m.col(j));
  return out;
}

Vec<double> PosteriorDraws::generated_pooled(int j) const {
  Vec<double> out(static_cast<Index>(chains()) * draws_per_chain());
  Index k = 0;
  for (const auto& m : generated) {
    out.segment(k, m.rows()) = m.col(j);
    k += m.rows();
  }
  return out;
}

Matrix<double> PosteriorDraws::loglik_pooled() const {
  if (loglik.empty()) return {};
  Matrix<double> out(static_cast<Index>(chains()) * draws_per_chain(), loglik[0].cols());
  Index k = 0;
  for (const auto& m : loglik) {
    out.middleRows(k, m.rows()) = m;
    k += m.rows();
  }
  return out;
}

namespace {

struct Welford {
  Index n = 0;
  Vec<double> mean, m2;

  explicit Welford(Index dim) : mean(Vec<double>::Zero(dim)), m2(Vec<double>::Zero(dim)) {}
  void add(const Vec<double>& x) {
    ++n;
    Vec<double> delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2.array() += delta.array() * (x - mean).array();
  }
  // Variance shrunk towards 1e-3 as in common HMC practice.
  Vec<double> regularized_variance() const {
    const double nn = static_cast<double>(n);
    Vec<double> var = m2 / std::max(nn - 1.0, 1.0);
    return (nn / (nn + 5.0)) * var.array() + 1e-3 * (5.0 / (nn + 5.0));
  }
  void reset() {
    n = 0;
    mean.setZero();
    m2.setZero();
  }
};

struct ChainResult {
  Matrix<double> params, generated, loglik;
  ChainStats stats;
};

Vec<double> initial_point(const Target& t, CounterRng& rng, double& lp) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Vec<double> q;
    if (t.initial_point) {
      q = t.initial_point(rng);
    } else {
      q.resize(t.dim);
      for (int i = 0; i < t.dim; ++i) q[i] = 4.0 * rng.uniform() - 2.0;
    }
    if (q.size() != t.dim) fail(ErrorCode::LengthMismatch, "initial point has the wrong size");
    lp = t.log_density(q);
    if (std::isfinite(lp)) return q;
  }
  fail(ErrorCode::NonFiniteInit, "log density is not finite at any of 100 initial points");
}

void record(const Target& t, const Vec<double>& q, Index row, ChainResult& out) {
  out.params.row(row) = q.transpose();
  Vec<double> buf;
  if (t.generated && out.generated.cols() > 0) {
    t.generated(q, buf);
    out.generated.row(row) = buf.transpose();
  }
  if (t.pointwise_loglik && out.loglik.cols() > 0) {
    t.pointwise_loglik(q, buf);
    out.loglik.row(row) = buf.transpose();
  }
}

ChainResult allocate(const Target& t, const SamplerConfig& cfg) {
  ChainResult r;
  const Index kept = cfg.kept();
  r.params.resize(kept, t.dim);
  r.generated.resize(kept, t.generated ? static_cast<Index>(t.generated_names.size()) : 0);
  r.loglik.resize(kept, t.pointwise_loglik ? t.pointwise_size : 0);
  return r;
}

ChainResult run_metropolis(const Target& t, const SamplerConfig& cfg, CounterRng rng) {
  ChainResult out = allocate(t, cfg);
  std::normal_distribution<double> normal;
  double lp;
  Vec<double> q = initial_point(t, rng, lp);
  const int dim = t.dim;
  Vec<double> scale = Vec<double>::Ones(dim);
  double log_lambda = std::log(2.38 / std::sqrt(static_cast<double>(dim)));
  const double target = cfg.accept_target();
  Welford acc(dim);
  // metric updates at the end of doubling windows inside warmup
  std::vector<int> checkpoints;
  for (int c = std::max(cfg.warmup / 16, 1); c < cfg.warmup; c *= 2) checkpoints.push_back(c);
  size_t next_cp = 0;

  double accept_sum = 0.0;
  Vec<double> prop(dim);
  for (int it = 0; it < cfg.iterations; ++it) {
    const double lambda = std::exp(log_lambda);
    for (int i = 0; i < dim; ++i) prop[i] = q[i] + lambda * scale[i] * normal(rng);
    const double lp_new = t.log_density(prop);
    const double alpha = std::isfinite(lp_new) ? std::min(1.0, std::exp(lp_new - lp)) : 0.0;
    if (rng.uniform() < alpha) {
      q = prop;
      lp = lp_new;
    }
    if (it < cfg.warmup) {
      log_lambda += (alpha - target) / std::pow(static_cast<double>(it + 1), 0.6);
      acc.add(q);
      if (next_cp < checkpoints.size() && it + 1 == checkpoints[next_cp]) {
        if (acc.n >= 10) scale = acc.regularized_variance().cwiseSqrt();
        acc.reset();
        ++next_cp;
      }
    } else {
      accept_sum += alpha;
      record(t, q, it - cfg.warmup, out);
    }
  }
  out.stats.acceptance = accept_sum / cfg.kept();
  out.stats.step_size = std::exp(log_lambda);
  return out;
}

class Hmc {
 public:
  Hmc(const Target& t, const SamplerConfig& cfg, CounterRng rng)
      : t_(t), cfg_(cfg), rng_(rng), dim_(t.dim), inv_m_(Vec<double>::Ones(t.dim)) {}

  ChainResult run() {
    ChainResult out = allocate(t_, cfg_);
    double lp0;
    q_ = initial_point(t_, rng_, lp0);
    lp_ = t_.log_density_gradient(q_, g_);
    if (!std::isfinite(lp_)) fail(ErrorCode::NonFiniteInit, "gradient is not finite at the initial point");

    const int W = cfg_.warmup;
    int init_buf = 75, term_buf = 50, base = 25;
    if (W < init_buf + term_buf + base) {
      init_buf = static_cast<int>(0.15 * W);
      term_buf = static_cast<int>(0.1 * W);
      base = W - init_buf - term_buf;
    }
    int window_end = init_buf + base;
    int window_size = base;
    Welford acc(dim_);

    eps_ = 1.0;
    find_reasonable_step();
    restart_dual_averaging();

    double accept_sum = 0.0, steps_sum = 0.0;
    for (int it = 0; it < cfg_.iterations; ++it) {
      const bool warm = it < W;
      int steps = 0;
      bool divergent = false;
      const double alpha = transition(steps, divergent);
      if (warm) {
        adapt_step(alpha);
        if (it >= init_buf && it < W - term_buf && base > 0) {
          acc.add(q_);
          if (it + 1 == window_end) {
            inv_m_ = acc.regularized_variance();
            acc.reset();
            window_size *= 2;
            window_end = it + 1 + window_size;
            // a final window that would overrun the terminal buffer is merged
            if (window_end + 2 * window_size > W - term_buf) window_end = W - term_buf;
            find_reasonable_step();
            restart_dual_averaging();
          }
        }
        if (it + 1 == W) eps_ = std::exp(log_eps_bar_);
      } else {
        accept_sum += alpha;
        steps_sum += steps;
        if (divergent) ++out.stats.divergences;
        record(t_, q_, it - W, out);
      }
    }
    out.stats.acceptance = accept_sum / cfg_.kept();
    out.stats.step_size = eps_;
    out.stats.mean_leapfrog = steps_sum / cfg_.kept();
    return out;
  }

 private:
  double kinetic(const Vec<double>& p) const { return 0.5 * (p.array().square() * inv_m_.array()).sum(); }

  Vec<double> draw_momentum() {
    Vec<double> p(dim_);
    for (int i = 0; i < dim_; ++i) p[i] = normal_(rng_) / std::sqrt(inv_m_[i]);
    return p;
  }

  // Runs n leapfrog steps from (q, p, g); returns the final log density.
  double leapfrog(Vec<double>& q, Vec<double>& p, Vec<double>& g, int n, double eps) {
    double lp = 0.0;
    for (int s = 0; s < n; ++s) {
      p += 0.5 * eps * g;
      q.array() += eps * inv_m_.array() * p.array();
      lp = t_.log_density_gradient(q, g);
      if (!std::isfinite(lp)) return kNegInf;
      p += 0.5 * eps * g;
    }
    return lp;
  }

  double transition(int& steps, bool& divergent) {
    Vec<double> p = draw_momentum();
    const double h0 = -lp_ + kinetic(p);
    const double len = cfg_.integration_time * (0.5 + rng_.uniform());
    steps = static_cast<int>(std::clamp(std::ceil(len / eps_), 1.0, double(cfg_.max_leapfrog)));
    Vec<double> q = q_, g = g_;
    const double lp = leapfrog(q, p, g, steps, eps_);
    const double h1 = lp == kNegInf ? std::numeric_limits<double>::infinity() : -lp + kinetic(p);
    divergent = !(h1 - h0 < 1000.0);
    const double alpha = divergent ? 0.0 : std::min(1.0, std::exp(h0 - h1));
    if (rng_.uniform() < alpha) {
      q_ = q;
      g_ = g;
      lp_ = lp;
    }
    return alpha;
  }

  void find_reasonable_step() {
    auto accept_at = [&](double eps) {
      Vec<double> p = draw_momentum();
      const double h0 = -lp_ + kinetic(p);
      Vec<double> q = q_, g = g_;
      const double lp = leapfrog(q, p, g, 1, eps);
      if (lp == kNegInf) return 0.0;
      const double a = std::exp(h0 - (-lp + kinetic(p)));
      return std::isfinite(a) ? a : 0.0;
    };
    double a = accept_at(eps_);
    const int dir = a > 0.8 ? 1 : -1;
    for (int k = 0; k < 100; ++k) {
      if (dir == 1 && !(a > 0.8)) break;
      if (dir == -1 && !(a < 0.8)) break;
      eps_ = dir == 1 ? 2.0 * eps_ : 0.5 * eps_;
      if (eps_ > 1e7 || eps_ < 1e-12) break;
      a = accept_at(eps_);
    }
    if (dir == 1) eps_ *= 0.5;  // last doubling overshot
  }

  void restart_dual_averaging() {
    mu_ = std::log(10.0 * eps_);
    h_bar_ = 0.0;
    log_eps_bar_ = 0.0;
    da_count_ = 0;
  }

  void adapt_step(double alpha) {
    constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;
    ++da_count_;
    const double m = da_count_;
    const double eta = 1.0 / (m + t0);
    h_bar_ = (1.0 - eta) * h_bar_ + eta * (cfg_.accept_target() - alpha);
    const double log_eps = mu_ - std::sqrt(m) / gamma * h_bar_;
    const double w = std::pow(m, -kappa);
    log_eps_bar_ = w * log_eps + (1.0 - w) * log_eps_bar_;
    eps_ = std::exp(log_eps);
  }

  const Target& t_;
  const SamplerConfig& cfg_;
  CounterRng rng_;
  std::normal_distribution<double> normal_;
  int dim_;
  Vec<double> inv_m_;
  Vec<double> q_, g_;
  double lp_ = 0.0;
  double eps_ = 1.0;
  double mu_ = 0.0, h_bar_ = 0.0, log_eps_bar_ = 0.0;
  int da_count_ = 0;
};

}  // namespace

PosteriorDraws run_sampler(const Target& target, const SamplerConfig& cfg) {
  cfg.validate();
  if (target.dim < 1 || !target.log_density) {
    fail(ErrorCode::InvalidArgument, "target needs a dimension and a log density");
  }
  if (cfg.algorithm == Algorithm::Hmc && !target.log_density_gradient) {
    fail(ErrorCode::InvalidArgument, "HMC needs a gradient");
  }
  std::vector<ChainResult> results(static_cast<size_t>(cfg.chains));
  parallel_for(cfg.chains, [&](int c) {
    CounterRng rng(cfg.seed, 0x6d636d63ULL, static_cast<std::uint64_t>(c));
    results[static_cast<size_t>(c)] = cfg.algorithm == Algorithm::Hmc
                                          ? Hmc(target, cfg, rng).run()
                                          : run_metropolis(target, cfg, rng);
  });

  PosteriorDraws d;
  d.param_names = target.param_names;
  if (d.param_names.empty()) {
    for (int i = 0; i < target.dim; ++i) d.param_names.push_back("q[" + std::to_string(i) + "]");
  }
  if (target.generated) d.generated_names = target.generated_names;
  for (auto& r : results) {
    if (r.stats.acceptance < 1e-3) {
      fail(ErrorCode::AllRejected, "post-warmup acceptance below 1e-3 in at least one chain");
    }
    d.params.push_back(std::move(r.params));
    d.generated.push_back(std::move(r.generated));
    d.loglik.push_back(std::move(r.loglik));
    d.stats.push_back(r.stats);
  }
  return d;
}

namespace {

double mean_of(const Vec<double>& x) { return x.mean(); }

double var_of(const Vec<double>& x) {
  const double m = x.mean();
  return (x.array() - m).square().sum() / static_cast<double>(x.size() - 1);
}

// Biased autocovariance at all lags via zero-padded FFT.
Vec<double> autocovariance(const Vec<double>& x) {
  const Index n = x.size();
  Index len = 1;
  while (len < 2 * n) len *= 2;
  std::vector<double> buf(static_cast<size_t>(len), 0.0);
  const double m = x.mean();
  for (Index i = 0; i < n; ++i) buf[static_cast<size_t>(i)] = x[i] - m;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, buf);
  for (auto& f : freq) f = std::norm(f);
  std::vector<double> back;
  fft.inv(back, freq);
  Vec<double> ac(n);
  for (Index i = 0; i < n; ++i) ac[i] = back[static_cast<size_t>(i)] / static_cast<double>(n);
  return ac;
}

}  // namespace

double rhat(const std::vector<Vec<double>>& chains) {
  if (chains.empty()) fail(ErrorCode::TooFewChains, "R-hat needs at least one chain");
  Index n = chains[0].size();
  for (const auto& c : chains) n = std::min(n, c.size());
  const Index half = n / 2;
  if (half < 2) fail(ErrorCode::TooFewDraws, "R-hat needs at least 4 draws per chain");
  std::vector<Vec<double>> split;
  for (const auto& c : chains) {
    split.emplace_back(c.head(half));
    split.emplace_back(c.segment(n - half, half));
  }
  const double m = static_cast<double>(split.size());
  const double len = static_cast<double>(half);
  Vec<double> means(split.size()), vars(split.size());
  for (size_t j = 0; j < split.size(); ++j) {
    means[static_cast<Index>(j)] = mean_of(split[j]);
    vars[static_cast<Index>(j)] = var_of(split[j]);
  }
  const double W = vars.mean();
  const double B = len * (means.array() - means.mean()).square().sum() / (m - 1.0);
  if (!(W > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double var_plus = (len - 1.0) / len * W + B / len;
  return std::sqrt(var_plus / W);
}

double rhat(const PosteriorDraws& d, int param) { return rhat(d.param_chains(param)); }

double ess(const std::vector<Vec<double>>& chains) {
  if (chains.empty()) fail(ErrorCode::TooFewChains, "ESS needs at least one chain");
  Index n = chains[0].size();
  for (const auto& c : chains) n = std::min(n, c.size());
  const Index m = static_cast<Index>(chains.size());
  if (n * m < 100 || n < 4) fail(ErrorCode::TooFewDraws, "ESS needs at least 100 draws");
  const double nn = static_cast<double>(n);

  std::vector<Vec<double>> acov;
  Vec<double> means(m), vars(m);
  for (Index j = 0; j < m; ++j) {
    Vec<double> c = chains[static_cast<size_t>(j)].head(n);
    acov.push_back(autocovariance(c));
    means[j] = c.mean();
    vars[j] = acov.back()[0] * nn / (nn - 1.0);
  }
  const double W = vars.mean();
  const double B = m > 1 ? nn * (means.array() - means.mean()).square().sum() / double(m - 1) : 0.0;
  const double var_plus = (nn - 1.0) / nn * W + (m > 1 ? B / nn : 0.0);
  if (!(W > 0.0) || !(var_plus > 0.0)) return std::numeric_limits<double>::quiet_NaN();

  auto rho = [&](Index t) {
    double s = 0.0;
    for (const auto& a : acov) s += a[t];
    return 1.0 - (W - s / double(m)) / var_plus;
  };
  // Geyer initial positive and monotone sequence over lag pairs
  double tau_sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Index t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev_pair);
    tau_sum += pair;
    prev_pair = pair;
  }
  const double tau = -1.0 + 2.0 * tau_sum;
  return nn * double(m) / tau;
}

double ess(const PosteriorDraws& d, int param) { return ess(d.param_chains(param)); }

double quantile(Vec<double> x, double prob) {
  if (x.size() == 0) fail(ErrorCode::EmptyOrDegenerate, "quantile of an empty sample");
  std::sort(x.data(), x.data() + x.size());
  const double h = (static_cast<double>(x.size()) - 1.0) * prob;
  const Index lo = static_cast<Index>(std::floor(h));
  if (lo + 1 >= x.size()) return x[x.size() - 1];
  return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
}

QuantitySummary summarize_quantity(const std::string& name, const std::vector<Vec<double>>& chains) {
  QuantitySummary s;
  s.name = name;
  Index total = 0;
  for (const auto& c : chains) total += c.size();
  if (total == 0) fail(ErrorCode::EmptyOrDegenerate, "no draws to summarize");
  Vec<double> pooled(total);
  Index k = 0;
  for (const auto& c : chains) {
    pooled.segment(k, c.size()) = c;
    k += c.size();
  }
  s.mean = pooled.mean();
  s.sd = total > 1 ? std::sqrt(var_of(pooled)) : 0.0;
  if (pooled.maxCoeff() == pooled.minCoeff()) {
    s.mean = pooled[0];
    s.sd = 0.0;
  }
  std::sort(pooled.data(), pooled.data() + total);
  s.q025 = quantile(pooled, 0.025);
  s.q50 = quantile(pooled, 0.5);
  s.q975 = quantile(pooled, 0.975);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    s.rhat = rhat(chains);
  } catch (const Error&) {
    s.rhat = nan;
  }
  try {
    s.ess = ess(chains);
  } catch (const Error&) {
    s.ess = nan;
  }
  return s;
}

PosteriorSummary summarize(const PosteriorDraws& d) {
  if (d.chains() == 0 || d.draws_per_chain() == 0) {
    fail(ErrorCode::EmptyOrDegenerate, "no draws to summarize");
  }
  PosteriorSummary out;
  out.max_rhat = 0.0;
  out.min_ess = std::numeric_limits<double>::infinity();
  bool all_finite = true;
  for (size_t j = 0; j < d.param_names.size(); ++j) {
    out.params.push_back(summarize_quantity(d.param_names[j], d.param_chains(static_cast<int>(j))));
    const auto& s = out.params.back();
    if (std::isfinite(s.rhat)) {
      out.max_rhat = std::max(out.max_rhat, s.rhat);
    } else {
      all_finite = false;
    }
    if (std::isfinite(s.ess)) out.min_ess = std::min(out.min_ess, s.ess);
  }
  for (size_t j = 0; j < d.generated_names.size(); ++j) {
    out.generated.push_back(
        summarize_quantity(d.generated_names[j], d.generated_chains(static_cast<int>(j))));
  }
  for (const auto& st : d.stats) out.divergences += st.divergences;
  out.converged = all_finite && out.max_rhat < kRhatGate;
  if (!std::isfinite(out.min_ess)) out.min_ess = std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace ineq
