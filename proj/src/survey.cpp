#include "ineq/survey.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace ineq {

std::vector<std::string> SurveySample::domains() const {
  std::set<std::string> ids;
  for (const auto& u : units) ids.insert(u.domain_id);
  return {ids.begin(), ids.end()};
}

void SurveySample::validate() const {
  for (size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    if (u.domain_id.empty() || u.stratum_id.empty() || u.psu_id.empty()) {
      fail(ErrorCode::InvalidArgument, "unit " + std::to_string(i) + " has an empty identifier");
    }
    if (!std::isfinite(u.weight) || u.weight < 0.0) {
      fail(ErrorCode::NonFiniteValue, "unit " + u.unit_id + " has an invalid weight");
    }
    if (!std::isfinite(u.income) || u.income < 0.0) {
      fail(ErrorCode::NonFiniteValue, "unit " + u.unit_id + " has an invalid income");
    }
  }
}

namespace {

std::string group_key(const SurveyUnit& u, bool take_all) {
  return take_all ? "h:" + u.household_id : "p:" + u.psu_id;
}

void sort_by_income(Vec<double>& z, Vec<double>& w, std::vector<Index>* perm = nullptr) {
  const Index n = z.size();
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return z[a] < z[b]; });
  Vec<double> zs(n), ws(n);
  for (Index i = 0; i < n; ++i) {
    zs[i] = z[order[i]];
    ws[i] = w[order[i]];
  }
  z = std::move(zs);
  w = std::move(ws);
  if (perm) *perm = std::move(order);
}

void check_weights(const Vec<double>& z, const Vec<double>& w) {
  if (z.size() != w.size()) fail(ErrorCode::LengthMismatch, "incomes and weights differ in length");
  if (z.size() == 0) fail(ErrorCode::EmptyDomain, "no units");
  for (Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) fail(ErrorCode::InvalidArgument, "invalid weight");
  }
  if (!(w.sum() > 0.0)) fail(ErrorCode::EmptyDomain, "all weights are zero");
}

// Indices of the covariance matrix built by the jackknife.
enum Stat { kMu = 0, kGamma, kVarpi, kVarrho, kIota, kStats };

Eigen::Matrix<double, kStats, 1> stat_vector(const WeightedStats& s) {
  Eigen::Matrix<double, kStats, 1> t;
  t << s.mu, s.gamma, s.varpi, s.varrho, s.iota;
  return t;
}

}  // namespace

DomainData extract_domain(const SurveySample& s, const std::string& domain) {
  DomainData d;
  d.domain = domain;
  std::vector<const SurveyUnit*> rows;
  // groups per stratum over the whole sample
  std::map<std::string, std::set<std::string>> sample_groups;
  for (const auto& u : s.units) {
    const bool take_all = s.take_all_strata.count(u.stratum_id) > 0;
    sample_groups[u.stratum_id].insert(group_key(u, take_all));
    if (u.domain_id == domain) rows.push_back(&u);
  }
  if (rows.empty()) fail(ErrorCode::EmptyDomain, "domain '" + domain + "' has no units");

  const Index n = static_cast<Index>(rows.size());
  Vec<double> z(n), w(n);
  for (Index i = 0; i < n; ++i) {
    z[i] = rows[i]->income;
    w[i] = rows[i]->weight;
  }
  std::vector<Index> perm;
  sort_by_income(z, w, &perm);
  d.z = std::move(z);
  d.w = std::move(w);
  d.rows.resize(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    d.rows[static_cast<size_t>(i)] = static_cast<Index>(rows[perm[i]] - s.units.data());
  }

  std::map<std::string, size_t> stratum_pos;
  std::vector<std::map<std::string, size_t>> group_pos;
  for (Index i = 0; i < n; ++i) {
    const SurveyUnit& u = *rows[perm[i]];
    auto [it, inserted] = stratum_pos.try_emplace(u.stratum_id, d.strata.size());
    if (inserted) {
      DomainData::Stratum st;
      st.id = u.stratum_id;
      st.groups_in_sample = static_cast<Index>(sample_groups[u.stratum_id].size());
      d.strata.push_back(std::move(st));
      group_pos.emplace_back();
    }
    auto& st = d.strata[it->second];
    st.members.push_back(i);
    const bool take_all = s.take_all_strata.count(u.stratum_id) > 0;
    auto& gp = group_pos[it->second];
    auto [git, ginserted] = gp.try_emplace(group_key(u, take_all), st.groups.size());
    if (ginserted) st.groups.emplace_back();
    st.groups[git->second].members.push_back(i);
  }
  return d;
}

WeightedStats weighted_stats(const Vec<double>& z, const Vec<double>& w, double epsilon) {
  WeightedStats st;
  const Index n = z.size();
  double n_hat = 0.0, tz = 0.0;
  bool positive = true;
  for (Index i = 0; i < n; ++i) {
    n_hat += w[i];
    tz += w[i] * z[i];
    if (w[i] != 0.0) ++st.n_tilde;
    if (z[i] <= 0.0 && w[i] != 0.0) positive = false;
  }
  st.n_hat = n_hat;
  st.mu = tz / n_hat;

  // Tied incomes share N_i = W_before + (W_tie + w_i)/2, the weighted
  // analogue of average ranks. The group sum only needs W_tie.
  double gamma = 0.0, before = 0.0;
  Index i = 0;
  while (i < n) {
    Index j = i;
    double tie_w = w[i];
    while (j + 1 < n && z[j + 1] == z[i]) {
      ++j;
      tie_w += w[j];
    }
    gamma += z[i] * tie_w * (before + tie_w / 2.0);
    before += tie_w;
    i = j + 1;
  }
  st.gamma = gamma / (n_hat * n_hat);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (positive) {
    double varpi = 0.0, iota = 0.0, varrho = 0.0;
    const bool with_rho = std::isfinite(epsilon);
    for (Index k = 0; k < n; ++k) {
      if (w[k] == 0.0) continue;
      const double lz = std::log(z[k]);
      varpi += w[k] * z[k] * lz;
      iota += w[k] * lz;
      if (with_rho) varrho += w[k] * std::pow(z[k], 1.0 - epsilon);
    }
    st.varpi = varpi / n_hat;
    st.iota = iota / n_hat;
    st.varrho = with_rho ? varrho / n_hat : nan;
  } else {
    st.varpi = st.iota = st.varrho = nan;
  }
  return st;
}

HtAggregates ht_aggregates(const SurveySample& s, const std::string& domain) {
  HtAggregates a;
  double tz = 0.0;
  bool found = false;
  for (const auto& u : s.units) {
    if (u.domain_id != domain) continue;
    found = true;
    a.n_hat += u.weight;
    tz += u.weight * u.income;
    if (u.weight != 0.0) ++a.n_tilde;
  }
  if (!found || !(a.n_hat > 0.0)) {
    fail(ErrorCode::EmptyDomain, "domain '" + domain + "' has no units with positive weight");
  }
  a.mu_hat = tz / a.n_hat;
  return a;
}

double gini_weighted(const Vec<double>& z_in, const Vec<double>& w_in) {
  check_weights(z_in, w_in);
  Vec<double> z = z_in, w = w_in;
  sort_by_income(z, w);
  const WeightedStats st = weighted_stats(z, w, std::numeric_limits<double>::quiet_NaN());
  if (!(st.mu > 0.0)) fail(ErrorCode::DegenerateMean, "weighted mean income is zero");
  return 2.0 * st.gamma / st.mu - 1.0;
}

double gini_weighted(const SurveySample& s, const std::string& domain) {
  const DomainData d = extract_domain(s, domain);
  return gini_weighted(d.z, d.w);
}

double theil_weighted(const Vec<double>& z, const Vec<double>& w) {
  check_weights(z, w);
  const double n_hat = w.sum();
  const double mu = w.dot(z) / n_hat;
  double acc = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    if (w[i] == 0.0) continue;
    if (!(z[i] > 0.0)) fail(ErrorCode::NonPositiveIncome, "Theil requires positive incomes");
    const double r = z[i] / mu;
    acc += w[i] * r * std::log(r);
  }
  return acc / n_hat;
}

double relative_theil_weighted(const Vec<double>& z, const Vec<double>& w,
                               double population_size) {
  if (!(population_size >= 2.0)) fail(ErrorCode::InvalidArgument, "population size must be >= 2");
  return theil_weighted(z, w) / std::log(population_size);
}

double atkinson_weighted(const Vec<double>& z, const Vec<double>& w, double epsilon) {
  check_weights(z, w);
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    fail(ErrorCode::InvalidArgument, "epsilon must be finite and >= 0");
  }
  const double n_hat = w.sum();
  const double mu = w.dot(z) / n_hat;
  double acc = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    if (w[i] == 0.0) continue;
    if (!(z[i] > 0.0)) fail(ErrorCode::NonPositiveIncome, "Atkinson requires positive incomes");
    acc += epsilon == 1.0 ? w[i] * std::log(z[i]) : w[i] * std::pow(z[i], 1.0 - epsilon);
  }
  if (epsilon == 1.0) return 1.0 - std::exp(acc / n_hat) / mu;
  return 1.0 - std::pow(acc / n_hat, 1.0 / (1.0 - epsilon)) / mu;
}

double atkinson_weighted(const SurveySample& s, const std::string& domain, double epsilon) {
  const DomainData d = extract_domain(s, domain);
  return atkinson_weighted(d.z, d.w, epsilon);
}

double generalized_entropy_weighted(const Vec<double>& z, const Vec<double>& w, double alpha) {
  check_alpha(alpha);
  check_weights(z, w);
  const double n_hat = w.sum();
  const double mu = w.dot(z) / n_hat;
  double acc = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    if (w[i] == 0.0) continue;
    if (!(z[i] > 0.0)) fail(ErrorCode::NonPositiveIncome, "entropy requires positive incomes");
    acc += w[i] * (std::pow(z[i] / mu, alpha) - 1.0);
  }
  return acc / (n_hat * alpha * (alpha - 1.0));
}

namespace {

AdjustedEstimate flagged(double value, double weighted) {
  return {value, weighted, !(value >= 0.0 && value <= 1.0)};
}

}  // namespace

AdjustedEstimate gini_adjusted(const WeightedStats& st, const MomentEstimates& m) {
  if (st.n_tilde <= 2) {
    fail(ErrorCode::TooFewEffectiveUnits, "bias-corrected Gini needs more than 2 units");
  }
  if (!(st.mu > 0.0)) fail(ErrorCode::DegenerateMean, "weighted mean income is zero");
  const double g_w = 2.0 * st.gamma / st.mu - 1.0;
  const double nt = static_cast<double>(st.n_tilde);
  const double mu2 = st.mu * st.mu;
  const double value = nt / (nt - 2.0) *
                       (g_w - 2.0 * st.gamma / (mu2 * st.mu) * m.var_mu +
                        2.0 / mu2 * m.cov_mu_gamma);
  return flagged(value, g_w);
}

AdjustedEstimate gini_adjusted(const SurveySample& s, const std::string& domain,
                               const MomentEstimates& m) {
  const DomainData d = extract_domain(s, domain);
  return gini_adjusted(weighted_stats(d.z, d.w, std::numeric_limits<double>::quiet_NaN()), m);
}

AdjustedEstimate relative_theil_adjusted(const Vec<double>& z, const Vec<double>& w,
                                         const WeightedStats& st, const MomentEstimates& m,
                                         double population_size) {
  if (!(population_size >= 2.0)) fail(ErrorCode::InvalidArgument, "population size must be >= 2");
  const double t_w = theil_weighted(z, w);
  const double mu = st.mu;
  const double mu2 = mu * mu;
  const double t_adj =
      t_w + m.cov_mu_varpi / mu2 - (st.varpi / (mu2 * mu) + 1.0 / (2.0 * mu2)) * m.var_mu;
  const double log_n = std::log(population_size);
  return flagged(t_adj / log_n, t_w / log_n);
}

AdjustedEstimate relative_theil_adjusted(const SurveySample& s, const std::string& domain,
                                         const MomentEstimates& m, double population_size) {
  const DomainData d = extract_domain(s, domain);
  const WeightedStats st = weighted_stats(d.z, d.w, std::numeric_limits<double>::quiet_NaN());
  return relative_theil_adjusted(d.z, d.w, st, m, population_size);
}

AdjustedEstimate atkinson_adjusted(const WeightedStats& st, double epsilon,
                                   const MomentEstimates& m) {
  if (!std::isfinite(st.iota)) {
    fail(ErrorCode::NonPositiveIncome, "Atkinson requires positive incomes");
  }
  const double mu = st.mu;
  if (epsilon == 1.0) {
    const double a_w = 1.0 - std::exp(st.iota) / mu;
    const double corr = m.var_iota / 2.0 + m.var_mu / (mu * mu) - m.cov_iota_mu / mu;
    return flagged(a_w + (1.0 - a_w) * corr, a_w);
  }
  const double e1 = 1.0 - epsilon;
  const double a_w = 1.0 - std::pow(st.varrho, 1.0 / e1) / mu;
  const double corr =
      epsilon * m.var_varrho / (2.0 * e1 * e1) * std::pow(mu - mu * a_w, 2.0 * epsilon - 2.0) +
      m.var_mu / (mu * mu) -
      m.cov_varrho_mu / (std::pow(mu, 2.0 - epsilon) * e1) * std::pow(1.0 - a_w, epsilon - 1.0);
  return flagged(a_w + (1.0 - a_w) * corr, a_w);
}

AdjustedEstimate atkinson_adjusted(const SurveySample& s, const std::string& domain,
                                   double epsilon, const MomentEstimates& m) {
  const DomainData d = extract_domain(s, domain);
  for (Index i = 0; i < d.z.size(); ++i) {
    if (d.w[i] != 0.0 && !(d.z[i] > 0.0)) {
      fail(ErrorCode::NonPositiveIncome, "Atkinson requires positive incomes");
    }
  }
  return atkinson_adjusted(weighted_stats(d.z, d.w, epsilon), epsilon, m);
}

MomentEstimates influence_moments(const DomainData& d, double epsilon, LonelyPsuPolicy policy) {
  using StatVec = Eigen::Matrix<double, kStats, 1>;
  using StatMat = Eigen::Matrix<double, kStats, kStats>;
  StatMat cov = StatMat::Zero();
  const double eps = std::isfinite(epsilon) ? epsilon : 1.0;

  if (d.w.sum() <= 0.0) fail(ErrorCode::EmptyDomain, "domain '" + d.domain + "' has zero weight");
  if ((d.w.array() != 0.0).count() < 2) {
    fail(ErrorCode::TooFewEffectiveUnits, "jackknife needs at least 2 weighted units");
  }

  Vec<double> wr(d.w.size());
  for (const auto& st : d.strata) {
    const Index n_h = st.groups_in_sample;
    if (n_h < 2) {
      if (policy == LonelyPsuPolicy::Skip) continue;
      fail(ErrorCode::InsufficientPsus,
           "stratum '" + st.id + "' has fewer than 2 replicate units in the sample");
    }
    const double scale = static_cast<double>(n_h) / static_cast<double>(n_h - 1);
    std::vector<StatVec> reps;
    reps.reserve(st.groups.size() + 1);
    auto replicate = [&](const DomainData::Group* dropped) -> StatVec {
      wr = d.w;
      for (Index i : st.members) wr[i] *= scale;
      if (dropped) {
        for (Index i : dropped->members) wr[i] = 0.0;
      }
      if (!(wr.sum() > 0.0)) return StatVec::Constant(std::numeric_limits<double>::quiet_NaN());
      return stat_vector(weighted_stats(d.z, wr, eps));
    };
    for (const auto& g : st.groups) reps.push_back(replicate(&g));
    const Index empty_groups = n_h - static_cast<Index>(st.groups.size());
    StatVec rest = StatVec::Zero();
    if (empty_groups > 0) rest = replicate(nullptr);

    // A replicate that removes every weighted domain unit carries no
    // information about the domain; it is left out.
    StatVec mean = StatVec::Zero();
    double count = 0.0;
    for (const auto& r : reps) {
      if (std::isnan(r[kMu])) continue;
      mean += r;
      count += 1.0;
    }
    if (empty_groups > 0) {
      mean += static_cast<double>(empty_groups) * rest;
      count += static_cast<double>(empty_groups);
    }
    if (count < 1.0) continue;
    mean /= count;
    StatMat acc = StatMat::Zero();
    for (const auto& r : reps) {
      if (std::isnan(r[kMu])) continue;
      StatVec dv = r - mean;
      acc += dv * dv.transpose();
    }
    if (empty_groups > 0) {
      StatVec dv = rest - mean;
      acc += static_cast<double>(empty_groups) * dv * dv.transpose();
    }
    cov += (static_cast<double>(n_h) - 1.0) / static_cast<double>(n_h) * acc;
  }

  MomentEstimates m;
  m.var_mu = cov(kMu, kMu);
  m.var_gamma = cov(kGamma, kGamma);
  m.cov_mu_gamma = cov(kMu, kGamma);
  m.var_varpi = cov(kVarpi, kVarpi);
  m.cov_mu_varpi = cov(kMu, kVarpi);
  m.var_varrho = cov(kVarrho, kVarrho);
  m.cov_varrho_mu = cov(kVarrho, kMu);
  m.var_iota = cov(kIota, kIota);
  m.cov_iota_mu = cov(kIota, kMu);
  return m;
}

MomentEstimates influence_moments(const SurveySample& s, const std::string& domain,
                                  double epsilon) {
  return influence_moments(extract_domain(s, domain), epsilon, LonelyPsuPolicy::Fail);
}

AdjustedEstimate direct_estimate(const DomainData& d, const IndexSpec& spec,
                                 LonelyPsuPolicy policy) {
  spec.validate();
  const double eps = spec.epsilon.value_or(std::numeric_limits<double>::quiet_NaN());
  if (spec.needs_positive_income()) {
    for (Index i = 0; i < d.z.size(); ++i) {
      if (d.w[i] != 0.0 && !(d.z[i] > 0.0)) {
        fail(ErrorCode::NonPositiveIncome,
             "index " + spec.label() + " requires positive incomes in domain '" + d.domain + "'");
      }
    }
  }
  const WeightedStats st = weighted_stats(d.z, d.w, eps);
  if (!(st.mu > 0.0)) fail(ErrorCode::DegenerateMean, "weighted mean income is zero");
  const double pop = spec.population_size.value_or(std::max(2.0, std::round(st.n_hat)));

  switch (spec.kind) {
    case IndexKind::Gini:
      return gini_adjusted(st, influence_moments(d, eps, policy));
    case IndexKind::RelativeTheil:
      return relative_theil_adjusted(d.z, d.w, st, influence_moments(d, eps, policy), pop);
    case IndexKind::Atkinson:
      return atkinson_adjusted(st, *spec.epsilon, influence_moments(d, eps, policy));
    case IndexKind::GeneralizedEntropy: {
      const double ge = generalized_entropy_weighted(d.z, d.w, *spec.alpha);
      return {ge, ge, !(ge >= 0.0)};
    }
    case IndexKind::RelativeEntropy: {
      const double re =
          generalized_entropy_weighted(d.z, d.w, *spec.alpha) / entropy_max_support(*spec.alpha, pop);
      return {re, re, !(re >= 0.0 && re <= 1.0)};
    }
  }
  fail(ErrorCode::UnsupportedIndex, "unknown index kind");
}

}  // namespace ineq
