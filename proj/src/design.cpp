#include "ineq/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ineq/parallel.hpp"
#include "ineq/rng.hpp"

namespace ineq {

namespace {

std::uint64_t bounded(CounterRng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

// k distinct positions out of n, in selection order.
std::vector<Index> choose_without_replacement(CounterRng& rng, Index n, Index k) {
  std::vector<Index> pool(static_cast<size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    Index j = i + static_cast<Index>(bounded(rng, static_cast<std::uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(static_cast<size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

void Population::validate() const {
  if (units.empty()) fail(ErrorCode::InvalidArgument, "population is empty");
  std::map<std::string, std::string> psu_stratum;
  for (const auto& u : units) {
    if (!std::isfinite(u.income) || u.income < 0.0) {
      fail(ErrorCode::NonFiniteValue, "population unit " + u.unit_id + " has an invalid income");
    }
    if (u.domain_id.empty() || u.stratum_id.empty() || u.psu_id.empty() ||
        u.household_id.empty()) {
      fail(ErrorCode::InvalidArgument, "population unit " + u.unit_id + " has an empty identifier");
    }
    auto [it, inserted] = psu_stratum.try_emplace(u.psu_id, u.stratum_id);
    if (!inserted && it->second != u.stratum_id) {
      fail(ErrorCode::InvalidArgument, "PSU " + u.psu_id + " belongs to more than one stratum");
    }
  }
}

std::vector<std::string> Population::domains() const {
  std::set<std::string> ids;
  for (const auto& u : units) ids.insert(u.domain_id);
  return {ids.begin(), ids.end()};
}

Vec<double> Population::domain_incomes(const std::string& domain) const {
  std::vector<double> z;
  for (const auto& u : units) {
    if (u.domain_id == domain) z.push_back(u.income);
  }
  if (z.empty()) fail(ErrorCode::EmptyDomain, "domain '" + domain + "' not in population");
  return Eigen::Map<Vec<double>>(z.data(), static_cast<Index>(z.size()));
}

std::map<std::string, double> Population::domain_sizes() const {
  std::map<std::string, double> n;
  for (const auto& u : units) n[u.domain_id] += 1.0;
  return n;
}

PopulationFrame build_frame(const Population& pop) {
  pop.validate();
  PopulationFrame f;
  f.population = &pop;
  std::map<std::string, size_t> s_pos;
  std::vector<std::map<std::string, size_t>> p_pos;
  std::vector<std::vector<std::map<std::string, size_t>>> h_pos;
  // ordered maps give a deterministic frame layout
  std::map<std::string, std::map<std::string, std::map<std::string, std::vector<Index>>>> tree;
  for (size_t i = 0; i < pop.units.size(); ++i) {
    const auto& u = pop.units[i];
    tree[u.stratum_id][u.psu_id][u.household_id].push_back(static_cast<Index>(i));
  }
  for (auto& [sid, psus] : tree) {
    PopulationFrame::Stratum st;
    st.id = sid;
    st.take_all = pop.take_all_strata.count(sid) > 0;
    for (auto& [pid, hhs] : psus) {
      PopulationFrame::Psu psu;
      for (auto& [hid, rows] : hhs) psu.households.push_back(std::move(rows));
      st.psus.push_back(std::move(psu));
    }
    f.strata.push_back(std::move(st));
  }
  return f;
}

SurveySample draw_sample(const PopulationFrame& frame, const DesignSpec& d) {
  if (!(d.sampling_rate > 0.0 && d.sampling_rate <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "sampling rate must lie in (0, 1]");
  }
  if (d.psus_per_stratum < 1) fail(ErrorCode::InvalidArgument, "psus_per_stratum must be >= 1");
  const Population& pop = *frame.population;
  SurveySample s;
  s.take_all_strata = pop.take_all_strata;
  for (size_t h = 0; h < frame.strata.size(); ++h) {
    const auto& st = frame.strata[h];
    CounterRng rng(d.seed, h);
    const Index m_total = static_cast<Index>(st.psus.size());
    std::vector<Index> chosen;
    double pi1 = 1.0;
    if (st.take_all) {
      chosen.resize(static_cast<size_t>(m_total));
      std::iota(chosen.begin(), chosen.end(), Index{0});
    } else {
      if (m_total < d.psus_per_stratum) {
        fail(ErrorCode::InfeasibleDesign, "stratum '" + st.id + "' has " +
                                              std::to_string(m_total) + " PSUs, " +
                                              std::to_string(d.psus_per_stratum) + " requested");
      }
      chosen = choose_without_replacement(rng, m_total, d.psus_per_stratum);
      pi1 = static_cast<double>(d.psus_per_stratum) / static_cast<double>(m_total);
    }
    const double pi2_target = std::min(1.0, d.sampling_rate / pi1);
    for (Index p : chosen) {
      const auto& psu = st.psus[static_cast<size_t>(p)];
      const Index n_hh = static_cast<Index>(psu.households.size());
      Index k = static_cast<Index>(std::lround(pi2_target * static_cast<double>(n_hh)));
      k = std::clamp<Index>(k, 1, n_hh);
      const double weight =
          static_cast<double>(n_hh) / (pi1 * static_cast<double>(k));
      for (Index hh : choose_without_replacement(rng, n_hh, k)) {
        for (Index row : psu.households[static_cast<size_t>(hh)]) {
          const auto& u = pop.units[static_cast<size_t>(row)];
          s.units.push_back({u.unit_id, u.household_id, u.domain_id, u.stratum_id, u.psu_id,
                             weight, u.income});
        }
      }
    }
  }
  return s;
}

SurveySample draw_sample(const Population& pop, const DesignSpec& d) {
  return draw_sample(build_frame(pop), d);
}

namespace {

// Replicate units of the sample: PSUs, or households in take-all strata.
struct ReplicateStructure {
  std::vector<Index> unit_group;                 // per sample unit
  std::vector<std::vector<Index>> stratum_groups;  // group ids per stratum
  std::vector<std::string> stratum_ids;
};

ReplicateStructure replicate_structure(const SurveySample& s) {
  ReplicateStructure r;
  std::map<std::string, size_t> s_pos;
  std::map<std::pair<std::string, std::string>, Index> g_pos;
  // strata in sorted order for a stable group numbering
  std::set<std::string> strata;
  for (const auto& u : s.units) strata.insert(u.stratum_id);
  for (const auto& id : strata) {
    s_pos[id] = r.stratum_ids.size();
    r.stratum_ids.push_back(id);
    r.stratum_groups.emplace_back();
  }
  r.unit_group.resize(s.units.size());
  Index next = 0;
  for (size_t i = 0; i < s.units.size(); ++i) {
    const auto& u = s.units[i];
    const bool take_all = s.take_all_strata.count(u.stratum_id) > 0;
    auto key = std::make_pair(u.stratum_id, take_all ? "h:" + u.household_id : "p:" + u.psu_id);
    auto [it, inserted] = g_pos.try_emplace(key, next);
    if (inserted) {
      r.stratum_groups[s_pos[u.stratum_id]].push_back(next);
      ++next;
    }
    r.unit_group[i] = it->second;
  }
  return r;
}

Vec<double> group_multipliers(const ReplicateStructure& r, std::uint64_t seed, int replicate) {
  Index n_groups = 0;
  for (const auto& g : r.stratum_groups) n_groups += static_cast<Index>(g.size());
  Vec<double> mult = Vec<double>::Zero(n_groups);
  for (size_t h = 0; h < r.stratum_groups.size(); ++h) {
    const auto& groups = r.stratum_groups[h];
    const Index n_h = static_cast<Index>(groups.size());
    if (n_h < 2) {
      fail(ErrorCode::InsufficientPsus,
           "stratum '" + r.stratum_ids[h] + "' has fewer than 2 replicate units");
    }
    CounterRng rng(seed, static_cast<std::uint64_t>(replicate), h);
    const Index m_h = n_h - 1;
    const double scale = static_cast<double>(n_h) / static_cast<double>(m_h);
    for (Index k = 0; k < m_h; ++k) {
      mult[groups[static_cast<size_t>(bounded(rng, static_cast<std::uint64_t>(n_h)))]] += scale;
    }
  }
  return mult;
}

}  // namespace

Vec<double> rao_wu_multipliers(const SurveySample& s, std::uint64_t seed, int replicate) {
  const ReplicateStructure r = replicate_structure(s);
  const Vec<double> g = group_multipliers(r, seed, replicate);
  Vec<double> out(static_cast<Index>(s.units.size()));
  for (size_t i = 0; i < s.units.size(); ++i) out[static_cast<Index>(i)] = g[r.unit_group[i]];
  return out;
}

BootstrapResult bootstrap_variance(const SurveySample& s, const IndexSpec& spec, int replicates,
                                   std::uint64_t seed, const DomainSizes& population_sizes) {
  spec.validate();
  if (replicates < 2) fail(ErrorCode::InvalidArgument, "bootstrap needs at least 2 replicates");
  s.validate();
  const ReplicateStructure rs = replicate_structure(s);
  for (size_t h = 0; h < rs.stratum_groups.size(); ++h) {
    if (rs.stratum_groups[h].size() < 2) {
      fail(ErrorCode::InsufficientPsus,
           "stratum '" + rs.stratum_ids[h] + "' has fewer than 2 replicate units");
    }
  }

  BootstrapResult out;
  out.domains = s.domains();
  out.replicates = replicates;
  const Index n_dom = static_cast<Index>(out.domains.size());
  std::vector<DomainData> data;
  std::vector<IndexSpec> specs;
  data.reserve(out.domains.size());
  out.estimate.resize(n_dom);
  out.n_tilde.resize(n_dom);
  out.n_hat.resize(n_dom);
  for (Index d = 0; d < n_dom; ++d) {
    data.push_back(extract_domain(s, out.domains[static_cast<size_t>(d)]));
    IndexSpec sp = spec;
    if (auto it = population_sizes.find(out.domains[static_cast<size_t>(d)]);
        it != population_sizes.end()) {
      sp.population_size = it->second;
    } else if (!sp.population_size) {
      sp.population_size = std::max(2.0, std::round(data.back().w.sum()));
    }
    specs.push_back(sp);
    out.estimate[d] = direct_estimate(data.back(), sp).value;
    out.n_tilde[d] = static_cast<double>((data.back().w.array() != 0.0).count());
    out.n_hat[d] = data.back().w.sum();
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  Matrix<double> reps(replicates, n_dom);
  parallel_for(replicates, [&](int b) {
    const Vec<double> g = group_multipliers(rs, seed, b);
    for (Index d = 0; d < n_dom; ++d) {
      DomainData rep = data[static_cast<size_t>(d)];
      for (Index i = 0; i < rep.w.size(); ++i) {
        rep.w[i] *= g[rs.unit_group[static_cast<size_t>(rep.rows[static_cast<size_t>(i)])]];
      }
      double v = nan;
      if ((rep.w.array() != 0.0).count() > 2) {
        try {
          v = direct_estimate(rep, specs[static_cast<size_t>(d)], LonelyPsuPolicy::Skip).value;
        } catch (const Error&) {
          v = nan;
        }
      }
      reps(b, d) = std::isfinite(v) ? v : nan;
    }
  });

  out.variance.resize(n_dom);
  out.failed.assign(static_cast<size_t>(n_dom), 0);
  for (Index d = 0; d < n_dom; ++d) {
    double sum = 0.0, count = 0.0;
    for (int b = 0; b < replicates; ++b) {
      if (std::isnan(reps(b, d))) continue;
      sum += reps(b, d);
      count += 1.0;
    }
    out.failed[static_cast<size_t>(d)] = replicates - static_cast<int>(count);
    if (count < 2.0) {
      out.variance[d] = nan;
      continue;
    }
    const double mean = sum / count;
    double ss = 0.0;
    for (int b = 0; b < replicates; ++b) {
      if (!std::isnan(reps(b, d))) ss += (reps(b, d) - mean) * (reps(b, d) - mean);
    }
    out.variance[d] = ss / (count - 1.0);
  }
  return out;
}

}  // namespace ineq
