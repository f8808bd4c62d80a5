#ifndef INEQ_DESIGN_HPP
#define INEQ_DESIGN_HPP

// Finite populations, stratified two-stage sample selection and the
// rescaled bootstrap for design-based variances.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ineq/common.hpp"
#include "ineq/indices.hpp"
#include "ineq/survey.hpp"

namespace ineq {

struct PopulationUnit {
  std::string unit_id;
  std::string household_id;
  std::string domain_id;
  std::string stratum_id;
  std::string psu_id;
  double income = 0.0;

  bool operator==(const PopulationUnit&) const = default;
};

struct Population {
  std::vector<PopulationUnit> units;
  std::set<std::string> take_all_strata;

  void validate() const;
  std::vector<std::string> domains() const;
  Vec<double> domain_incomes(const std::string& domain) const;
  std::map<std::string, double> domain_sizes() const;
};

struct DesignSpec {
  double sampling_rate = 0.05;  // fraction of households, in (0, 1]
  int psus_per_stratum = 2;     // first-stage draws in non-take-all strata
  std::uint64_t seed = 0;
};

// Stratum -> PSU -> household -> unit rows, built once per population.
struct PopulationFrame {
  struct Psu {
    std::vector<std::vector<Index>> households;
  };
  struct Stratum {
    std::string id;
    bool take_all = false;
    std::vector<Psu> psus;
  };
  const Population* population = nullptr;
  std::vector<Stratum> strata;
};

PopulationFrame build_frame(const Population& pop);

SurveySample draw_sample(const PopulationFrame& frame, const DesignSpec& d);
SurveySample draw_sample(const Population& pop, const DesignSpec& d);

struct BootstrapResult {
  std::vector<std::string> domains;
  Vec<double> estimate;   // full-sample bias-corrected estimate
  Vec<double> variance;   // replicate variance
  Vec<double> n_tilde;
  Vec<double> n_hat;
  std::vector<int> failed;  // replicates excluded per domain
  int replicates = 0;
};

using DomainSizes = std::map<std::string, double>;

// Rao-Wu rescaled bootstrap: m_h = n_h - 1 replicate units drawn with
// replacement per stratum, weights rescaled by n_h/(n_h-1) times the
// multiplicity. Relative indices use population_sizes[domain] when given.
BootstrapResult bootstrap_variance(const SurveySample& s, const IndexSpec& spec, int replicates,
                                   std::uint64_t seed, const DomainSizes& population_sizes = {});

// Replicate weight multipliers for one bootstrap draw, aligned with s.units.
Vec<double> rao_wu_multipliers(const SurveySample& s, std::uint64_t seed, int replicate);

}  // namespace ineq

#endif
