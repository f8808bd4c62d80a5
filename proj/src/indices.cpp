#include "ineq/indices.hpp"

#include <sstream>

namespace ineq {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyOrDegenerate: return "EmptyOrDegenerate";
    case ErrorCode::NonPositiveIncome: return "NonPositiveIncome";
    case ErrorCode::AlphaDegenerate: return "AlphaDegenerate";
    case ErrorCode::UnsupportedIndex: return "UnsupportedIndex";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::DegenerateMean: return "DegenerateMean";
    case ErrorCode::TooFewEffectiveUnits: return "TooFewEffectiveUnits";
    case ErrorCode::InsufficientPsus: return "InsufficientPsus";
    case ErrorCode::InfeasibleDesign: return "InfeasibleDesign";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::SingularFit: return "SingularFit";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::NonPositivePhi: return "NonPositivePhi";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::AllRejected: return "AllRejected";
    case ErrorCode::NonFiniteInit: return "NonFiniteInit";
    case ErrorCode::TooFewChains: return "TooFewChains";
    case ErrorCode::TooFewDraws: return "TooFewDraws";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::DegenerateDirect: return "DegenerateDirect";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_numeric_failure(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NoRoot:
    case ErrorCode::NonPositivePhi:
    case ErrorCode::NonFinite:
    case ErrorCode::AllRejected:
    case ErrorCode::NonFiniteInit:
    case ErrorCode::SingularFit:
    case ErrorCode::DegenerateWeights:
    case ErrorCode::DegenerateMean:
    case ErrorCode::TooFewEffectiveUnits:
      return true;
    default:
      return false;
  }
}

void IndexSpec::validate() const {
  const bool atk = kind == IndexKind::Atkinson;
  const bool ent = kind == IndexKind::GeneralizedEntropy || kind == IndexKind::RelativeEntropy;
  if (atk != epsilon.has_value()) {
    fail(ErrorCode::InvalidArgument, "epsilon must be given for Atkinson and only for Atkinson");
  }
  if (ent != alpha.has_value()) {
    fail(ErrorCode::InvalidArgument,
         "alpha must be given for the entropy family and only for it");
  }
  if (atk && (!std::isfinite(*epsilon) || *epsilon < 0.0)) {
    fail(ErrorCode::InvalidArgument, "epsilon must be finite and >= 0");
  }
  if (ent) check_alpha(*alpha);
  if (population_size && !(*population_size >= 2.0)) {
    fail(ErrorCode::InvalidArgument, "population size must be >= 2");
  }
}

std::string index_kind_name(IndexKind kind) {
  switch (kind) {
    case IndexKind::Gini: return "gini";
    case IndexKind::RelativeTheil: return "theil";
    case IndexKind::Atkinson: return "atkinson";
    case IndexKind::GeneralizedEntropy: return "ge";
    case IndexKind::RelativeEntropy: return "entropy";
  }
  return "unknown";
}

std::string IndexSpec::label() const {
  std::ostringstream os;
  os << index_kind_name(kind);
  if (epsilon) os << '(' << *epsilon << ')';
  if (alpha) os << '(' << *alpha << ')';
  return os.str();
}

IndexSpec parse_index_spec(const std::string& name, std::optional<double> epsilon,
                           std::optional<double> alpha) {
  IndexSpec spec;
  if (name == "gini") {
    spec = IndexSpec::gini();
  } else if (name == "theil" || name == "relative_theil") {
    spec = IndexSpec::relative_theil();
  } else if (name == "atkinson") {
    spec = IndexSpec::atkinson(epsilon.value_or(1.0));
  } else if (name == "ge" || name == "generalized_entropy") {
    if (!alpha) fail(ErrorCode::InvalidArgument, "index ge requires --alpha");
    spec = IndexSpec::generalized_entropy(*alpha);
  } else if (name == "entropy" || name == "relative_entropy") {
    if (!alpha) fail(ErrorCode::InvalidArgument, "index entropy requires --alpha");
    spec = IndexSpec::relative_entropy(*alpha);
  } else {
    fail(ErrorCode::InvalidArgument, "unknown index '" + name + "'");
  }
  spec.validate();
  return spec;
}

double lognormal_theta(const LogNormalParams& p, const IndexSpec& spec) {
  spec.validate();
  if (!(p.phi2 >= 0.0) || !std::isfinite(p.phi2)) {
    fail(ErrorCode::InvalidArgument, "phi2 must be finite and >= 0");
  }
  switch (spec.kind) {
    case IndexKind::Atkinson:
      return -std::expm1(-*spec.epsilon * p.phi2 / 2.0);
    case IndexKind::RelativeTheil:
      if (!(p.n >= 2.0)) fail(ErrorCode::InvalidArgument, "n must be >= 2");
      return p.phi2 / (2.0 * std::log(p.n));
    case IndexKind::RelativeEntropy: {
      if (!(p.n >= 2.0)) fail(ErrorCode::InvalidArgument, "n must be >= 2");
      const double a = *spec.alpha;
      return std::expm1(p.phi2 * a * (a - 1.0) / 2.0) / std::expm1((a - 1.0) * std::log(p.n));
    }
    default:
      fail(ErrorCode::UnsupportedIndex,
           "no log-normal closed form for index " + spec.label());
  }
}

}  // namespace ineq
