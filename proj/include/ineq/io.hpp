#ifndef INEQ_IO_HPP
#define INEQ_IO_HPP

// CSV and JSON persistence. Every artifact starts with a schema tag:
// "# schema=ineq-sae.<kind>.v1" for CSV, a "schema" member for JSON.
// Files are written to a temporary name and renamed into place.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ineq/common.hpp"
#include "ineq/design.hpp"
#include "ineq/survey.hpp"

namespace ineq {

std::string schema_tag(const std::string& kind);

// 12 significant digits; stable across platforms and thread counts.
std::string format_number(double v);

void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

struct CsvTable {
  std::string source;
  std::string schema;  // empty when the file has no schema line
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;  // 1-based file line of each row

  // Column position; SchemaMismatch if absent.
  size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  double number(size_t row, size_t col) const;  // NonFiniteValue with the line
};

// Handles LF and CRLF, double-quoted fields and a leading schema line.
CsvTable parse_csv(const std::string& text, const std::string& source);
CsvTable read_csv(const std::filesystem::path& path);

class CsvWriter {
 public:
  CsvWriter(const std::string& kind, std::vector<std::string> header);
  void add_row(const std::vector<std::string>& fields);
  std::string str() const { return out_; }

 private:
  size_t width_;
  std::string out_;
};

inline const std::vector<std::string> kMicrodataHeader{"unit_id", "household_id", "domain",
                                                      "stratum", "psu", "weight", "income"};
inline const std::vector<std::string> kPopulationHeader{"unit_id", "household_id", "domain",
                                                       "stratum", "psu", "income"};

SurveySample parse_microdata(const CsvTable& t, const std::set<std::string>& take_all = {});
SurveySample parse_microdata(const std::filesystem::path& path,
                             const std::set<std::string>& take_all = {});
Population parse_population(const std::filesystem::path& path,
                            const std::set<std::string>& take_all = {});

std::string microdata_csv(const SurveySample& s);
std::string population_csv(const Population& p);

struct CovariateTable {
  std::vector<std::string> names;
  std::map<std::string, Vec<double>> rows;  // domain -> values

  // Rows for the given domains in order; MissingInput if one is absent.
  Matrix<double> matrix(const std::vector<std::string>& domains) const;
};

// Columns "domain" plus covariates; `names` selects a subset (all if empty).
CovariateTable read_covariates(const std::filesystem::path& path,
                               const std::vector<std::string>& names = {});

}  // namespace ineq

#endif
