#include "ineq/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace ineq {

namespace fs = std::filesystem;

std::string schema_tag(const std::string& kind) { return "ineq-sae." + kind + ".v1"; }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) fail(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::IoError, "cannot move output into place: " + path.string());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingInput, "missing input file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

size_t CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  fail(ErrorCode::SchemaMismatch, source + ": missing column '" + name + "'");
}

bool CsvTable::has_column(const std::string& name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

double CsvTable::number(size_t row, size_t col) const {
  const std::string& f = rows[row][col];
  const std::string where = source + " line " + std::to_string(lines[row]) + ", column '" +
                            header[col] + "'";
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(f, &used);
  } catch (const std::exception&) {
    fail(ErrorCode::NonFiniteValue, where + ": not a number: '" + f + "'");
  }
  if (used != f.size()) fail(ErrorCode::NonFiniteValue, where + ": not a number: '" + f + "'");
  if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, where + ": value is not finite");
  return v;
}

namespace {

std::vector<std::string> split_line(const std::string& line, const std::string& where) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) fail(ErrorCode::SchemaMismatch, where + ": unterminated quote");
  out.push_back(cur);
  return out;
}

std::string quote_field(const std::string& f) {
  if (f.find_first_of(",\"\n\r") == std::string::npos) return f;
  std::string q = "\"";
  for (char c : f) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header && line.rfind("# schema=", 0) == 0) {
      t.schema = line.substr(9);
      continue;
    }
    if (line.empty()) continue;
    const std::string where = source + " line " + std::to_string(lineno);
    auto fields = split_line(line, where);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      fail(ErrorCode::SchemaMismatch, where + ": expected " + std::to_string(t.header.size()) +
                                          " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(lineno);
  }
  if (!have_header) fail(ErrorCode::SchemaMismatch, source + ": no header row");
  return t;
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

CsvWriter::CsvWriter(const std::string& kind, std::vector<std::string> header)
    : width_(header.size()) {
  out_ = "# schema=" + schema_tag(kind) + "\n";
  add_row(header);
}

void CsvWriter::add_row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) fail(ErrorCode::LengthMismatch, "CSV row has the wrong width");
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ += ',';
    out_ += quote_field(fields[i]);
  }
  out_ += '\n';
}

namespace {

void expect_header(const CsvTable& t, const std::vector<std::string>& want) {
  if (t.header != want) {
    std::string w;
    for (const auto& h : want) w += (w.empty() ? "" : ",") + h;
    fail(ErrorCode::SchemaMismatch, t.source + ": header must be " + w);
  }
}

[[noreturn]] void fail_rows(const std::vector<std::string>& errors) {
  std::string msg = errors.front();
  if (errors.size() > 1) msg += " (and " + std::to_string(errors.size() - 1) + " more row errors)";
  fail(ErrorCode::NonFiniteValue, msg);
}

}  // namespace

SurveySample parse_microdata(const CsvTable& t, const std::set<std::string>& take_all) {
  expect_header(t, kMicrodataHeader);
  SurveySample s;
  s.take_all_strata = take_all;
  std::vector<std::string> errors;
  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    try {
      if (f[2].empty() || f[3].empty() || f[4].empty()) {
        fail(ErrorCode::SchemaMismatch, t.source + " line " + std::to_string(t.lines[r]) +
                                            ": empty domain, stratum or psu");
      }
      const double w = t.number(r, 5);
      const double z = t.number(r, 6);
      if (w < 0.0) {
        fail(ErrorCode::NonFiniteValue,
             t.source + " line " + std::to_string(t.lines[r]) + ": negative weight");
      }
      if (z < 0.0) {
        fail(ErrorCode::NonFiniteValue,
             t.source + " line " + std::to_string(t.lines[r]) + ": negative income");
      }
      s.units.push_back({f[0], f[1], f[2], f[3], f[4], w, z});
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) fail_rows(errors);
  s.validate();
  return s;
}

SurveySample parse_microdata(const fs::path& path, const std::set<std::string>& take_all) {
  return parse_microdata(read_csv(path), take_all);
}

Population parse_population(const fs::path& path, const std::set<std::string>& take_all) {
  const CsvTable t = read_csv(path);
  expect_header(t, kPopulationHeader);
  Population p;
  p.take_all_strata = take_all;
  std::vector<std::string> errors;
  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    try {
      const double z = t.number(r, 5);
      if (z < 0.0) {
        fail(ErrorCode::NonFiniteValue,
             t.source + " line " + std::to_string(t.lines[r]) + ": negative income");
      }
      p.units.push_back({f[0], f[1], f[2], f[3], f[4], z});
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) fail_rows(errors);
  p.validate();
  return p;
}

std::string microdata_csv(const SurveySample& s) {
  CsvWriter w("microdata", kMicrodataHeader);
  for (const auto& u : s.units) {
    w.add_row({u.unit_id, u.household_id, u.domain_id, u.stratum_id, u.psu_id,
               format_number(u.weight), format_number(u.income)});
  }
  return w.str();
}

std::string population_csv(const Population& p) {
  CsvWriter w("population", kPopulationHeader);
  for (const auto& u : p.units) {
    w.add_row({u.unit_id, u.household_id, u.domain_id, u.stratum_id, u.psu_id,
               format_number(u.income)});
  }
  return w.str();
}

Matrix<double> CovariateTable::matrix(const std::vector<std::string>& domains) const {
  Matrix<double> m(static_cast<Index>(domains.size()), static_cast<Index>(names.size()));
  for (size_t d = 0; d < domains.size(); ++d) {
    auto it = rows.find(domains[d]);
    if (it == rows.end()) {
      fail(ErrorCode::MissingInput, "no covariates for domain '" + domains[d] + "'");
    }
    m.row(static_cast<Index>(d)) = it->second.transpose();
  }
  return m;
}

CovariateTable read_covariates(const fs::path& path, const std::vector<std::string>& names) {
  const CsvTable t = read_csv(path);
  const size_t dom = t.column("domain");
  CovariateTable c;
  std::vector<size_t> cols;
  if (names.empty()) {
    for (size_t i = 0; i < t.header.size(); ++i) {
      if (i == dom) continue;
      c.names.push_back(t.header[i]);
      cols.push_back(i);
    }
  } else {
    c.names = names;
    for (const auto& n : names) cols.push_back(t.column(n));
  }
  if (cols.empty()) fail(ErrorCode::SchemaMismatch, t.source + ": no covariate columns");
  for (size_t r = 0; r < t.rows.size(); ++r) {
    Vec<double> v(static_cast<Index>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) v[static_cast<Index>(j)] = t.number(r, cols[j]);
    if (!c.rows.emplace(t.rows[r][dom], v).second) {
      fail(ErrorCode::SchemaMismatch, t.source + " line " + std::to_string(t.lines[r]) +
                                          ": duplicate domain '" + t.rows[r][dom] + "'");
    }
  }
  return c;
}

}  // namespace ineq
