#include "causal_transport/data.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "causal_transport/errors.hpp"

namespace ct {
namespace {

std::string row_tag(Index i) { return "row " + std::to_string(i + 1); }

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t k = 0; k < line.size(); ++k) {
    char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    size_t b = f.find_first_not_of(" \t");
    size_t e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* b = s.data();
  if (*b == '+') ++b;
  auto r = std::from_chars(b, s.data() + s.size(), v);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd v(x.rows(), x.cols() + 1);
  v.col(0).setOnes();
  v.rightCols(x.cols()) = x;
  return v;
}

StudyData StudyData::create(Eigen::VectorXi s, Eigen::MatrixXd x, Eigen::VectorXi a, Eigen::VectorXd y,
                            double pi, std::vector<std::string> names) {
  StudyData d;
  d.s = std::move(s);
  d.x = std::move(x);
  d.a = std::move(a);
  d.y = std::move(y);
  d.pi = pi;
  d.covariate_names = std::move(names);
  if (d.covariate_names.empty())
    for (Index j = 0; j < d.x.cols(); ++j) d.covariate_names.push_back("x" + std::to_string(j + 1));
  d.validate();
  return d;
}

void StudyData::validate() const {
  const Index N = s.size();
  if (x.rows() != N || a.size() != N || y.size() != N)
    throw ValidationError("column lengths disagree: s has " + std::to_string(N) + " rows");
  if (!(pi > 0.0 && pi < 1.0)) throw ValidationError("pi must lie in (0, 1)");
  if (Index(covariate_names.size()) != x.cols()) throw ValidationError("covariate name count mismatch");
  Index n = 0, n1 = 0, n0 = 0;
  for (Index i = 0; i < N; ++i) {
    if (s(i) != 0 && s(i) != 1) throw ValidationError(row_tag(i) + ": S must be 0 or 1");
    for (Index j = 0; j < x.cols(); ++j)
      if (!std::isfinite(x(i, j)))
        throw ValidationError(row_tag(i) + ": covariate '" + covariate_names[j] + "' is missing or non-finite");
    if (s(i) == 1) {
      ++n;
      if (a(i) != 0 && a(i) != 1) throw ValidationError(row_tag(i) + ": source rows need A in {0, 1}");
      if (!std::isfinite(y(i))) throw ValidationError(row_tag(i) + ": source rows need a finite Y");
      (a(i) == 1 ? n1 : n0)++;
    } else {
      if (a(i) == 1) throw ValidationError(row_tag(i) + ": target rows never carry treatment");
      if (a(i) != 0 && a(i) != -1) throw ValidationError(row_tag(i) + ": A must be 0, 1 or missing");
      if (a(i) == -1 && !std::isnan(y(i)))
        throw ValidationError(row_tag(i) + ": target outcome requires A = 0");
      if (!std::isnan(y(i)) && !std::isfinite(y(i)))
        throw ValidationError(row_tag(i) + ": target outcome is not finite");
    }
  }
  if (n == 0) throw ValidationError("no source rows (S = 1)");
  if (n == N) throw ValidationError("no target rows (S = 0)");
  if (n1 == 0 || n0 == 0) throw ValidationError("both treatment arms must be non-empty in the source");
}

Index StudyData::target_control_count() const {
  Index c = 0;
  for (Index i = 0; i < N(); ++i) c += is_target_control(i);
  return c;
}

StudyData StudyData::rows(const std::vector<Index>& idx) const {
  StudyData d;
  const Index k = Index(idx.size());
  d.s.resize(k);
  d.x.resize(k, x.cols());
  d.a.resize(k);
  d.y.resize(k);
  for (Index r = 0; r < k; ++r) {
    Index i = idx[r];
    d.s(r) = s(i);
    d.x.row(r) = x.row(i);
    d.a(r) = a(i);
    d.y(r) = y(i);
  }
  d.pi = pi;
  d.covariate_names = covariate_names;
  return d;
}

StudyData parse_csv(std::istream& in, const CsvSchema& schema, double pi) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: header row expected");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = split_line(line);
  std::unordered_map<std::string, size_t> pos;
  for (size_t k = 0; k < header.size(); ++k) pos[header[k]] = k;
  auto col = [&](const std::string& name) {
    auto it = pos.find(name);
    if (it == pos.end()) throw ParseError("missing column '" + name + "'");
    return it->second;
  };
  if (schema.cols_x.empty()) throw ParseError("schema names no covariate columns");
  size_t cs = col(schema.col_s), ca = col(schema.col_a), cy = col(schema.col_y);
  std::vector<size_t> cx;
  for (const auto& c : schema.cols_x) cx.push_back(col(c));

  std::vector<int> s, a;
  std::vector<double> y, xs;
  Index row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto f = split_line(line);
    if (f.size() != header.size())
      throw ParseError(row_tag(row) + ": expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(f.size()));
    double v;
    if (!parse_number(f[cs], v) || (v != 0.0 && v != 1.0))
      throw ValidationError(row_tag(row) + ": S must be 0 or 1, found '" + f[cs] + "'");
    int si = int(v);
    s.push_back(si);
    if (f[ca].empty()) {
      a.push_back(-1);
    } else if (!parse_number(f[ca], v) || (v != 0.0 && v != 1.0)) {
      throw ValidationError(row_tag(row) + ": A must be 0 or 1, found '" + f[ca] + "'");
    } else {
      a.push_back(int(v));
    }
    if (f[cy].empty()) {
      y.push_back(std::numeric_limits<double>::quiet_NaN());
    } else if (!parse_number(f[cy], v)) {
      throw ParseError(row_tag(row) + ": non-numeric outcome '" + f[cy] + "'");
    } else {
      y.push_back(v);
    }
    if (si == 1 && (a.back() == -1 || std::isnan(y.back())))
      throw ValidationError(row_tag(row) + ": source rows need A and Y");
    for (size_t j = 0; j < cx.size(); ++j) {
      if (!parse_number(f[cx[j]], v))
        throw ParseError(row_tag(row) + ": non-numeric covariate '" + schema.cols_x[j] + "' value '" +
                         f[cx[j]] + "'");
      xs.push_back(v);
    }
    ++row;
  }
  const Index N = Index(s.size()), p = Index(cx.size());
  StudyData d;
  d.s = Eigen::Map<Eigen::VectorXi>(s.data(), N);
  d.a = Eigen::Map<Eigen::VectorXi>(a.data(), N);
  d.y = Eigen::Map<Eigen::VectorXd>(y.data(), N);
  d.x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(xs.data(), N, p);
  d.pi = pi;
  d.covariate_names = schema.cols_x;
  d.validate();
  return d;
}

StudyData load_csv(const std::string& path, const CsvSchema& schema, double pi) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open '" + path + "'");
  return parse_csv(in, schema, pi);
}

void write_csv(const StudyData& d, std::ostream& out, const CsvSchema& schema) {
  std::vector<std::string> names = schema.cols_x;
  if (names.empty()) names = d.covariate_names;
  out << schema.col_s << ',' << schema.col_a << ',' << schema.col_y;
  for (const auto& c : names) out << ',' << c;
  out << '\n';
  for (Index i = 0; i < d.N(); ++i) {
    out << d.s(i) << ',';
    if (d.a(i) >= 0) out << d.a(i);
    out << ',';
    if (!std::isnan(d.y(i))) out << format_double(d.y(i));
    for (Index j = 0; j < d.p(); ++j) out << ',' << format_double(d.x(i, j));
    out << '\n';
  }
}

void write_csv(const StudyData& d, const std::string& path, const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write '" + path + "'");
  write_csv(d, out, schema);
}

DataProfile profile(const StudyData& d) {
  DataProfile pr;
  pr.N = d.N();
  pr.n = d.n();
  pr.m = d.m();
  pr.alpha_hat = d.alpha_hat();
  const Index p = d.p();
  Eigen::VectorXd sum_s = Eigen::VectorXd::Zero(p), sum_t = Eigen::VectorXd::Zero(p);
  double y1 = 0, y0 = 0, yt = 0;
  bool binary = true;
  for (Index i = 0; i < d.N(); ++i) {
    if (d.s(i) == 1) {
      sum_s += d.x.row(i).transpose();
      if (d.a(i) == 1) {
        ++pr.n1;
        y1 += d.y(i);
      } else {
        ++pr.n0;
        y0 += d.y(i);
      }
    } else {
      sum_t += d.x.row(i).transpose();
      if (d.is_target_control(i)) {
        ++pr.target_controls;
        yt += d.y(i);
      }
    }
    if (!std::isnan(d.y(i)) && d.y(i) != 0.0 && d.y(i) != 1.0) binary = false;
  }
  pr.mean_source = sum_s / double(pr.n);
  pr.mean_target = sum_t / double(pr.m);
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(p), st = Eigen::VectorXd::Zero(p);
  for (Index i = 0; i < d.N(); ++i) {
    if (d.s(i) == 1)
      ss += (d.x.row(i).transpose() - pr.mean_source).cwiseAbs2();
    else
      st += (d.x.row(i).transpose() - pr.mean_target).cwiseAbs2();
  }
  pr.sd_source = (ss / double(std::max<Index>(pr.n - 1, 1))).cwiseSqrt();
  pr.sd_target = (st / double(std::max<Index>(pr.m - 1, 1))).cwiseSqrt();
  pr.outcome_mean_treated = y1 / double(pr.n1);
  pr.outcome_mean_control = y0 / double(pr.n0);
  pr.outcome_mean_target_control =
      pr.target_controls > 0 ? yt / double(pr.target_controls) : std::numeric_limits<double>::quiet_NaN();
  pr.binary_outcome = binary;
  return pr;
}

}  // namespace ct
