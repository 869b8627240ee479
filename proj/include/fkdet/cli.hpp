#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fkdet/dynamics.hpp"
#include "fkdet/errors.hpp"
#include "fkdet/fk.hpp"
#include "fkdet/gre_io.hpp"
#include "fkdet/groups.hpp"
#include "fkdet/mahler.hpp"
#include "fkdet/ring.hpp"
#include "fkdet/sections.hpp"
#include "fkdet/snf.hpp"
#include "fkdet/tiling.hpp"

namespace fkdet::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kPrecondition = 2, kNotCertifiable = 3 };

/// Raised when no certificate (and no user assertion) backs invertibility.
class NotCertifiable : public Error {
 public:
  using Error::Error;
};

struct ExperimentSpec {
  std::string subcommand;
  std::string group;         // descriptor string; optional when the .gre file names one
  std::string f_path;        // .gre file
  std::string f_terms;       // inline terms "c x1 .. xk; c x1 .. xk"
  std::string schedule;      // "10,100,1000" or "lo:hi[:step]" window parameters
  std::string method;        // per-subcommand method name
  std::string epsilon;       // rational text, or empty for the default
  std::string p = "inf";
  std::int64_t grid_N = 256;
  int degree = 40;
  std::string interval_a, interval_b;
  double delta = 0.02;
  std::uint64_t seed = 0;
  int k = 6;
  std::string matrix_path;
  std::string window;        // "lo:hi" box per coordinate
  std::string tiles;         // "lo:hi,lo:hi"
  std::string mode;          // separated|spanning or pairwise|epsilon
  std::string certificate;   // certify method for fkdet/perturb (empty: try all)
  bool assume_invertible = false;
  std::string format = "csv";
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"mahler",    "fkdet",   "snf",      "entropy-finite", "separated",
                                              "quasitile", "perturb", "l1growth", "certify"};
  return names;
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::int64_t parse_int(const std::string& s, const char* what) {
  std::int64_t v;
  if (!fkdet::detail::parse_int64(s, v)) throw DomainError(std::string("bad ") + what + " '" + s + "'");
  return v;
}

/// Accepts `p/q`, integers, or decimal text (converted exactly).
inline Rational parse_number(const std::string& s, const char* what) {
  try {
    return parse_rational(s);
  } catch (const DomainError&) {
  }
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(d))
    throw DomainError(std::string("bad ") + what + " '" + s + "'");
  // decimal text → exact decimal rational
  const auto dot = s.find('.');
  if (dot == std::string::npos || s.find_first_of("eE") != std::string::npos) return Rational(d);
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  const auto places = s.size() - dot - 1;
  Integer den = 1;
  for (std::size_t i = 0; i < places; ++i) den *= 10;
  return parse_rational(digits.empty() || digits == "-" ? "0" : digits) / Rational(den);
}

inline std::vector<std::int64_t> parse_schedule(const std::string& s) {
  if (s.empty()) throw DomainError("--schedule is required");
  std::vector<std::int64_t> out;
  if (s.find(':') != std::string::npos) {
    const auto parts = split(s, ':');
    if (parts.size() < 2 || parts.size() > 3) throw DomainError("schedule range must be lo:hi[:step]");
    const auto lo = parse_int(parts[0], "schedule"), hi = parse_int(parts[1], "schedule");
    const auto step = parts.size() == 3 ? parse_int(parts[2], "schedule step") : 1;
    if (step < 1 || lo < 1 || hi < lo) throw DomainError("schedule range must satisfy 1 <= lo <= hi, step >= 1");
    for (auto n = lo; n <= hi; n += step) out.push_back(n);
  } else {
    for (const auto& t : split(s, ',')) out.push_back(parse_int(t, "schedule entry"));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 1) throw DomainError("schedule entries must be >= 1");
    if (i && out[i] <= out[i - 1]) throw DomainError("schedule entries must be strictly increasing");
  }
  return out;
}

inline std::pair<std::int64_t, std::int64_t> parse_range(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() != 2) throw DomainError("expected lo:hi, got '" + s + "'");
  const auto lo = parse_int(parts[0], "range"), hi = parse_int(parts[1], "range");
  if (hi < lo) throw DomainError("empty range '" + s + "'");
  return {lo, hi};
}

inline FolnerWindow box_from_range(const GroupDescriptor& G, const std::string& s) {
  const auto [lo, hi] = parse_range(s);
  return box_window(G, std::vector<std::int64_t>(G.arity(), lo), std::vector<std::int64_t>(G.arity(), hi));
}

inline AnyRingElement load_element(const ExperimentSpec& spec) {
  if (!spec.f_path.empty() && !spec.f_terms.empty()) throw DomainError("give either --f or --terms, not both");
  std::optional<AnyRingElement> f;
  if (!spec.f_path.empty()) {
    f = read_ring_element_file(spec.f_path);
  } else if (!spec.f_terms.empty()) {
    if (spec.group.empty()) throw DomainError("--terms needs --group");
    std::string text = "group " + spec.group + "\n";
    for (const auto& t : split(spec.f_terms, ';')) text += t + "\n";
    f = parse_ring_element(text);
  } else {
    throw DomainError("a ring element is required (--f or --terms)");
  }
  if (!spec.group.empty() && !(GroupDescriptor::parse(spec.group) == group_of(*f)))
    throw DomainError("--group " + spec.group + " does not match the element's group " + group_of(*f).str());
  if (domain_of(*f) == ScalarDomain::complex_float) throw DomainError("complex elements are not read from files");
  return *f;
}

inline IntegerElement require_integer(const AnyRingElement& f, const char* what) {
  if (const auto* p = std::get_if<IntegerElement>(&f)) return *p;
  throw DomainError(std::string(what) + " needs integer coefficients");
}

/// Rounded to 12 significant digits so JSON matches the CSV text.
inline nlohmann::ordered_json num(double x) {
  if (!std::isfinite(x)) return format_value(x);
  return std::strtod(format_value(x).c_str(), nullptr);
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Simple table that renders as CSV or as a JSON array of row objects.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<nlohmann::ordered_json>> rows;

  void emit(std::ostream& out, const std::string& format, nlohmann::ordered_json meta = {}) const {
    if (format == "json") {
      nlohmann::ordered_json doc = meta.is_null() ? nlohmann::ordered_json::object() : meta;
      doc["rows"] = nlohmann::ordered_json::array();
      for (const auto& r : rows) {
        nlohmann::ordered_json o;
        for (std::size_t i = 0; i < header.size(); ++i) o[header[i]] = r[i];
        doc["rows"].push_back(o);
      }
      out << doc.dump(2) << "\n";
      return;
    }
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out << ",";
        const auto& v = r[i];
        if (v.is_string())
          out << csv_quote(v.get<std::string>());
        else if (v.is_number_float())
          out << format_value(v.get<double>());
        else if (v.is_null())
          out << "";
        else
          out << v.dump();
      }
      out << "\n";
    }
  }
};

inline Table convergence_table(const ConvergenceTable& t) {
  Table out{{"n", "window_size", "boundary_ratio", "value", "method"}, {}};
  for (const auto& r : t.rows)
    out.rows.push_back({r.n, r.window_size, num(r.boundary_ratio.convert_to<double>()), num(r.value), r.method});
  return out;
}

/// Certificate check used before determinant experiments.
template <class S>
InvertibilityCertificate find_certificate(const RingElement<S>& f, const ExperimentSpec& spec) {
  std::vector<CertificateMethod> methods;
  if (!spec.certificate.empty()) {
    methods.push_back(parse_certificate_method(spec.certificate));
  } else {
    methods = {CertificateMethod::positive_gap, CertificateMethod::l1_neumann};
    if (f.group().is_lattice()) methods.push_back(CertificateMethod::torus_min);
  }
  InvertibilityCertificate last;
  for (auto m : methods) {
    last = certify_invertible(f, m, CertificateParams{spec.grid_N});
    if (last.certified) return last;
  }
  return last;
}

template <class S>
void require_invertible(const RingElement<S>& f, const ExperimentSpec& spec, std::ostream& err) {
  if (spec.assume_invertible) {
    err << "note: invertibility asserted by --assume-invertible, not certified\n";
    return;
  }
  const auto c = find_certificate(f, spec);
  if (!c.certified)
    throw NotCertifiable("f is not certifiably invertible (" + c.reason +
                         "); pass --assume-invertible to proceed without a certificate");
  err << "certified invertible by " << to_string(c.method) << ", sigma_min >= " << format_value(c.sigma_min_lower)
      << "\n";
}

inline std::vector<std::shared_ptr<const FolnerWindow>> schedule_windows(const GroupDescriptor& G,
                                                                          const std::string& schedule) {
  std::vector<std::shared_ptr<const FolnerWindow>> out;
  for (auto n : parse_schedule(schedule)) out.push_back(std::make_shared<const FolnerWindow>(folner_window(G, n)));
  return out;
}

// --- subcommands ------------------------------------------------------------

inline int run_mahler(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  const auto f = load_element(spec);
  const std::string method = spec.method.empty() ? "roots" : spec.method;
  Table t{{"method", "N", "value", "defects"}, {}};
  std::visit(
      [&](const auto& g) {
        using S = typename std::decay_t<decltype(g)>::Scalar;
        if (method == "roots") {
          if constexpr (ExactScalar<S>) t.rows.push_back({"roots", nullptr, num(mahler_roots(g)), 0});
        } else if (method == "grid") {
          const auto r = mahler_grid(g, spec.grid_N);
          if (r.defects) err << "warning: " << r.defects << " grid points with |f| < 1e-14 were excluded\n";
          t.rows.push_back({"grid", spec.grid_N, num(r.value), r.defects});
        } else if (method == "circulant") {
          t.rows.push_back({"circulant", spec.grid_N, num(circulant_logdet(g, spec.grid_N)), 0});
        } else {
          throw DomainError("mahler --method must be roots, grid or circulant");
        }
      },
      f);
  t.emit(out, spec.format);
  return kOk;
}

inline int run_fkdet(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  const auto f = load_element(spec);
  const std::string method = spec.method.empty() ? "sections" : spec.method;
  return std::visit(
      [&](const auto& g) -> int {
        if (method == "sections") {
          require_invertible(g, spec, err);
          const auto table = fk_finite_sections(g, schedule_windows(g.group(), spec.schedule));
          for (const auto& r : table.rows)
            if (r.defect()) err << "warning: singular section at n = " << r.n << "\n";
          convergence_table(table).emit(out, spec.format);
          return kOk;
        }
        if (method == "poly") {
          Rational a, b;
          if (!spec.interval_a.empty() || !spec.interval_b.empty()) {
            if (spec.interval_a.empty() || spec.interval_b.empty()) throw DomainError("give both --a and --b");
            a = parse_number(spec.interval_a, "--a");
            b = parse_number(spec.interval_b, "--b");
          } else {
            const auto c = find_certificate(g, spec);
            if (!c.certified) throw NotCertifiable("no certificate for the spectral interval (" + c.reason + ")");
            std::tie(a, b) = poly_trace_interval(g, c);
            err << "interval from " << to_string(c.method) << " certificate\n";
          }
          const auto r = fk_poly_trace(g, a, b, spec.degree);
          Table t{{"method", "degree", "a", "b", "value", "error_bound"}, {}};
          t.rows.push_back({"poly", spec.degree, format_scalar(a), format_scalar(b), num(r.value), num(r.error_bound)});
          t.emit(out, spec.format);
          return kOk;
        }
        throw DomainError("fkdet --method must be sections or poly");
      },
      f);
}

inline int run_perturb(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  const auto f = load_element(spec);
  return std::visit(
      [&](const auto& g) -> int {
        require_invertible(g, spec, err);
        const auto table = perturbation_study(g, schedule_windows(g.group(), spec.schedule), spec.delta, spec.seed);
        convergence_table(table).emit(out, spec.format);
        return kOk;
      },
      f);
}

inline IntMatrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::vector<std::vector<Integer>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    for (auto& c : line)
      if (c == ',' || c == ';') c = ' ';
    const auto tok = fkdet::detail::split_ws(line);
    if (tok.empty()) continue;
    std::vector<Integer> row;
    for (auto t : tok) {
      try {
        const auto r = parse_rational(t);
        if (boost::multiprecision::denominator(r) != 1) throw DomainError("not an integer");
        row.push_back(boost::multiprecision::numerator(r));
      } catch (const DomainError&) {
        throw ParseError(line_no, "bad matrix entry '" + std::string(t) + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw ParseError(line_no, "ragged matrix row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DomainError("empty matrix file '" + path + "'");
  IntMatrix M(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  return M;
}

inline int run_snf(const ExperimentSpec& spec, std::ostream& out, std::ostream&) {
  if (spec.matrix_path.empty()) throw DomainError("snf needs --matrix");
  const auto r = snf(read_matrix_csv(spec.matrix_path));
  std::string divisors;
  for (std::size_t i = 0; i < r.divisors.size(); ++i) divisors += (i ? "," : "") + r.divisors[i].str();
  const auto order = quotient_order(r);
  Table t{{"divisors", "order"}, {}};
  t.rows.push_back({divisors, order ? order->str() : std::string("inf")});
  t.emit(out, spec.format);
  return kOk;
}

inline int run_entropy(const ExperimentSpec& spec, std::ostream& out, std::ostream&) {
  const auto f = require_integer(load_element(spec), "entropy-finite");
  const auto e = entropy_finite_group(f, f.group());
  Table t{{"group", "entropy", "quotient_order", "det", "solutions", "logabsdet_per_site"}, {}};
  t.rows.push_back({e.group.str(), num(e.value), e.quotient_order.str(), e.determinant.str(),
                    e.solution_count ? nlohmann::ordered_json(*e.solution_count) : nlohmann::ordered_json(nullptr),
                    num(e.logabsdet / static_cast<double>(e.group.order()))});
  t.emit(out, spec.format);
  return kOk;
}

inline int run_separated(const ExperimentSpec& spec, std::ostream& out, std::ostream&) {
  const auto f = require_integer(load_element(spec), "separated");
  const auto S = solve_dual_finite(f, f.group());
  const Rational eps =
      spec.epsilon.empty() ? Rational(1) / (8 * Rational(l1_norm(f))) : parse_number(spec.epsilon, "--eps");
  const auto p = parse_orbit_norm(spec.p);
  const auto mode = parse_count_mode(spec.mode.empty() ? "separated" : spec.mode);
  const auto F = full_group(f.group());
  const auto r = extremal_count(S, F.elements(), p, eps, mode);
  Table t{{"mode", "p", "epsilon", "count", "greedy", "points"}, {}};
  t.rows.push_back({mode == CountMode::separated ? "separated" : "spanning", to_string(p), format_scalar(eps), r.count,
                    r.greedy, r.points});
  t.emit(out, spec.format);
  return kOk;
}

inline int run_quasitile(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  if (spec.group.empty()) throw DomainError("quasitile needs --group");
  const auto G = GroupDescriptor::parse(spec.group);
  if (spec.window.empty() || spec.tiles.empty()) throw DomainError("quasitile needs --window and --tiles");
  const auto F = box_from_range(G, spec.window);
  std::vector<FolnerWindow> tiles;
  for (const auto& s : split(spec.tiles, ',')) tiles.push_back(box_from_range(G, s));
  const double eps = spec.epsilon.empty() ? 0.1 : parse_number(spec.epsilon, "--eps").convert_to<double>();
  const auto mode = parse_disjointness_mode(spec.mode.empty() ? "pairwise" : spec.mode);
  const auto T = quasitile(F, tiles, eps, mode);
  err << "coverage " << format_scalar(T.coverage) << " (" << format_value(T.coverage.convert_to<double>()) << ")"
      << (T.meets_target() ? "" : ", below 1 - epsilon") << "\n";
  if (spec.format == "json") {
    nlohmann::ordered_json doc;
    doc["coverage"] = format_scalar(T.coverage);
    doc["meets_target"] = T.meets_target();
    doc["placements"] = nlohmann::ordered_json::array();
    for (const auto& p : T.placements)
      doc["placements"].push_back({{"tile_index", p.tile}, {"center_coordinates", format_element(G, p.center)}});
    out << doc.dump(2) << "\n";
  } else {
    out << T.to_csv();
  }
  return kOk;
}

inline int run_l1growth(const ExperimentSpec& spec, std::ostream& out, std::ostream&) {
  if (spec.k < 0 || spec.k > 12) throw DomainError("l1growth needs 0 <= k <= 12");
  const auto G = GroupDescriptor::free_rank2();
  const auto e = IntegerElement::identity(G);
  const auto a = IntegerElement::monomial(G, GroupElement{letters::a});
  const auto a2 = IntegerElement::monomial(G, GroupElement{letters::a, letters::a});
  const auto b = IntegerElement::monomial(G, GroupElement{letters::b});
  const auto g = convolve(e + a - a2, b);
  Table t{{"k", "l1_norm", "support_size", "three_pow_k"}, {}};
  auto gk = IntegerElement::identity(G);
  Integer three = 1;
  for (int k = 0; k <= spec.k; ++k) {
    t.rows.push_back({k, l1_norm(gk).str(), gk.support_size(), three.str()});
    gk = convolve(gk, g);
    three *= 3;
  }
  t.emit(out, spec.format);
  return kOk;
}

inline int run_certify(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  const auto f = load_element(spec);
  const auto method = parse_certificate_method(spec.method.empty() ? "torus-min" : spec.method);
  const auto c = std::visit([&](const auto& g) { return certify_invertible(g, method, CertificateParams{spec.grid_N}); }, f);
  Table t{{"method", "certified", "sigma_min_lower", "inverse_norm_upper", "spectrum_lo", "spectrum_hi", "grid_size",
           "lipschitz", "residual_l1"},
          {}};
  using J = nlohmann::ordered_json;
  const auto opt = [](const auto& o) -> J { return o ? num(static_cast<double>(*o)) : J(nullptr); };
  t.rows.push_back({to_string(method), c.certified, num(c.sigma_min_lower), opt(c.inverse_norm_upper),
                    c.spectrum ? num(c.spectrum->first) : J(nullptr), c.spectrum ? num(c.spectrum->second) : J(nullptr),
                    c.grid_size ? J(*c.grid_size) : J(nullptr), opt(c.lipschitz), opt(c.residual_l1)});
  t.emit(out, spec.format);
  if (!c.certified) {
    err << "not certifiable: " << c.reason << "\n";
    return kNotCertifiable;
  }
  return kOk;
}

}  // namespace detail

/// Checks field ranges that do not need the input files.
inline void validate(const ExperimentSpec& spec) {
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), spec.subcommand) == names.end())
    throw DomainError("unknown subcommand '" + spec.subcommand + "'");
  if (spec.format != "csv" && spec.format != "json") throw DomainError("--format must be csv or json");
  if (spec.grid_N < 2) throw DomainError("--N must be >= 2");
  if (spec.degree < 1 || spec.degree > 400) throw DomainError("--degree must lie in [1, 400]");
  if (!(spec.delta >= 0.0 && spec.delta <= 0.1)) throw DomainError("--delta must lie in [0, 0.1]");
  if (!spec.group.empty()) (void)GroupDescriptor::parse(spec.group);
  if (!spec.schedule.empty()) (void)detail::parse_schedule(spec.schedule);
  if (!spec.epsilon.empty() && !(detail::parse_number(spec.epsilon, "--eps") > 0))
    throw DomainError("--eps must be > 0");
  if (spec.subcommand == "separated") (void)parse_orbit_norm(spec.p);
  if (!spec.certificate.empty()) (void)parse_certificate_method(spec.certificate);
}

/// Runs one experiment; tables go to `out`, diagnostics to `err`.
inline int execute(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    validate(spec);
    std::ostringstream buf;  // stdout is written once, after success
    int code = kOk;
    const auto& s = spec.subcommand;
    if (s == "mahler") code = detail::run_mahler(spec, buf, err);
    else if (s == "fkdet") code = detail::run_fkdet(spec, buf, err);
    else if (s == "snf") code = detail::run_snf(spec, buf, err);
    else if (s == "entropy-finite") code = detail::run_entropy(spec, buf, err);
    else if (s == "separated") code = detail::run_separated(spec, buf, err);
    else if (s == "quasitile") code = detail::run_quasitile(spec, buf, err);
    else if (s == "perturb") code = detail::run_perturb(spec, buf, err);
    else if (s == "l1growth") code = detail::run_l1growth(spec, buf, err);
    else if (s == "certify") code = detail::run_certify(spec, buf, err);
    out << buf.str();
    return code;
  } catch (const NotCertifiable& e) {
    err << "error: " << e.what() << "\n";
    return kNotCertifiable;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kPrecondition;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace fkdet::cli
