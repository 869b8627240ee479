#include <CLI11.hpp>

#include <iostream>

#include "fkdet/cli.hpp"

namespace {

using fkdet::cli::ExperimentSpec;

void add_element(CLI::App* app, ExperimentSpec& s) {
  app->add_option("--group", s.group, "group descriptor: Z^d, H3, Zmod:m1xm2, F2");
  app->add_option("--f", s.f_path, "ring element file (.gre)");
  app->add_option("--terms", s.f_terms, "inline terms 'c x1 .. xk; ...' (needs --group)");
}

void add_format(CLI::App* app, ExperimentSpec& s) {
  app->add_option("--format", s.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

void add_certificate(CLI::App* app, ExperimentSpec& s) {
  app->add_flag("--assume-invertible", s.assume_invertible, "skip the invertibility certificate");
  app->add_option("--cert", s.certificate, "torus-min, l1-neumann or positive-gap (default: try each)");
  app->add_option("--N", s.grid_N, "torus grid size for torus-min");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuglede-Kadison determinants, Mahler measures and finite-group entropy"};
  app.require_subcommand(1);
  ExperimentSpec s;

  auto* mahler = app.add_subcommand("mahler", "log Mahler measure of a Z^d element");
  add_element(mahler, s);
  add_format(mahler, s);
  mahler->add_option("--method", s.method, "roots, grid or circulant")->default_str("roots");
  mahler->add_option("--N", s.grid_N, "grid size / quotient modulus")->default_str("256");

  auto* fk = app.add_subcommand("fkdet", "log FK determinant by finite sections or polynomial traces");
  add_element(fk, s);
  add_format(fk, s);
  add_certificate(fk, s);
  fk->add_option("--method", s.method, "sections or poly")->default_str("sections");
  fk->add_option("--schedule", s.schedule, "window parameters: n1,n2,... or lo:hi[:step]");
  fk->add_option("--degree", s.degree, "Chebyshev degree")->default_str("40");
  fk->add_option("--a", s.interval_a, "lower end of the spectral interval of f*f");
  fk->add_option("--b", s.interval_b, "upper end of the spectral interval of f*f");

  auto* sn = app.add_subcommand("snf", "Smith normal form of an integer matrix");
  add_format(sn, s);
  sn->add_option("--matrix", s.matrix_path, "CSV of integer rows")->required();

  auto* ent = app.add_subcommand("entropy-finite", "entropy of the dual action over a finite group");
  add_element(ent, s);
  add_format(ent, s);

  auto* sep = app.add_subcommand("separated", "separated or spanning counts on X_f");
  add_element(sep, s);
  add_format(sep, s);
  sep->add_option("--eps", s.epsilon, "epsilon (default 1/(8 ||f||_1))");
  sep->add_option("--p", s.p, "1, 2 or inf")->default_str("inf");
  sep->add_option("--mode", s.mode, "separated or spanning")->default_str("separated");

  auto* qt = app.add_subcommand("quasitile", "greedy quasitiling of a box window");
  add_format(qt, s);
  qt->add_option("--group", s.group, "Z^d or H3")->required();
  qt->add_option("--window", s.window, "box lo:hi in every coordinate")->required();
  qt->add_option("--tiles", s.tiles, "tile boxes lo:hi,lo:hi,...")->required();
  qt->add_option("--eps", s.epsilon, "epsilon in (0, 1/2)")->default_str("0.1");
  qt->add_option("--mode", s.mode, "pairwise or epsilon")->default_str("pairwise");

  auto* pt = app.add_subcommand("perturb", "finite sections with seeded unit-vector perturbations");
  add_element(pt, s);
  add_format(pt, s);
  add_certificate(pt, s);
  pt->add_option("--schedule", s.schedule, "window parameters: n1,n2,... or lo:hi[:step]");
  pt->add_option("--delta", s.delta, "rank fraction in [0, 0.1]")->default_str("0.02");
  pt->add_option("--seed", s.seed, "random seed")->default_str("0");

  auto* l1 = app.add_subcommand("l1growth", "l1 norms of powers of (e + a - a^2) b in F2");
  add_format(l1, s);
  l1->add_option("--k", s.k, "largest power")->default_str("6");

  auto* cert = app.add_subcommand("certify", "invertibility certificate");
  add_element(cert, s);
  add_format(cert, s);
  cert->add_option("--method", s.method, "torus-min, l1-neumann or positive-gap")->default_str("torus-min");
  cert->add_option("--N", s.grid_N, "torus grid size")->default_str("256");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fkdet::cli::kPrecondition;
  }
  s.subcommand = app.get_subcommands().front()->get_name();
  return fkdet::cli::execute(s, std::cout, std::cerr);
}
