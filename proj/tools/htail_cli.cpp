// htail: command-line front end for the tail library.
//
// Exit status: 0 success, 1 evidence failure under --assert, 2 input error,
// 3 numerical failure (partial results are still written).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "htail/conditions.hpp"
#include "htail/report.hpp"
#include "htail/risk_model.hpp"

using namespace htail;
using nlohmann::json;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string out;
  std::string format = "json";
  bool assert_mode = false;
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;

  QuadratureSpec quad;
  GridSpec product_grid;
  GeometricGrid grid;
  bool grid_set = false;
  VerdictThresholds thresholds;
  bool thresholds_set = false;
  std::vector<double> xs;

  std::string dist, F, G, V, model;
  int k = 2;
  std::string class_id = "S";
  std::string cond;
  std::vector<double> b, t, d;
  double delta = 0.05;
  std::size_t param = 0;
  std::uint64_t mc = 0;
  int n = 0;
  std::uint64_t paths = 0;
  double lambda = 0.0, epsilon = 0.0, x0 = 0.0;
};

// Filled as a command runs, so a numerical failure can still save what was done.
json g_partial = json::object();

json read_json(const std::string& where, const std::string& arg) {
  std::string text;
  if (!arg.empty() && arg.front() == '{') {
    text = arg;
  } else {
    std::ifstream in(arg);
    if (!in) throw InputError(where + ": cannot open '" + arg + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(where + ": " + arg + ": " + e.what());
  }
}

Distribution load_dist(const std::string& where, const std::string& arg) {
  if (arg.empty()) throw InputError(where + ": missing distribution spec");
  const json j = read_json(where, arg);
  try {
    return make_family(j);
  } catch (const ParameterError& e) {
    throw InputError(where + ": " + arg + ": " + e.what());
  } catch (const json::exception& e) {
    throw InputError(where + ": " + arg + ": " + e.what());
  }
}

RiskModelSpec load_model(const std::string& arg) {
  const json j = read_json("model", arg);
  try {
    return load_risk_model(j);
  } catch (const ParameterError& e) {
    throw InputError("model: " + arg + ": " + e.what());
  } catch (const json::exception& e) {
    throw InputError("model: " + arg + ": " + e.what());
  }
}

std::vector<double> x_grid(const Options& o) {
  if (!o.xs.empty()) return o.xs;
  return o.grid.points();
}

void emit(const Options& o, const json& report, const std::function<void(std::ostream&)>& csv) {
  std::ostringstream os;
  if (o.format == "csv") {
    if (!csv) throw InputError("format: this command has no CSV form");
    csv(os);
  } else {
    os << report.dump(2) << "\n";
  }
  if (o.out.empty()) {
    std::cout << os.str();
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw InputError("out: cannot write '" + o.out + "'");
  f << os.str();
}

ClassifyOptions classify_options(const Options& o, const VerdictThresholds& th) {
  ClassifyOptions c;
  c.thresholds = th;
  c.quadrature = o.quad;
  c.workers = o.threads;
  return c;
}

json header(const std::string& command) {
  return {{"schema_version", kReportSchemaVersion}, {"command", command}};
}

int cmd_eval(const Options& o) {
  const auto V = load_dist("dist", o.dist);
  const auto xs = x_grid(o);
  json r = header("eval");
  r["dist"] = V.to_json();
  r["points"] = json::array();
  std::vector<double> logs;
  for (double x : xs) {
    const double l = V.log_sf(x);
    logs.push_back(l);
    r["points"].push_back({{"x", x}, {"log_sf", log_json(l)}, {"sf", std::exp(l)}});
  }
  emit(o, r, [&](std::ostream& os) { write_curve_csv(os, xs, logs); });
  return 0;
}

int cmd_convolve(const Options& o) {
  const auto F = load_dist("F", o.F);
  const auto G = load_dist("G", o.G);
  const auto xs = x_grid(o);
  json r = header("convolve");
  r["F"] = F.to_json();
  r["G"] = G.to_json();
  r["quadrature"] = to_json(o.quad);
  r["points"] = json::array();
  g_partial = r;
  std::vector<double> logs;
  for (double x : xs) {
    const auto t = product_tail_detailed(F, G, x, o.quad);
    json p{{"x", x}, {"tail", to_json(t)}};
    if (o.mc > 0) p["mc"] = to_json(mc_product_tail(F, G, x, o.mc, o.seed, o.threads));
    logs.push_back(t.value.log_p());
    r["points"].push_back(p);
    g_partial = r;
  }
  emit(o, r, [&](std::ostream& os) { write_curve_csv(os, xs, logs); });
  return 0;
}

int cmd_selfconv(const Options& o) {
  const auto V = load_dist("V", o.V);
  const auto xs = x_grid(o);
  json r = header("selfconv");
  r["V"] = V.to_json();
  r["k"] = o.k;
  r["points"] = json::array();
  g_partial = r;
  std::vector<double> logs;
  for (double x : xs) {
    const auto t = sum_self_tail_detailed(V, o.k, x, o.quad);
    logs.push_back(t.value.log_p());
    r["points"].push_back({{"x", x}, {"tail", to_json(t)}});
    g_partial = r;
  }
  emit(o, r, [&](std::ostream& os) { write_curve_csv(os, xs, logs); });
  return 0;
}

int cmd_classify(const Options& o) {
  const auto V = load_dist("V", o.V);
  ClassId id;
  try {
    id = parse_class_id(o.class_id);
  } catch (const ParameterError& e) {
    throw InputError(e.what());
  }
  const auto v = classify(V, id, x_grid(o), classify_options(o, o.thresholds));
  json r = header("classify");
  r["V"] = V.to_json();
  r["verdict"] = to_json(v);
  emit(o, r, [&](std::ostream& os) { write_curve_csv(os, v.evidence.at(0).second); });
  return o.assert_mode && v.membership != Membership::Member ? 1 : 0;
}

std::pair<std::vector<double>, VerdictThresholds> pair_grid(const Options& o, const Distribution& F,
                                                            const Distribution& G) {
  auto [grid, th] = default_grid_for(F, G);
  if (!o.xs.empty()) grid = o.xs;
  else if (o.grid_set) grid = o.grid.points();
  if (o.thresholds_set) th = o.thresholds;
  return {grid, th};
}

ConditionParams condition_params(const Options& o, const VerdictThresholds& th) {
  ConditionParams p;
  if (!o.b.empty()) p.b = o.b;
  if (!o.t.empty()) p.t = o.t;
  p.extra_d = o.d;
  p.delta = o.delta;
  p.options = classify_options(o, th);
  p.product_grid = o.product_grid;
  return p;
}

int cmd_check(const Options& o) {
  const auto F = load_dist("F", o.F);
  const auto G = load_dist("G", o.G);
  ConditionId id;
  try {
    id = parse_condition_id(o.cond);
  } catch (const ParameterError& e) {
    throw InputError(e.what());
  }
  const auto [grid, th] = pair_grid(o, F, G);
  const auto rep = check_condition(id, F, G, grid, condition_params(o, th));
  json r = header("check");
  r["F"] = F.to_json();
  r["G"] = G.to_json();
  r["report"] = to_json(rep);
  emit(o, r, [&](std::ostream& os) {
    if (rep.parameter_evidence.empty()) throw InputError("format: the report has no curves");
    write_curve_csv(os, rep.parameter_evidence.at(std::min(o.param, rep.parameter_evidence.size() - 1)).diagnostic);
  });
  return o.assert_mode && rep.overall == Overall::FailsEvidence ? 1 : 0;
}

int cmd_verdict(const Options& o) {
  const auto F = load_dist("F", o.F);
  const auto G = load_dist("G", o.G);
  // The premise and the cross-check need the full geometric grid.
  std::vector<double> grid = o.xs.empty() ? o.grid.points() : o.xs;
  json r = header("verdict");
  r["F"] = F.to_json();
  r["G"] = G.to_json();
  try {
    const auto v = theorem11_verdict(F, G, grid, condition_params(o, o.thresholds));
    r["verdict"] = to_json(v);
    emit(o, r, [&](std::ostream& os) { write_curve_csv(os, v.cross_check.evidence.at(0).second); });
    const bool ok = v.predicted == Membership::Member && v.agree;
    return o.assert_mode && !ok ? 1 : 0;
  } catch (const PremiseRefused& e) {
    r["refused"] = true;
    r["reason"] = e.what();
    r["premise"] = to_json(e.evidence());
    emit(o, r, nullptr);
    return o.assert_mode ? 1 : 0;
  }
}

RiskModelSpec model_with_overrides(const Options& o) {
  auto m = load_model(o.model);
  if (o.paths > 0) m.paths = o.paths;
  if (o.seed_set) m.seed = o.seed;
  if (o.lambda > 0.0) m.lambda = o.lambda;
  if (o.epsilon > 0.0) m.epsilon = o.epsilon;
  if (o.n > 0) m.horizon = o.n;
  try {
    m.validate();
  } catch (const ParameterError& e) {
    throw InputError("model: " + std::string(e.what()));
  }
  return m;
}

LowerBoundOptions bound_options(const Options& o) {
  LowerBoundOptions lb;
  if (o.grid_set) lb.grid = o.grid.points();
  lb.x0 = o.x0;
  lb.classify = classify_options(o, o.thresholds);
  lb.chain_grid = o.product_grid;
  lb.quadrature = o.quad;
  return lb;
}

double single_x(const Options& o) {
  if (o.xs.size() != 1) throw InputError("x: exactly one value is required");
  return o.xs.front();
}

int cmd_ruin(const Options& o) {
  const auto m = model_with_overrides(o);
  const double x = single_x(o);
  json r = header("ruin");
  r["model"] = to_json(m);
  r["x"] = x;
  g_partial = r;
  if (m.horizon) {
    const int n = *m.horizon;
    const auto mc = finite_ruin_mc(m, n, x, m.paths, m.seed, o.threads);
    r["mc"] = to_json(mc);
    g_partial = r;
    const auto as = finite_ruin_asymptotic(m, n, x, o.quad);
    r["asymptotic_log_value"] = log_json(as.log_p());
    r["asymptotic_value"] = as.probability();
    r["ratio"] = mc.point / as.probability();
    emit(o, r, nullptr);
    return 0;
  }
  const auto guard = divergence_guard(m);
  r["divergence_guard"] = to_json(guard);
  if (!guard.pass) {
    r["refused"] = true;
    emit(o, r, nullptr);
    return o.assert_mode ? 1 : 0;
  }
  try {
    const auto lb = infinite_lower_bound(m, x, bound_options(o));
    r["bound"] = to_json(lb);
    g_partial = r;
    const auto mc = finite_ruin_mc(m, lb.n_star, x, m.paths, m.seed, o.threads);
    r["mc_n_star"] = to_json(mc);
    r["ratio"] = mc.point / lb.series.probability();
    emit(o, r, nullptr);
    return 0;
  } catch (const PremiseRefused& e) {
    r["refused"] = true;
    r["reason"] = e.what();
  } catch (const SeriesRefused& e) {
    r["refused"] = true;
    r["reason"] = e.what();
  }
  emit(o, r, nullptr);
  return o.assert_mode ? 1 : 0;
}

int cmd_bound(const Options& o) {
  const auto m = model_with_overrides(o);
  const double x = single_x(o);
  json r = header("bound");
  r["model"] = to_json(m);
  r["x"] = x;
  r["divergence_guard"] = to_json(divergence_guard(m));
  try {
    const auto lb = infinite_lower_bound(m, x, bound_options(o));
    r["bound"] = to_json(lb);
    emit(o, r, nullptr);
    return o.assert_mode && !lb.all_checks_hold ? 1 : 0;
  } catch (const PremiseRefused& e) {
    r["refused"] = true;
    r["reason"] = e.what();
  } catch (const SeriesRefused& e) {
    r["refused"] = true;
    r["reason"] = e.what();
  }
  emit(o, r, nullptr);
  return o.assert_mode ? 1 : 0;
}

void save_partial(const Options& o, const std::string& message, const QuadratureError* q) {
  json r = {{"schema_version", kReportSchemaVersion}, {"status", "numerical_failure"}, {"error", message},
            {"partial", g_partial}};
  if (q) {
    r["partial_log_value"] = log_json(q->partial_log_value());
    r["achieved_rel_error"] = q->achieved_rel_error();
  }
  const std::string text = r.dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (f) f << text;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("-o,--out", o.out, "Output path (stdout when omitted)");
  sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  sub->add_flag("--assert", o.assert_mode, "Exit 1 when the evidence fails");
  sub->add_option("--threads", o.threads, "Worker threads (default HTAIL_THREADS or hardware)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--seed", o.seed, "Random seed")->each([&o](const std::string&) { o.seed_set = true; });
  sub->add_option("--x", o.xs, "Evaluation points (default: geometric grid)");
  sub->add_option("--rel-tol", o.quad.rel_tol, "Quadrature relative tolerance");
  sub->add_option("--max-panels", o.quad.max_panels, "Quadrature panel budget");
  sub->add_option("--truncation-tail", o.quad.truncation_tail, "Neglected relative mass");
  sub->add_option("--nodes", o.product_grid.nodes, "Nodes of gridded product laws");
  auto mark = [&o](const std::string&) { o.grid_set = true; };
  sub->add_option("--x0", o.grid.x0, "First grid point")->each(mark);
  sub->add_option("--rho", o.grid.rho, "Grid ratio")->each(mark);
  sub->add_option("--K", o.grid.K, "Grid points")->each(mark);
  auto th = [&o](const std::string&) { o.thresholds_set = true; };
  sub->add_option("--window", o.thresholds.window, "Trailing window")->each(th);
  sub->add_option("--min-points", o.thresholds.min_points, "Usable points required")->each(th);
  sub->add_option("--tol-c", o.thresholds.tol_c, "Limit tolerance")->each(th);
  sub->add_option("--tol-s", o.thresholds.tol_s, "Slope tolerance")->each(th);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tail computations for products and sums of heavy-tailed random variables"};
  app.require_subcommand(0, 1);
  Options o;
  bool show_defaults = false;
  app.add_flag("--show-defaults", show_defaults, "Print the defaults table and exit");

  auto* eval = app.add_subcommand("eval", "Tail of a single law");
  add_common(eval, o);
  eval->add_option("--dist", o.dist, "Distribution spec (file or inline JSON)")->required();

  auto* conv = app.add_subcommand("convolve", "Tail of the product XY");
  add_common(conv, o);
  conv->add_option("--F", o.F, "Law of X")->required();
  conv->add_option("--G", o.G, "Law of Y")->required();
  conv->add_option("--mc", o.mc, "Also run a Monte Carlo check with this many draws");

  auto* self = app.add_subcommand("selfconv", "Tail of a k-fold sum");
  add_common(self, o);
  self->add_option("--V", o.V, "Summand law")->required();
  self->add_option("--k", o.k, "Number of summands")->check(CLI::Range(1, 8));

  auto* cls = app.add_subcommand("classify", "Evidence for class membership");
  add_common(cls, o);
  cls->add_option("--V", o.V, "Law to classify")->required();
  cls->add_option("--class", o.class_id, "L_gamma, S, D, R or A");

  auto* chk = app.add_subcommand("check", "Evaluate a named condition");
  add_common(chk, o);
  chk->add_option("--cond", o.cond, "EQ11, EQ12, EQ13, EQ14, T1A_D, T31 or T32")->required();
  chk->add_option("--F", o.F, "Law of X")->required();
  chk->add_option("--G", o.G, "Law of Y")->required();
  chk->add_option("--b", o.b, "Probe values b (EQ11)");
  chk->add_option("--t", o.t, "Probe values t (EQ13)");
  chk->add_option("--d", o.d, "Extra atom probes d (EQ12, EQ14)");
  chk->add_option("--delta", o.delta, "Insensitivity tolerance (T1A_D)");
  chk->add_option("--param", o.param, "Parameter index for CSV output");

  auto* ver = app.add_subcommand("verdict", "Subexponentiality of the product from the atoms of F");
  add_common(ver, o);
  ver->add_option("--F", o.F, "Law of X")->required();
  ver->add_option("--G", o.G, "Law of Y")->required();

  auto* ruin = app.add_subcommand("ruin", "Ruin probability of the discounted risk model");
  add_common(ruin, o);
  ruin->add_option("--model", o.model, "Risk model spec")->required();
  ruin->add_option("--n", o.n, "Horizon override")->check(CLI::PositiveNumber);
  ruin->add_option("--paths", o.paths, "Simulated paths");

  auto* bnd = app.add_subcommand("bound", "Infinite-horizon lower bound series");
  add_common(bnd, o);
  bnd->add_option("--model", o.model, "Risk model spec")->required();
  bnd->add_option("--lambda", o.lambda, "Scaling lambda > 1");
  bnd->add_option("--epsilon", o.epsilon, "Slack epsilon");
  bnd->add_option("--check-x0", o.x0, "First x of the per-step check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (show_defaults) {
    std::cout << defaults_table().dump(2) << "\n";
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "eval") return cmd_eval(o);
    if (name == "convolve") return cmd_convolve(o);
    if (name == "selfconv") return cmd_selfconv(o);
    if (name == "classify") return cmd_classify(o);
    if (name == "check") return cmd_check(o);
    if (name == "verdict") return cmd_verdict(o);
    if (name == "ruin") return cmd_ruin(o);
    if (name == "bound") return cmd_bound(o);
  } catch (const InputError& e) {
    std::cerr << "htail: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "htail: " << e.what() << "\n";
    return 2;
  } catch (const QuadratureError& e) {
    std::cerr << "htail: numerical failure: " << e.what() << "\n";
    save_partial(o, e.what(), &e);
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "htail: numerical failure: " << e.what() << "\n";
    save_partial(o, e.what(), nullptr);
    return 3;
  }
  return 2;
}
