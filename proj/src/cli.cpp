#include "bvc/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "bvc/acceptance.hpp"
#include "bvc/f_manifold.hpp"

namespace bvc {

using nlohmann::json;

namespace {

const std::set<std::string> kOutputs = {"basis", "pi0", "mhat", "phi0", "phi_m1",
                                        "A",     "T",   "Z"};

Rational rational_field(const json& j, const std::string& where) {
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (j.is_string()) return parse_rational(j.get<std::string>());
  throw InputError(where + ": expected a rational as \"p/q\" or an integer");
}

int positive_int(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long>() < 1 || j.get<long>() > 1000)
    throw InputError(where + ": expected a positive integer");
  return j.get<int>();
}

std::string rat_str(const Rational& r) { return r.get_str(); }

json hpoly_json(const HPoly& p) {
  json a = json::array();
  for (const auto& [e, c] : p.coeffs()) a.push_back(json::array({e, rat_str(c)}));
  return a;
}

json hvec_json(const HVec& v) {
  json a = json::array();
  for (const auto& c : v) a.push_back(hpoly_json(c));
  return a;
}

json poly_json(const PolyElement& x) {
  json a = json::array();
  for (const auto& [m, c] : x.terms()) {
    json eta = json::array();
    for (int i = 0; i < 32; ++i)
      if (m.eta & (1u << i)) eta.push_back(i);
    a.push_back({{"x", m.x}, {"eta", eta}, {"coeff", hpoly_json(c)}});
  }
  return a;
}

json report_json(const std::string& group, const Report& r) {
  json a = json::array();
  for (const auto& c : r.checks)
    a.push_back({{"group", group}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return a;
}

int max_hbar_degree(const HVec& v) {
  int d = -1;
  for (const auto& c : v)
    if (!c.is_zero()) d = std::max(d, c.degree());
  return d;
}

std::string key_label(const Key& k, const std::vector<std::string>& labels) {
  std::string s = "(";
  for (size_t i = 0; i < k.size(); ++i) s += (i ? ", " : "") + labels[k[i]];
  return s + ")";
}

std::string split_label(const Key& k, const std::vector<std::string>& labels) {
  Key first(k.begin(), k.end() - 2), last(k.end() - 2, k.end());
  std::string s = "(";
  for (size_t i = 0; i < first.size(); ++i) s += (i ? ", " : "") + labels[first[i]];
  s += first.empty() ? "" : " | ";
  return s + labels[last[0]] + ", " + labels[last[1]] + ")";
}

// Collects check groups for printing and the JSON bundle.
class Bundle {
 public:
  Bundle(std::ostream& out, std::string command) : out_(out) {
    j_["schema"] = 1;
    j_["command"] = std::move(command);
    j_["checks"] = json::array();
    j_["tables"] = json::object();
  }

  json& root() { return j_; }

  void check(const std::string& group, const Report& r) {
    const Check* f = r.first_failure();
    if (f) {
      ok_ = false;
      out_ << "FAIL " << group << ": " << f->name;
      if (!f->detail.empty()) out_ << " [" << f->detail << "]";
      out_ << "\n";
    } else {
      out_ << "PASS " << group << " (" << r.checks.size() << " checks)\n";
    }
    for (auto& c : report_json(group, r)) j_["checks"].push_back(c);
  }

  void row(const std::string& table, const std::string& text, json machine) {
    out_ << "  " << text << "\n";
    machine["text"] = text;
    j_["tables"][table].push_back(std::move(machine));
  }

  void heading(const std::string& h) { out_ << "\n" << h << "\n"; }

  bool pass() const { return ok_; }

  int finish(const std::string& json_path) {
    j_["pass"] = ok_;
    out_ << "\nresult: " << (ok_ ? "PASS" : "FAIL") << "\n";
    if (!json_path.empty()) {
      std::ofstream f(json_path);
      if (!f) throw InputError("cannot write " + json_path);
      f << j_.dump(2) << "\n";
    }
    return ok_ ? kExitOk : kExitIdentity;
  }

 private:
  std::ostream& out_;
  json j_;
  bool ok_ = true;
};

struct Pipeline {
  JobSpec job;
  Potential pot;
  std::shared_ptr<const Retract> r;
  std::unique_ptr<QuantizedRetract> q;
  std::unique_ptr<MasterSolver> s;
  std::vector<std::string> labels;

  explicit Pipeline(JobSpec j) : job(std::move(j)) {
    pot = Potential::make(job.n_vars, job.potential);
    r = std::make_shared<Retract>(milnor_basis(pot));
    labels = r->milnor().labels();
    if (!job.iota.empty()) {
      if (static_cast<int>(job.iota.size()) != r->mu())
        throw InputError("iota has " + std::to_string(job.iota.size()) + " entries, H has dimension " +
                         std::to_string(r->mu()));
      if (job.iota[0] != 1) throw InputError("iota(1) must be 1");
    }
  }

  void quantize() { q = std::make_unique<QuantizedRetract>(r, job.n_hbar); }

  void solve(int n_max) {
    s = std::make_unique<MasterSolver>(*q, n_max);
    s->solve_level_zero();
    s->solve_level_one();
    if (!job.fault_injection.empty()) s->inject_fault(job.fault_injection);
  }

  Expectation expectation() const { return make_expectation(*q, job.iota); }
};

void emit_basis(Pipeline& p, Bundle& b, std::ostream& out) {
  const auto& md = p.r->milnor();
  out << "potential: " << xpoly_str(p.pot.s) << "\n";
  out << "dimension: " << md.mu() << "\n";
  b.root()["dimension"] = md.mu();
  b.heading("basis (label, ghost):");
  for (int a = 0; a < md.mu(); ++a)
    b.row("basis", p.labels[a] + "  ghost 0", {{"index", a}, {"exps", md.basis[a]}, {"ghost", 0}});
}

int cmd_basis(Pipeline& p, std::ostream& out, const std::string& json_path) {
  Bundle b(out, "basis");
  emit_basis(p, b, out);
  return b.finish(json_path);
}

void solver_checks(Pipeline& p, Bundle& b, std::ostream& out) {
  const MasterSolver& s = *p.s;
  b.heading("checks:");
  b.check("retract", verify_retract(*p.r, 8));
  b.check("quantized retract", verify_quantized(*p.q, 8));
  b.check("level zero", s.verify_level_zero());
  b.check("level one", s.verify_level_one());
  MSignResolution m = s.resolve_M_sign();
  out << "M identity l-term sign: "
      << (m.sign > 0 ? "+" : m.sign < 0 ? "-" : "undetermined") << " (plus "
      << (m.plus_holds ? "holds" : "fails") << ", minus " << (m.minus_holds ? "holds" : "fails")
      << ")\n";
  b.root()["M_sign"] = {{"sign", m.sign}, {"plus_holds", m.plus_holds},
                        {"minus_holds", m.minus_holds}, {"detail", m.detail}};
  Report sign;
  sign.add("l-term sign determined", m.sign != 0, m.detail);
  b.check("M sign", sign);
  if (m.sign != 0) {
    b.check("M identity", s.verify_M_identity(m.sign));
    b.check("classical m^ route", s.classical_mhat_route(m.sign));
  }
  b.check("m^ algebra", s.verify_mhat_algebra(2));
  Expectation c = p.expectation();
  b.check("factorization", s.factorization_check(c));
  auto mc = moments_cumulants(s, c, s.n_max());
  Report r;
  r.add("moment-cumulant identity", mc.pass, mc.detail);
  b.check("moments and cumulants", r);
  b.root()["cumulants"] = {{"descendant_ok", mc.descendant_ok},
                           {"incompatibility_arity", mc.incompatibility_arity}};
}

void emit_audit(Pipeline& p, Bundle& b) {
  const MasterSolver& s = *p.s;
  const auto& l0 = s.level_zero();
  const int nv = p.job.n_vars;
  b.heading("audit: Omega^0");
  for (int n = 2; n <= s.n_max(); ++n)
    for (const Key& k : symmetric_keys(s.dim(), n, s.ghosts()))
      b.row("audit_omega0", "Omega0_" + std::to_string(n) + key_label(k, p.labels) + " = " +
                                l0.omega0.at(k).str(nv),
            {{"n", n}, {"key", k}, {"value", poly_json(l0.omega0.at(k))}});
  b.heading("audit: L");
  for (int n = 2; n <= s.n_max(); ++n)
    for (const Key& k : symmetric_keys(s.dim(), n, s.ghosts()))
      b.row("audit_L", "L_" + std::to_string(n) + key_label(k, p.labels) + " = " + l0.L.at(k).str(nv),
            {{"n", n}, {"key", k}, {"value", poly_json(l0.L.at(k))}});
  MSignResolution m = s.resolve_M_sign();
  if (m.sign == 0) return;
  auto M = s.M0_family(m.sign);
  b.heading("audit: M^0");
  for (int n = 2; n <= s.n_max(); ++n)
    for (const Key& k : split_keys(s.dim(), n, s.ghosts()))
      b.row("audit_M0", "M0_" + std::to_string(n) + split_label(k, p.labels) + " = " +
                            M.at_flat(k).str(nv),
            {{"n", n}, {"key", k}, {"value", poly_json(M.at_flat(k))}});
}

int cmd_solve(Pipeline& p, std::ostream& out, const std::string& json_path, bool audit) {
  Bundle b(out, "solve");
  if (p.job.wants("basis")) emit_basis(p, b, out);
  p.quantize();
  p.solve(p.job.n_max);
  const MasterSolver& s = *p.s;
  const auto& l0 = s.level_zero();
  const auto& l1 = s.level_one();
  const int nv = p.job.n_vars;
  if (p.job.wants("pi0")) {
    b.heading("pi^0 (hbar degree, bound n-2):");
    for (int n = 2; n <= s.n_max(); ++n)
      for (const Key& k : symmetric_keys(s.dim(), n, s.ghosts())) {
        HVec v = l0.pi0.at(k);
        int d = max_hbar_degree(v);
        std::string col = (d < 0 ? "-" : std::to_string(d)) + "/" + std::to_string(n - 2) +
                          (d <= n - 2 ? " ok" : " EXCEEDS");
        b.row("pi0", "pi0_" + std::to_string(n) + key_label(k, p.labels) + " = " +
                         hvec_str(v, p.labels) + "    [" + col + "]",
              {{"n", n}, {"key", k}, {"value", hvec_json(v)}, {"hbar_degree", d},
               {"bound", n - 2}});
      }
  }
  if (p.job.wants("mhat")) {
    b.heading("m^:");
    for (int n = 2; n <= s.n_max(); ++n)
      for (const Key& k : split_keys(s.dim(), n, s.ghosts())) {
        HVec v = l1.mhat.at_flat(k);
        b.row("mhat", "m_" + std::to_string(n) + split_label(k, p.labels) + " = " +
                          hvec_str(v, p.labels),
              {{"n", n}, {"key", k}, {"value", hvec_json(v)}});
      }
  }
  if (p.job.wants("phi0")) {
    b.heading("phi^0:");
    for (int n = 2; n <= s.n_max(); ++n)
      for (const Key& k : symmetric_keys(s.dim(), n, s.ghosts()))
        b.row("phi0", "phi0_" + std::to_string(n) + key_label(k, p.labels) + " = " +
                          l0.phi0.at(k).str(nv),
              {{"n", n}, {"key", k}, {"value", poly_json(l0.phi0.at(k))}});
  }
  if (p.job.wants("phi_m1")) {
    b.heading("phi^-1:");
    for (int n = 2; n <= s.n_max(); ++n)
      for (const Key& k : split_keys(s.dim(), n, s.ghosts()))
        b.row("phi_m1", "phi-1_" + std::to_string(n) + split_label(k, p.labels) + " = " +
                            l1.phi_m1.at_flat(k).str(nv),
              {{"n", n}, {"key", k}, {"value", poly_json(l1.phi_m1.at_flat(k))}});
  }
  if (audit) emit_audit(p, b);
  solver_checks(p, b, out);
  return b.finish(json_path);
}

int cmd_fmanifold(Pipeline& p, std::ostream& out, const std::string& json_path, bool audit) {
  Bundle b(out, "fmanifold");
  const int n_t = p.job.n_t;
  if (p.job.wants("basis")) emit_basis(p, b, out);
  p.quantize();
  p.solve(std::max(p.job.n_max, n_t + 2));
  const MasterSolver& s = *p.s;
  auto A = structure_constants(s, n_t);
  auto T = flat_coordinates(s, n_t);
  auto gf = generating_function(s, p.expectation(), T);
  const int mu = s.dim();
  if (p.job.wants("A")) {
    b.heading("A^g_ab(t):");
    for (int a = 0; a < mu; ++a)
      for (int c = 0; c < mu; ++c)
        for (int g = 0; g < mu; ++g)
          b.row("A", "A_" + std::to_string(a) + std::to_string(c) + "^" + std::to_string(g) + " = " +
                         tseries_str(A.at(a, c, g)),
                {{"a", a}, {"b", c}, {"g", g}});
  }
  if (p.job.wants("T")) {
    b.heading("T^g(t):");
    for (int g = 0; g < mu; ++g)
      b.row("T", "T^" + std::to_string(g) + " = " + tseries_str(T.T[g]), {{"g", g}});
  }
  if (p.job.wants("Z")) {
    b.heading("Z(t):");
    b.row("Z", "Z = " + tseries_str(gf.route_a), json::object());
  }
  if (audit) emit_audit(p, b);
  b.heading("checks:");
  b.check("WDVV", wdvv_report(A));
  auto pde = verify_flat_coordinates(T, A);
  out << "flat-coordinate PDE sign: "
      << (pde.sign > 0 ? "+" : pde.sign < 0 ? "-" : "undetermined")
      << " (h d d T + A d T = 0 " << (pde.plus_holds ? "holds" : "fails")
      << "; h d d T - A d T = 0 " << (pde.minus_holds ? "holds" : "fails") << ")\n";
  b.root()["pde_sign"] = {{"sign", pde.sign}, {"plus_holds", pde.plus_holds},
                          {"minus_holds", pde.minus_holds}, {"detail", pde.detail}};
  b.check("flat coordinates", pde.report);
  b.check("generating function", gf.report);
  bool ghost0 = std::all_of(s.ghosts().begin(), s.ghosts().end(), [](int g) { return g == 0; });
  if (ghost0) b.check("Theta Maurer-Cartan", theta_mc_check(s, n_t));
  return b.finish(json_path);
}

int cmd_selftest(std::ostream& out) {
  AcceptanceOptions opt;
  bool ok = true;
  for (const auto& r : run_acceptance(opt, out)) ok = ok && r.pass;
  out << "selftest: " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitIdentity;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

bool JobSpec::wants(const std::string& what) const {
  return outputs.empty() || std::find(outputs.begin(), outputs.end(), what) != outputs.end();
}

Rational parse_rational(const std::string& s) {
  Rational r;
  if (s.empty() || s.find_first_not_of("+-0123456789/ ") != std::string::npos ||
      r.set_str(s, 10) != 0)
    throw InputError("bad rational \"" + s + "\"");
  if (r.get_den() == 0) throw InputError("zero denominator in \"" + s + "\"");
  r.canonicalize();
  return r;
}

JobSpec parse_job(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("job must be a JSON object");
  static const std::set<std::string> known = {"schema", "potential", "n_max", "N_hbar", "N_t",
                                              "iota",   "outputs",   "fault_injection"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw InputError("unknown field \"" + k + "\"");
  if (!j.contains("schema") || j["schema"] != 1) throw InputError("\"schema\" must be 1");
  if (!j.contains("potential") || !j["potential"].is_object())
    throw InputError("missing \"potential\"");

  JobSpec job;
  const json& pj = j["potential"];
  for (const auto& [k, v] : pj.items())
    if (k != "n_vars" && k != "terms") throw InputError("unknown field \"potential." + k + "\"");
  if (!pj.contains("n_vars")) throw InputError("missing \"potential.n_vars\"");
  job.n_vars = positive_int(pj["n_vars"], "potential.n_vars");
  if (job.n_vars > 8) throw ResourceError("at most 8 variables are supported");
  if (!pj.contains("terms") || !pj["terms"].is_array())
    throw InputError("missing \"potential.terms\"");
  for (const auto& t : pj["terms"]) {
    if (!t.is_array() || t.size() != 2 || !t[0].is_array())
      throw InputError("potential term must be [[exponents], \"p/q\"]");
    Exps e;
    for (const auto& x : t[0]) {
      if (!x.is_number_integer() || x.get<long>() < 0 || x.get<long>() > 64)
        throw InputError("exponents must be non-negative integers");
      e.push_back(x.get<int>());
    }
    if (static_cast<int>(e.size()) != job.n_vars)
      throw InputError("exponent vector length differs from n_vars");
    Rational c = rational_field(t[1], "potential term coefficient");
    job.potential[e] += c;
    if (job.potential[e] == 0) job.potential.erase(e);
  }
  if (j.contains("n_max")) job.n_max = positive_int(j["n_max"], "n_max");
  if (j.contains("N_hbar")) job.n_hbar = positive_int(j["N_hbar"], "N_hbar");
  if (j.contains("N_t")) job.n_t = positive_int(j["N_t"], "N_t");
  if (j.contains("iota")) {
    if (!j["iota"].is_array()) throw InputError("\"iota\" must be a list of rationals");
    for (const auto& v : j["iota"]) job.iota.push_back(rational_field(v, "iota"));
    if (job.iota.empty() || job.iota[0] != 1) throw InputError("iota(1) must be 1");
  }
  if (j.contains("outputs")) {
    if (!j["outputs"].is_array()) throw InputError("\"outputs\" must be a list");
    for (const auto& v : j["outputs"]) {
      if (!v.is_string() || !kOutputs.count(v.get<std::string>()))
        throw InputError("unknown output " + v.dump());
      job.outputs.push_back(v.get<std::string>());
    }
  }
  if (j.contains("fault_injection")) {
    if (!j["fault_injection"].is_string()) throw InputError("\"fault_injection\" must be a string");
    job.fault_injection = j["fault_injection"].get<std::string>();
  }
  return job;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"bvcorr: exact quantum correlation algebras of polynomial BV algebras"};
  app.require_subcommand(1);
  std::string input, json_path;
  bool audit = false;
  int threads = 1;
  std::map<std::string, CLI::App*> subs;
  for (const char* name : {"basis", "solve", "fmanifold", "selftest"}) {
    CLI::App* sub = app.add_subcommand(name);
    auto* in = sub->add_option("--input", input, "job file (JSON)");
    if (std::string(name) != "selftest") in->required();
    sub->add_option("--json", json_path, "write the report bundle here");
    sub->add_flag("--audit", audit, "include solver intermediates");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
    subs[name] = sub;
  }
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    Config cfg = config();
    cfg.threads = threads;
    if (subs["selftest"]->parsed()) {
      ConfigScope scope(cfg);
      return cmd_selftest(out);
    }
    JobSpec job = parse_job(read_file(input));
    cfg.n_hbar = job.n_hbar;
    cfg.n_t = job.n_t;
    ConfigScope scope(cfg);
    Pipeline p(std::move(job));
    if (subs["basis"]->parsed()) return cmd_basis(p, out, json_path);
    if (subs["solve"]->parsed()) return cmd_solve(p, out, json_path, audit);
    return cmd_fmanifold(p, out, json_path, audit);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << "\n";
    return kExitResource;
  } catch (const Error& e) {
    err << "identity violated: " << e.what() << "\n";
    return kExitIdentity;
  }
}

}  // namespace bvc
