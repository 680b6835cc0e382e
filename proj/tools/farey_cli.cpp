#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "farey/farey.hpp"
#include "json.hpp"

using json = nlohmann::ordered_json;
using namespace farey;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  unsigned bits = 256;
  std::string out;
};

// 12 significant digits, trailing zeros kept
std::string fmt_real(double v) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  std::ostringstream os;
  os << std::setprecision(12) << std::showpoint << v;
  return os.str();
}

json real(double v) {
  if (!std::isfinite(v)) return fmt_real(v);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

json theta_json(const Enclosure& t) {
  if (t.exact()) {
    auto s = t.lo.reduced().to_string();
    return json::array({s, s});
  }
  return json::array({real(t.lo.to_double()), real(t.hi.to_double())});
}

json record(const TheoremRecord& r) {
  return {{"theorem", r.theorem}, {"input", r.input}, {"theta", theta_json(r.theta)}, {"class", r.cls},
          {"verdict", r.verdict}};
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot open " + path);
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

// ---------------------------------------------------------------------------

int cmd_expand(const Globals& g, const std::string& x, std::size_t count) {
  RcfExpansion e = parse_x(x, g.bits);
  json j;
  j["input"] = x;
  j["expansion"] = e.to_string();
  if (e.terminated) j["value"] = e.value().to_string();
  json ds = json::array();
  for (const auto& d : e.digits) ds.push_back(d.get_str());
  j["digits"] = ds;
  std::size_t n = e.terminated ? e.digits.size() : std::min(count, e.is_periodic() ? count : e.digits.size());
  json cv = json::array();
  for (const auto& c : rcf_convergents(e, n)) cv.push_back(c.to_string());
  j["convergents"] = cv;
  if (e.terminated && !(e.digits.empty() && e.integer_part == 0)) {
    auto [alt, depth] = alternate_expansion(e);
    j["alternate"] = alt.to_string();
    j["depth"] = depth;
  }
  Output o(g.out);
  o.os() << j.dump(2) << "\n";
  return 0;
}

int cmd_orbit(const Globals& g, const std::string& x, std::uint64_t steps, const std::string& region) {
  RcfExpansion e = parse_x(x, g.bits);
  Output o(g.out);
  auto& os = o.os();
  os << "n,N_n,j,lambda,u,s,thetaLo,thetaHi\n";
  auto row = [&](std::uint64_t n, std::uint64_t N, const FareyState& st, const PointInOmega& p) {
    Enclosure t = h_value(p);
    std::string lo, hi;
    if (t.exact()) {
      lo = hi = t.lo.reduced().to_string();
    } else {
      lo = fmt_real(t.lo.to_double());
      hi = fmt_real(t.hi.to_double());
    }
    os << n << "," << N << "," << st.j << "," << st.lambda << "," << st.u.get_str() << "," << st.s.get_str() << ","
       << lo << "," << hi << "\n";
  };
  try {
    if (region.empty()) {
      OrbitWalker w(e);
      for (std::uint64_t n = 0; n <= steps; ++n) {
        row(n, n, w.state(), w.point());
        if (n < steps) w.step();
      }
    } else {
      InducedWalker iw(e, parse_region(region));
      for (std::uint64_t k = 0; k <= steps; ++k) {
        iw.next();
        row(k, iw.N(), iw.state(), iw.point());
      }
    }
  } catch (const NonRecurrent& nr) {
    std::cerr << "orbit stopped: " << nr.what() << "\n";
  } catch (const BudgetExhausted& b) {
    std::cerr << "orbit stopped: " << b.what() << " (raise --bits)\n";
  }
  return 0;
}

struct SimulateArgs {
  std::string family, region;
  FamilyParams params;
  std::size_t samples = 200, returns = 5000;
  double max_ks = -1;
  std::string cdf_out, model_out;
};

void dump_two_column(const std::string& path, const CdfModel& m, const std::vector<double>* sorted) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  const int n = 1000;
  for (int i = 0; i <= n; ++i) {
    double z = m.z_min + (m.z_max - m.z_min) * i / n;
    double F = m(z);
    if (sorted) {
      auto it = std::upper_bound(sorted->begin(), sorted->end(), z);
      F = static_cast<double>(it - sorted->begin()) / static_cast<double>(sorted->size());
    }
    f << fmt_real(z) << " " << fmt_real(F) << "\n";
  }
}

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  if (a.family.empty() == a.region.empty()) throw DomainError("give exactly one of --family or --region");
  Region R = Region::omega();
  CdfModel model;
  if (!a.family.empty()) {
    Family f = parse_family(a.family);
    model = cdf_closed_form(f, a.params);
    R = family_region(f, a.params);
  } else {
    R = parse_region(a.region);
    model = cdf_numeric(R);
  }
  auto all = pooled_thetas(g.seed, a.samples, g.bits, R, a.returns, g.threads);
  double ks = ks_distance(all, model);
  json j;
  j["region"] = R.to_string();
  if (!a.family.empty()) j["family"] = a.family;
  j["measure"] = real(model.C);
  j["support"] = json::array({real(model.z_min), real(model.z_max)});
  j["samples"] = a.samples;
  j["returns"] = a.returns;
  j["pooled"] = all.size();
  j["ks"] = real(ks);
  j["ks95"] = real(1.36 / std::sqrt(static_cast<double>(all.size())));
  try {
    j["lenstra"] = real(lenstra_constant(model));
  } catch (const DomainError&) {
    j["lenstra"] = nullptr;
  }
  bool fail = a.max_ks >= 0 && ks > a.max_ks;
  if (a.max_ks >= 0) j["verdict"] = fail ? "violated" : "ok";
  if (!a.cdf_out.empty()) {
    std::sort(all.begin(), all.end());
    dump_two_column(a.cdf_out, model, &all);
  }
  if (!a.model_out.empty()) dump_two_column(a.model_out, model, nullptr);
  Output o(g.out);
  o.os() << j.dump(2) << "\n";
  return fail ? 1 : 0;
}

struct VerifyArgs {
  std::string suite = "legendre";
  std::uint64_t qbound = 200;
  std::size_t samples = 100;
  std::size_t convergents = 2000;
  std::size_t blocks = 500;
  bool witness_grid = true;
};

int cmd_verify(const Globals& g, const VerifyArgs& a) {
  json j;
  j["suite"] = a.suite;
  j["samples"] = a.samples;
  json records = json::array();
  std::uint64_t violations = 0, undecided = 0;
  if (a.suite == "legendre" || a.suite == "bj") {
    SuiteOptions opt;
    opt.legendre = a.suite == "legendre";
    opt.bj = a.suite == "bj";
    std::vector<NamedX> corpus;
    for (std::size_t i = 0; i < a.samples; ++i) corpus.push_back({sample_name(g.seed, i, g.bits), sample_x(g.seed, i, g.bits)});
    auto rep = theorem_suite(corpus, a.qbound, opt, a.witness_grid, g.threads);
    j["qbound"] = a.qbound;
    j["pairs"] = rep.pairs;
    j["evaluated"] = rep.evaluated;
    j["checks"] = rep.checks;
    for (const auto& v : rep.violations) records.push_back(record(v));
    for (const auto& [k, w] : rep.witnesses) records.push_back(record(w));
    j["missing_witnesses"] = rep.missing_witnesses;
    violations = rep.violations.size();
    undecided = rep.undecided;
  } else if (a.suite == "classical") {
    auto parts = parallel_map(a.samples, g.threads, [&](std::size_t i) {
      return with_sample(g.seed, i, g.bits, a.convergents + 8,
                         [&](const RcfExpansion& e) { return classical_inequalities(e, a.convergents); });
    });
    std::map<std::string, std::uint64_t> checks;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto& r = parts[i];
      checks["convergents"] += a.convergents;
      checks["inequalities"] += r.checked;
      undecided += r.undecided;
      violations += r.total_violations();
      for (const auto& d : r.details)
        records.push_back({{"theorem", d.substr(0, d.find(' '))}, {"input", sample_name(g.seed, i, g.bits) + " " + d},
                           {"theta", nullptr}, {"class", "Convergent"}, {"verdict", "violated"}});
    }
    j["convergents"] = a.convergents;
    j["checks"] = checks;
  } else if (a.suite == "blocks") {
    struct Part {
      std::uint64_t blocks = 0, applicable = 0, undecided = 0;
      std::vector<std::string> bad;
    };
    auto parts = parallel_map(a.samples, g.threads, [&](std::size_t i) {
      return with_sample(g.seed, i, g.bits, a.blocks + 2, [&](const RcfExpansion& e) {
        Part p;
        XRange xr = x_range(e);
        for (std::size_t jj = 0; jj < a.blocks; ++jj) {
          ++p.blocks;
          auto b = block_extrema(e, jj, xr);
          if (!b.applicable) continue;
          ++p.applicable;
          p.undecided += b.undecided;
          for (const auto& v : b.violations) p.bad.push_back("j=" + std::to_string(jj) + " " + v);
        }
        return p;
      });
    });
    std::map<std::string, std::uint64_t> checks;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      checks["blocks"] += parts[i].blocks;
      checks["applicable"] += parts[i].applicable;
      undecided += parts[i].undecided;
      violations += parts[i].bad.size();
      for (const auto& v : parts[i].bad)
        records.push_back({{"theorem", "block-monotonicity"}, {"input", sample_name(g.seed, i, g.bits) + " " + v},
                           {"theta", nullptr}, {"class", "Mediant"}, {"verdict", "violated"}});
    }
    j["blocks"] = a.blocks;
    j["checks"] = checks;
  } else {
    throw DomainError("unknown suite '" + a.suite + "'");
  }
  j["violations"] = violations;
  j["undecided"] = undecided;
  j["records"] = records;
  Output o(g.out);
  o.os() << j.dump(2) << "\n";
  return violations ? 1 : 0;
}

int cmd_levy(const Globals& g, const std::string& region, std::size_t steps, std::size_t samples) {
  Region R = parse_region(region);
  double m = R.measure();
  if (!(m > 0) || !std::isfinite(m)) throw DomainError("levy needs a proper region");
  std::size_t hint = digits_for(m, steps);
  auto est =
      parallel_map(samples, g.threads, [&](std::size_t i) { return sample_levy(g.seed, i, g.bits, R, steps, hint); });
  double ld = 0, le = 0;
  for (const auto& e : est) {
    ld += e.log_denominator;
    le += e.log_error;
  }
  ld /= static_cast<double>(samples);
  le /= static_cast<double>(samples);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  json j;
  j["region"] = R.to_string();
  j["measure"] = real(m);
  j["steps"] = steps;
  j["samples"] = samples;
  j["log_denominator"] = real(ld);
  j["log_denominator_limit"] = real(pi2 / (12 * m));
  j["log_error"] = real(le);
  j["log_error_limit"] = real(-pi2 / (6 * m));
  Output o(g.out);
  o.os() << j.dump(2) << "\n";
  return 0;
}

int cmd_measure(const Globals& g, const std::string& region, bool as_json) {
  Region R = parse_region(region);
  double m = R.measure();
  Output o(g.out);
  if (as_json) {
    json j;
    j["region"] = R.to_string();
    j["measure"] = real(m);
    j["proper"] = R.is_proper();
    o.os() << j.dump(2) << "\n";
  } else {
    o.os() << fmt_real(m) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Farey tent map natural extension: orbits, induced maps and approximation coefficients"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file");
  Globals g;
  app.add_option("--seed", g.seed, "sample seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--bits", g.bits, "bit depth of sampled x")->capture_default_str()->check(CLI::Range(64u, 1u << 24));
  app.add_option("--out", g.out, "write the main output here instead of stdout");

  std::string x, region;
  std::size_t count = 20;
  auto* expand = app.add_subcommand("expand", "continued fraction expansion of p/q, [a0; ...] or seed:index");
  expand->add_option("x", x)->required();
  expand->add_option("--count", count, "convergents shown for infinite expansions")->capture_default_str();

  std::uint64_t steps = 100;
  auto* orbit = app.add_subcommand("orbit", "Farey orbit of (x, 1) as CSV");
  orbit->add_option("--x", x)->required();
  orbit->add_option("--steps", steps, "raw steps, or returns when --region is given")->capture_default_str();
  orbit->add_option("--region", region);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "pooled Theta distribution along region visits, KS against the model");
  simulate->add_option("--family", sim.family, "cor-i .. cor-vii");
  simulate->add_option("--region", sim.region);
  simulate->add_option("--samples", sim.samples)->capture_default_str();
  simulate->add_option("--returns", sim.returns)->capture_default_str();
  simulate->add_option("--lambda", sim.params.lambda)->capture_default_str();
  simulate->add_option("--a", sim.params.a)->capture_default_str();
  simulate->add_option("--z0", sim.params.z0)->capture_default_str();
  simulate->add_option("--Lambda", sim.params.Lambda)->capture_default_str();
  simulate->add_option("--A", sim.params.A)->capture_default_str();
  simulate->add_option("--max-ks", sim.max_ks, "exit 1 when the KS distance exceeds this");
  simulate->add_option("--cdf-out", sim.cdf_out, "two-column empirical CDF");
  simulate->add_option("--model-out", sim.model_out, "two-column model CDF");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "theorem sweeps; exit 1 on any violation");
  verify->add_option("--suite", ver.suite)->check(CLI::IsMember({"legendre", "bj", "classical", "blocks"}))->capture_default_str();
  verify->add_option("--qbound", ver.qbound)->capture_default_str();
  verify->add_option("--samples", ver.samples)->capture_default_str();
  verify->add_option("--convergents", ver.convergents, "classical suite")->capture_default_str();
  verify->add_option("--blocks", ver.blocks, "blocks suite")->capture_default_str();
  verify->add_flag("!--no-witness-grid", ver.witness_grid, "skip the periodic witness grid");

  std::size_t lsamples = 50, lsteps = 10000;
  auto* levy = app.add_subcommand("levy", "growth rates of s_n and |x - u_n/s_n| along region visits");
  levy->add_option("--region", region)->required();
  levy->add_option("--steps", lsteps, "region visits per sample")->capture_default_str();
  levy->add_option("--samples", lsamples)->capture_default_str();

  bool as_json = false;
  auto* measure = app.add_subcommand("measure", "invariant measure of a region");
  measure->add_option("--region", region)->required();
  measure->add_flag("--json", as_json);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*expand) return cmd_expand(g, x, count);
    if (*orbit) return cmd_orbit(g, x, steps, region);
    if (*simulate) return cmd_simulate(g, sim);
    if (*verify) return cmd_verify(g, ver);
    if (*levy) return cmd_levy(g, region, lsteps, lsamples);
    if (*measure) return cmd_measure(g, region, as_json);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
