#include "schwarz/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "schwarz/gridlab.hpp"

namespace schwarz::cli {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

double parse_num(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) throw ConfigError("empty value for '" + key + "'");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw ConfigError("bad number for '" + key + "': " + raw);
  return v;
}

Termination parse_termination(const std::string& key, const std::string& v) {
  const std::string s = lower(trim(v));
  if (s == "dirichlet") return Termination::Dirichlet;
  if (s == "neumann") return Termination::Neumann;
  throw ConfigError("bad termination for '" + key + "': " + v);
}

Medium parse_medium(const RunConfig& cfg) {
  Medium m;
  if (cfg.has("omega")) {
    const double w = cfg.num("omega", 0.0);
    m.eta = -w * w;
  } else {
    m.eta = cfg.num("eta", 1.0);
  }
  return m;
}

CrossSection parse_cross_section(const RunConfig& cfg, const Medium& m) {
  CrossSection cs;
  cs.Y = cfg.num("Y", 1.0);
  if (cs.Y <= 0.0) throw ConfigError("Y must be positive");
  const std::string name = lower(cfg.str("cs", "dirichlet"));
  if (name == "dirichlet") {
    cs.bc = CrossBC::Dirichlet;
  } else if (name == "neumann") {
    cs.bc = CrossBC::Neumann;
  } else if (name == "taylor0") {
    cs.bc = CrossBC::Taylor0;
    cs.omega = m.wave() ? m.omega() : 0.0;
  } else if (name == "pml") {
    cs.bc = CrossBC::Pml;
    cs.pml.D = cfg.num("cs_pml_D", 0.1);
    cs.pml.gamma = cfg.num("cs_pml_gamma", 1.0);
    cs.pml.termination =
        parse_termination("cs_pml_end", cfg.str("cs_pml_end", "dirichlet"));
  } else {
    throw ConfigError("unknown cross-section '" + name + "'");
  }
  return cs;
}

PmlSpec parse_pml_spec(const RunConfig& cfg) {
  PmlSpec ps;
  ps.D = cfg.num("pml_D", 0.1);
  ps.gamma = cfg.num("pml_gamma", 1.0);
  ps.termination =
      parse_termination("pml_end", cfg.str("pml_end", "dirichlet"));
  if (ps.D <= 0.0) throw ConfigError("pml_D must be positive");
  return ps;
}

/// Symbols expressible without knowing the geometry; "dtn" is resolved by the
/// two-subdomain parser, which knows interface positions and outer operators.
SymbolFn parse_symbol(const RunConfig& cfg, const std::string& stem,
                      const std::string& def) {
  const std::string name = lower(cfg.str(stem, def));
  if (name == "dirichlet") return SymbolFn::dirichlet();
  if (name == "neumann") return SymbolFn::neumann();
  if (name == "taylor0") return SymbolFn::taylor0();
  if (name == "transparent") return SymbolFn::transparent();
  if (name == "robin")
    return SymbolFn::robin(cfg.complex_pair(stem + "_p", cplx(1.0, 0.0)));
  if (name == "pml") return SymbolFn::pml(parse_pml_spec(cfg));
  throw ConfigError("unknown symbol '" + name + "' for '" + stem + "'");
}

QP qp_of(const SymbolFn& f) {
  switch (f.kind()) {
    case SymbolKind::Dirichlet:
      return {cplx(0.0, 0.0), cplx(1.0, 0.0)};
    case SymbolKind::Neumann:
      return {cplx(1.0, 0.0), cplx(0.0, 0.0)};
    case SymbolKind::Robin:
      return {cplx(1.0, 0.0), f.robin_p()};
    default:
      throw ConfigError(
          "exact exterior maps need a frequency-independent outer operator");
  }
}

IterKind parse_iteration(const RunConfig& cfg, const std::string& def) {
  const std::string name = lower(cfg.str("iteration", def));
  if (name == "posm") return IterKind::POSM;
  if (name == "dosm") return IterKind::DOSM;
  if (name == "cosm") return IterKind::COSM;
  throw ConfigError("unknown iteration '" + name + "'");
}

TcPolicy parse_tc_policy(const RunConfig& cfg) {
  const std::string name = lower(cfg.str("tc_policy", "domain_average"));
  if (name == "domain_average") return TcPolicy::DomainAverage;
  if (name == "interface_value") return TcPolicy::InterfaceValue;
  if (name == "neighbor_value") return TcPolicy::NeighborValue;
  if (name == "own_value") return TcPolicy::OwnValue;
  throw ConfigError("unknown tc_policy '" + name + "'");
}

/// Transverse frequencies a command tabulates, mirroring the scan engine's
/// sampling (discrete set, or log grid plus the waveguide window).
std::vector<cplx> tabulated_freqs(const Medium& m, const CrossSection& cs,
                                  const FreqPolicy& pol, int n_used,
                                  double cap_used) {
  std::vector<cplx> ks;
  if (pol.mode == FreqPolicy::Mode::Discrete) {
    FrequencySet fs = cross_section_freqs(cs, n_used);
    ks = fs.values;
  } else {
    std::vector<double> ts = log_grid(pol.k_min, cap_used, pol.points);
    if (m.wave()) {
      const double w = m.omega();
      const int wn = 257;
      for (int i = 0; i < wn; ++i) ts.push_back(0.8 * w + 0.4 * w * i / (wn - 1));
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    for (double t : ts) ks.push_back(locus_point(cs, t));
  }
  return ks;
}

void write_pole_sidecar(const std::string& out, const RunConfig& cfg,
                        const std::vector<cplx>& poles) {
  if (poles.empty()) return;
  CsvWriter side("poles", cfg);
  side.header({"k_re", "k_im"});
  for (cplx k : poles) side.row({k.real(), k.imag()});
  side.write(out + ".poles");
}

double geometric_rate(const std::vector<double>& hist) {
  const int n = static_cast<int>(hist.size());
  if (n < 4) return std::nan("");
  const int m = n / 2;
  if (!(hist[m] > 0.0) || !(hist[n - 1] > 0.0)) return 0.0;
  return std::pow(hist[n - 1] / hist[m], 1.0 / double(n - 1 - m));
}

}  // namespace

/* ------------------------------------------------------------- RunConfig */

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    cfg.set(key, value);
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

void RunConfig::assign(const std::string& key_eq_value) {
  const std::size_t eq = key_eq_value.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("expected key=value, got: " + key_eq_value);
  set(trim(key_eq_value.substr(0, eq)), trim(key_eq_value.substr(eq + 1)));
}

bool RunConfig::has(const std::string& key) const {
  used_.insert(key);
  return kv_.count(key) != 0;
}

std::string RunConfig::str(const std::string& key,
                           const std::string& def) const {
  used_.insert(key);
  auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

double RunConfig::num(const std::string& key, double def) const {
  used_.insert(key);
  auto it = kv_.find(key);
  return it == kv_.end() ? def : parse_num(key, it->second);
}

int RunConfig::integer(const std::string& key, int def) const {
  const double v = num(key, static_cast<double>(def));
  const int i = static_cast<int>(std::llround(v));
  if (std::abs(v - i) > 1e-9)
    throw ConfigError("'" + key + "' must be an integer");
  return i;
}

bool RunConfig::flag(const std::string& key, bool def) const {
  used_.insert(key);
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  const std::string v = lower(trim(it->second));
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "' must be a boolean, got: " + it->second);
}

cplx RunConfig::complex_pair(const std::string& stem, cplx def) const {
  return {num(stem + "_re", def.real()), num(stem + "_im", def.imag())};
}

std::vector<double> RunConfig::num_list(const std::string& key) const {
  used_.insert(key);
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing required key '" + key + "'");
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_num(key, item));
  if (out.empty()) throw ConfigError("empty list for '" + key + "'");
  return out;
}

void RunConfig::finish() const {
  std::string bad;
  for (const auto& [k, v] : kv_)
    if (used_.count(k) == 0) bad += bad.empty() ? k : ", " + k;
  if (!bad.empty()) throw ConfigError("unknown keys: " + bad);
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  return {kv_.begin(), kv_.end()};
}

/* ------------------------------------------------------------- CsvWriter */

CsvWriter::CsvWriter(std::string command, const RunConfig& cfg) {
  pre_.push_back(std::string("# ") + kVersion);
  pre_.push_back("# command = " + command);
  for (const auto& [k, v] : cfg.entries())
    pre_.push_back("# cfg " + k + " = " + v);
}

void CsvWriter::meta(const std::string& key, const std::string& value) {
  pre_.push_back("# " + key + " = " + value);
}

void CsvWriter::meta(const std::string& key, double value) {
  meta(key, fmt(value));
}

void CsvWriter::header(const std::vector<std::string>& names) {
  width_ = names.size();
  std::string line;
  for (std::size_t i = 0; i < names.size(); ++i)
    line += (i ? "," : "") + names[i];
  lines_.push_back(std::move(line));
}

void CsvWriter::row(const std::vector<double>& cells) {
  if (cells.size() != width_)
    throw std::logic_error("csv row width mismatch");
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i)
    line += (i ? "," : "") + fmt(cells[i]);
  lines_.push_back(std::move(line));
}

std::string CsvWriter::text() const {
  std::string out;
  for (const std::string& l : pre_) out += l + "\n";
  for (const std::string& l : lines_) out += l + "\n";
  return out;
}

void CsvWriter::write(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file: " + path);
  out << text();
}

/* --------------------------------------------------------------- parsers */

TwoSubConfig parse_twosub(const RunConfig& cfg) {
  TwoSubConfig ts;
  ts.medium = parse_medium(cfg);
  if (cfg.has("L")) {
    const double L = cfg.num("L", 0.1);
    ts.X1r = 0.5 + 0.5 * L;
    ts.X2l = 0.5 - 0.5 * L;
  } else {
    ts.X1r = cfg.num("X1r", 0.55);
    ts.X2l = cfg.num("X2l", 0.45);
  }
  ts.outer_left = parse_symbol(cfg, "outer_left", "dirichlet");
  ts.outer_right = parse_symbol(cfg, "outer_right", "dirichlet");
  const std::string tc_def = lower(cfg.str("tc", "taylor0"));
  auto one_tc = [&](const std::string& stem, Side exterior_side, double pos,
                    const SymbolFn& outer) {
    const std::string name = lower(cfg.str(stem, tc_def));
    if (name == "dtn") return SymbolFn::dtn_bdd(exterior_side, pos, qp_of(outer));
    return parse_symbol(cfg, stem, name);
  };
  ts.trans_right_of_1 = one_tc("tc1", Side::Right, ts.X1r, ts.outer_right);
  ts.trans_left_of_2 = one_tc("tc2", Side::Left, ts.X2l, ts.outer_left);
  ts.cross_section = parse_cross_section(cfg, ts.medium);
  return ts;
}

FreqPolicy parse_policy(const RunConfig& cfg) {
  const std::string mode = lower(cfg.str("freq", "discrete"));
  FreqPolicy pol;
  if (mode == "discrete") {
    pol = FreqPolicy::discrete(cfg.integer("n_max", 64),
                               cfg.flag("auto_n", true));
    pol.n_limit = cfg.integer("n_limit", 1 << 17);
  } else if (mode == "continuous") {
    pol = FreqPolicy::continuous(cfg.num("k_min", 0.0), cfg.num("k_cap", 0.0),
                                 cfg.integer("points", 512));
    pol.geom_scale = cfg.num("geom_scale", 0.0);
  } else {
    throw ConfigError("unknown frequency mode '" + mode + "'");
  }
  return pol;
}

ChainSpec parse_chain(const RunConfig& cfg) {
  ChainSpec spec;
  spec.N = cfg.integer("N", 2);
  spec.medium = parse_medium(cfg);
  spec.L = cfg.num("L", 0.0);
  if (cfg.has("X")) {
    spec.X = cfg.num("X", 1.0);
    spec.H = cfg.has("H") ? cfg.num("H", 0.5)
                          : (spec.X - 2.0 * spec.L) / spec.N;
  } else {
    spec.H = cfg.num("H", 0.5);
    spec.X = spec.N * spec.H + 2.0 * spec.L;
  }
  spec.transmission = parse_symbol(cfg, "tc", "taylor0");
  if (cfg.has("outer")) {
    spec.outer_left = parse_symbol(cfg, "outer", "dirichlet");
    spec.outer_right = spec.outer_left;
  } else {
    spec.outer_left = parse_symbol(cfg, "outer_left", "dirichlet");
    spec.outer_right = parse_symbol(cfg, "outer_right", "dirichlet");
  }
  spec.cross_section = parse_cross_section(cfg, spec.medium);

  const std::string lm = lower(cfg.str("layered", "constant"));
  if (lm != "constant") {
    if (!cfg.has("omega"))
      throw ConfigError("layered media need an omega");
    spec.layered.omega = spec.medium.omega();
    spec.layered.X = spec.X;
    spec.layered.v1 = cfg.num("v1", 1.0);
    if (lm == "vel1") {
      spec.layered.model = LayeredMedium::Model::Vel1;
    } else if (lm == "vel2") {
      spec.layered.model = LayeredMedium::Model::Vel2;
    } else if (lm == "vell") {
      spec.layered.model = LayeredMedium::Model::VelL;
      spec.layered.l = cfg.integer("layers_l", 1);
    } else {
      throw ConfigError("unknown layered model '" + lm + "'");
    }
    spec.tc_policy = parse_tc_policy(cfg);
  }
  spec.validate();
  return spec;
}

/* -------------------------------------------------------------- commands */

int cmd_rho2(const RunConfig& cfg, std::ostream& log) {
  const TwoSubConfig ts = parse_twosub(cfg);
  const FreqPolicy pol = parse_policy(cfg);
  const std::string out = cfg.str("out", "rho2.csv");
  cfg.finish();

  const MaxRhoResult r = max_rho(ts, pol);
  CsvWriter csv("rho2", cfg);
  csv.meta("max_abs_rho", r.max_abs);
  csv.meta("argmax_k_re", r.argmax_k.real());
  csv.meta("argmax_k_im", r.argmax_k.imag());
  if (pol.mode == FreqPolicy::Mode::Discrete) {
    csv.meta("n_max_used", static_cast<double>(r.n_max_used));
    csv.meta("doubling_change", r.doubling_change);
  } else {
    csv.meta("k_cap_used", r.k_cap_used);
  }
  csv.header({"k_re", "k_im", "rho_re", "rho_im", "abs_rho"});

  std::vector<cplx> poles;
  for (cplx k :
       tabulated_freqs(ts.medium, ts.cross_section, pol, r.n_max_used,
                       r.k_cap_used)) {
    try {
      const cplx v = rho(k, ts);
      csv.row({k.real(), k.imag(), v.real(), v.imag(), std::abs(v)});
    } catch (const PoleError&) {
      poles.push_back(k);
    }
  }
  csv.meta("poles", static_cast<double>(poles.size()));
  csv.write(out);
  write_pole_sidecar(out, cfg, poles);
  log << "rho2: max|rho| = " << fmt(r.max_abs) << " at k = " << r.argmax_k
      << ", wrote " << out << "\n";
  return kExitOk;
}

int cmd_opt2(const RunConfig& cfg, std::ostream& log) {
  const TwoSubConfig base = parse_twosub(cfg);
  const std::string mode = lower(cfg.str("mode", "complex"));
  if (mode != "real" && mode != "complex")
    throw ConfigError("mode must be real or complex");
  std::vector<double> Ls = cfg.has("L_list") ? cfg.num_list("L_list")
                                             : std::vector<double>{
                                                   cfg.num("L", 0.1)};
  const auto seed = static_cast<std::uint64_t>(cfg.num("seed", 20240901));
  const bool warm = cfg.flag("warm_start", true);
  const double def_kmin =
      base.cross_section.bc == CrossBC::Dirichlet ? kPi / base.cross_section.Y
                                                  : 0.0;
  const double k_min = cfg.num("opt_k_min", def_kmin);
  FreqPolicy pol;
  if (mode == "complex") pol = parse_policy(cfg);
  const std::string out = cfg.str("out", "opt2.csv");
  cfg.finish();

  // optimize from large L down so each level warm-starts the next
  std::vector<std::size_t> order(Ls.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return Ls[a] > Ls[b]; });

  std::vector<RobinOpt> res(Ls.size());
  std::vector<cplx> starts;
  for (std::size_t idx : order) {
    if (mode == "real") {
      res[idx] = optimize_robin_real(base, Ls[idx], k_min);
    } else {
      res[idx] = optimize_robin_complex(base, Ls[idx], pol, seed,
                                        warm ? starts : std::vector<cplx>{});
      starts.assign(1, res[idx].p_star);
    }
  }

  CsvWriter csv("opt2", cfg);
  csv.meta("mode", mode);
  csv.meta("seed", static_cast<double>(seed));
  csv.header({"L", "p_re", "p_im", "max_rho", "one_minus_max_rho",
              "iterations", "fallback"});
  for (std::size_t i = 0; i < Ls.size(); ++i)
    csv.row({Ls[i], res[i].p_star.real(), res[i].p_star.imag(),
             res[i].max_abs, 1.0 - res[i].max_abs,
             static_cast<double>(res[i].iterations),
             res[i].fallback_used ? 1.0 : 0.0});
  csv.write(out);
  for (std::size_t i = 0; i < Ls.size(); ++i)
    log << "opt2: L = " << fmt(Ls[i]) << " p* = " << res[i].p_star
        << " max|rho| = " << fmt(res[i].max_abs) << "\n";
  return kExitOk;
}

int cmd_chain(const RunConfig& cfg, std::ostream& log) {
  const ChainSpec spec = parse_chain(cfg);
  const IterKind kind = parse_iteration(cfg, "dosm");
  const FreqPolicy pol = parse_policy(cfg);
  const std::string out = cfg.str("out", "chain.csv");
  cfg.finish();

  const ChainMax cm = max_rho_chain(spec, pol, kind);
  const Medium scan_m = spec.layered.model == LayeredMedium::Model::Constant
                            ? spec.medium
                            : Medium{-spec.layered.omega * spec.layered.omega};

  CsvWriter csv("chain", cfg);
  csv.meta("max_rho", cm.max_rho);
  csv.meta("argmax_xi_re", cm.argmax_xi.real());
  csv.meta("argmax_xi_im", cm.argmax_xi.imag());
  csv.meta("divergent", cm.divergent ? 1.0 : 0.0);
  if (pol.mode == FreqPolicy::Mode::Discrete)
    csv.meta("n_max_used", static_cast<double>(cm.n_max_used));
  else
    csv.meta("k_cap_used", cm.k_cap_used);
  csv.header({"xi_re", "xi_im", "radius"});

  std::vector<cplx> poles;
  for (cplx xi : tabulated_freqs(scan_m, spec.cross_section, pol,
                                 cm.n_max_used, cm.k_cap_used)) {
    try {
      const double rad = spectral_radius(iteration_matrix(kind, xi, spec).T);
      csv.row({xi.real(), xi.imag(), rad});
    } catch (const PoleError&) {
      poles.push_back(xi);
    }
  }
  csv.meta("poles", static_cast<double>(poles.size()));
  csv.write(out);
  write_pole_sidecar(out, cfg, poles);
  log << "chain: max rho = " << fmt(cm.max_rho)
      << (cm.divergent ? " (divergent)" : "") << ", wrote " << out << "\n";
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  const std::string vary = lower(cfg.str("vary", "N"));
  ScalingPlan plan;
  plan.kind = parse_iteration(cfg, "posm");
  plan.fit_one_minus = lower(cfg.str("fit_target", "one_minus")) != "rho";
  plan.jobs = std::max(1, cfg.integer("jobs", 1));
  const ChainSpec base = parse_chain(cfg);
  const std::string out = cfg.str("out", "sweep.csv");

  const bool pml_log_D =
      lower(cfg.str("pml_D_mode", "fixed")) == "log10";
  const double pml_gamma = cfg.num("pml_gamma", 1.0);
  const std::string pml_end_s = cfg.str("pml_end", "dirichlet");

  auto with_medium = [&](ChainSpec sp, double omega) {
    sp.medium = Medium{-omega * omega};
    if (sp.layered.model != LayeredMedium::Model::Constant)
      sp.layered.omega = omega;
    if (sp.cross_section.bc == CrossBC::Taylor0) sp.cross_section.omega = omega;
    return sp;
  };

  if (vary == "n") {
    const std::vector<double> Ns = cfg.num_list("N_list");
    const std::string regime = lower(cfg.str("regime", "fixed_hl"));
    const double r_LH = cfg.num("L_over_H", 0.0);
    const double omega_per_N = cfg.num("omega_per_N", 0.0);
    const double L_omega32 = cfg.num("L_omega32", 0.0);
    for (double Nd : Ns) {
      const int N = static_cast<int>(std::llround(Nd));
      ChainSpec sp = base;
      sp.N = N;
      if (omega_per_N > 0.0) sp = with_medium(sp, omega_per_N * N);
      if (regime == "fixed_hl") {
        if (L_omega32 > 0.0)
          sp.L = L_omega32 * std::pow(sp.medium.wave() ? sp.medium.omega() : 1.0,
                                      -1.5);
        sp.X = N * sp.H + 2.0 * sp.L;
      } else if (regime == "fixed_x") {
        sp.X = base.X;
        sp.H = sp.X / (N + 2.0 * r_LH);
        sp.L = r_LH * sp.H;
      } else if (regime == "fixed_x_wave") {
        sp.X = base.X;
        if (L_omega32 > 0.0)
          sp.L = L_omega32 * std::pow(sp.medium.wave() ? sp.medium.omega() : 1.0,
                                      -1.5);
        sp.H = (sp.X - 2.0 * sp.L) / N;
      } else {
        throw ConfigError("unknown regime '" + regime + "'");
      }
      if (pml_log_D) {
        PmlSpec ps;
        ps.D = std::log10(double(N)) / 10.0;
        ps.gamma = pml_gamma;
        ps.termination = parse_termination("pml_end", pml_end_s);
        sp.transmission = SymbolFn::pml(ps);
      }
      sp.layered.X = sp.X;
      sp.validate();
      plan.points.push_back({double(N), sp});
    }
  } else if (vary == "omega") {
    const std::vector<double> Ws = cfg.num_list("omega_list");
    const double L_omega = cfg.num("L_omega", 0.0);
    for (double w : Ws) {
      ChainSpec sp = with_medium(base, w);
      if (L_omega > 0.0) sp.L = L_omega / w;
      sp.H = (base.X - 2.0 * sp.L) / base.N;
      sp.X = base.X;
      sp.layered.X = sp.X;
      sp.validate();
      plan.points.push_back({w, sp});
    }
  } else {
    throw ConfigError("vary must be N or omega");
  }

  plan.freq = parse_policy(cfg);
  cfg.finish();
  if (plan.freq.mode == FreqPolicy::Mode::Continuous &&
      plan.freq.k_cap <= 0.0) {
    // one shared cap, wide enough for every point of the ladder
    double cap = 0.0;
    for (const ScalingPoint& pt : plan.points) {
      const Medium m = pt.spec.layered.model == LayeredMedium::Model::Constant
                           ? pt.spec.medium
                           : Medium{-pt.spec.layered.omega *
                                    pt.spec.layered.omega};
      const double geom = pt.spec.L > 0.0 ? 2.0 * pt.spec.L : pt.spec.H;
      cap = std::max(cap, default_k_cap(m, geom));
    }
    plan.freq.k_cap = cap;
  }

  const ScalingResult res = scaling_sweep(plan);

  CsvWriter csv("sweep", cfg);
  csv.meta("fit_valid", res.fit.valid ? 1.0 : 0.0);
  csv.meta("fit_exponent", res.fit.exponent);
  csv.meta("fit_exponent_stderr", res.fit.exponent_stderr);
  csv.meta("fit_intercept", res.fit.intercept);
  csv.meta("fit_points_used", static_cast<double>(res.fit.points_used));
  if (plan.freq.mode == FreqPolicy::Mode::Continuous)
    csv.meta("k_cap_shared", plan.freq.k_cap);
  csv.header({"param", "max_rho", "one_minus_max_rho", "divergent",
              "n_max_used"});
  for (std::size_t i = 0; i < res.param.size(); ++i)
    csv.row({res.param[i], res.max_rho[i], 1.0 - res.max_rho[i],
             res.divergent[i] ? 1.0 : 0.0,
             static_cast<double>(res.n_max_used[i])});
  csv.write(out);

  if (!res.fit.valid) {
    log << "sweep: fewer than 4 usable points, no fit\n";
    return kExitConfig;
  }
  log << "sweep: exponent = " << fmt(res.fit.exponent) << " +- "
      << fmt(res.fit.exponent_stderr) << " over " << res.fit.points_used
      << " points, wrote " << out << "\n";
  return kExitOk;
}

namespace {

std::function<cplx(double, double)> parse_source(const RunConfig& cfg) {
  const std::string name = lower(cfg.str("source", "gaussian"));
  if (name == "gaussian") {
    const double amp = cfg.num("src_amp", 100.0);
    const double width = cfg.num("src_width", 100.0);
    const double x0 = cfg.num("src_x", 0.5);
    const double y0 = cfg.num("src_y", 0.5);
    return [=](double x, double y) {
      return cplx(amp * std::exp(-width * ((x - x0) * (x - x0) +
                                           (y - y0) * (y - y0))),
                  0.0);
    };
  }
  if (name == "one")
    return [](double, double) { return cplx(1.0, 0.0); };
  if (name == "mode")
    return [](double x, double y) {
      return cplx(std::sin(kPi * x) * std::sin(kPi * y), 0.0);
    };
  throw ConfigError("unknown source '" + name + "'");
}

System2D parse_system(const RunConfig& cfg, double default_eta) {
  Medium m;
  if (cfg.has("omega")) {
    const double w = cfg.num("omega", 0.0);
    m.eta = -w * w;
  } else {
    m.eta = cfg.num("eta", default_eta);
  }
  const int nx = cfg.has("h_inv") ? cfg.integer("h_inv", 64) - 1
                                  : cfg.integer("nx", 63);
  const double Y = cfg.num("Y", 1.0);
  const Grid2D g = Y == 1.0 ? Grid2D::square(nx) : Grid2D::strip(nx, Y);
  return assemble(g, m, parse_source(cfg));
}

Decomposition parse_decomposition(const RunConfig& cfg, int def_px, int def_py,
                                  Decomposition::Kind def_kind) {
  Decomposition dec;
  const std::string kind = lower(cfg.str(
      "dec", def_kind == Decomposition::Kind::Strip ? "strip" : "checkerboard"));
  if (kind == "strip")
    dec.kind = Decomposition::Kind::Strip;
  else if (kind == "checkerboard")
    dec.kind = Decomposition::Kind::Checkerboard;
  else
    throw ConfigError("unknown decomposition '" + kind + "'");
  dec.px = cfg.integer("px", def_px);
  dec.py = cfg.integer("py", def_py);
  dec.overlap = cfg.integer("overlap", 2);
  return dec;
}

}  // namespace

int cmd_grid(const RunConfig& cfg, std::ostream& log) {
  const System2D sys = parse_system(cfg, 1.0);
  const Decomposition dec =
      parse_decomposition(cfg, 2, 1, Decomposition::Kind::Strip);
  const std::string order_s = lower(cfg.str("order", "alternating"));
  const int sweeps = cfg.integer("sweeps", 20);
  const std::string out = cfg.str("out", "grid.csv");

  DiscreteTC tc;
  const std::string tc_s = lower(cfg.str("tc", "dirichlet"));
  if (tc_s == "dirichlet") {
    tc = DiscreteTC::dirichlet();
  } else if (tc_s == "robin") {
    tc = DiscreteTC::robin(cfg.complex_pair("tc_p", cplx(1.0, 0.0)));
  } else if (tc_s == "pml") {
    tc = DiscreteTC::pml(cfg.integer("tc_layers", 8), cfg.num("tc_gamma", 1.0));
  } else {
    throw ConfigError("unknown transmission condition '" + tc_s + "'");
  }
  cfg.finish();

  CsvWriter csv("grid", cfg);
  csv.header({"sweep", "rel_error"});
  if (order_s == "dtn_schur") {
    const Eigen::VectorXcd u = dtn_schur_double_sweep(sys, dec);
    const Eigen::VectorXcd uref = reference_solution(sys);
    const double err = (u - uref).lpNorm<Eigen::Infinity>() /
                       std::max(uref.lpNorm<Eigen::Infinity>(), 1e-300);
    csv.meta("final_error", err);
    csv.row({1.0, err});
    csv.write(out);
    log << "grid: exact-closure double sweep error = " << fmt(err) << "\n";
    return kExitOk;
  }

  SweepOrder order;
  if (order_s == "parallel")
    order = SweepOrder::Parallel;
  else if (order_s == "alternating")
    order = SweepOrder::Alternating;
  else if (order_s == "double_sweep")
    order = SweepOrder::DoubleSweep;
  else
    throw ConfigError("unknown sweep order '" + order_s + "'");

  const SchwarzRun run = schwarz_run(sys, dec, tc, order, sweeps);
  for (std::size_t i = 0; i < run.error_history.size(); ++i)
    csv.row({static_cast<double>(i + 1), run.error_history[i]});
  csv.meta("final_error", run.error_history.empty()
                              ? std::nan("")
                              : run.error_history.back());
  csv.meta("contraction_estimate", geometric_rate(run.error_history));
  csv.write(out);
  log << "grid: " << sweeps << " sweeps, final error = "
      << (run.error_history.empty() ? std::string("n/a")
                                    : fmt(run.error_history.back()))
      << ", wrote " << out << "\n";
  return kExitOk;
}

int cmd_blocklu(const RunConfig& cfg, std::ostream& log) {
  const System2D sys = parse_system(cfg, 0.0);
  const Decomposition dec =
      parse_decomposition(cfg, 3, 3, Decomposition::Kind::Checkerboard);
  const std::string ord_s = lower(cfg.str("ordering", "lexicographic"));
  BlockOrdering ord;
  if (ord_s == "lexicographic")
    ord = BlockOrdering::Lexicographic;
  else if (ord_s == "l_sweep")
    ord = BlockOrdering::LSweep;
  else if (ord_s == "d_sweep")
    ord = BlockOrdering::DSweep;
  else
    throw ConfigError("unknown ordering '" + ord_s + "'");
  const std::string out = cfg.str("out", "blocklu.csv");
  cfg.finish();

  const BlockLu blu = block_lu_schwarz(sys, dec, ord);
  const Eigen::VectorXcd uref = reference_solution(sys);
  const double err = (blu.u - uref).lpNorm<Eigen::Infinity>() /
                     std::max(uref.lpNorm<Eigen::Infinity>(), 1e-300);

  CsvWriter csv("blocklu", cfg);
  csv.meta("rel_error", err);
  std::string ord_list;
  for (int b : blu.order)
    ord_list += (ord_list.empty() ? "" : " ") + std::to_string(b);
  csv.meta("elimination_order", ord_list);
  csv.header({"stage_i", "stage_j", "factor_nnz"});
  for (int i = 0; i < blu.factor_nnz.rows(); ++i)
    for (int j = 0; j < blu.factor_nnz.cols(); ++j)
      if (blu.factor_nnz(i, j) != 0)
        csv.row({static_cast<double>(i), static_cast<double>(j),
                 static_cast<double>(blu.factor_nnz(i, j))});
  csv.write(out);
  log << "blocklu: rel error = " << fmt(err) << ", wrote " << out << "\n";
  return kExitOk;
}

int run(const std::string& command, const RunConfig& cfg, std::ostream& log) {
  try {
    cfg.has("seed");
    cfg.has("jobs");
    if (command == "rho2") return cmd_rho2(cfg, log);
    if (command == "opt2") return cmd_opt2(cfg, log);
    if (command == "chain") return cmd_chain(cfg, log);
    if (command == "sweep") return cmd_sweep(cfg, log);
    if (command == "grid") return cmd_grid(cfg, log);
    if (command == "blocklu") return cmd_blocklu(cfg, log);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace schwarz::cli
