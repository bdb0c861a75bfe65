#include "elflow/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "elflow/classical.hpp"
#include "elflow/errors.hpp"
#include "elflow/spectral.hpp"

namespace elflow {

using nlohmann::json;

std::string to_string(InitialKind k) {
  switch (k) {
    case InitialKind::TaylorGreen: return "taylor_green";
    case InitialKind::ABC: return "abc";
    case InitialKind::RandomBandlimited: return "random_bandlimited";
  }
  return "taylor_green";
}

static InitialKind initial_kind_from_string(const std::string& s) {
  if (s == "taylor_green") return InitialKind::TaylorGreen;
  if (s == "abc") return InitialKind::ABC;
  if (s == "random_bandlimited") return InitialKind::RandomBandlimited;
  throw ConfigError("unknown initial condition: " + s);
}

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::Classical: return "classical";
    case RunMode::EL: return "el";
    case RunMode::Cotangent: return "cotangent";
  }
  return "el";
}

RunMode run_mode_from_string(const std::string& s) {
  if (s == "classical") return RunMode::Classical;
  if (s == "el") return RunMode::EL;
  if (s == "cotangent") return RunMode::Cotangent;
  throw ConfigError("unknown mode: " + s);
}

namespace {

/// A JSON object whose keys are consumed one by one; leftovers are errors.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError((path_.empty() ? "config" : path_) + " must be an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void get(const std::string& key, T& out) {
    const json* v = find(key);
    if (!v) return;
    const std::string where = path_ + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v->is_boolean()) throw ConfigError(where + " must be a boolean");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v->is_number_unsigned()) throw ConfigError(where + " must be a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer()) throw ConfigError(where + " must be an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) throw ConfigError(where + " must be a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v->is_string()) throw ConfigError(where + " must be a string");
    }
    out = v->get<T>();
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.contains(item.key())) throw ConfigError("unknown key " + path_ + item.key());
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string potential_to_string(PotentialMode m) { return m == PotentialMode::Static ? "static" : "dynamic"; }

}  // namespace

RunConfig parse_config(const json& j) {
  RunConfig c;
  Section top(j, "");
  if (const json* g = top.find("grid")) {
    Section s(*g, "grid.");
    s.get("dim", c.dim);
    s.get("n", c.n);
    s.get("L", c.L);
    s.finish();
  }
  top.get("nu", c.nu);
  top.get("dt", c.dt);
  top.get("cfl", c.cfl_target);
  top.get("t_end", c.t_end);
  if (const json* ic = top.find("initial")) {
    Section s(*ic, "initial.");
    std::string kind = to_string(c.initial.kind);
    s.get("kind", kind);
    c.initial.kind = initial_kind_from_string(kind);
    s.get("seed", c.initial.seed);
    s.get("band", c.initial.band);
    s.get("amplitude", c.initial.amplitude);
    s.finish();
  }
  if (const json* f = top.find("forcing")) {
    Section s(*f, "forcing.");
    std::string kind = to_string(c.forcing.kind);
    s.get("kind", kind);
    c.forcing.kind = forcing_kind_from_string(kind);
    s.get("amplitude", c.forcing.amplitude);
    s.get("wavenumber", c.forcing.wavenumber);
    s.finish();
  }
  std::string mode = to_string(c.mode);
  top.get("mode", mode);
  c.mode = run_mode_from_string(mode);
  std::string potential = potential_to_string(c.potential_mode);
  top.get("potential_mode", potential);
  if (potential == "static")
    c.potential_mode = PotentialMode::Static;
  else if (potential == "dynamic")
    c.potential_mode = PotentialMode::Dynamic;
  else
    throw ConfigError("potential_mode must be static or dynamic");
  if (const json* r = top.find("reset")) {
    Section s(*r, "reset.");
    s.get("enabled", c.reset_enabled);
    s.get("threshold", c.reset_threshold);
    s.finish();
  }
  top.get("cadence", c.cadence);
  top.get("snapshots", c.snapshots);
  if (const json* m = top.find("m_values")) {
    if (!m->is_array()) throw ConfigError("m_values must be an array");
    c.m_values.clear();
    for (const json& v : *m) {
      if (!v.is_number_integer()) throw ConfigError("m_values must hold integers");
      c.m_values.push_back(v.get<int>());
    }
  }
  top.get("C0", c.C0);
  top.get("C_K", c.C_K);
  if (const json* p = top.find("pair_dispersion")) {
    Section s(*p, "pair_dispersion.");
    s.get("samples", c.mc_samples);
    s.get("seed", c.mc_seed);
    s.get("delta0", c.delta0);
    s.finish();
  }
  top.get("bounds", c.bounds);
  top.get("identity_seed", c.identity_seed);
  if (const json* g = top.find("gauge_seed")) {
    if (!g->is_number_unsigned()) throw ConfigError("gauge_seed must be a non-negative integer");
    c.gauge_seed = g->get<std::uint64_t>();
  }
  if (const json* cmp = top.find("compare")) {
    Section s(*cmp, "compare.");
    s.get("pair", c.compare);
    s.get("tolerance", c.compare_tolerance);
    if (const json* dirs = s.find("dirs")) {
      if (!dirs->is_array() || dirs->size() != 2) throw ConfigError("compare.dirs must list two run directories");
      for (const json& d : *dirs) c.compare_dirs.emplace_back(d.get<std::string>());
    }
    s.finish();
  }
  std::string out;
  top.get("output_dir", out);
  c.output_dir = out;
  top.finish();
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json j{{"grid", {{"dim", c.dim}, {"n", c.n}, {"L", c.L}}},
         {"nu", c.nu},
         {"t_end", c.t_end},
         {"initial",
          {{"kind", to_string(c.initial.kind)},
           {"seed", c.initial.seed},
           {"band", c.initial.band},
           {"amplitude", c.initial.amplitude}}},
         {"forcing",
          {{"kind", to_string(c.forcing.kind)},
           {"amplitude", c.forcing.amplitude},
           {"wavenumber", c.forcing.wavenumber}}},
         {"mode", to_string(c.mode)},
         {"potential_mode", potential_to_string(c.potential_mode)},
         {"reset", {{"enabled", c.reset_enabled}, {"threshold", c.reset_threshold}}},
         {"cadence", c.cadence},
         {"snapshots", c.snapshots},
         {"m_values", c.m_values},
         {"C0", c.C0},
         {"C_K", c.C_K},
         {"pair_dispersion", {{"samples", c.mc_samples}, {"seed", c.mc_seed}, {"delta0", c.delta0}}},
         {"bounds", c.bounds},
         {"identity_seed", c.identity_seed},
         {"compare", {{"pair", c.compare}, {"tolerance", c.compare_tolerance}}}};
  if (c.dt > 0.0) j["dt"] = c.dt;
  if (c.cfl_target > 0.0) j["cfl"] = c.cfl_target;
  if (c.gauge_seed) j["gauge_seed"] = *c.gauge_seed;
  if (!c.compare_dirs.empty()) {
    json dirs = json::array();
    for (const auto& d : c.compare_dirs) dirs.push_back(d.string());
    j["compare"]["dirs"] = dirs;
  }
  return j;
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(c.dim == 2 || c.dim == 3, "grid.dim must be 2 or 3");
  require(c.n >= 8 && c.n % 2 == 0, "grid.n must be even and at least 8");
  require(c.L > 0.0, "grid.L must be positive");
  require(c.nu >= 0.0, "nu must be non-negative");
  require((c.dt > 0.0) != (c.cfl_target > 0.0), "exactly one of dt and cfl must be positive");
  require(c.t_end > 0.0, "t_end must be positive");
  require(c.cadence >= 1, "cadence must be at least 1");
  require(c.snapshots == "all" || c.snapshots == "final" || c.snapshots == "none",
          "snapshots must be all, final or none");
  for (int m : c.m_values) require(m >= 1, "m_values entries must be at least 1");
  require(c.C0 > 0.0 && c.C_K > 0.0, "C0 and C_K must be positive");
  require(c.mc_samples >= 2, "pair_dispersion.samples must be at least 2");
  require(c.delta0 >= 0.0, "pair_dispersion.delta0 must be non-negative");
  require(c.initial.amplitude >= 0.0, "initial.amplitude must be non-negative");
  require(c.initial.band > 0.0 && c.initial.band <= Grid(c.dim, c.n, c.L).dealias_cutoff(),
          "initial.band must lie in (0, dealiasing cutoff]");
  require(c.initial.kind != InitialKind::ABC || c.dim == 3, "abc initial condition needs dim = 3");
  require(c.forcing.wavenumber >= 1 && 2 * c.forcing.wavenumber <= Grid(c.dim, c.n, c.L).dealias_cutoff(),
          "forcing.wavenumber must be resolved after dealiasing");
  require(c.reset_threshold > 0.0 && c.reset_threshold < 1.0, "reset.threshold must lie in (0, 1)");
  require(!(c.bounds && c.reset_enabled), "reset.enabled must be false when bound assertions are requested");
  require(!(c.bounds && c.nu <= 0.0), "bound assertions need nu > 0");
  require(c.compare == "el_vs_classical" || c.compare == "el_vs_cotangent" || c.compare == "gauge",
          "compare.pair must be el_vs_classical, el_vs_cotangent or gauge");
  require(c.compare_tolerance >= 0.0, "compare.tolerance must be non-negative");
}

VectorField make_initial(const InitialCondition& ic, const Grid& grid) {
  const double k = 2.0 * std::numbers::pi / grid.length();
  const double a = ic.amplitude;
  switch (ic.kind) {
    case InitialKind::TaylorGreen:
      if (grid.dim() == 2)
        return sample_vector(grid, [=](const auto& x) {
          return std::array<double, 3>{a * std::sin(k * x[0]) * std::cos(k * x[1]),
                                       -a * std::cos(k * x[0]) * std::sin(k * x[1]), 0.0};
        });
      return sample_vector(grid, [=](const auto& x) {
        return std::array<double, 3>{a * std::sin(k * x[0]) * std::cos(k * x[1]) * std::cos(k * x[2]),
                                     -a * std::cos(k * x[0]) * std::sin(k * x[1]) * std::cos(k * x[2]), 0.0};
      });
    case InitialKind::ABC:
      if (grid.dim() != 3) throw ConfigError("abc initial condition needs dim = 3");
      return sample_vector(grid, [=](const auto& x) {
        return std::array<double, 3>{a * (std::sin(k * x[2]) + std::cos(k * x[1])),
                                     a * (std::sin(k * x[0]) + std::cos(k * x[2])),
                                     a * (std::sin(k * x[1]) + std::cos(k * x[0]))};
      });
    case InitialKind::RandomBandlimited: {
      const VectorField u = leray_project(band_limited_noise<1>(grid, ic.band, ic.seed));
      const double r = rms(u);
      if (r == 0.0) throw ConfigError("initial.band admits no modes");
      return (a / r) * u;
    }
  }
  throw ConfigError("unknown initial condition");
}

ScalarField gauge_potential(const Grid& grid, const VectorField& u0, std::uint64_t seed) {
  const ScalarField phi = band_limited_noise<0>(grid, 2.0, seed);
  return (l2_norm(u0) / l2_norm(gradient(phi))) * phi;
}

StepPlan plan_steps(const RunConfig& c, const VectorField& u0) {
  double dt = c.dt;
  if (dt <= 0.0) {
    const double umax = sup_norm(u0);
    dt = umax > 0.0 ? c.cfl_target * u0.grid().spacing() / umax : c.t_end;
  }
  StepPlan p;
  p.steps = std::max(1, static_cast<int>(std::ceil(c.t_end / dt - 1e-9)));
  p.dt = c.t_end / p.steps;
  return p;
}

namespace {

RunFailure describe_failure(const Error& e, double t) {
  std::string type = "solver";
  if (dynamic_cast<const CflError*>(&e)) type = "cfl";
  if (dynamic_cast<const BlowUpError*>(&e)) type = "blowup";
  if (dynamic_cast<const SingularMapError*>(&e)) type = "singular_map";
  return {type, e.what(), t};
}

bool record_due(int step, const StepPlan& p, int cadence) { return step % cadence == 0 || step == p.steps; }

}  // namespace

RunResult simulate(const RunConfig& c, RunMode mode, const ELObserver& observer) {
  validate(c);
  const Grid grid = c.grid();
  const VectorField u0 = make_initial(c.initial, grid);
  const FlowParams params{c.nu, c.forcing};

  RunResult r;
  r.mode = mode;
  r.plan = plan_steps(c, u0);
  r.history = History{c.dim, c.L, c.m_values, {}};
  StepLimits limits;
  limits.reference_rms = rms(u0);
  const double eps_B = c.nu > 0.0 ? c.forcing.mean_square_inverse_gradient(c.dim, c.L) / c.nu : 0.0;

  double t = 0.0;
  try {
    switch (mode) {
      case RunMode::Classical: {
        NSState s{0.0, u0};
        for (int step = 0;; ++step) {
          t = s.t;
          if (record_due(step, r.plan, c.cadence)) {
            r.history.records.push_back(record(s.u, s.t, c.nu));
            r.output_times.push_back(s.t);
            r.u.push_back(s.u);
          }
          if (step == r.plan.steps) break;
          s = ns_step(s, params, r.plan.dt, limits);
          s.t = (step + 1) * r.plan.dt;
        }
        break;
      }
      case RunMode::Cotangent: {
        CotangentState s{0.0, u0};
        for (int step = 0;; ++step) {
          t = s.t;
          if (record_due(step, r.plan, c.cadence)) {
            const VectorField u = leray_project(s.w);
            r.history.records.push_back(record(u, s.t, c.nu));
            r.output_times.push_back(s.t);
            r.u.push_back(u);
            r.w.push_back(s.w);
          }
          if (step == r.plan.steps) break;
          s = cotangent_step(s, params, r.plan.dt, limits);
          s.t = (step + 1) * r.plan.dt;
        }
        break;
      }
      case RunMode::EL: {
        ELState s = make_el_state(u0, c.potential_mode);
        if (c.gauge_seed) s = gauge_transform(s, gauge_potential(grid, u0, *c.gauge_seed));
        ELStepOptions opts;
        opts.limits = limits;
        opts.reset_enabled = c.reset_enabled;
        opts.reset_threshold = c.reset_threshold;
        double E0 = 0.0;
        for (int step = 0;; ++step) {
          t = s.t;
          if (record_due(step, r.plan, c.cadence)) {
            r.history.records.push_back(record(s, params, c.m_values));
            if (step == 0) E0 = r.history.records.back().energy;
            const ELDerived d = el_derive(s, 0.0);
            r.output_times.push_back(s.t);
            r.u.push_back(d.u);
            r.w.push_back(d.w);
            if (c.bounds)
              r.dispersion.push_back(
                  pair_dispersion(s.ell, c.delta0_or_default(), c.mc_samples, c.mc_seed, E0, eps_B, s.t));
            if (observer) observer(s);
          }
          r.final_el = s;
          if (step == r.plan.steps) break;
          s = el_step(s, params, r.plan.dt, opts);
          s.t = (step + 1) * r.plan.dt;
        }
        break;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    r.failure = describe_failure(e, t);
  }
  return r;
}

ComparisonReport compare_runs(const std::vector<double>& ta, const std::vector<VectorField>& ua,
                              const std::vector<double>& tb, const std::vector<VectorField>& ub) {
  if (ta.size() != tb.size() || ua.size() != ta.size() || ub.size() != tb.size())
    throw ConfigError("runs have different numbers of outputs");
  ComparisonReport rep;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (std::abs(ta[i] - tb[i]) > 1e-9 * std::max(1.0, std::abs(tb[i])))
      throw ConfigError("output times differ at index " + std::to_string(i));
    if (!(ua[i].grid() == ub[i].grid())) throw ConfigError("runs use different grids");
    const VectorField diff = ua[i] - ub[i];
    auto ratio = [](double num, double den) {
      return den > 0.0 ? num / den : (num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    };
    rep.t.push_back(tb[i]);
    rep.rel_l2.push_back(ratio(l2_norm(diff), l2_norm(ub[i])));
    rep.rel_inf.push_back(ratio(sup_norm(diff), sup_norm(ub[i])));
    rep.max_rel_l2 = std::max(rep.max_rel_l2, rep.rel_l2.back());
    rep.max_rel_inf = std::max(rep.max_rel_inf, rep.rel_inf.back());
  }
  return rep;
}

void to_json(json& j, const ComparisonReport& r) {
  j = json{{"t", r.t},
           {"rel_l2", r.rel_l2},
           {"rel_inf", r.rel_inf},
           {"max_rel_l2", r.max_rel_l2},
           {"max_rel_inf", r.max_rel_inf}};
}

StoredRun load_run(const std::filesystem::path& dir) {
  std::ifstream in(dir / "run.json");
  if (!in) throw ConfigError("no run.json in " + dir.string());
  const json j = json::parse(in);
  StoredRun s;
  for (const json& snap : j.at("snapshots")) {
    if (snap.at("name") != "u") continue;
    s.t.push_back(snap.at("t").get<double>());
    s.u.push_back(snapshot_to_vector(read_snapshot(dir / snap.at("file").get<std::string>())));
  }
  if (s.t.empty()) throw ConfigError(dir.string() + " holds no velocity snapshots");
  return s;
}

namespace {

ScalarField unit_rms(ScalarField f) { return (1.0 / rms(f)) * f; }

}  // namespace

IdentitySuiteResult verify_identities(const RunConfig& c) {
  validate(c);
  const Grid grid = c.grid();
  const double band = corpus_band(c.n);
  IdentitySuiteResult out;
  out.reports = run_identity_suite(grid, band, c.identity_seed);

  // Evolve a random flow until the labels carry a moderate strain, sampling
  // the conditioning of ∇A on the way.
  const FlowParams params{c.nu, c.forcing};
  VectorField u0 = leray_project(band_limited_noise<1>(grid, band, c.identity_seed + 2));
  u0 = (1.0 / rms(u0)) * u0;
  ELStepOptions opts;
  opts.reset_enabled = false;
  ELState s = make_el_state(u0);
  std::vector<ZSample> z{z_sample(s)};
  for (int step = 0; step < 1000 && label_strain(s.ell) < 0.1; ++step) {
    s = el_step(s, params, 5e-3, opts);
    z.push_back(z_sample(s));
  }
  out.z_stability = check_Z_stability(z);

  const ScalarField g = unit_rms(band_limited_noise<0>(grid, band, c.identity_seed + 8));
  const double dts[] = {4e-3, 2e-3, 1e-3};
  out.studies.push_back(gamma_commutation_study(s, g, params, dts));
  out.studies.push_back(C_evolution_study(s, params, dts));

  out.pass = out.z_stability.pass;
  for (const IdentityReport& r : out.reports) out.pass &= r.pass;
  for (const ConvergenceStudy& st : out.studies) out.pass &= st.pass;
  return out;
}

void to_json(json& j, const IdentitySuiteResult& r) {
  j = json{{"pass", r.pass}, {"reports", r.reports}, {"studies", r.studies}, {"z_stability", r.z_stability}};
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

namespace {

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

ArtifactWriter::ArtifactWriter(std::filesystem::path dir, const RunConfig& config)
    : dir_(std::move(dir)), config_hash_(sha256_hex(to_json(config).dump())) {
  if (dir_.empty()) throw ConfigError("no output directory given");
  std::filesystem::create_directories(dir_);
}

void ArtifactWriter::add(const std::string& relative) {
  if (std::find(files_.begin(), files_.end(), relative) == files_.end()) files_.push_back(relative);
}

void ArtifactWriter::write_text(const std::string& relative, const std::string& content) {
  const std::filesystem::path p = dir_ / relative;
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw Error("cannot write " + p.string());
  add(relative);
}

void ArtifactWriter::write_json(const std::string& relative, const json& j) {
  write_text(relative, j.dump(2) + "\n");
}

void ArtifactWriter::write_field(const std::string& relative, const Snapshot& snap) {
  const std::filesystem::path p = dir_ / relative;
  std::filesystem::create_directories(p.parent_path());
  write_snapshot(p, snap);
  add(relative);
}

void ArtifactWriter::finish() {
  std::vector<std::string> sorted = files_;
  std::sort(sorted.begin(), sorted.end());
  json files = json::array();
  for (const std::string& f : sorted) {
    const std::string bytes = read_bytes(dir_ / f);
    files.push_back({{"path", f}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  }
  std::ofstream out(dir_ / "manifest.json", std::ios::binary);
  out << json{{"config_sha256", config_hash_}, {"files", files}}.dump(2) << "\n";
}

void write_run(ArtifactWriter& out, const RunConfig& c, const RunResult& r, const std::string& prefix) {
  std::ostringstream csv;
  write_csv(csv, r.history);
  out.write_text(prefix + "timeseries.csv", csv.str());

  json snaps = json::array();
  auto emit = [&](const std::string& name, std::size_t index, const Snapshot& s) {
    char file[64];
    std::snprintf(file, sizeof file, "snapshots/%s_%06zu.snap", name.c_str(), index);
    out.write_field(prefix + file, s);
    snaps.push_back({{"name", name}, {"t", s.time}, {"file", file}});
  };
  for (std::size_t i = 0; i < r.u.size(); ++i) {
    const bool last = i + 1 == r.u.size();
    if (c.snapshots == "all" || (c.snapshots == "final" && last)) emit("u", i, make_snapshot(r.u[i], "u", r.output_times[i]));
  }
  if (r.final_el && c.snapshots != "none") {
    const std::size_t last = r.u.size() - 1;
    emit("ell", last, make_snapshot(r.final_el->ell, "ell", r.final_el->t));
    emit("v", last, make_snapshot(r.final_el->v, "v", r.final_el->t));
  }

  json run{{"mode", to_string(r.mode)},
           {"dt", r.plan.dt},
           {"steps", r.plan.steps},
           {"records", r.history.records.size()},
           {"t_final", r.output_times.empty() ? 0.0 : r.output_times.back()},
           {"snapshots", snaps},
           {"status", r.failure ? "failed" : "ok"},
           {"config", to_json(c)}};
  if (r.final_el) run["reset_count"] = r.final_el->reset_count;
  if (r.failure) run["failure"] = {{"type", r.failure->type}, {"message", r.failure->message}, {"t", r.failure->t}};
  out.write_json(prefix + "run.json", run);
}

int command_run(const RunConfig& c) {
  const RunResult r = simulate(c, c.mode);
  ArtifactWriter out(c.output_dir, c);
  write_run(out, c, r);
  out.finish();
  return r.failure ? kExitSolver : kExitOk;
}

int command_compare(const RunConfig& c) {
  ArtifactWriter out(c.output_dir, c);
  json report;
  ComparisonReport cmp;
  bool failed = false;
  if (!c.compare_dirs.empty()) {
    const StoredRun a = load_run(c.compare_dirs[0]);
    const StoredRun b = load_run(c.compare_dirs[1]);
    cmp = compare_runs(a.t, a.u, b.t, b.u);
    report["pair"] = "stored";
  } else {
    RunConfig ca = c, cb = c;
    RunMode ma = RunMode::EL, mb = RunMode::Classical;
    if (c.compare == "el_vs_cotangent") mb = RunMode::Cotangent;
    if (c.compare == "gauge") {
      mb = RunMode::EL;
      ca.gauge_seed.reset();
      cb.gauge_seed = c.gauge_seed.value_or(c.identity_seed);
    }
    const RunResult a = simulate(ca, ma);
    const RunResult b = simulate(cb, mb);
    write_run(out, ca, a, "a/");
    write_run(out, cb, b, "b/");
    failed = a.failure || b.failure;
    if (!failed) {
      // The cotangent pair is compared in w, the variable it evolves.
      cmp = c.compare == "el_vs_cotangent" ? compare_runs(a.output_times, a.w, b.output_times, b.w)
                                           : compare_runs(a.output_times, a.u, b.output_times, b.u);
    }
    report["pair"] = c.compare;
    report["variable"] = c.compare == "el_vs_cotangent" ? "w" : "u";
  }
  report["status"] = failed ? "failed" : "ok";
  if (!failed) report["comparison"] = cmp;
  const bool within = c.compare_tolerance <= 0.0 || cmp.max_rel_l2 < c.compare_tolerance;
  report["tolerance"] = c.compare_tolerance;
  report["pass"] = !failed && within;
  out.write_json("comparison.json", report);
  out.finish();
  if (failed) return kExitSolver;
  return within ? kExitOk : kExitAssertion;
}

int command_verify_identities(const RunConfig& c) {
  const IdentitySuiteResult r = verify_identities(c);
  ArtifactWriter out(c.output_dir, c);
  out.write_json("identities.json", r);
  out.finish();
  return r.pass ? kExitOk : kExitAssertion;
}

namespace {

RunConfig with_bounds(RunConfig c) {
  c.bounds = true;
  c.mode = RunMode::EL;
  validate(c);
  return c;
}

}  // namespace

int command_bounds_report(const RunConfig& config) {
  const RunConfig c = with_bounds(config);
  const RunResult r = simulate(c, RunMode::EL);
  ArtifactWriter out(c.output_dir, c);
  write_run(out, c, r);
  if (r.failure) {
    out.finish();
    return kExitSolver;
  }
  const BoundSuite suite = run_bound_suite(r.history, {c.nu, c.forcing, c.C_K, c.C0});
  bool pass = suite.pass;
  for (const DispersionReport& d : r.dispersion) pass &= d.pass;
  out.write_json("bounds.json", json{{"pass", pass}, {"suite", suite}, {"pair_dispersion", r.dispersion}});
  out.finish();
  return pass ? kExitOk : kExitAssertion;
}

int command_pair_dispersion(const RunConfig& config) {
  const RunConfig c = with_bounds(config);
  const RunResult r = simulate(c, RunMode::EL);
  ArtifactWriter out(c.output_dir, c);
  write_run(out, c, r);
  bool pass = !r.failure;
  for (const DispersionReport& d : r.dispersion) pass &= d.pass;
  out.write_json("pair_dispersion.json", json{{"pass", pass}, {"reports", r.dispersion}});
  out.finish();
  if (r.failure) return kExitSolver;
  return pass ? kExitOk : kExitAssertion;
}

}  // namespace elflow
