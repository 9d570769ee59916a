#include "dephase/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "dephase/constants.hpp"
#include "dephase/error.hpp"
#include "dephase/filter.hpp"
#include "dephase/noise.hpp"
#include "dephase/optimizer.hpp"
#include "dephase/oracle.hpp"
#include "dephase/pulse.hpp"
#include "dephase/rb.hpp"
#include "dephase/rng.hpp"
#include "dephase/spectrum.hpp"
#include "dephase/trap.hpp"

namespace dephase::cli {

namespace {

using json = nlohmann::ordered_json;
using constants::two_pi;

constexpr const char* kVersion = "0.1.0";
constexpr const char* kManifest = "manifest.json";
constexpr const char* kCsvComment = "manifest: manifest.json";

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  fail(ErrorKind::InvalidArgument, path + ": " + msg);
}

// Typed, path-aware view of one config object. Unknown keys are rejected by
// done() so typos surface as validation errors.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) bad(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) bad(where(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) bad(where(key), "must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : (used_.insert(key), fallback);
  }
  double positive(const std::string& key) {
    const double x = number(key);
    if (!(x > 0.0)) bad(where(key), "must be positive");
    return x;
  }
  double positive(const std::string& key, double fallback) {
    return has(key) ? positive(key) : (used_.insert(key), fallback);
  }
  double non_negative(const std::string& key, double fallback) {
    const double x = number(key, fallback);
    if (x < 0.0) bad(where(key), "must be >= 0");
    return x;
  }
  std::size_t count(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      bad(where(key), "expected a non-negative integer");
    }
    return v.get<std::size_t>();
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    return has(key) ? count(key) : (used_.insert(key), fallback);
  }
  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) bad(where(key), "expected true or false");
    return v.get<bool>();
  }
  std::string text(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) bad(where(key), "expected a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : (used_.insert(key), fallback);
  }
  std::vector<double> numbers(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) bad(where(key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) bad(where(key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<std::size_t> counts(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) bad(where(key), "expected an array of integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() < 0) {
        bad(where(key), "expected an array of non-negative integers");
      }
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }
  Block child(const std::string& key) { return Block(at(key), where(key)); }
  const json& raw(const std::string& key) { return at(key); }

  void done() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) bad(where(k), "unknown field");
    }
  }

 private:
  std::string where(const std::string& key) const { return path_ + "." + key; }
  const json& at(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) bad(where(key), "missing required field");
    return j_.at(key);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

struct Context {
  json config;  // resolved
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format;  // csv | json
  std::string subcommand;
};

struct Outputs {
  std::vector<std::pair<std::string, std::string>> files;
  std::string summary;
  void add(std::string name, std::string body) {
    files.emplace_back(std::move(name), std::move(body));
  }
};

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(12) << x;
  return s.str();
}

// ---- shared blocks ---------------------------------------------------------

noise::NoiseSpectrum parse_spectrum(Block b) {
  const std::string kind = b.text("kind");
  const bool has_t2 = b.has("t2_s");
  if (has_t2 && b.has("strength")) {
    bad(b.path(), "give either strength or t2_s, not both");
  }
  const double strength = b.non_negative("strength", 1.0);
  std::optional<double> t2;
  if (has_t2) t2 = b.positive("t2_s");

  noise::SpectrumShape shape;
  if (kind == "ambient") {
    noise::AmbientPowerLaw s;
    s.exponent = b.number("exponent", 4.0);
    s.low_cutoff = two_pi * b.non_negative("low_cutoff_hz", 0.0);
    if (b.has("high_cutoff_hz")) s.high_cutoff = two_pi * b.positive("high_cutoff_hz");
    s.line_fwhm_hz = b.positive("line_fwhm_hz", 1.0);
    if (b.has("lines")) {
      const json& lines = b.raw("lines");
      if (!lines.is_array()) bad(b.path() + ".lines", "expected an array");
      for (std::size_t i = 0; i < lines.size(); ++i) {
        Block l(lines[i], b.path() + ".lines[" + std::to_string(i) + "]");
        s.lines.push_back({two_pi * l.positive("center_hz"),
                           l.non_negative("weight", 0.0)});
        l.done();
      }
    }
    shape = s;
  } else if (kind == "ohmic") {
    shape = noise::OhmicSharpCutoff{two_pi * b.positive("high_cutoff_hz")};
  } else if (kind == "white") {
    shape = noise::White{};
  } else if (kind == "tabulated") {
    if (b.has("file")) {
      const std::string path = b.text("file");
      if (!std::filesystem::exists(path)) bad(b.path() + ".file", "no such file " + path);
      shape = noise::read_tabulated_file(path);
    } else {
      shape = noise::Tabulated{b.numbers("omega"), b.numbers("value")};
    }
  } else {
    bad(b.path() + ".kind", "expected ambient, ohmic, white or tabulated");
  }
  b.done();
  noise::NoiseSpectrum spec(shape, strength);
  if (t2) {
    const double c = filter::chi_shape(pulse::ramsey(), *t2, spec).chi;
    if (!(c > 0.0)) bad(b.path() + ".t2_s", "spectrum gives no Ramsey decay");
    spec = spec.with_strength(1.0 / c);
  }
  return spec;
}

struct NamedSequence {
  std::string label;
  pulse::PulseSequence sequence;
};

NamedSequence parse_sequence(Block b) {
  const std::string kind = b.text("kind");
  const double width = b.non_negative("pulse_width_s", 0.0);
  NamedSequence s;
  if (kind == "ramsey") {
    s = {"ramsey", pulse::ramsey()};
  } else if (kind == "hahn") {
    s = {"hahn", pulse::cpmg(1, width)};
  } else if (kind == "cpmg" || kind == "udd") {
    const std::size_t n = b.count("n");
    if (n < 1) bad(b.path() + ".n", "must be >= 1");
    s = {kind + std::to_string(n),
         kind == "cpmg" ? pulse::cpmg(n, width) : pulse::udd(n, width)};
  } else if (kind == "custom") {
    s = {"custom", pulse::custom(b.numbers("positions"), width)};
  } else {
    bad(b.path() + ".kind", "expected ramsey, hahn, cpmg, udd or custom");
  }
  s.label = b.text("label", s.label);
  b.done();
  return s;
}

std::vector<NamedSequence> parse_sequences(Block& root) {
  std::vector<NamedSequence> out;
  if (root.has("sequences")) {
    const json& arr = root.raw("sequences");
    if (!arr.is_array() || arr.empty()) bad("sequences", "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(parse_sequence(Block(arr[i], "sequences[" + std::to_string(i) + "]")));
    }
  } else {
    out.push_back(parse_sequence(root.child("sequence")));
  }
  std::map<std::string, int> seen;
  for (auto& s : out) {
    if (seen[s.label]++ > 0) s.label += "_" + std::to_string(seen[s.label] - 1);
  }
  return out;
}

std::vector<double> parse_grid(Block b) {
  std::vector<double> tau;
  if (b.has("tau_s")) {
    tau = b.numbers("tau_s");
  } else {
    const double lo = b.positive("tau_min_s");
    const double hi = b.positive("tau_max_s");
    const std::size_t n = b.count("points");
    const std::string spacing = b.text("spacing", "log");
    if (n < 1) bad(b.path() + ".points", "must be >= 1");
    if (!(hi > lo) && n > 1) bad(b.path() + ".tau_max_s", "must exceed tau_min_s");
    if (spacing == "log") {
      tau = filter::logspace(lo, hi, n);
    } else if (spacing == "linear") {
      tau = filter::linspace(lo, hi, n);
    } else {
      bad(b.path() + ".spacing", "expected log or linear");
    }
  }
  b.done();
  if (tau.empty()) bad(b.path(), "grid is empty");
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!(tau[i] > 0.0)) bad(b.path() + ".tau_s", "durations must be positive");
    if (i > 0 && !(tau[i] > tau[i - 1])) bad(b.path() + ".tau_s", "durations must be ascending");
  }
  return tau;
}

json spectrum_record(const noise::NoiseSpectrum& s) {
  return json{{"kind", s.kind_name()}, {"strength", s.strength()}};
}

json curve_json(const std::string& label, const filter::CoherenceCurve& c) {
  return json{{"label", label},
              {"method", c.method == filter::Method::Analytic ? "analytic" : "montecarlo"},
              {"tau", c.tau},
              {"chi", c.chi},
              {"W", c.coherence},
              {"uncertainty", c.uncertainty}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---- subcommands -----------------------------------------------------------

Outputs cmd_trap(const Context& ctx) {
  Block root(ctx.config, "config");
  Block t = root.child("trap");
  const double q = constants::elementary_charge * t.number("charge_e", 1.0);
  const double m = constants::atomic_mass_unit * t.positive("mass_amu", constants::beryllium9_mass_amu);
  const double b0 = t.positive("field_tesla");
  const double u0 = t.number("voltage_v");
  std::optional<trap::TrapConfig> cfg;
  if (t.has("geometry_factor_m2")) {
    cfg = trap::TrapConfig::from_geometry_factor(q, m, b0, u0, t.positive("geometry_factor_m2"));
  } else if (t.has("ring_radius_m") || t.has("endcap_distance_m")) {
    cfg = trap::TrapConfig(q, m, b0, u0, t.non_negative("ring_radius_m", 0.0),
                           t.non_negative("endcap_distance_m", 0.0));
  } else {
    bad("config.trap.geometry_factor_m2",
        "missing required field (or ring_radius_m and endcap_distance_m)");
  }
  std::optional<trap::PlasmaState> plasma;
  double threshold = trap::default_crystallization_threshold;
  if (t.has("plasma")) {
    Block p = t.child("plasma");
    plasma = trap::PlasmaState{p.positive("density_m3"), p.positive("temperature_k")};
    threshold = p.positive("threshold", threshold);
    p.done();
  }
  std::optional<double> rotation;
  if (t.has("rotation_frequency_hz")) rotation = two_pi * t.positive("rotation_frequency_hz");
  std::optional<trap::FieldGradientModel> grad;
  double z_mm = 0.0, r_mm = 0.0;
  if (t.has("gradients")) {
    Block g = t.child("gradients");
    grad = trap::FieldGradientModel{g.number("axial_hz_per_mm", 0.0),
                                    g.number("transverse_hz_per_mm", 0.0),
                                    g.number("radial_quadratic_hz_per_mm2", 0.0)};
    z_mm = g.number("z_mm", 0.0);
    r_mm = g.number("r_mm", 0.0);
    g.done();
  }
  t.done();

  const auto modes = trap::mode_frequencies(*cfg);
  std::vector<std::tuple<std::string, double, std::string>> rows{
      {"cyclotron", modes.cyclotron, "rad/s"},
      {"axial", modes.axial, "rad/s"},
      {"modified_cyclotron", modes.modified_cyclotron, "rad/s"},
      {"magnetron", modes.magnetron, "rad/s"},
      {"omega1", modes.omega1, "rad/s"},
      {"cyclotron_hz", modes.cyclotron / two_pi, "Hz"},
      {"axial_hz", modes.axial / two_pi, "Hz"},
      {"modified_cyclotron_hz", modes.modified_cyclotron / two_pi, "Hz"},
      {"magnetron_hz", modes.magnetron / two_pi, "Hz"},
      {"omega1_hz", modes.omega1 / two_pi, "Hz"}};
  json report{{"modes_rad_s", {{"cyclotron", modes.cyclotron},
                               {"axial", modes.axial},
                               {"modified_cyclotron", modes.modified_cyclotron},
                               {"magnetron", modes.magnetron},
                               {"omega1", modes.omega1}}}};
  if (plasma) {
    const auto c = trap::coupling_constant(*plasma, threshold);
    rows.emplace_back("coupling_constant", c.gamma, "1");
    rows.emplace_back("crystallized", c.crystallized ? 1.0 : 0.0, "bool");
    report["coupling_constant"] = c.gamma;
    report["crystallized"] = c.crystallized;
  }
  if (rotation) {
    const bool ok = trap::rotation_frequency_valid(*rotation, modes);
    rows.emplace_back("rotation_valid", ok ? 1.0 : 0.0, "bool");
    report["rotation_valid"] = ok;
  }
  if (grad) {
    const double shift = trap::inhomogeneity_shift(*grad, z_mm, r_mm);
    rows.emplace_back("inhomogeneity_shift", shift, "Hz");
    report["inhomogeneity_shift_hz"] = shift;
  }
  Outputs o;
  if (ctx.format == "json") {
    o.add("trap.json", dump(report));
  } else {
    std::ostringstream s;
    s << "# " << kCsvComment << "\nquantity,value,unit\n";
    for (const auto& [name, v, unit] : rows) s << name << ',' << fmt(v) << ',' << unit << '\n';
    o.add("trap.csv", s.str());
  }
  std::ostringstream sum;
  sum << "magnetron = 2pi x " << fmt(modes.magnetron / two_pi / 1e3) << " kHz, axial = 2pi x "
      << fmt(modes.axial / two_pi / 1e3) << " kHz\n";
  o.summary = sum.str();
  return o;
}

Outputs cmd_coherence(const Context& ctx) {
  Block root(ctx.config, "config");
  const auto spectrum = parse_spectrum(root.child("spectrum"));
  const auto seqs = parse_sequences(root);
  const auto tau = parse_grid(root.child("grid"));
  std::string method = "analytic";
  std::size_t shots = 10000, batches = 20;
  double dt = 0.0, rel_tol = 1e-6;
  if (root.has("coherence")) {
    Block c = root.child("coherence");
    method = c.text("method", method);
    shots = c.count("shots", shots);
    batches = c.count("batches", batches);
    dt = c.non_negative("dt_s", dt);
    rel_tol = c.positive("rel_tol", rel_tol);
    c.done();
  }
  if (method != "analytic" && method != "montecarlo" && method != "both") {
    bad("config.coherence.method", "expected analytic, montecarlo or both");
  }
  const bool analytic = method != "montecarlo";
  const bool mc = method != "analytic";
  if (mc && shots < 1) bad("config.coherence.shots", "must be >= 1");
  if (mc && (batches < 1 || batches > shots)) bad("config.coherence.batches", "must lie in [1, shots]");

  filter::ChiOptions opts;
  opts.rel_tol = rel_tol;
  std::vector<std::pair<std::string, filter::CoherenceCurve>> curves;
  if (analytic) {
    for (const auto& s : seqs) {
      curves.emplace_back(s.label + (mc ? "_analytic" : ""),
                          filter::coherence_curve(s.sequence, tau, spectrum, opts));
    }
  }
  if (mc) {
    oracle::DephasingRun run;
    run.sequence = seqs.front().sequence;
    run.spectrum = spectrum;
    run.shots = shots;
    run.batches = batches;
    run.dt = dt;
    run.seed = derive_seed(ctx.seed, "oracle");
    std::vector<pulse::PulseSequence> list;
    for (const auto& s : seqs) list.push_back(s.sequence);
    const std::vector<std::vector<double>> grids(seqs.size(), tau);
    const auto res = oracle::simulate_coherence(run, list, grids);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      curves.emplace_back(seqs[i].label + (analytic ? "_montecarlo" : ""), res[i]);
    }
  }
  Outputs o;
  std::ostringstream sum;
  if (ctx.format == "json") {
    json j{{"spectrum", spectrum_record(spectrum)}, {"curves", json::array()}};
    for (const auto& [label, c] : curves) j["curves"].push_back(curve_json(label, c));
    o.add("coherence.json", dump(j));
  }
  for (const auto& [label, c] : curves) {
    if (ctx.format == "csv") {
      std::ostringstream s;
      filter::write_curve_csv(s, c, kCsvComment);
      o.add("coherence_" + label + ".csv", s.str());
    }
    sum << label << ": W(" << fmt(c.tau.back()) << " s) = " << fmt(c.coherence.back()) << '\n';
  }
  o.summary = sum.str();
  return o;
}

Outputs cmd_rb(const Context& ctx) {
  Block root(ctx.config, "config");
  Block b = root.child("rb");
  rb::Experiment e;
  e.lengths = b.counts("lengths");
  e.runs = b.count("runs", e.runs);
  e.errors.depolarizing = b.non_negative("depolarizing", 0.0);
  e.errors.over_rotation = b.number("over_rotation_rad", 0.0);
  e.errors.detuning_rms = b.non_negative("detuning_rms_rad_s", 0.0);
  const bool from_spectrum = b.flag("detuning_from_spectrum", false);
  e.gap = b.non_negative("gap_s", e.gap);
  e.pi_time = b.positive("pi_time_s", e.pi_time);
  e.measurements = b.count("measurements", e.measurements);
  const double resolution = b.non_negative("timing_resolution_s", 50e-9);
  b.done();
  if (e.lengths.empty()) bad("config.rb.lengths", "must not be empty");
  for (auto l : e.lengths) {
    if (l < 1) bad("config.rb.lengths", "lengths must be >= 1");
  }
  if (e.runs < 1) bad("config.rb.runs", "must be >= 1");
  if (e.errors.depolarizing > 0.5) bad("config.rb.depolarizing", "must lie in [0, 0.5]");
  if (from_spectrum) {
    if (e.errors.detuning_rms > 0.0) {
      bad("config.rb.detuning_from_spectrum", "conflicts with detuning_rms_rad_s");
    }
    const auto spectrum = parse_spectrum(root.child("spectrum"));
    e.errors.detuning_rms =
        noise::integrated_rms(spectrum, 0.0, std::numeric_limits<double>::infinity());
  }
  e.seed = derive_seed(ctx.seed, "rb");

  const auto result = rb::simulate(e);
  json summary{{"error_per_gate", result.fit.error_per_gate},
               {"ci68", result.fit.ci},
               {"amplitude", result.fit.amplitude},
               {"reduced_chi2", result.fit.reduced_chi2},
               {"timing_infidelity", rb::timing_infidelity(e.pi_time, resolution)},
               {"timing_infidelity_linear", rb::timing_infidelity_linear(e.pi_time, resolution)},
               {"detuning_rms_rad_s", e.errors.detuning_rms}};
  Outputs o;
  if (ctx.format == "json") {
    json j{{"summary", summary},
           {"lengths", result.data.lengths},
           {"mean", result.data.mean},
           {"sem", result.data.sem},
           {"fidelity", result.data.fidelity}};
    o.add("rb.json", dump(j));
  } else {
    std::ostringstream runs;
    runs << "# " << kCsvComment << '\n';
    rb::write_data_csv(runs, result.data);
    o.add("rb_runs.csv", runs.str());
    std::ostringstream means;
    means << "# " << kCsvComment << "\nl,mean,sem\n";
    for (std::size_t i = 0; i < result.data.lengths.size(); ++i) {
      means << result.data.lengths[i] << ',' << fmt(result.data.mean[i]) << ','
            << fmt(result.data.sem[i]) << '\n';
    }
    o.add("rb_means.csv", means.str());
    o.add("rb_summary.json", dump(summary));
  }
  o.summary = "error per gate = " + fmt(result.fit.error_per_gate) + " +- " +
              fmt(result.fit.ci) + "\n";
  return o;
}

Outputs cmd_optimize(const Context& ctx) {
  Block root(ctx.config, "config");
  opt::Problem p;
  p.spectrum = parse_spectrum(root.child("spectrum"));
  Block b = root.child("optimize");
  p.n = b.count("n");
  p.tau = b.positive("tau_s");
  p.pulse_width = b.non_negative("pulse_width_s", 0.0);
  if (b.has("start")) p.start = parse_sequence(b.child("start")).sequence;
  p.margin = b.non_negative("margin", 0.0);
  p.tolerance = b.positive("tolerance", p.tolerance);
  p.max_iterations = b.count("max_iterations", p.max_iterations);
  p.restarts = b.count("restarts", 0);
  b.done();
  if (p.n < 1) bad("config.optimize.n", "must be >= 1");
  if (p.max_iterations < 1) bad("config.optimize.max_iterations", "must be >= 1");
  p.seed = derive_seed(ctx.seed, "optimize");

  const auto r = opt::optimize(p);
  json prov{{"spectrum", spectrum_record(p.spectrum)},
            {"tau_s", p.tau},
            {"pulse_width_s", p.pulse_width},
            {"n", p.n},
            {"positions", r.sequence.positions()},
            {"chi", r.chi},
            {"start_chi", r.start_chi},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"stalled_at_constraint", r.stalled_at_constraint},
            {"record", pulse::to_record(r.sequence)}};
  Outputs o;
  if (ctx.format == "json") {
    prov["chi_trace"] = r.chi_trace;
    o.add("optimize.json", dump(prov));
  } else {
    o.add("optimized.txt", pulse::to_record(r.sequence) + "\n");
    o.add("optimize.json", dump(prov));
    std::ostringstream t;
    t << "# " << kCsvComment << "\niteration,chi\n";
    for (std::size_t i = 0; i < r.chi_trace.size(); ++i) t << i << ',' << fmt(r.chi_trace[i]) << '\n';
    o.add("chi_trace.csv", t.str());
  }
  o.summary = "chi = " + fmt(r.chi) + " (start " + fmt(r.start_chi) + "), record " +
              pulse::to_record(r.sequence) + "\n";
  return o;
}

Outputs cmd_noise(const Context& ctx) {
  Block root(ctx.config, "config");
  const auto spectrum = parse_spectrum(root.child("spectrum"));
  Block b = root.child("noise");
  const double dt = b.positive("dt_s");
  const std::size_t samples = b.count("samples", 65536);
  const std::size_t traces = b.count("traces", 8);
  const std::size_t segment = b.count("segment", 1024);
  std::optional<std::pair<double, double>> band;
  if (b.has("fit_band_hz")) {
    const auto v = b.numbers("fit_band_hz");
    if (v.size() != 2 || !(v[0] > 0.0) || !(v[1] > v[0])) {
      bad("config.noise.fit_band_hz", "expected [low, high] with 0 < low < high");
    }
    band = std::pair{two_pi * v[0], two_pi * v[1]};
  }
  const bool write_trace = b.flag("write_trace", false);
  std::optional<double> stepup;
  if (b.has("stepup_factor")) stepup = b.positive("stepup_factor");
  b.done();
  if (samples < 2 || (samples & (samples - 1)) != 0) {
    bad("config.noise.samples", "must be a power of two >= 2");
  }
  if (traces < 1) bad("config.noise.traces", "must be >= 1");
  if (segment < 2 || (segment & (segment - 1)) != 0) {
    bad("config.noise.segment", "must be a power of two >= 2");
  }
  if (segment > samples) {
    fail(ErrorKind::SegmentTooLong, "config.noise.segment: exceeds the trace length");
  }
  noise::check_nyquist(spectrum, dt);

  const std::uint64_t base = derive_seed(ctx.seed, "noise");
  std::vector<noise::NoiseTrace> list;
  for (std::size_t i = 0; i < traces; ++i) {
    list.push_back(noise::synthesize_trace(spectrum, dt, samples, stream_seed(base, i)));
  }
  const auto psd = noise::estimate_psd(list, segment);
  double sq = 0.0;
  std::size_t cnt = 0;
  for (const auto& t : list) {
    for (double x : t.samples) sq += x * x;
    cnt += t.samples.size();
  }
  json summary{{"spectrum", spectrum_record(spectrum)},
               {"dt_s", dt},
               {"rms_model", noise::integrated_rms(spectrum, 0.0, constants::pi / dt)},
               {"rms_sample", std::sqrt(sq / static_cast<double>(cnt))}};
  if (band) summary["loglog_slope"] = noise::fit_loglog_slope(psd, band->first, band->second);
  if (stepup) summary["stepup_db"] = noise::phase_noise_stepup(*stepup);

  Outputs o;
  std::ostringstream table;
  if (ctx.format == "csv") table << "# " << kCsvComment << '\n';
  table << "omega,estimate,model\n" << std::setprecision(12);
  json jp{{"omega", psd.omega}, {"estimate", psd.value}, {"model", json::array()}};
  for (std::size_t i = 0; i < psd.omega.size(); ++i) {
    const double model = spectrum(psd.omega[i]);
    table << psd.omega[i] << ',' << psd.value[i] << ',' << model << '\n';
    jp["model"].push_back(model);
  }
  if (ctx.format == "json") {
    json j{{"summary", summary}, {"psd", jp}};
    if (write_trace) j["trace"] = list.front().samples;
    o.add("noise.json", dump(j));
  } else {
    o.add("psd.csv", table.str());
    o.add("noise_summary.json", dump(summary));
    if (write_trace) {
      std::ostringstream t;
      t << "# " << kCsvComment << '\n';
      noise::write_trace_csv(t, list.front());
      o.add("trace.csv", t.str());
    }
  }
  o.summary = "rms = " + fmt(summary["rms_sample"].get<double>()) + " rad/s";
  if (band) o.summary += ", log-log slope = " + fmt(summary["loglog_slope"].get<double>());
  o.summary += "\n";
  return o;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

json load_config(const std::string& path, const std::string& subcommand) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) bad("--config", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    bad("--config", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("--config", "top level must be an object");
  // a manifest from an earlier run replays its resolved config
  if (j.contains("config") && j.contains("subcommand")) {
    if (j["subcommand"] != subcommand) {
      bad("--config", "manifest was written by '" + j["subcommand"].get<std::string>() + "'");
    }
    return j["config"];
  }
  return j;
}

Context resolve(json cfg, const std::string& subcommand, std::optional<std::uint64_t> seed,
                std::optional<std::string> out, std::optional<std::string> format) {
  static const std::set<std::string> top{"seed", "out", "format", "trap", "spectrum",
                                         "sequence", "sequences", "grid", "coherence",
                                         "rb", "optimize", "noise"};
  for (const auto& [k, v] : cfg.items()) {
    if (!top.count(k)) bad("config." + k, "unknown field");
  }
  if (seed) cfg["seed"] = *seed;
  if (out) cfg["out"] = *out;
  if (format) cfg["format"] = *format;
  Context ctx;
  ctx.subcommand = subcommand;
  if (cfg.contains("seed")) {
    if (!cfg["seed"].is_number_unsigned()) bad("config.seed", "expected a non-negative integer");
    ctx.seed = cfg["seed"].get<std::uint64_t>();
  } else {
    cfg["seed"] = 0;
  }
  if (cfg.contains("out") && !cfg["out"].is_string()) bad("config.out", "expected a string");
  ctx.out_dir = cfg.value("out", std::string("out"));
  if (cfg.contains("format") && !cfg["format"].is_string()) bad("config.format", "expected a string");
  ctx.format = cfg.value("format", std::string("csv"));
  if (ctx.format != "csv" && ctx.format != "json") bad("config.format", "expected csv or json");
  ctx.config = std::move(cfg);
  return ctx;
}

void write_all(const Context& ctx, const Outputs& o) {
  namespace fs = std::filesystem;
  const fs::path dir(ctx.out_dir);
  fs::create_directories(dir);
  json manifest{{"tool", "dephase"},
                {"version", kVersion},
                {"subcommand", ctx.subcommand},
                {"seed", ctx.seed},
                {"created", timestamp()},
                {"outputs", json::array()},
                {"config", ctx.config}};
  for (const auto& [name, body] : o.files) {
    manifest["outputs"].push_back(name);
    std::ofstream f(dir / name, std::ios::binary);
    f << body;
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  }
  std::ofstream m(dir / kManifest, std::ios::binary);
  m << dump(manifest);
  if (!m) throw std::runtime_error("cannot write " + (dir / kManifest).string());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dephasing, filter-function and benchmarking toolkit", "dephase"};
  app.require_subcommand(1);
  std::string config_path;
  std::uint64_t seed_value = 0;
  std::string out_value, format_value;
  const std::map<std::string, std::string> subs{
      {"trap", "Penning-trap mode frequencies and coupling constant"},
      {"coherence", "Filter-function and Monte Carlo coherence curves"},
      {"rb", "Randomized benchmarking simulation and fit"},
      {"optimize", "Local optimization of pulse positions"},
      {"noise", "Noise-trace synthesis and spectrum round trip"}};
  std::vector<std::pair<std::string, CLI::App*>> handles;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* format_opt = nullptr;
  app.add_option("--config", config_path, "JSON config file or manifest to replay");
  seed_opt = app.add_option("--seed", seed_value, "Global seed (overrides config)");
  out_opt = app.add_option("--out", out_value, "Output directory (overrides config)");
  format_opt = app.add_option("--format", format_value, "csv or json (overrides config)")
                   ->check(CLI::IsMember({"csv", "json"}));
  for (const auto& [name, desc] : subs) {
    auto* s = app.add_subcommand(name, desc);
    s->fallthrough();
    handles.emplace_back(name, s);
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_validation;
  }
  std::string sub;
  for (const auto& [name, s] : handles) {
    if (s->parsed()) sub = name;
  }

  try {
    const json cfg = load_config(config_path, sub);
    const Context ctx = resolve(
        cfg, sub,
        seed_opt->count() ? std::optional(seed_value) : std::nullopt,
        out_opt->count() ? std::optional(out_value) : std::nullopt,
        format_opt->count() ? std::optional(format_value) : std::nullopt);
    Outputs o;
    if (sub == "trap") o = cmd_trap(ctx);
    else if (sub == "coherence") o = cmd_coherence(ctx);
    else if (sub == "rb") o = cmd_rb(ctx);
    else if (sub == "optimize") o = cmd_optimize(ctx);
    else o = cmd_noise(ctx);
    write_all(ctx, o);
    out << o.summary;
    return exit_ok;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_validation_error(e.kind()) ? exit_validation : exit_computation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_computation;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace dephase::cli
