#include "app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <utility>

#include "qclt/condition_lab.hpp"
#include "qclt/fourier_stats.hpp"
#include "qclt/martingale_engine.hpp"
#include "qclt/parallel.hpp"
#include "qclt/process_models.hpp"
#include "qclt/quenched_mc.hpp"
#include "qclt/spec_io.hpp"
#include "qclt/spectral_oracle.hpp"
#include "qclt/stats.hpp"

namespace fs = std::filesystem;

namespace qclt::app {

namespace {

const std::set<std::string> known_keys = {
    "seed",   "spec",       "spec_file",      "n",      "replicates", "origin", "frequencies",
    "values", "centering", "tolerances", "allow_excluded", "ladder", "t",          "raikov"};

const std::set<std::string> commands = {"simulate", "periodogram", "quenched", "conditions",
                                        "martingale"};

template <class T> T get(const YAML::Node &node, const std::string &key, T fallback) {
  const YAML::Node child = node[key];
  if (!child) {
    return fallback;
  }
  try {
    return child.as<T>();
  } catch (const YAML::Exception &) {
    throw ConfigError(at_line(child, "'" + key + "' has the wrong type"));
  }
}

std::vector<Eigen::Index> ladder_of(const YAML::Node &node, const std::string &key,
                                    std::vector<Eigen::Index> fallback) {
  const YAML::Node child = node[key];
  if (!child) {
    return fallback;
  }
  if (!child.IsSequence() || child.size() < 2) {
    throw ConfigError(at_line(child, "'" + key + "' must list at least two lengths"));
  }
  std::vector<Eigen::Index> out;
  for (const auto &v : child) {
    Eigen::Index n = 0;
    try {
      n = v.as<Eigen::Index>();
    } catch (const YAML::Exception &) {
      throw ConfigError(at_line(v, "ladder entries must be integers"));
    }
    if (n < 1) {
      throw ConfigError(at_line(v, "ladder entries must be positive"));
    }
    out.push_back(n);
  }
  return out;
}

std::vector<double> doubles_of(const YAML::Node &node, const std::string &what) {
  std::vector<double> out;
  if (node.IsScalar()) {
    out.push_back(node.as<double>());
    return out;
  }
  if (!node.IsSequence()) {
    throw ConfigError(at_line(node, "'" + what + "' must be a number or a list of numbers"));
  }
  for (const auto &v : node) {
    try {
      out.push_back(v.as<double>());
    } catch (const YAML::Exception &) {
      throw ConfigError(at_line(v, "'" + what + "' entries must be numbers"));
    }
  }
  return out;
}

ProcessSpec spec_of(const YAML::Node &config) {
  const YAML::Node node = config["spec"];
  if (!node) {
    throw ConfigError(at_line(config, "missing required key 'spec' (or 'spec_file')"));
  }
  return parse_spec(node);
}

/// LIST (comma separated), random:K or fourier.
FrequencyGrid grid_from_text(const std::string &text, Eigen::Index n, std::uint64_t seed) {
  if (text == "fourier") {
    return FrequencyGrid::fourier(n);
  }
  if (text.rfind("random:", 0) == 0) {
    const std::string count = text.substr(7);
    std::size_t used = 0;
    unsigned long k = 0;
    try {
      k = std::stoul(count, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != count.size() || k == 0) {
      throw ConfigError("frequencies: '" + text + "' needs a positive count after random:");
    }
    return FrequencyGrid::uniform_random(k, derive_seed(seed, "frequencies"));
  }
  std::vector<double> points;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    std::size_t used = 0;
    double t = 0.0;
    try {
      t = std::stod(item, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0) {
      throw ConfigError("frequencies: cannot read '" + item + "' as a number");
    }
    points.push_back(t);
  }
  return FrequencyGrid::explicit_points(std::move(points));
}

FrequencyGrid grid_of(const YAML::Node &config, Eigen::Index n, std::uint64_t seed,
                      const std::string &fallback) {
  const YAML::Node node = config["frequencies"];
  try {
    if (!node) {
      return grid_from_text(fallback, n, seed);
    }
    if (node.IsSequence()) {
      return FrequencyGrid::explicit_points(doubles_of(node, "frequencies"));
    }
    return grid_from_text(node.as<std::string>(), n, seed);
  } catch (const std::invalid_argument &e) {
    throw ConfigError(node ? at_line(node, e.what()) : std::string(e.what()));
  }
}

/// Explicit origin, or one drawn from the stationary past when the key is
/// absent or set to "drawn".
QuenchedOrigin origin_of(const YAML::Node &config, const ProcessSpec &spec, std::uint64_t seed) {
  const YAML::Node node = config["origin"];
  if (!node || (node.IsScalar() && node.as<std::string>() == "drawn")) {
    return draw_origin(spec, derive_seed(seed, "origin"));
  }
  return parse_origin(node, spec);
}

bool origin_is_drawn(const YAML::Node &config) {
  const YAML::Node node = config["origin"];
  return !node || (node.IsScalar() && node.as<std::string>() == "drawn");
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << text;
}

std::string yaml_text(YAML::Emitter &out) {
  std::string text = out.c_str();
  text += "\n";
  return text;
}

// --------------------------------------------------------------- commands

RunResult cmd_simulate(const YAML::Node &config, const fs::path &out) {
  const ProcessSpec spec = spec_of(config);
  const auto seed = get<std::uint64_t>(config, "seed", 0);
  const auto n = get<Eigen::Index>(config, "n", 1024);
  if (n < 1) {
    throw ConfigError(at_line(config["n"], "n must be positive"));
  }
  Trajectory path;
  if (config["origin"]) {
    path = sample_quenched(spec, origin_of(config, spec, seed), n, derive_seed(seed, "simulate"));
  } else {
    path = sample_stationary(spec, n, derive_seed(seed, "simulate"));
  }
  std::ostringstream csv;
  csv << "k,x\n";
  char line[64];
  for (Eigen::Index k = 0; k < n; ++k) {
    std::snprintf(line, sizeof line, "%lld,%.17g\n", static_cast<long long>(k + 1), path.values(k));
    csv << line;
  }
  write_text(out / "trajectory.csv", csv.str());
  RunResult r;
  r.outputs = {"trajectory.csv"};
  r.summary = "wrote " + std::to_string(n) + " rows to trajectory.csv\n";
  return r;
}

RunResult cmd_periodogram(const YAML::Node &config, const fs::path &out) {
  const ProcessSpec spec = spec_of(config);
  const auto seed = get<std::uint64_t>(config, "seed", 0);
  Eigen::VectorXd values;
  if (const YAML::Node given = config["values"]) {
    const std::vector<double> v = doubles_of(given, "values");
    values = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  } else {
    const auto n = get<Eigen::Index>(config, "n", 4096);
    if (n < 2) {
      throw ConfigError(at_line(config["n"], "n must be at least 2"));
    }
    values = sample_stationary(spec, n, derive_seed(seed, "simulate")).values;
  }
  if (values.size() < 2) {
    throw ConfigError("periodogram needs at least two values");
  }
  const Eigen::Index n = values.size();
  const FrequencyGrid grid = grid_of(config, n, seed, "fourier");
  const std::vector<FourierSample> samples = fourier_batch(values, grid);

  RunResult r;
  std::ostringstream csv;
  write_fourier_csv(csv, samples);
  write_text(out / "periodogram.csv", csv.str());
  r.outputs.push_back("periodogram.csv");

  std::vector<SpectralEstimate> overlay;
  for (double t : grid.points) {
    try {
      if (auto est = spectral_density(spec, t)) {
        overlay.push_back(*est);
        continue;
      }
    } catch (const std::domain_error &) {
    }
    overlay.clear();
    break;
  }
  if (!overlay.empty()) {
    std::ostringstream dcsv;
    write_density_csv(dcsv, overlay);
    write_text(out / "density.csv", dcsv.str());
    r.outputs.push_back("density.csv");
  }

  CompensatedSum total;
  for (const auto &s : samples) {
    total.add(s.I);
  }
  const double mean_i = total.value() / static_cast<double>(samples.size());
  YAML::Emitter y;
  y.SetDoublePrecision(12);
  y << YAML::BeginMap;
  y << YAML::Key << "n" << YAML::Value << n;
  y << YAML::Key << "points" << YAML::Value << samples.size();
  y << YAML::Key << "seed" << YAML::Value << seed;
  y << YAML::Key << "spec_hash" << YAML::Value << hex64(spec_hash(spec));
  y << YAML::Key << "mean_I" << YAML::Value << mean_i;
  y << YAML::Key << "sample_second_moment_over_2pi" << YAML::Value
    << values.squaredNorm() / (two_pi * static_cast<double>(n));
  y << YAML::Key << "density_overlay" << YAML::Value << !overlay.empty();
  y << YAML::EndMap;
  write_text(out / "periodogram.yaml", yaml_text(y));
  r.outputs.push_back("periodogram.yaml");
  char buf[128];
  std::snprintf(buf, sizeof buf, "n=%lld points=%zu mean I=%.6g\n", static_cast<long long>(n),
                samples.size(), mean_i);
  r.summary = buf;
  return r;
}

Tolerances tolerances_of(const YAML::Node &config) {
  Tolerances tol;
  const YAML::Node node = config["tolerances"];
  if (!node) {
    return tol;
  }
  if (!node.IsMap()) {
    throw ConfigError(at_line(node, "'tolerances' must be a mapping"));
  }
  tol.ks = get(node, "ks", tol.ks);
  tol.correlation = get(node, "correlation", tol.correlation);
  tol.variance_rel = get(node, "variance_rel", tol.variance_rel);
  tol.periodogram_mean_lo = get(node, "periodogram_mean_lo", tol.periodogram_mean_lo);
  tol.periodogram_mean_hi = get(node, "periodogram_mean_hi", tol.periodogram_mean_hi);
  tol.periodogram_ks = get(node, "periodogram_ks", tol.periodogram_ks);
  return tol;
}

bool certified_by_sufcond(const ProcessSpec &spec) {
  try {
    return verdict_holds(check_sufcond(spec).verdict);
  } catch (const std::exception &) {
    return false;
  }
}

RunResult cmd_quenched(const YAML::Node &config, const fs::path &out) {
  ExperimentConfig ec;
  ec.spec = spec_of(config);
  ec.seed = get<std::uint64_t>(config, "seed", 0);
  ec.n = get<Eigen::Index>(config, "n", ec.n);
  ec.replicates = get<Eigen::Index>(config, "replicates", ec.replicates);
  if (!origin_is_drawn(config)) {
    ec.origin = parse_origin(config["origin"], ec.spec);
  }
  ec.grid = grid_of(config, ec.n, ec.seed, "1.0");
  const auto centering = get<std::string>(config, "centering", "none");
  if (centering == "none") {
    ec.centering = CenteringMode::none;
  } else if (centering == "conditional") {
    ec.centering = CenteringMode::conditional;
  } else {
    throw ConfigError(at_line(config["centering"], "centering must be 'none' or 'conditional'"));
  }
  ec.tolerances = tolerances_of(config);
  ec.allow_excluded = get<bool>(config, "allow_excluded", false);
  try {
    validate(ec);
  } catch (const ValidationError &e) {
    throw ConfigError(e.what());
  }

  const TestReport report = run_quenched(ec);
  RunResult r;
  r.failures = report.failures;

  const std::vector<Eigen::Index> ladder =
      ladder_of(config, "ladder", {256, 1024, 4096, 16384});
  std::vector<DecayTable> decay;
  const bool lrd = std::holds_alternative<GaussianLRD>(ec.spec);
  if (!lrd) {
    try {
      for (double t : ec.grid.points) {
        decay.push_back(centering_decay(ec.spec, report.origin, t, ladder));
      }
    } catch (const std::domain_error &) {
      decay.clear();
    }
  }
  const bool certified = !decay.empty() && certified_by_sufcond(ec.spec);
  if (certified) {
    for (const auto &d : decay) {
      if (!d.decays) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "t=%.6g: centering does not decay across the ladder", d.t);
        r.failures.emplace_back(buf);
      }
    }
  }

  YAML::Emitter y;
  y.SetDoublePrecision(12);
  y << YAML::BeginMap;
  y << YAML::Key << "report" << YAML::Value;
  emit(y, report);
  y << YAML::Key << "centering_decay" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "certified_by_sufcond" << YAML::Value << certified;
  y << YAML::Key << "tables" << YAML::Value << YAML::BeginSeq;
  for (const auto &d : decay) {
    emit(y, d);
  }
  y << YAML::EndSeq << YAML::EndMap;
  if (lrd) {
    y << YAML::Key << "variance_growth" << YAML::Value;
    emit(y, variance_growth(ec.spec, 0.0, {256, 1024, 4096}));
  }
  y << YAML::Key << "passed" << YAML::Value << r.failures.empty();
  y << YAML::EndMap;
  write_text(out / "report.yaml", yaml_text(y));

  std::ostringstream csv;
  write_raw_csv(csv, report);
  write_text(out / "raw.csv", csv.str());
  r.outputs = {"report.yaml", "raw.csv"};

  std::ostringstream s;
  char buf[200];
  for (const auto &f : report.frequencies) {
    std::snprintf(buf, sizeof buf,
                  "t=%-8.4g var ratio %.4f %.4f  corr %+.4f  KS %.4f %.4f  sigma2 %s  %s\n", f.t,
                  f.variance_ratio(0), f.variance_ratio(1), f.correlation, f.ks(0), f.ks(1),
                  f.sigma2_source.c_str(), f.passed() ? "pass" : "FAIL");
    s << buf;
  }
  r.summary = s.str();
  return r;
}

RunResult cmd_conditions(const YAML::Node &config, const fs::path &out) {
  const ProcessSpec spec = spec_of(config);
  const double t = get<double>(config, "t", 1.0);
  RunResult r;
  if (std::holds_alternative<GaussianLRD>(spec) && t == 0.0) {
    const GrowthTable growth =
        variance_growth(spec, 0.0, ladder_of(config, "ladder", {256, 1024, 4096}));
    YAML::Emitter y;
    y.SetDoublePrecision(12);
    y << YAML::BeginMap;
    y << YAML::Key << "scope" << YAML::Value << "out_of_scope";
    y << YAML::Key << "reason" << YAML::Value
      << "covariances are not summable at t = 0, so E|S_n(0)|^2 / n diverges";
    y << YAML::Key << "variance_growth" << YAML::Value;
    emit(y, growth);
    y << YAML::EndMap;
    write_text(out / "conditions.yaml", yaml_text(y));
    r.outputs = {"conditions.yaml"};
    std::ostringstream s;
    s << "conditions out of scope at t = 0; variance growth table:\n";
    char buf[96];
    for (const auto &row : growth.rows) {
      std::snprintf(buf, sizeof buf, "  n=%-7lld E|S_n|^2/n=%.6g factor=%.4f\n",
                    static_cast<long long>(row.n), row.normalized, row.factor);
      s << buf;
    }
    r.summary = s.str();
    return r;
  }
  const std::vector<ConditionReport> reports = check_all(spec, t);
  for (const auto &rep : reports) {
    if (rep.verdict == Verdict::fails_numeric) {
      r.failures.push_back(rep.id + ": " + verdict_name(rep.verdict));
    }
  }
  write_text(out / "conditions.yaml", reports_to_yaml(reports) + "\n");
  r.outputs = {"conditions.yaml"};
  r.summary = verdict_table(reports);
  return r;
}

/// E|D_k(t)|^2 under the stationary law.
double increment_second_moment(const ProcessSpec &spec, const MartingaleKernel &kernel) {
  if (const auto *lk = std::get_if<LinearKernel>(&kernel.data)) {
    return std::get<LinearProcess>(spec).innovation.variance * std::norm(lk->full_transfer);
  }
  const auto &mk = std::get<MarkovKernel>(kernel.data);
  const FiniteMarkovFn &m = *as_markov(spec);
  double total = 0.0;
  for (Eigen::Index x = 0; x < m.states(); ++x) {
    for (Eigen::Index y = 0; y < m.states(); ++y) {
      total += m.stationary(x) * m.kernel(x, y) * std::norm(mk.g(y) - mk.qg(x));
    }
  }
  return total;
}

YAML::Node raikov_block(const YAML::Node &config, const ProcessSpec &spec, std::uint64_t seed,
                        std::vector<std::string> &failures) {
  const YAML::Node node = config["raikov"];
  const double t = get<double>(node, "t", 1.0);
  const double a = get<double>(node, "a", 1.0);
  const double b = get<double>(node, "b", 0.0);
  const auto replicates = get<Eigen::Index>(node, "replicates", 500);
  const double tolerance = get<double>(node, "tolerance", 0.05);
  const std::vector<Eigen::Index> ladder = ladder_of(node, "ladder", {256, 1024, 4096});
  const Eigen::Index n_max = *std::max_element(ladder.begin(), ladder.end());
  const MartingaleKernel kernel = make_kernel(spec, t);
  const StationarySampler sampler(spec, n_max);
  Eigen::MatrixXcd increments(replicates, n_max);
  parallel_for(static_cast<std::size_t>(replicates), [&](std::size_t i) {
    const Trajectory path = sampler.sample(derive_seed(seed, "raikov", i));
    increments.row(static_cast<Eigen::Index>(i)) = martingale_increments(kernel, path).transpose();
  });
  const RaikovDiagnostics d =
      raikov_diagnostics(increments, a, b, ladder, increment_second_moment(spec, kernel));
  if (!d.max_strictly_decreasing) {
    failures.emplace_back("raikov: E max|D_k| / sqrt(n) is not strictly decreasing");
  }
  if (!(d.rows.back().sumsq_rel_error <= tolerance)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "raikov: (1/n) sum D_k^2 off its target by %.4g > %.4g",
                  d.rows.back().sumsq_rel_error, tolerance);
    failures.emplace_back(buf);
  }
  YAML::Emitter y;
  y.SetDoublePrecision(12);
  emit(y, d);
  return YAML::Load(y.c_str());
}

RunResult cmd_martingale(const YAML::Node &config, const fs::path &out) {
  const ProcessSpec spec = spec_of(config);
  const auto seed = get<std::uint64_t>(config, "seed", 0);
  const auto replicates = get<Eigen::Index>(config, "replicates", 2000);
  const std::vector<Eigen::Index> ladder = ladder_of(config, "ladder", {256, 4096});
  const std::vector<double> ts = config["t"] ? doubles_of(config["t"], "t") : std::vector{1.0};
  const QuenchedOrigin origin = origin_of(config, spec, seed);
  RunResult r;

  std::vector<GapEstimate> gaps;
  YAML::Emitter y;
  y.SetDoublePrecision(12);
  y << YAML::BeginMap;
  y << YAML::Key << "seed" << YAML::Value << seed;
  y << YAML::Key << "spec_hash" << YAML::Value << hex64(spec_hash(spec));
  y << YAML::Key << "origin" << YAML::Value;
  emit_origin(y, origin);
  y << YAML::Key << "replicates" << YAML::Value << replicates;
  y << YAML::Key << "frequencies" << YAML::Value << YAML::BeginSeq;
  std::ostringstream s;
  char buf[200];
  for (double t : ts) {
    y << YAML::BeginMap << YAML::Key << "t" << YAML::Value << t;
    y << YAML::Key << "telescoping" << YAML::Value << YAML::BeginSeq;
    for (Eigen::Index n : ladder) {
      const TelescopingTerms terms = telescoping_decomposition(spec, origin, n, t);
      y << YAML::Flow << YAML::BeginMap << YAML::Key << "n" << YAML::Value << n << YAML::Key
        << "residual" << YAML::Value << terms.residual << YAML::EndMap;
      if (!(terms.residual < 1e-9)) {
        std::snprintf(buf, sizeof buf, "t=%.6g n=%lld: telescoping residual %.3g", t,
                      static_cast<long long>(n), terms.residual);
        r.failures.emplace_back(buf);
      }
    }
    y << YAML::EndSeq;
    std::vector<GapEstimate> curve;
    for (Eigen::Index n : ladder) {
      curve.push_back(approximation_gap(spec, origin, n, t, replicates, derive_seed(seed, "gap", gaps.size() + curve.size())));
    }
    const GapEstimate &lo = curve.front();
    const GapEstimate &hi = curve.back();
    const double steps = std::log(static_cast<double>(hi.n) / static_cast<double>(lo.n)) / std::log(16.0);
    const double limit = lo.gap * std::pow(0.25, steps) +
                         3.0 * std::hypot(hi.std_error, lo.std_error * std::pow(0.25, steps));
    const bool shrinks = hi.gap <= limit;
    if (!shrinks) {
      std::snprintf(buf, sizeof buf, "t=%.6g: gap %.4g at n=%lld not below %.4g", t, hi.gap,
                    static_cast<long long>(hi.n), limit);
      r.failures.emplace_back(buf);
    }
    y << YAML::Key << "gap" << YAML::Value << YAML::BeginSeq;
    for (const auto &g : curve) {
      y << YAML::Flow << YAML::BeginMap << YAML::Key << "n" << YAML::Value << g.n << YAML::Key
        << "gap" << YAML::Value << g.gap << YAML::Key << "stderr" << YAML::Value << g.std_error
        << YAML::EndMap;
      std::snprintf(buf, sizeof buf, "t=%-8.4g n=%-7lld gap=%.6g (se %.2g)\n", t,
                    static_cast<long long>(g.n), g.gap, g.std_error);
      s << buf;
    }
    y << YAML::EndSeq;
    y << YAML::Key << "gap_limit" << YAML::Value << limit;
    y << YAML::Key << "gap_shrinks" << YAML::Value << shrinks;
    y << YAML::EndMap;
    gaps.insert(gaps.end(), curve.begin(), curve.end());
  }
  y << YAML::EndSeq;
  if (config["raikov"]) {
    y << YAML::Key << "raikov" << YAML::Value << raikov_block(config, spec, seed, r.failures);
  }
  y << YAML::Key << "passed" << YAML::Value << r.failures.empty();
  y << YAML::EndMap;
  write_text(out / "martingale.yaml", yaml_text(y));
  std::ostringstream csv;
  write_gap_csv(csv, gaps, spec_hash(spec));
  write_text(out / "gap.csv", csv.str());
  r.outputs = {"martingale.yaml", "gap.csv"};
  r.summary = s.str();
  return r;
}

YAML::Node load_file(const fs::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open " + path.string());
  }
  try {
    return YAML::Load(in);
  } catch (const YAML::ParserException &e) {
    throw ConfigError(path.string() + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

} // namespace

std::string file_digest(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return hex64(fnv1a64(bytes.str()));
}

YAML::Node resolve_config(const fs::path &config, const Overrides &overrides) {
  YAML::Node node = load_file(config);
  if (!node.IsMap()) {
    throw ConfigError(config.string() + ": the config must be a mapping");
  }
  for (const auto &kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!known_keys.contains(key)) {
      throw ConfigError(config.string() + ": " + at_line(kv.first, "unknown key '" + key + "'"));
    }
  }
  if (const YAML::Node file = node["spec_file"]) {
    if (node["spec"]) {
      throw ConfigError(config.string() + ": " +
                        at_line(file, "give either 'spec' or 'spec_file', not both"));
    }
    const fs::path spec_path = config.parent_path() / file.as<std::string>();
    const YAML::Node spec = load_file(spec_path);
    try {
      parse_spec(spec);
    } catch (const ValidationError &e) {
      throw ConfigError(spec_path.string() + ": " + e.what());
    }
    node.remove("spec_file");
    node["spec"] = spec;
  }
  if (overrides.seed) {
    node["seed"] = *overrides.seed;
  }
  if (overrides.frequencies) {
    node["frequencies"] = *overrides.frequencies;
  }
  if (!node["seed"]) {
    node["seed"] = 0;
  }
  return node;
}

RunResult execute(const std::string &command, const YAML::Node &resolved, const fs::path &out) {
  fs::create_directories(out);
  RunResult r;
  try {
    if (command == "simulate") {
      r = cmd_simulate(resolved, out);
    } else if (command == "periodogram") {
      r = cmd_periodogram(resolved, out);
    } else if (command == "quenched") {
      r = cmd_quenched(resolved, out);
    } else if (command == "conditions") {
      r = cmd_conditions(resolved, out);
    } else if (command == "martingale") {
      r = cmd_martingale(resolved, out);
    } else {
      throw ConfigError("unknown command '" + command + "'");
    }
  } catch (const ValidationError &e) {
    throw ConfigError(e.what());
  } catch (const YAML::Exception &e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  const fs::path failure_file = out / "failures.txt";
  fs::remove(failure_file);
  if (!r.failures.empty()) {
    std::string text;
    for (const auto &f : r.failures) {
      text += f + "\n";
    }
    write_text(failure_file, text);
    r.exit_code = 1;
  }
  return r;
}

RunResult run(const RunOptions &options) {
  if (!commands.contains(options.command)) {
    throw ConfigError("unknown command '" + options.command + "'");
  }
  const auto start = std::chrono::steady_clock::now();
  const YAML::Node resolved = resolve_config(options.config, options.overrides);
  RunResult r;
  try {
    r = execute(options.command, resolved, options.out);
  } catch (const ConfigError &e) {
    throw ConfigError(options.config.string() + ": " + e.what());
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  YAML::Emitter m;
  m << YAML::BeginMap;
  m << YAML::Key << "command" << YAML::Value << options.command;
  m << YAML::Key << "config_path" << YAML::Value << fs::absolute(options.config).string();
  m << YAML::Key << "seed" << YAML::Value << resolved["seed"].as<std::uint64_t>();
  m << YAML::Key << "version" << YAML::Value << version;
  m << YAML::Key << "threads" << YAML::Value << options.threads;
  m << YAML::Key << "overrides" << YAML::Value << YAML::BeginMap;
  if (options.overrides.seed) {
    m << YAML::Key << "seed" << YAML::Value << *options.overrides.seed;
  }
  if (options.overrides.frequencies) {
    m << YAML::Key << "frequencies" << YAML::Value << *options.overrides.frequencies;
  }
  m << YAML::EndMap;
  m << YAML::Key << "resolved_config" << YAML::Value << YAML::Literal << YAML::Dump(resolved);
  m << YAML::Key << "outputs" << YAML::Value << YAML::BeginSeq;
  for (const auto &name : r.outputs) {
    m << YAML::BeginMap << YAML::Key << "path" << YAML::Value << name << YAML::Key << "fnv1a64"
      << YAML::Value << file_digest(options.out / name) << YAML::EndMap;
  }
  if (!r.failures.empty()) {
    m << YAML::BeginMap << YAML::Key << "path" << YAML::Value << "failures.txt" << YAML::Key
      << "fnv1a64" << YAML::Value << file_digest(options.out / "failures.txt") << YAML::EndMap;
  }
  m << YAML::EndSeq;
  m << YAML::Key << "exit_code" << YAML::Value << r.exit_code;
  m << YAML::Key << "wall_clock_seconds" << YAML::Value << wall;
  m << YAML::EndMap;
  write_text(options.out / "manifest.yaml", yaml_text(m));
  return r;
}

RunResult replay(const fs::path &manifest, const fs::path &out, unsigned threads) {
  const YAML::Node m = load_file(manifest);
  const auto command = get<std::string>(m, "command", "");
  const auto text = get<std::string>(m, "resolved_config", "");
  if (command.empty() || text.empty()) {
    throw ConfigError(manifest.string() + ": not a run manifest");
  }
  default_threads() = threads;
  RunResult r = execute(command, YAML::Load(text), out);
  std::vector<std::string> mismatches;
  for (const auto &entry : m["outputs"]) {
    const auto name = entry["path"].as<std::string>();
    const auto expected = entry["fnv1a64"].as<std::string>();
    const fs::path produced = out / name;
    if (!fs::exists(produced)) {
      mismatches.push_back(name + ": not produced");
    } else if (file_digest(produced) != expected) {
      mismatches.push_back(name + ": digest " + file_digest(produced) + " != " + expected);
    }
  }
  std::ostringstream s;
  s << r.summary;
  if (mismatches.empty()) {
    s << "replay reproduced " << m["outputs"].size() << " outputs byte for byte\n";
  } else {
    for (const auto &line : mismatches) {
      s << "mismatch " << line << "\n";
    }
    r.failures.insert(r.failures.end(), mismatches.begin(), mismatches.end());
    r.exit_code = 1;
  }
  r.summary = s.str();
  return r;
}

int main(int argc, char **argv) {
  CLI::App cli{"Quenched central limit experiments for Fourier transforms of stationary processes"};
  cli.require_subcommand(1);
  RunOptions options;
  std::string out = "out";
  std::uint64_t seed = 0;
  std::string frequencies;
  unsigned threads = 1;

  std::vector<CLI::App *> subs;
  const std::pair<const char *, const char *> commands_help[] = {
      {"simulate", "write one trajectory"},
      {"periodogram", "periodogram with the spectral density overlay"},
      {"quenched", "Monte Carlo test of the quenched limit law"},
      {"conditions", "check the sufficient conditions for a spec"},
      {"martingale", "martingale approximation diagnostics"}};
  for (const auto &[name, help] : commands_help) {
    CLI::App *sub = cli.add_subcommand(name, help);
    sub->add_option("--config", options.config, "run config (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
    sub->add_option("--frequencies", frequencies, "LIST | random:K | fourier");
    sub->add_flag("--quiet", options.quiet, "suppress the summary");
    subs.push_back(sub);
  }
  std::string manifest;
  CLI::App *rep = cli.add_subcommand("replay", "re-run a manifest and compare digests");
  rep->add_option("--manifest", manifest, "manifest.yaml of an earlier run")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", out, "output directory")->capture_default_str();
  rep->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 2;
  }

  default_threads() = threads;
  try {
    RunResult r;
    if (rep->parsed()) {
      r = replay(manifest, out, threads);
    } else {
      for (CLI::App *sub : subs) {
        if (sub->parsed()) {
          options.command = sub->get_name();
          if (sub->count("--seed") > 0) {
            options.overrides.seed = seed;
          }
          if (sub->count("--frequencies") > 0) {
            options.overrides.frequencies = frequencies;
          }
        }
      }
      options.out = out;
      options.threads = threads;
      r = run(options);
    }
    if (!options.quiet) {
      std::cout << r.summary;
    }
    for (const auto &f : r.failures) {
      std::cerr << "FAIL " << f << "\n";
    }
    return r.exit_code;
  } catch (const ConfigError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

} // namespace qclt::app
