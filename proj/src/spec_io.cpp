#include "qclt/spec_io.hpp"

#include <cstdio>

namespace qclt {

namespace {

template <class... Ts> struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts> Overloaded(Ts...) -> Overloaded<Ts...>;

const YAML::Node require(const YAML::Node &node, const std::string &key) {
  const YAML::Node child = node[key];
  if (!child) {
    throw ValidationError(at_line(node, "missing required key '" + key + "'"));
  }
  return child;
}

template <class T> T scalar(const YAML::Node &node, const std::string &what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception &) {
    throw ValidationError(at_line(node, "'" + what + "' has the wrong type"));
  }
}

template <class T> T scalar_or(const YAML::Node &parent, const std::string &key, T fallback) {
  const YAML::Node child = parent[key];
  return child ? scalar<T>(child, key) : fallback;
}

Eigen::VectorXd vector_of(const YAML::Node &node, const std::string &what) {
  if (!node.IsSequence()) {
    throw ValidationError(at_line(node, "'" + what + "' must be a list of numbers"));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = scalar<double>(node[i], what);
  }
  return v;
}

Eigen::MatrixXd matrix_of(const YAML::Node &node, const std::string &what) {
  if (!node.IsSequence() || node.size() == 0) {
    throw ValidationError(at_line(node, "'" + what + "' must be a nonempty list of rows"));
  }
  const auto rows = static_cast<Eigen::Index>(node.size());
  Eigen::MatrixXd m(rows, rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const YAML::Node row = node[static_cast<std::size_t>(i)];
    const Eigen::VectorXd values = vector_of(row, what);
    if (values.size() != rows) {
      throw ValidationError(at_line(row, what + " row " + std::to_string(i) + " has " +
                                             std::to_string(values.size()) + " entries, expected " +
                                             std::to_string(rows)));
    }
    m.row(i) = values.transpose();
  }
  return m;
}

InnovationDist parse_innovation(const YAML::Node &node) {
  InnovationDist d;
  const auto kind = scalar_or<std::string>(node, "kind", "normal");
  if (kind == "normal") {
    d.kind = InnovationKind::normal;
  } else if (kind == "uniform") {
    d.kind = InnovationKind::uniform;
  } else if (kind == "rademacher") {
    d.kind = InnovationKind::rademacher;
  } else {
    throw ValidationError(at_line(node, "unknown innovation kind '" + kind + "'"));
  }
  d.variance = scalar_or<double>(node, "variance", 1.0);
  return d;
}

const char *innovation_name(InnovationKind kind) {
  switch (kind) {
  case InnovationKind::normal:
    return "normal";
  case InnovationKind::uniform:
    return "uniform";
  case InnovationKind::rademacher:
    return "rademacher";
  }
  return "normal";
}

CoefficientSequence parse_coefficients(const YAML::Node &node) {
  CoefficientSequence c;
  if (const YAML::Node prefix = node["prefix"]) {
    const Eigen::VectorXd v = vector_of(prefix, "prefix");
    c.prefix.assign(v.data(), v.data() + v.size());
  }
  if (const YAML::Node tail = node["tail"]) {
    const auto rule = scalar<std::string>(require(tail, "rule"), "rule");
    c.scale = scalar_or<double>(tail, "scale", 1.0);
    if (rule == "geometric") {
      c.rule = TailRule::geometric;
      c.ratio = scalar<double>(require(tail, "ratio"), "ratio");
    } else if (rule == "power") {
      c.rule = TailRule::power;
      c.exponent = scalar<double>(require(tail, "exponent"), "exponent");
      c.shift = scalar_or<double>(tail, "shift", 1.0);
      c.log_exponent = scalar_or<double>(tail, "log_exponent", 0.0);
    } else if (rule != "none") {
      throw ValidationError(at_line(tail, "unknown tail rule '" + rule + "'"));
    }
  }
  return c;
}

void emit_vector(YAML::Emitter &out, const Eigen::VectorXd &v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out << v(i);
  }
  out << YAML::EndSeq;
}

void emit_innovation(YAML::Emitter &out, const InnovationDist &d) {
  out << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << innovation_name(d.kind)
      << YAML::Key << "variance" << YAML::Value << d.variance << YAML::EndMap;
}

void emit_chain(YAML::Emitter &out, const FiniteMarkovFn &m, const char *family) {
  out << YAML::Key << "family" << YAML::Value << family;
  out << YAML::Key << "kernel" << YAML::Value << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < m.kernel.rows(); ++i) {
    emit_vector(out, m.kernel.row(i).transpose());
  }
  out << YAML::EndSeq;
  out << YAML::Key << "stationary" << YAML::Value;
  emit_vector(out, m.stationary);
  out << YAML::Key << "observable" << YAML::Value;
  emit_vector(out, m.observable);
}

} // namespace

std::string at_line(const YAML::Node &node, const std::string &message) {
  const YAML::Mark mark = node.Mark();
  if (mark.is_null()) {
    return message;
  }
  return "line " + std::to_string(mark.line + 1) + ": " + message;
}

ProcessSpec parse_spec(const YAML::Node &node) {
  if (!node.IsMap()) {
    throw ValidationError(at_line(node, "process description must be a mapping"));
  }
  const YAML::Node family_node = require(node, "family");
  const auto family = scalar<std::string>(family_node, "family");
  ProcessSpec spec;
  if (family == "linear") {
    LinearProcess p;
    p.coeffs = parse_coefficients(require(node, "coefficients"));
    if (const YAML::Node innovation = node["innovation"]) {
      p.innovation = parse_innovation(innovation);
    }
    p.max_window = scalar_or<std::size_t>(node, "max_window", p.max_window);
    spec = p;
  } else if (family == "finite_markov" || family == "reversible_markov") {
    FiniteMarkovFn m;
    m.kernel = matrix_of(require(node, "kernel"), "kernel");
    const YAML::Node kernel_node = node["kernel"];
    for (Eigen::Index i = 0; i < m.kernel.rows(); ++i) {
      const double sum = m.kernel.row(i).sum();
      if (std::abs(sum - 1.0) > 1e-12) {
        throw ValidationError(at_line(kernel_node[static_cast<std::size_t>(i)],
                                      "kernel row " + std::to_string(i) + " sums to " +
                                          std::to_string(sum) + ", not 1"));
      }
    }
    m.observable = vector_of(require(node, "observable"), "observable");
    if (const YAML::Node pi = node["stationary"]) {
      m.stationary = vector_of(pi, "stationary");
    } else {
      m.stationary = stationary_distribution(m.kernel);
    }
    if (scalar_or<bool>(node, "center_observable", false) &&
        m.observable.size() == m.stationary.size()) {
      m.observable.array() -= m.stationary.dot(m.observable);
    }
    if (family == "reversible_markov") {
      ReversibleMarkovFn r;
      static_cast<FiniteMarkovFn &>(r) = m;
      spec = r;
    } else {
      spec = m;
    }
  } else if (family == "iterated_random") {
    IteratedRandomFn f;
    f.slope = scalar<double>(require(node, "slope"), "slope");
    f.slope_jitter = scalar_or<double>(node, "slope_jitter", 0.0);
    if (const YAML::Node noise = node["noise"]) {
      f.noise = parse_innovation(noise);
    }
    const auto obs = scalar_or<std::string>(node, "observable", "identity");
    if (obs == "identity") {
      f.observable = IrfObservable::identity;
    } else if (obs == "tanh") {
      f.observable = IrfObservable::tanh;
    } else {
      throw ValidationError(at_line(node["observable"], "unknown IRF observable '" + obs + "'"));
    }
    spec = f;
  } else if (family == "gaussian_lrd") {
    GaussianLRD g;
    g.alpha = scalar<double>(require(node, "alpha"), "alpha");
    const auto obs = scalar_or<std::string>(node, "observable", "identity");
    if (obs == "identity") {
      g.observable = LrdObservable::identity;
    } else if (obs == "square") {
      g.observable = LrdObservable::square;
    } else {
      throw ValidationError(at_line(node["observable"], "unknown LRD observable '" + obs + "'"));
    }
    g.max_length = scalar_or<std::size_t>(node, "max_length", g.max_length);
    spec = g;
  } else {
    throw ValidationError(at_line(family_node, "unknown process family '" + family + "'"));
  }
  try {
    validate(spec);
  } catch (const ValidationError &e) {
    throw ValidationError(at_line(node, e.what()));
  }
  return spec;
}

ProcessSpec parse_spec_text(const std::string &text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException &e) {
    throw ValidationError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return parse_spec(root);
}

QuenchedOrigin parse_origin(const YAML::Node &node, const ProcessSpec &spec) {
  const auto kind = scalar<std::string>(require(node, "kind"), "kind");
  QuenchedOrigin origin;
  if (kind == "linear_past") {
    origin = LinearPast{vector_of(require(node, "innovations"), "innovations")};
  } else if (kind == "markov_start") {
    origin = MarkovStart{scalar<Eigen::Index>(require(node, "state"), "state")};
  } else if (kind == "irf_start") {
    origin = IrfStart{scalar<double>(require(node, "x0"), "x0")};
  } else if (kind == "gaussian_past") {
    origin = GaussianPast{vector_of(require(node, "values"), "values")};
  } else {
    throw ValidationError(at_line(node, "unknown origin kind '" + kind + "'"));
  }
  try {
    validate_origin(spec, origin);
  } catch (const ValidationError &e) {
    throw ValidationError(at_line(node, e.what()));
  }
  return origin;
}

void emit_spec(YAML::Emitter &out, const ProcessSpec &spec) {
  out << YAML::BeginMap;
  std::visit(
      Overloaded{
          [&](const LinearProcess &p) {
            out << YAML::Key << "family" << YAML::Value << "linear";
            out << YAML::Key << "coefficients" << YAML::Value << YAML::BeginMap;
            out << YAML::Key << "prefix" << YAML::Value << YAML::Flow << YAML::BeginSeq;
            for (double a : p.coeffs.prefix) {
              out << a;
            }
            out << YAML::EndSeq;
            out << YAML::Key << "tail" << YAML::Value << YAML::BeginMap;
            switch (p.coeffs.rule) {
            case TailRule::none:
              out << YAML::Key << "rule" << YAML::Value << "none";
              break;
            case TailRule::geometric:
              out << YAML::Key << "rule" << YAML::Value << "geometric" << YAML::Key << "scale"
                  << YAML::Value << p.coeffs.scale << YAML::Key << "ratio" << YAML::Value
                  << p.coeffs.ratio;
              break;
            case TailRule::power:
              out << YAML::Key << "rule" << YAML::Value << "power" << YAML::Key << "scale"
                  << YAML::Value << p.coeffs.scale << YAML::Key << "exponent" << YAML::Value
                  << p.coeffs.exponent << YAML::Key << "shift" << YAML::Value << p.coeffs.shift
                  << YAML::Key << "log_exponent" << YAML::Value << p.coeffs.log_exponent;
              break;
            }
            out << YAML::EndMap << YAML::EndMap;
            out << YAML::Key << "innovation" << YAML::Value;
            emit_innovation(out, p.innovation);
            out << YAML::Key << "max_window" << YAML::Value << p.max_window;
          },
          [&](const ReversibleMarkovFn &r) { emit_chain(out, r, "reversible_markov"); },
          [&](const FiniteMarkovFn &m) { emit_chain(out, m, "finite_markov"); },
          [&](const IteratedRandomFn &f) {
            out << YAML::Key << "family" << YAML::Value << "iterated_random";
            out << YAML::Key << "slope" << YAML::Value << f.slope;
            out << YAML::Key << "slope_jitter" << YAML::Value << f.slope_jitter;
            out << YAML::Key << "noise" << YAML::Value;
            emit_innovation(out, f.noise);
            out << YAML::Key << "observable" << YAML::Value
                << (f.observable == IrfObservable::identity ? "identity" : "tanh");
          },
          [&](const GaussianLRD &g) {
            out << YAML::Key << "family" << YAML::Value << "gaussian_lrd";
            out << YAML::Key << "alpha" << YAML::Value << g.alpha;
            out << YAML::Key << "observable" << YAML::Value
                << (g.observable == LrdObservable::identity ? "identity" : "square");
            out << YAML::Key << "max_length" << YAML::Value << g.max_length;
          }},
      spec);
  out << YAML::EndMap;
}

void emit_origin(YAML::Emitter &out, const QuenchedOrigin &origin) {
  out << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << origin_name(origin);
  std::visit(Overloaded{[&](const LinearPast &p) {
                          out << YAML::Key << "innovations" << YAML::Value;
                          emit_vector(out, p.innovations);
                        },
                        [&](const MarkovStart &s) {
                          out << YAML::Key << "state" << YAML::Value << s.state;
                        },
                        [&](const IrfStart &s) {
                          out << YAML::Key << "x0" << YAML::Value << s.x0;
                        },
                        [&](const GaussianPast &p) {
                          out << YAML::Key << "values" << YAML::Value;
                          emit_vector(out, p.values);
                        }},
             origin);
  out << YAML::EndMap;
}

std::string canonical_text(const ProcessSpec &spec) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  emit_spec(out, spec);
  return out.c_str();
}

std::uint64_t spec_hash(const ProcessSpec &spec) { return fnv1a64(canonical_text(spec)); }

std::string hex64(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

} // namespace qclt
