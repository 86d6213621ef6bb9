#ifndef QCLT_SPEC_IO_HPP
#define QCLT_SPEC_IO_HPP

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <string>

#include "qclt/process_models.hpp"

namespace qclt {

// Process descriptions are YAML documents; see docs/spec_format.md.
// Parse errors carry the 1-based line of the offending node.

ProcessSpec parse_spec(const YAML::Node &node);
ProcessSpec parse_spec_text(const std::string &text);
QuenchedOrigin parse_origin(const YAML::Node &node, const ProcessSpec &spec);

void emit_spec(YAML::Emitter &out, const ProcessSpec &spec);
void emit_origin(YAML::Emitter &out, const QuenchedOrigin &origin);

/// Canonical serialization: fixed key order, 17 significant digits.
std::string canonical_text(const ProcessSpec &spec);
std::uint64_t spec_hash(const ProcessSpec &spec);
std::string hex64(std::uint64_t value);

/// "line N: message" for a node with a source mark, plain message otherwise.
std::string at_line(const YAML::Node &node, const std::string &message);

} // namespace qclt

#endif // QCLT_SPEC_IO_HPP
