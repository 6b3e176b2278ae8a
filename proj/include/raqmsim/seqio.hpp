#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "raqmsim/controller.hpp"
#include "raqmsim/memarray.hpp"
#include "raqmsim/metrics.hpp"

namespace raqmsim {

// Thrown on malformed sequence, trace, or config input.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sequence text format, one instruction per line:
//   <slot> W  <cell> <pol>      pol in {H, V, +, L}
//   <slot> R  <cell>
//   <slot> RF <cell>            forced read
// Lines starting with '#' and blank lines are ignored on parse.
std::string emit_sequence(std::span<const Instruction> seq);
std::vector<Instruction> parse_sequence(const std::string& text);

nlohmann::json trace_to_json(const Trace& trace);
Trace trace_from_json(const nlohmann::json& j);

nlohmann::json metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);

nlohmann::json physics_to_json(const PhysicsParams& params);
PhysicsParams physics_from_json(const nlohmann::json& j);

// FNV-1a over the canonical (sorted-key) dump; used to stamp output files so
// a replay can prove it ran the same configuration.
std::string fnv1a64_hex(const std::string& data);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace raqmsim
