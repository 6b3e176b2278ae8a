#include "raqmsim/seqio.hpp"

#include <fstream>
#include <sstream>

namespace raqmsim {

namespace {

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Stored: return "stored";
    case Outcome::Lost: return "lost";
    case Outcome::Retrieved: return "retrieved";
    case Outcome::ForcedRetrieved: return "forced_retrieved";
  }
  throw std::logic_error("unknown outcome");
}

Outcome outcome_from_name(const std::string& name) {
  if (name == "stored") return Outcome::Stored;
  if (name == "lost") return Outcome::Lost;
  if (name == "retrieved") return Outcome::Retrieved;
  if (name == "forced_retrieved") return Outcome::ForcedRetrieved;
  throw ParseError("unknown outcome: " + name);
}

}  // namespace

std::string emit_sequence(std::span<const Instruction> seq) {
  std::ostringstream out;
  for (const Instruction& instr : seq) {
    out << instr.slot << ' ';
    if (instr.op == OpType::Write) {
      out << "W " << instr.cell;
      if (!instr.pol.has_value()) {
        throw std::invalid_argument("emit_sequence: write without polarization");
      }
      out << ' ' << pol_char(*instr.pol);
    } else {
      out << (instr.forced ? "RF" : "R") << ' ' << instr.cell;
    }
    out << '\n';
  }
  return out.str();
}

std::vector<Instruction> parse_sequence(const std::string& text) {
  std::vector<Instruction> seq;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    Instruction instr;
    std::string op;
    if (!(fields >> instr.slot >> op >> instr.cell)) {
      throw ParseError("sequence line " + std::to_string(lineno) + ": expected `slot op cell`");
    }
    if (op == "W") {
      instr.op = OpType::Write;
      std::string pol;
      if (!(fields >> pol) || pol.size() != 1) {
        throw ParseError("sequence line " + std::to_string(lineno) + ": write needs a polarization");
      }
      try {
        instr.pol = pol_from_char(pol[0]);
      } catch (const std::invalid_argument& ex) {
        throw ParseError("sequence line " + std::to_string(lineno) + ": " + ex.what());
      }
    } else if (op == "R" || op == "RF") {
      instr.op = OpType::Read;
      instr.forced = (op == "RF");
    } else {
      throw ParseError("sequence line " + std::to_string(lineno) + ": unknown op `" + op + "`");
    }
    std::string extra;
    if (fields >> extra) {
      throw ParseError("sequence line " + std::to_string(lineno) + ": trailing fields");
    }
    seq.push_back(instr);
  }
  return seq;
}

nlohmann::json trace_to_json(const Trace& trace) {
  nlohmann::json events = nlohmann::json::array();
  for (const TraceEvent& ev : trace.events) {
    nlohmann::json e;
    e["slot"] = ev.instr.slot;
    e["op"] = ev.instr.op == OpType::Write ? "W" : (ev.instr.forced ? "RF" : "R");
    e["cell"] = ev.instr.cell;
    if (ev.instr.pol) e["pol"] = std::string(1, pol_char(*ev.instr.pol));
    e["outcome"] = outcome_name(ev.outcome);
    if (ev.fidelity) e["fidelity"] = *ev.fidelity;
    if (ev.storage_us) e["storage_us"] = *ev.storage_us;
    if (ev.input_pol) e["in_pol"] = std::string(1, pol_char(*ev.input_pol));
    events.push_back(std::move(e));
  }
  return nlohmann::json{{"format", "raqmsim-trace-v1"},
                        {"seed", trace.seed},
                        {"config_hash", trace.config_hash},
                        {"events", std::move(events)}};
}

Trace trace_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "raqmsim-trace-v1") {
      throw ParseError("unknown trace format");
    }
    Trace trace;
    trace.seed = j.at("seed").get<std::uint64_t>();
    trace.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& e : j.at("events")) {
      TraceEvent ev;
      ev.instr.slot = e.at("slot").get<std::int64_t>();
      const auto op = e.at("op").get<std::string>();
      if (op == "W") {
        ev.instr.op = OpType::Write;
      } else if (op == "R" || op == "RF") {
        ev.instr.op = OpType::Read;
        ev.instr.forced = (op == "RF");
      } else {
        throw ParseError("unknown op in trace: " + op);
      }
      ev.instr.cell = e.at("cell").get<int>();
      if (ev.instr.cell < 1 || ev.instr.cell > ArrayGeometry::kCellCount) {
        throw ParseError("trace cell index outside 1..72");
      }
      if (e.contains("pol")) ev.instr.pol = pol_from_char(e.at("pol").get<std::string>().at(0));
      ev.outcome = outcome_from_name(e.at("outcome").get<std::string>());
      if (e.contains("fidelity")) ev.fidelity = e.at("fidelity").get<double>();
      if (e.contains("storage_us")) ev.storage_us = e.at("storage_us").get<double>();
      if (e.contains("in_pol")) ev.input_pol = pol_from_char(e.at("in_pol").get<std::string>().at(0));
      trace.events.push_back(std::move(ev));
    }
    return trace;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("malformed trace: ") + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ParseError(std::string("malformed trace: ") + ex.what());
  }
}

nlohmann::json metrics_to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["n_instructions"] = r.n_instructions;
  j["n_writes"] = r.n_writes;
  j["n_reads"] = r.n_reads;
  j["n_forced"] = r.n_forced;
  j["n_stored"] = r.n_stored;
  j["n_lost_writes"] = r.n_lost_writes;
  j["n_retrieved"] = r.n_retrieved;
  j["n_lost_reads"] = r.n_lost_reads;
  j["final_filling"] = r.final_filling;
  j["max_filling"] = r.max_filling;
  j["filling_series"] = r.filling_series;
  j["access_counts"] = r.access_counts;
  j["mean_accesses_all"] = r.mean_accesses_all;
  j["mean_accesses_visited"] = r.mean_accesses_visited;
  j["visited_cells"] = r.visited_cells;
  j["max_accesses"] = r.max_accesses;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& [us, count] : r.storage_hist_us) {
    hist.push_back({{"us", us}, {"count", count}});
  }
  j["storage_hist_us"] = std::move(hist);
  j["mean_storage_us"] = r.mean_storage_us;
  nlohmann::json by_pol;
  for (const auto& [pol, stats] : r.fidelity_by_pol) {
    by_pol[pol] = {{"count", stats.count}, {"mean", stats.mean}, {"stddev", stats.stddev}};
  }
  j["fidelity_by_pol"] = std::move(by_pol);
  j["forced_fraction"] = r.forced_fraction;
  j["threshold"] = r.threshold;
  nlohmann::json low = nlohmann::json::array();
  for (const auto& ev : r.below_threshold) {
    low.push_back({{"event_index", ev.event_index}, {"cell", ev.cell}, {"fidelity", ev.fidelity}});
  }
  j["below_threshold"] = std::move(low);
  j["nbar"] = r.nbar;
  j["eta_end_to_end"] = r.eta_end_to_end;
  j["expected_click_fraction"] = r.expected_click_fraction;
  return j;
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.n_instructions = j.at("n_instructions").get<int>();
    r.n_writes = j.at("n_writes").get<int>();
    r.n_reads = j.at("n_reads").get<int>();
    r.n_forced = j.at("n_forced").get<int>();
    r.n_stored = j.at("n_stored").get<int>();
    r.n_lost_writes = j.at("n_lost_writes").get<int>();
    r.n_retrieved = j.at("n_retrieved").get<int>();
    r.n_lost_reads = j.at("n_lost_reads").get<int>();
    r.final_filling = j.at("final_filling").get<int>();
    r.max_filling = j.at("max_filling").get<int>();
    r.filling_series = j.at("filling_series").get<std::vector<int>>();
    const auto& counts = j.at("access_counts");
    if (counts.size() != r.access_counts.size()) {
      throw ParseError("access_counts must have 72 entries");
    }
    for (std::size_t i = 0; i < r.access_counts.size(); ++i) {
      r.access_counts[i] = counts[i].get<int>();
    }
    r.mean_accesses_all = j.at("mean_accesses_all").get<double>();
    r.mean_accesses_visited = j.at("mean_accesses_visited").get<double>();
    r.visited_cells = j.at("visited_cells").get<int>();
    r.max_accesses = j.at("max_accesses").get<int>();
    for (const auto& bin : j.at("storage_hist_us")) {
      r.storage_hist_us[bin.at("us").get<int>()] = bin.at("count").get<int>();
    }
    r.mean_storage_us = j.at("mean_storage_us").get<double>();
    for (const auto& [pol, stats] : j.at("fidelity_by_pol").items()) {
      r.fidelity_by_pol[pol] = {stats.at("count").get<int>(), stats.at("mean").get<double>(),
                                stats.at("stddev").get<double>()};
    }
    r.forced_fraction = j.at("forced_fraction").get<double>();
    r.threshold = j.at("threshold").get<double>();
    for (const auto& ev : j.at("below_threshold")) {
      r.below_threshold.push_back({ev.at("event_index").get<std::size_t>(),
                                   ev.at("cell").get<int>(), ev.at("fidelity").get<double>()});
    }
    r.nbar = j.at("nbar").get<double>();
    r.eta_end_to_end = j.at("eta_end_to_end").get<double>();
    r.expected_click_fraction = j.at("expected_click_fraction").get<double>();
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("malformed metrics: ") + ex.what());
  }
}

nlohmann::json physics_to_json(const PhysicsParams& p) {
  return nlohmann::json{
      {"tau_coherence_us", p.tau_coherence_us},
      {"eta_atoms", p.eta_atoms},
      {"crosstalk_round_infidelity", p.crosstalk_round_infidelity},
      {"fidelity_decay_scale", p.fidelity_decay_scale},
      {"access_time_us", p.access_time_us},
      {"settle_time_ns", p.settle_time_ns},
      {"gate_window_ns", p.gate_window_ns},
      {"fidelity_floor", p.fidelity_floor},
      {"decay_law", p.decay_law == DecayLaw::Exponential ? "exponential" : "gaussian"},
  };
}

PhysicsParams physics_from_json(const nlohmann::json& j) {
  try {
    PhysicsParams p = PhysicsParams::defaults();
    if (j.contains("tau_coherence_us")) {
      const auto& taus = j.at("tau_coherence_us");
      if (taus.size() != p.tau_coherence_us.size()) {
        throw ParseError("tau_coherence_us must have 144 entries");
      }
      for (std::size_t i = 0; i < p.tau_coherence_us.size(); ++i) {
        p.tau_coherence_us[i] = taus[i].get<double>();
      }
    }
    if (j.contains("eta_atoms")) {
      const auto& etas = j.at("eta_atoms");
      if (etas.size() != p.eta_atoms.size()) {
        throw ParseError("eta_atoms must have 144 entries");
      }
      for (std::size_t i = 0; i < p.eta_atoms.size(); ++i) {
        p.eta_atoms[i] = etas[i].get<double>();
      }
    }
    if (j.contains("crosstalk_round_infidelity")) {
      p.crosstalk_round_infidelity = j.at("crosstalk_round_infidelity").get<double>();
    }
    if (j.contains("fidelity_decay_scale")) {
      p.fidelity_decay_scale = j.at("fidelity_decay_scale").get<double>();
    }
    if (j.contains("access_time_us")) p.access_time_us = j.at("access_time_us").get<double>();
    if (j.contains("settle_time_ns")) p.settle_time_ns = j.at("settle_time_ns").get<double>();
    if (j.contains("gate_window_ns")) p.gate_window_ns = j.at("gate_window_ns").get<double>();
    if (j.contains("fidelity_floor")) p.fidelity_floor = j.at("fidelity_floor").get<double>();
    if (j.contains("decay_law")) {
      const auto law = j.at("decay_law").get<std::string>();
      if (law == "exponential") {
        p.decay_law = DecayLaw::Exponential;
      } else if (law == "gaussian") {
        p.decay_law = DecayLaw::Gaussian;
      } else {
        throw ParseError("unknown decay law: " + law);
      }
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("malformed physics params: ") + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ParseError(std::string("invalid physics params: ") + ex.what());
  }
}

std::string fnv1a64_hex(const std::string& data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open file: " + path);
  }
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write file: " + path);
  }
  out << content;
}

}  // namespace raqmsim
