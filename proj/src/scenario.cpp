#include "raqmsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "raqmsim/seqio.hpp"

namespace raqmsim {

EfficiencyBudget EfficiencyBudget::table_defaults() {
  return EfficiencyBudget{{
      {"input fiber coupling", 0.85},
      {"input encoding converter", 0.51},
      {"input AOD pair", 0.85},
      {"storage and retrieval in atoms", 0.055},
      {"output AOD pair", 0.85},
      {"output encoding converter", 0.52},
      {"output fiber coupling", 0.85},
      {"filter etalons", 0.73},
      {"other optical elements", 0.90},
  }};
}

double end_to_end_efficiency(const EfficiencyBudget& budget) {
  if (budget.entries.empty()) {
    throw std::invalid_argument("end_to_end_efficiency: empty budget");
  }
  double product = 1.0;
  for (const auto& [name, eff] : budget.entries) {
    if (!(eff > 0.0) || eff > 1.0) {
      throw std::invalid_argument("end_to_end_efficiency: entry `" + name +
                                  "` outside (0, 1]");
    }
    product *= eff;
  }
  return product;
}

namespace {

const std::array<std::pair<ScenarioKind, const char*>, 10> kScenarioNames = {{
    {ScenarioKind::Raqm250, "raqm250"},
    {ScenarioKind::Raqm1000, "raqm1000"},
    {ScenarioKind::Queue72, "queue72"},
    {ScenarioKind::Stack72, "stack72"},
    {ScenarioKind::Buffer, "buffer"},
    {ScenarioKind::QueueGeneral, "queue_general"},
    {ScenarioKind::StackGeneral, "stack_general"},
    {ScenarioKind::EprReshuffle, "epr_reshuffle"},
    {ScenarioKind::CrosstalkProbe, "crosstalk_probe"},
    {ScenarioKind::SingleCellFidelity, "single_cell_fidelity"},
}};

std::string quality_name(CalibrationQuality q) {
  switch (q) {
    case CalibrationQuality::Identity: return "identity";
    case CalibrationQuality::Careful: return "careful";
    case CalibrationQuality::Fast: return "fast";
  }
  throw std::logic_error("unknown calibration quality");
}

CalibrationQuality quality_from_name(const std::string& name) {
  if (name == "identity") return CalibrationQuality::Identity;
  if (name == "careful") return CalibrationQuality::Careful;
  if (name == "fast") return CalibrationQuality::Fast;
  throw ParseError("unknown calibration quality: " + name);
}

}  // namespace

std::string scenario_name(ScenarioKind kind) {
  for (const auto& [k, name] : kScenarioNames) {
    if (k == kind) return name;
  }
  throw std::logic_error("unknown scenario kind");
}

ScenarioKind scenario_from_name(const std::string& name) {
  for (const auto& [k, n] : kScenarioNames) {
    if (name == n) return k;
  }
  throw ParseError("unknown scenario: " + name);
}

ScenarioConfig ScenarioConfig::preset(ScenarioKind kind, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.kind = kind;
  cfg.seed = seed;
  switch (kind) {
    case ScenarioKind::Raqm250:
      cfg.n_ops = 250;
      cfg.window_enabled = false;
      break;
    case ScenarioKind::Raqm1000:
      cfg.n_ops = 1000;
      cfg.window_enabled = true;
      break;
    case ScenarioKind::Queue72:
    case ScenarioKind::Stack72:
    case ScenarioKind::Buffer:
    case ScenarioKind::QueueGeneral:
    case ScenarioKind::StackGeneral:
      cfg.n_qubits = 72;
      break;
    case ScenarioKind::EprReshuffle:
      cfg.calibration = CalibrationQuality::Careful;
      break;
    case ScenarioKind::CrosstalkProbe:
      cfg.calibration = CalibrationQuality::Identity;
      break;
    case ScenarioKind::SingleCellFidelity:
      cfg.calibration = CalibrationQuality::Careful;
      break;
  }
  return cfg;
}

void ScenarioConfig::validate() const {
  if (!(threshold >= 0.0) || threshold > 1.0) {
    throw std::invalid_argument("threshold must be in [0, 1]");
  }
  physics.validate();
  if (n_ops < 1) throw std::invalid_argument("n_ops must be >= 1");
  if (!(window_us > 0.0)) throw std::invalid_argument("window must be positive");
  if (n_qubits < 1 || n_qubits > ArrayGeometry::kCellCount) {
    throw std::invalid_argument("n_qubits must be in 1..72");
  }
  if (receive_window_slots < n_qubits) {
    throw std::invalid_argument("receive window shorter than the qubit count");
  }
  source.validate();
  if (tomo_shots < 1) throw std::invalid_argument("tomo_shots must be >= 1");
  if (crosstalk_rounds < 1) throw std::invalid_argument("crosstalk_rounds must be >= 1");
  if (!(crosstalk_storage_us >= 0.0)) {
    throw std::invalid_argument("crosstalk storage time must be >= 0");
  }
  if (probe_cell < 1 || probe_cell > ArrayGeometry::kCellCount) {
    throw std::invalid_argument("probe_cell must be in 1..72");
  }
  for (int c : fidelity_cells) {
    if (c < 1 || c > ArrayGeometry::kCellCount) {
      throw std::invalid_argument("fidelity cell out of range");
    }
  }
  for (double t : storage_grid_us) {
    if (!(t >= 0.0)) throw std::invalid_argument("storage grid times must be >= 0");
  }
  if (fidelity_repeats < 1) throw std::invalid_argument("fidelity_repeats must be >= 1");
  if (!(nbar > 0.0)) throw std::invalid_argument("nbar must be positive");
  end_to_end_efficiency(budget);  // validates entries
}

nlohmann::json ScenarioConfig::to_json() const {
  nlohmann::json j;
  j["scenario"] = scenario_name(kind);
  j["seed"] = seed;
  j["threshold"] = threshold;
  j["physics"] = physics_to_json(physics);
  j["ideal_efficiency"] = ideal_efficiency;
  j["calibration"] = quality_name(calibration);
  j["n_ops"] = n_ops;
  j["window_us"] = window_us;
  j["window_enabled"] = window_enabled;
  j["n_qubits"] = n_qubits;
  j["receive_window_slots"] = receive_window_slots;
  j["source"] = {{"p_exc", source.p_exc},
                 {"cycle_us", source.cycle_us},
                 {"f_source", source.f_source},
                 {"catch_dead_time_us", source.catch_dead_time_us},
                 {"max_trials", source.max_trials}};
  j["release_order"] = release_order;
  j["tomo_shots"] = tomo_shots;
  j["crosstalk_rounds"] = crosstalk_rounds;
  j["crosstalk_storage_us"] = crosstalk_storage_us;
  j["probe_cell"] = probe_cell;
  j["fidelity_cells"] = fidelity_cells;
  j["storage_grid_us"] = storage_grid_us;
  j["fidelity_repeats"] = fidelity_repeats;
  j["nbar"] = nbar;
  nlohmann::json budget_json = nlohmann::json::array();
  for (const auto& [name, eff] : budget.entries) {
    budget_json.push_back({name, eff});
  }
  j["budget"] = std::move(budget_json);
  return j;
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
  try {
    const auto kind = scenario_from_name(j.at("scenario").get<std::string>());
    const auto seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 1;
    ScenarioConfig cfg = preset(kind, seed);
    if (j.contains("threshold")) cfg.threshold = j.at("threshold").get<double>();
    if (j.contains("physics")) cfg.physics = physics_from_json(j.at("physics"));
    if (j.contains("ideal_efficiency")) cfg.ideal_efficiency = j.at("ideal_efficiency").get<bool>();
    if (j.contains("calibration")) {
      cfg.calibration = quality_from_name(j.at("calibration").get<std::string>());
    }
    if (j.contains("n_ops")) cfg.n_ops = j.at("n_ops").get<int>();
    if (j.contains("window_us")) cfg.window_us = j.at("window_us").get<double>();
    if (j.contains("window_enabled")) cfg.window_enabled = j.at("window_enabled").get<bool>();
    if (j.contains("n_qubits")) cfg.n_qubits = j.at("n_qubits").get<int>();
    if (j.contains("receive_window_slots")) {
      cfg.receive_window_slots = j.at("receive_window_slots").get<std::int64_t>();
    }
    if (j.contains("source")) {
      const auto& s = j.at("source");
      if (s.contains("p_exc")) cfg.source.p_exc = s.at("p_exc").get<double>();
      if (s.contains("cycle_us")) cfg.source.cycle_us = s.at("cycle_us").get<double>();
      if (s.contains("f_source")) cfg.source.f_source = s.at("f_source").get<double>();
      if (s.contains("catch_dead_time_us")) {
        cfg.source.catch_dead_time_us = s.at("catch_dead_time_us").get<double>();
      }
      if (s.contains("max_trials")) cfg.source.max_trials = s.at("max_trials").get<std::uint64_t>();
    }
    if (j.contains("release_order")) {
      const auto& o = j.at("release_order");
      if (o.size() != 4) throw ParseError("release_order must have 4 entries");
      for (int i = 0; i < 4; ++i) cfg.release_order[i] = o[i].get<int>();
    }
    if (j.contains("tomo_shots")) cfg.tomo_shots = j.at("tomo_shots").get<std::uint64_t>();
    if (j.contains("crosstalk_rounds")) cfg.crosstalk_rounds = j.at("crosstalk_rounds").get<int>();
    if (j.contains("crosstalk_storage_us")) {
      cfg.crosstalk_storage_us = j.at("crosstalk_storage_us").get<double>();
    }
    if (j.contains("probe_cell")) cfg.probe_cell = j.at("probe_cell").get<int>();
    if (j.contains("fidelity_cells")) {
      cfg.fidelity_cells = j.at("fidelity_cells").get<std::vector<int>>();
    }
    if (j.contains("storage_grid_us")) {
      cfg.storage_grid_us = j.at("storage_grid_us").get<std::vector<double>>();
    }
    if (j.contains("fidelity_repeats")) cfg.fidelity_repeats = j.at("fidelity_repeats").get<int>();
    if (j.contains("nbar")) cfg.nbar = j.at("nbar").get<double>();
    if (j.contains("budget")) {
      cfg.budget.entries.clear();
      for (const auto& entry : j.at("budget")) {
        if (!entry.is_array() || entry.size() != 2) {
          throw ParseError("budget entries must be [name, efficiency] pairs");
        }
        cfg.budget.entries.emplace_back(entry[0].get<std::string>(), entry[1].get<double>());
      }
    }
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("malformed scenario config: ") + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ParseError(std::string("invalid scenario config: ") + ex.what());
  }
}

std::string ScenarioConfig::config_hash() const {
  nlohmann::json j = to_json();
  j.erase("seed");
  return fnv1a64_hex(j.dump());
}

namespace {

// k distinct slots in [0, limit), sorted. Rejection keeps the draw unbiased
// and deterministic.
std::vector<std::int64_t> distinct_sorted_slots(int k, std::int64_t limit, Rng& rng) {
  std::vector<bool> taken(limit, false);
  std::vector<std::int64_t> slots;
  slots.reserve(k);
  while (static_cast<int>(slots.size()) < k) {
    const auto s = static_cast<std::int64_t>(rng.uniform_below(limit));
    if (!taken[s]) {
      taken[s] = true;
      slots.push_back(s);
    }
  }
  std::sort(slots.begin(), slots.end());
  return slots;
}

std::vector<Instruction> build_sequence(const ScenarioConfig& cfg, Rng& rng) {
  switch (cfg.kind) {
    case ScenarioKind::Raqm250:
      return generate_random_sequence(cfg.n_ops, rng);
    case ScenarioKind::Raqm1000:
      return generate_windowed_sequence(cfg.n_ops, cfg.window_us, rng);
    case ScenarioKind::Queue72:
      return queue_sequence(cfg.n_qubits, rng);
    case ScenarioKind::Stack72:
      return stack_sequence(cfg.n_qubits, rng);
    case ScenarioKind::Buffer: {
      // Last arrival pinned to the end of the receive stage so the flush
      // block starts right after it.
      std::vector<std::int64_t> arrivals =
          distinct_sorted_slots(cfg.n_qubits - 1, cfg.receive_window_slots - 1, rng);
      arrivals.push_back(cfg.receive_window_slots - 1);
      std::vector<int> flush_order(cfg.n_qubits);
      for (int i = 0; i < cfg.n_qubits; ++i) flush_order[i] = i + 1;
      // Arbitrary block order: Fisher-Yates on the flush permutation.
      for (int i = cfg.n_qubits - 1; i > 0; --i) {
        std::swap(flush_order[i], flush_order[rng.uniform_below(i + 1)]);
      }
      return buffer_sequence(arrivals, flush_order, rng);
    }
    case ScenarioKind::QueueGeneral:
      return interleaved_queue_sequence(cfg.n_qubits, rng);
    case ScenarioKind::StackGeneral:
      return interleaved_stack_sequence(cfg.n_qubits, rng);
    default:
      throw std::logic_error("scenario has no instruction sequence");
  }
}

bool has_instruction_sequence(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::EprReshuffle:
    case ScenarioKind::CrosstalkProbe:
    case ScenarioKind::SingleCellFidelity:
      return false;
    default:
      return true;
  }
}

PhysicsParams effective_physics(const ScenarioConfig& cfg) {
  PhysicsParams phys = cfg.physics;
  if (cfg.ideal_efficiency) phys.eta_atoms.fill(1.0);
  return phys;
}

void run_crosstalk_probe(const ScenarioConfig& cfg, ScenarioResult& result, Rng& rng) {
  const ArrayGeometry geom = ArrayGeometry::standard();
  const PhysicsParams phys = effective_physics(cfg);
  const DensityMatrix probe = polarization_to_density(Polarization::plus());
  const Ket target = polarization_ket(Polarization::plus());
  for (int rounds = 0; rounds <= cfg.crosstalk_rounds; ++rounds) {
    MemoryArray array(geom, phys);
    array.write(cfg.probe_cell, probe, 0.0, rng);
    const auto neighbors = geom.cell_neighbor_micros(cfg.probe_cell);
    for (int r = 0; r < rounds; ++r) {
      for (int m : neighbors) array.access_micro(m);
    }
    const ReadOutcome ro = array.read(cfg.probe_cell, cfg.crosstalk_storage_us, rng);
    if (!ro.state) {
      throw InvariantError("crosstalk probe lost the qubit under unit efficiency");
    }
    result.crosstalk_curve.emplace_back(rounds, fidelity_to_pure(*ro.state, target));
  }
}

void run_single_cell_fidelity(const ScenarioConfig& cfg, ScenarioResult& result, Rng& rng) {
  const ArrayGeometry geom = ArrayGeometry::standard();
  const PhysicsParams phys = effective_physics(cfg);
  const CalibrationTable calibration = make_calibration_table(cfg.calibration, rng);
  const std::array<PolLabel, 4> pols = {PolLabel::H, PolLabel::V, PolLabel::Plus, PolLabel::L};

  for (int cell : cfg.fidelity_cells) {
    for (PolLabel pol : pols) {
      const Polarization p = polarization_of(pol);
      const DensityMatrix in = polarization_to_density(p);
      const Ket target = polarization_ket(p);
      for (double storage : cfg.storage_grid_us) {
        double sum = 0.0;
        for (int rep = 0; rep < cfg.fidelity_repeats; ++rep) {
          MemoryArray array(geom, phys);
          const DensityMatrix converted = apply_converter_arm(in, calibration[cell - 1].in, rng);
          array.write(cell, converted, 0.0, rng);
          const ReadOutcome ro = array.read(cell, storage, rng);
          if (!ro.state) {
            throw InvariantError("single-cell probe lost the qubit under unit efficiency");
          }
          const DensityMatrix out = apply_converter_arm(*ro.state, calibration[cell - 1].out, rng);
          sum += fidelity_to_pure(out, target);
        }
        result.single_cell_curve.push_back(
            {cell, pol_char(pol), storage, sum / cfg.fidelity_repeats});
      }
    }
  }
}

void run_epr(const ScenarioConfig& cfg, ScenarioResult& result, Rng& rng) {
  const ArrayGeometry geom = ArrayGeometry::standard();
  MemoryArray array(geom, effective_physics(cfg));
  const CalibrationTable calibration = make_calibration_table(cfg.calibration, rng);
  const auto records =
      catch_freeze_reshuffle_release(cfg.release_order, cfg.source, array, calibration, rng);
  for (const EPRRecord& rec : records) {
    const BellFidelityEstimate tomo = pair_fidelity_via_tomography(rec.rho_final, cfg.tomo_shots, rng);
    result.epr.push_back({rec.pair_id, rec.herald_time_us, rec.cell, rec.release_slot,
                          rec.storage_us, rec.fidelity, tomo.value, tomo.clamped});
  }
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  ScenarioResult result;
  result.config = cfg;

  Rng rng(cfg.seed);
  const std::string hash = cfg.config_hash();

  if (has_instruction_sequence(cfg.kind)) {
    const CalibrationTable calibration = make_calibration_table(cfg.calibration, rng);
    result.sequence = build_sequence(cfg, rng);

    const auto window_check =
        cfg.window_enabled ? std::optional<double>(cfg.window_us) : std::nullopt;
    const auto violations = validate_sequence(result.sequence, window_check);
    if (!violations.empty()) {
      throw InvariantError("generated sequence failed validation: " + violations.front().kind);
    }

    MemoryArray array(ArrayGeometry::standard(), effective_physics(cfg));
    result.trace = run_sequence(result.sequence, array, calibration, rng);
  } else if (cfg.kind == ScenarioKind::EprReshuffle) {
    run_epr(cfg, result, rng);
  } else if (cfg.kind == ScenarioKind::CrosstalkProbe) {
    run_crosstalk_probe(cfg, result, rng);
  } else {
    run_single_cell_fidelity(cfg, result, rng);
  }

  result.trace.seed = cfg.seed;
  result.trace.config_hash = hash;
  result.metrics =
      compute_metrics(result.trace, cfg.threshold, cfg.nbar, end_to_end_efficiency(cfg.budget));
  return result;
}

namespace {

std::string tsv_header(const ScenarioResult& result) {
  std::ostringstream out;
  out << "# scenario=" << scenario_name(result.config.kind) << " seed=" << result.config.seed
      << " config_hash=" << result.config.config_hash() << '\n';
  return out.str();
}

void write_tsv(const std::string& path, const ScenarioResult& result, const std::string& columns,
               const std::string& body) {
  write_text_file(path, tsv_header(result) + columns + body);
}

}  // namespace

void write_scenario_outputs(const ScenarioResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path base(out_dir);
  fs::create_directories(base / "plotdata");

  nlohmann::json trace_json = trace_to_json(result.trace);
  trace_json["scenario"] = scenario_name(result.config.kind);
  trace_json["config"] = result.config.to_json();
  if (!result.epr.empty()) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& rec : result.epr) {
      pairs.push_back({{"pair_id", rec.pair_id},
                       {"herald_us", rec.herald_us},
                       {"cell", rec.cell},
                       {"release_slot", rec.release_slot},
                       {"storage_us", rec.storage_us},
                       {"fidelity", rec.fidelity},
                       {"tomo_fidelity", rec.tomo_fidelity},
                       {"tomo_clamped", rec.tomo_clamped}});
    }
    trace_json["epr_records"] = std::move(pairs);
  }
  write_text_file((base / "trace.json").string(), trace_json.dump(2) + "\n");
  write_text_file((base / "metrics.json").string(), metrics_to_json(result.metrics).dump(2) + "\n");

  if (!result.sequence.empty()) {
    write_text_file((base / "sequence.seq").string(), emit_sequence(result.sequence));
  }

  // Self-check: an independent pass over the emitted trace file must land on
  // exactly the metrics we are publishing.
  {
    const Trace reread = trace_from_json(nlohmann::json::parse(
        read_text_file((base / "trace.json").string())));
    const MetricsReport recount =
        compute_metrics(reread, result.config.threshold, result.config.nbar,
                        end_to_end_efficiency(result.config.budget));
    if (!(recount == result.metrics)) {
      throw InvariantError("metrics recount from the emitted trace does not match");
    }
  }

  const fs::path plots = base / "plotdata";
  if (!result.trace.events.empty()) {
    {
      std::ostringstream body;
      for (std::size_t i = 0; i < result.metrics.filling_series.size(); ++i) {
        body << result.trace.events[i].instr.slot << '\t' << result.metrics.filling_series[i]
             << '\n';
      }
      write_tsv((plots / "filling.tsv").string(), result, "slot\tfilling\n", body.str());
    }
    {
      std::ostringstream body;
      for (int c = 1; c <= ArrayGeometry::kCellCount; ++c) {
        body << c << '\t' << result.metrics.access_counts[c - 1] << '\n';
      }
      write_tsv((plots / "access_counts.tsv").string(), result, "cell\taccesses\n", body.str());
    }
    {
      std::ostringstream body;
      for (const auto& [us, count] : result.metrics.storage_hist_us) {
        body << us << '\t' << count << '\n';
      }
      write_tsv((plots / "storage_hist.tsv").string(), result, "storage_us\tcount\n", body.str());
    }
    {
      std::ostringstream body;
      for (const auto& [pol, stats] : result.metrics.fidelity_by_pol) {
        body << pol << '\t' << stats.count << '\t' << stats.mean << '\t' << stats.stddev << '\n';
      }
      write_tsv((plots / "fidelity_by_pol.tsv").string(), result, "pol\tcount\tmean\tstddev\n",
                body.str());
    }
    {
      std::ostringstream body;
      for (std::size_t i = 0; i < result.trace.events.size(); ++i) {
        const TraceEvent& ev = result.trace.events[i];
        if (!ev.fidelity) continue;
        body << i << '\t' << ev.instr.cell << '\t' << pol_char(*ev.input_pol) << '\t'
             << *ev.storage_us << '\t' << *ev.fidelity << '\t' << result.config.threshold << '\n';
      }
      write_tsv((plots / "fidelities.tsv").string(), result,
                "event\tcell\tpol\tstorage_us\tfidelity\tthreshold\n", body.str());
    }
  }
  if (result.config.kind == ScenarioKind::Buffer && !result.trace.events.empty()) {
    std::ostringstream body;
    std::optional<std::int64_t> prev;
    for (const TraceEvent& ev : result.trace.events) {
      if (ev.instr.op != OpType::Write) continue;
      if (prev) body << (ev.instr.slot - *prev) * kSlotUs << '\n';
      prev = ev.instr.slot;
    }
    write_tsv((plots / "interarrival.tsv").string(), result, "gap_us\n", body.str());
  }
  if (!result.crosstalk_curve.empty()) {
    std::ostringstream body;
    for (const auto& [rounds, fidelity] : result.crosstalk_curve) {
      body << rounds << '\t' << fidelity << '\n';
    }
    write_tsv((plots / "fidelity_vs_rounds.tsv").string(), result, "rounds\tfidelity\n",
              body.str());
  }
  if (!result.single_cell_curve.empty()) {
    std::ostringstream body;
    for (const auto& point : result.single_cell_curve) {
      body << point.cell << '\t' << point.pol << '\t' << point.storage_us << '\t' << point.fidelity
           << '\n';
    }
    write_tsv((plots / "fidelity_vs_storage.tsv").string(), result,
              "cell\tpol\tstorage_us\tfidelity\n", body.str());
  }
  if (!result.epr.empty()) {
    std::ostringstream body;
    for (const auto& rec : result.epr) {
      body << rec.pair_id << '\t' << rec.herald_us << '\t' << rec.cell << '\t' << rec.release_slot
           << '\t' << rec.storage_us << '\t' << rec.fidelity << '\t' << rec.tomo_fidelity << '\n';
    }
    write_tsv((plots / "pairs.tsv").string(), result,
              "pair\therald_us\tcell\trelease_slot\tstorage_us\tfidelity\ttomo_fidelity\n",
              body.str());
  }
}

}  // namespace raqmsim
