#include "acceval/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "acceval/errors.hpp"

namespace acceval {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

// Reader over one JSON object that remembers which keys were consumed, so
// leftovers can be rejected as typos.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  double num(const std::string& key, double def) {
    const json* v = find(key);
    return v ? as_double(*v, path(key)) : def;
  }

  // null means +infinity.
  double num_or_inf(const std::string& key, double def) {
    const json* v = find(key);
    if (!v) return def;
    if (v->is_null()) return kInfinity;
    return as_double(*v, path(key));
  }

  std::uint64_t u64(const std::string& key, std::uint64_t def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
      throw ConfigError(path(key), "expected a nonnegative integer");
    }
    return v->get<std::uint64_t>();
  }

  int integer(const std::string& key, int def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
    return v->get<int>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v->get<bool>();
  }

  std::string str(const std::string& key, const std::string& def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError(path(key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError(path(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) out.push_back(as_double((*v)[i], index_path(path(key), i)));
    return out;
  }

  // Array of [x, y] pairs.
  std::vector<std::pair<double, double>> pairs(const std::string& key,
                                               std::vector<std::pair<double, double>> def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError(path(key), "expected an array of [x, y] pairs");
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& e = (*v)[i];
      const auto p = index_path(path(key), i);
      if (!e.is_array() || e.size() != 2) throw ConfigError(p, "expected [x, y]");
      out.emplace_back(as_double(e[0], p + "[0]"), as_double(e[1], p + "[1]"));
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError(path(key), "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_string()) throw ConfigError(index_path(path(key), i), "expected a string");
      out.push_back((*v)[i].get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ConfigError(join(path_, it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json inf_or_number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

ModelConfig parse_model(const json& j) {
  ModelConfig m = ModelConfig::defaults();
  Obj o(j, "model");

  if (const json* v = o.find("v_l")) {
    Obj vo(*v, "model.v_l");
    m.v_edges = vo.numbers("edges", m.v_edges);
    m.v_mass = vo.numbers("mass", m.v_mass);
    vo.finish();
  }
  if (const json* r = o.find("r_inv")) {
    Obj ro(*r, "model.r_inv");
    m.r_k = ro.num("k", m.r_k);
    m.r_sigma = ro.num("sigma", m.r_sigma);
    m.r_theta = ro.num("theta", m.r_theta);
    m.r_lo = ro.num("lo", m.r_lo);
    m.r_hi = ro.num_or_inf("hi", m.r_hi);
    if (const json* l = ro.find("exp_mean"); l && !l->is_null()) {
      m.lambda_r = as_double(*l, "model.r_inv.exp_mean");
    }
    ro.finish();
  }
  if (const json* t = o.find("ttc_inv")) {
    Obj to(*t, "model.ttc_inv");
    std::vector<std::pair<double, double>> def;
    for (const auto& n : m.ttc_table) def.emplace_back(n.v_center, n.lambda);
    const auto table = to.pairs("mean_table", def);
    m.ttc_table.clear();
    for (const auto& [v, l] : table) m.ttc_table.push_back({v, l});
    m.lambda_floor = to.num("mean_floor", m.lambda_floor);
    m.ttc_inv_lo = to.num("lo", m.ttc_inv_lo);
    m.ttc_inv_hi = to.num_or_inf("hi", m.ttc_inv_hi);
    to.finish();
  }
  if (const json* b = o.find("bins")) {
    if (!b->is_array()) throw ConfigError("model.bins", "expected an array of bins");
    m.bins.clear();
    for (std::size_t i = 0; i < b->size(); ++i) {
      Obj bo((*b)[i], index_path("model.bins", i));
      VelocityBin vb;
      vb.name = bo.str("name", "");
      if (vb.name.empty()) throw ConfigError(bo.path("name"), "required");
      vb.lo = bo.num("lo", 0.0);
      vb.hi = bo.num("hi", 0.0);
      bo.finish();
      m.bins.push_back(vb);
    }
  }
  o.finish();
  return m;
}

AvConfig parse_plant(const json& j) {
  AvConfig p;
  Obj o(j, "plant");
  p.t_hw_desired = o.num("t_hw_desired", p.t_hw_desired);
  p.a_acc_max = o.num("a_acc_max", p.a_acc_max);
  p.kp_acc = o.num("kp_acc", p.kp_acc);
  p.ki_acc = o.num("ki_acc", p.ki_acc);
  p.a_aeb = o.num("a_aeb", p.a_aeb);
  p.r_aeb = o.num("r_aeb", p.r_aeb);
  p.tau_av = o.num("tau_av", p.tau_av);
  p.ts = o.num("ts", p.ts);
  p.t_lc_max = o.num("t_lc_max", p.t_lc_max);
  std::vector<std::pair<double, double>> def;
  for (const auto& n : p.ttc_aeb_schedule) def.emplace_back(n.v, n.ttc);
  const auto sched = o.pairs("ttc_aeb_schedule", def);
  p.ttc_aeb_schedule.clear();
  for (const auto& [v, t] : sched) p.ttc_aeb_schedule.push_back({v, t});
  p.r_conflict = o.num("r_conflict", p.r_conflict);
  p.error_sign = o.integer("error_sign", p.error_sign);
  p.t_hw_cap = o.num("t_hw_cap", p.t_hw_cap);
  o.finish();
  return p;
}

DeltaVUnit parse_unit(const std::string& s, const std::string& path) {
  if (s == "m/s") return DeltaVUnit::MetersPerSecond;
  if (s == "km/h") return DeltaVUnit::KilometersPerHour;
  throw ConfigError(path, "unit must be \"m/s\" or \"km/h\"");
}

std::string unit_name(DeltaVUnit u) { return u == DeltaVUnit::MetersPerSecond ? "m/s" : "km/h"; }

// "AvConfig.tau_av: must be > 0" -> key path plant.tau_av.
[[noreturn]] void rethrow_plant(const std::invalid_argument& e) {
  std::string msg = e.what();
  const std::string prefix = "AvConfig.";
  if (msg.rfind(prefix, 0) == 0) {
    const auto colon = msg.find(':');
    throw ConfigError("plant." + msg.substr(prefix.size(), colon - prefix.size()),
                      msg.substr(colon + 2));
  }
  throw ConfigError("plant", msg);
}

void validate(const ExperimentConfig& cfg) {
  try {
    cfg.plant.validate();
  } catch (const std::invalid_argument& e) {
    rethrow_plant(e);
  }
  std::optional<ScenarioModel> model;
  try {
    model.emplace(cfg.model.build());
  } catch (const std::exception& e) {
    throw ConfigError("model", e.what());
  }
  if (!(cfg.confidence.alpha > 0.0 && cfg.confidence.alpha < 1.0)) {
    throw ConfigError("confidence.alpha", "must be in (0, 1)");
  }
  if (!(cfg.confidence.beta > 0.0)) throw ConfigError("confidence.beta", "must be > 0");
  if (!(cfg.r_lc > 0.0)) throw ConfigError("r_lc", "must be > 0");
  if (cfg.events.empty()) throw ConfigError("events", "must not be empty");
  if (cfg.modes.empty()) throw ConfigError("modes", "must not be empty");
  for (std::size_t i = 0; i < cfg.bins.size(); ++i) {
    try {
      (void)model->bin(cfg.bins[i]);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(index_path("bins", i), e.what());
    }
  }
  if (cfg.ce.iterations <= 0) throw ConfigError("ce.iterations", "must be > 0");
  if (cfg.ce.n_per_iter_conflict == 0) throw ConfigError("ce.n_per_iter_conflict", "must be > 0");
  if (cfg.ce.n_per_iter_crash == 0) throw ConfigError("ce.n_per_iter_crash", "must be > 0");
  if (!(cfg.ce.elite_fraction >= 0.0 && cfg.ce.elite_fraction < 1.0)) {
    throw ConfigError("ce.elite_fraction", "must be in [0, 1)");
  }
  if (!(cfg.ce.margin > 0.0 && cfg.ce.margin < 1.0)) throw ConfigError("ce.margin", "must be in (0, 1)");
  if (cfg.ce.max_zero_hit <= 0) throw ConfigError("ce.max_zero_hit", "must be > 0");
  if (cfg.estimation.n_cap == 0) throw ConfigError("estimation.n_cap", "must be > 0");
  if (cfg.estimation.batch == 0) throw ConfigError("estimation.batch", "must be > 0");

  for (const auto& [event, per_bin] : cfg.warm_start) {
    for (const auto& [bin, tilt] : per_bin) {
      const std::string path = "warm_start." + event + "." + bin;
      try {
        (void)model->bin(bin);
        validate_proposal(*model, {tilt.vartheta_r, tilt.vartheta_ttc, bin});
      } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
      }
    }
  }
}

json to_json(const ExperimentConfig& cfg) {
  const auto& m = cfg.model;
  json model;
  model["v_l"] = {{"edges", m.v_edges}, {"mass", m.v_mass}};
  model["r_inv"] = {{"k", m.r_k},
                    {"sigma", m.r_sigma},
                    {"theta", m.r_theta},
                    {"lo", m.r_lo},
                    {"hi", inf_or_number(m.r_hi)},
                    {"exp_mean", m.lambda_r ? json(*m.lambda_r) : json(nullptr)}};
  json table = json::array();
  for (const auto& n : m.ttc_table) table.push_back({n.v_center, n.lambda});
  model["ttc_inv"] = {{"mean_table", table},
                      {"mean_floor", m.lambda_floor},
                      {"lo", m.ttc_inv_lo},
                      {"hi", inf_or_number(m.ttc_inv_hi)}};
  json bins = json::array();
  for (const auto& b : m.bins) bins.push_back({{"name", b.name}, {"lo", b.lo}, {"hi", b.hi}});
  model["bins"] = bins;

  const auto& p = cfg.plant;
  json sched = json::array();
  for (const auto& n : p.ttc_aeb_schedule) sched.push_back({n.v, n.ttc});
  json plant = {{"t_hw_desired", p.t_hw_desired}, {"a_acc_max", p.a_acc_max},
                {"kp_acc", p.kp_acc},             {"ki_acc", p.ki_acc},
                {"a_aeb", p.a_aeb},               {"r_aeb", p.r_aeb},
                {"tau_av", p.tau_av},             {"ts", p.ts},
                {"t_lc_max", p.t_lc_max},         {"ttc_aeb_schedule", sched},
                {"r_conflict", p.r_conflict},     {"error_sign", p.error_sign},
                {"t_hw_cap", p.t_hw_cap}};

  json events = json::array();
  for (auto e : cfg.events) events.push_back(std::string(to_string(e)));
  json modes = json::array();
  for (auto md : cfg.modes) modes.push_back(std::string(to_string(md)));

  json warm = json::object();
  for (const auto& [event, per_bin] : cfg.warm_start) {
    for (const auto& [bin, t] : per_bin) {
      warm[event][bin] = {{"vartheta_r", t.vartheta_r}, {"vartheta_ttc", t.vartheta_ttc}};
    }
  }

  json out;
  out["seed"] = cfg.seed;
  out["model"] = model;
  out["plant"] = plant;
  out["confidence"] = {{"alpha", cfg.confidence.alpha}, {"beta", cfg.confidence.beta}};
  out["injury"] = {{"b0", cfg.injury.b0},
                   {"b1", cfg.injury.b1},
                   {"b2", cfg.injury.b2},
                   {"unit", unit_name(cfg.injury.unit)}};
  out["r_lc"] = cfg.r_lc;
  out["events"] = events;
  out["modes"] = modes;
  out["bins"] = cfg.bins;
  out["ce"] = {{"iterations", cfg.ce.iterations},
               {"n_per_iter_conflict", cfg.ce.n_per_iter_conflict},
               {"n_per_iter_crash", cfg.ce.n_per_iter_crash},
               {"elite_fraction", cfg.ce.elite_fraction},
               {"margin", cfg.ce.margin},
               {"max_zero_hit", cfg.ce.max_zero_hit}};
  out["estimation"] = {
      {"n_cap", cfg.estimation.n_cap},
      {"batch", cfg.estimation.batch},
      {"min_samples", cfg.estimation.min_samples},
      {"n_nature", cfg.estimation.n_nature == NatureMode::Predictive ? "predictive" : "actual"}};
  out["warm_start"] = warm;
  out["output_dir"] = cfg.output_dir;
  out["verbose_traces"] = cfg.verbose_traces;
  return out;
}

}  // namespace

ModelConfig ModelConfig::defaults() {
  ModelConfig m;
  for (int v = 2; v <= 40; v += 2) m.v_edges.push_back(v);
  // Two-humped speed histogram (urban and highway traffic); placeholder.
  m.v_mass = {0.007994, 0.024323, 0.053842, 0.086735, 0.101739, 0.08713,  0.055441,
              0.029462, 0.021576, 0.03146,  0.053265, 0.078115, 0.094821, 0.094818,
              0.078073, 0.052933, 0.02955,  0.013582, 0.005141};
  m.ttc_table = {{7.5, 0.056},  {12.5, 0.046}, {17.5, 0.039}, {22.5, 0.032},
                 {27.5, 0.026}, {32.5, 0.023}, {37.5, 0.021}};
  m.bins = default_velocity_bins();
  return m;
}

ScenarioModel ModelConfig::build() const {
  return ScenarioModel(EmpiricalDist(v_edges, v_mass),
                       TruncatedPareto(r_k, r_sigma, r_theta, r_lo, r_hi), ttc_table, bins,
                       lambda_floor, lambda_r, ttc_inv_lo, ttc_inv_hi);
}

std::vector<std::string> ExperimentConfig::selected_bins() const {
  if (!bins.empty()) return bins;
  std::vector<std::string> out;
  for (const auto& b : model.bins) out.push_back(b.name);
  return out;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("JSON parse error: ") + e.what());
  }
  Obj o(j, "");
  ExperimentConfig cfg;

  const json* seed = o.find("seed");
  if (!seed) throw ConfigError("seed", "required (runs are never seeded implicitly)");
  cfg.seed = o.u64("seed", 0);

  if (const json* v = o.find("model")) cfg.model = parse_model(*v);
  if (const json* v = o.find("plant")) cfg.plant = parse_plant(*v);
  if (const json* v = o.find("confidence")) {
    Obj c(*v, "confidence");
    cfg.confidence.alpha = c.num("alpha", cfg.confidence.alpha);
    cfg.confidence.beta = c.num("beta", cfg.confidence.beta);
    c.finish();
  }
  if (const json* v = o.find("injury")) {
    Obj c(*v, "injury");
    cfg.injury.b0 = c.num("b0", cfg.injury.b0);
    cfg.injury.b1 = c.num("b1", cfg.injury.b1);
    cfg.injury.b2 = c.num("b2", cfg.injury.b2);
    cfg.injury.unit = parse_unit(c.str("unit", "m/s"), "injury.unit");
    c.finish();
  }
  cfg.r_lc = o.num("r_lc", cfg.r_lc);

  const auto events = o.strings("events", {"conflict"});
  cfg.events.clear();
  for (std::size_t i = 0; i < events.size(); ++i) {
    try {
      cfg.events.push_back(parse_event(events[i]));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(index_path("events", i), e.what());
    }
  }
  const auto modes = o.strings("modes", {"is"});
  cfg.modes.clear();
  for (std::size_t i = 0; i < modes.size(); ++i) {
    try {
      cfg.modes.push_back(parse_mode(modes[i]));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(index_path("modes", i), e.what());
    }
  }
  cfg.bins = o.strings("bins", {});

  if (const json* v = o.find("ce")) {
    Obj c(*v, "ce");
    cfg.ce.iterations = c.integer("iterations", cfg.ce.iterations);
    cfg.ce.n_per_iter_conflict = c.u64("n_per_iter_conflict", cfg.ce.n_per_iter_conflict);
    cfg.ce.n_per_iter_crash = c.u64("n_per_iter_crash", cfg.ce.n_per_iter_crash);
    cfg.ce.elite_fraction = c.num("elite_fraction", cfg.ce.elite_fraction);
    cfg.ce.margin = c.num("margin", cfg.ce.margin);
    cfg.ce.max_zero_hit = c.integer("max_zero_hit", cfg.ce.max_zero_hit);
    c.finish();
  }
  if (const json* v = o.find("estimation")) {
    Obj c(*v, "estimation");
    cfg.estimation.n_cap = c.u64("n_cap", cfg.estimation.n_cap);
    cfg.estimation.batch = c.u64("batch", cfg.estimation.batch);
    cfg.estimation.min_samples = c.u64("min_samples", cfg.estimation.min_samples);
    const auto mode = c.str("n_nature", "predictive");
    if (mode == "predictive") {
      cfg.estimation.n_nature = NatureMode::Predictive;
    } else if (mode == "actual") {
      cfg.estimation.n_nature = NatureMode::Actual;
    } else {
      throw ConfigError("estimation.n_nature", "must be \"predictive\" or \"actual\"");
    }
    c.finish();
  }
  if (const json* v = o.find("warm_start")) {
    Obj w(*v, "warm_start");
    for (const char* event : {"conflict", "crash"}) {
      const json* per_event = w.find(event);
      if (!per_event) continue;
      const std::string epath = std::string("warm_start.") + event;
      if (!per_event->is_object()) throw ConfigError(epath, "expected an object keyed by bin");
      for (auto it = per_event->begin(); it != per_event->end(); ++it) {
        Obj t(it.value(), epath + "." + it.key());
        TiltPair tilt;
        tilt.vartheta_r = t.num("vartheta_r", 0.0);
        tilt.vartheta_ttc = t.num("vartheta_ttc", 0.0);
        t.finish();
        cfg.warm_start[event][it.key()] = tilt;
      }
    }
    w.finish();
  }
  cfg.output_dir = o.str("output_dir", cfg.output_dir);
  cfg.verbose_traces = o.boolean("verbose_traces", cfg.verbose_traces);
  o.finish();

  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string canonical_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(); }

std::string pretty_json(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  return j.dump(2) + "\n";
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  return fnv1a64(j.dump());
}

std::string model_json(const ModelConfig& model) {
  ExperimentConfig cfg;
  cfg.model = model;
  return to_json(cfg)["model"].dump(2) + "\n";
}

}  // namespace acceval
