// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgctrl/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cfgctrl/json_lines.hpp"

namespace cfgctrl {

using nlohmann::json;

namespace {

std::string format_config_error(const std::string& pointer, std::optional<int> line, const std::string& message,
                                const std::string& source) {
  std::string out = source;
  if (line) out += ":" + std::to_string(*line);
  out += ": ";
  if (!pointer.empty()) out += pointer + ": ";
  return out + message;
}

/// Thrown inside the reader and rethrown as ConfigError with a line number.
struct FieldError {
  std::string pointer;
  std::string message;
};

class Reader {
 public:
  Reader(const json& j, std::string pointer) : j_(j), pointer_(std::move(pointer)) {}

  const json& raw() const { return j_; }
  const std::string& pointer() const { return pointer_; }

  [[noreturn]] void fail(const std::string& message) const { throw FieldError{pointer_, message}; }

  void require_object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j_.items()) {
      if (!ok.contains(key)) child_pointer_fail(key, "unknown field '" + key + "'");
    }
  }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  Reader at(const char* key) const {
    if (!has(key)) fail(std::string("missing required field '") + key + "'");
    return Reader(j_.at(key), pointer_ + "/" + escape_pointer_token(key));
  }

  Reader at(std::size_t index) const { return Reader(j_.at(index), pointer_ + "/" + std::to_string(index)); }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  double number_or(const char* key, double fallback) const { return has(key) ? at(key).number() : fallback; }

  long long integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<long long>();
  }

  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  bool boolean() const {
    if (!j_.is_boolean()) fail("expected a boolean");
    return j_.get<bool>();
  }

  std::size_t array_size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    const std::size_t n = array_size();
    for (std::size_t i = 0; i < n; ++i) out.push_back(at(i).number());
    return out;
  }

 private:
  [[noreturn]] void child_pointer_fail(const std::string& key, const std::string& message) const {
    throw FieldError{pointer_ + "/" + escape_pointer_token(key), message};
  }

  const json& j_;
  std::string pointer_;
};

ComponentConfig read_component(const Reader& r) {
  r.require_object({"weight", "mean", "cov_diag", "cov_lower"});
  ComponentConfig c;
  c.weight = r.at("weight").number();
  c.mean = r.at("mean").numbers();
  if (c.mean.empty()) r.at("mean").fail("mean must be non-empty");
  const bool has_diag = r.has("cov_diag");
  const bool has_lower = r.has("cov_lower");
  if (has_diag == has_lower) r.fail("exactly one of 'cov_diag' or 'cov_lower' is required");
  if (has_diag) {
    c.cov_diag = r.at("cov_diag").numbers();
    if (c.cov_diag.size() != c.mean.size()) r.at("cov_diag").fail("length must match mean");
  } else {
    const Reader rows = r.at("cov_lower");
    const std::size_t n = rows.array_size();
    if (n != c.mean.size()) rows.fail("needs one row per dimension");
    for (std::size_t i = 0; i < n; ++i) {
      auto row = rows.at(i).numbers();
      if (row.size() != i + 1) rows.at(i).fail("row " + std::to_string(i) + " needs " + std::to_string(i + 1) + " entries");
      c.cov_lower.push_back(std::move(row));
    }
  }
  return c;
}

SystemConfig read_system(const Reader& r) {
  r.require_object({"components", "conditions", "target_condition"});
  SystemConfig sys;
  const Reader comps = r.at("components");
  const std::size_t n = comps.array_size();
  if (n == 0) comps.fail("at least one component is required");
  for (std::size_t i = 0; i < n; ++i) sys.components.push_back(read_component(comps.at(i)));
  const Reader conds = r.at("conditions");
  if (!conds.raw().is_object()) conds.fail("expected an object mapping condition ids to component lists");
  for (const auto& [id, value] : conds.raw().items()) {
    const Reader entry = conds.at(id.c_str());
    const std::size_t m = entry.array_size();
    if (m == 0) entry.fail("condition maps to an empty component subset");
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < m; ++i) {
      const long long k = entry.at(i).integer();
      if (k < 0 || static_cast<std::size_t>(k) >= n) entry.at(i).fail("component index out of range");
      subset.push_back(static_cast<std::size_t>(k));
    }
    sys.conditions.emplace(id, std::move(subset));
  }
  const Reader target = r.at("target_condition");
  sys.target_condition = target.string();
  if (!sys.conditions.contains(sys.target_condition)) {
    target.fail("target condition '" + sys.target_condition + "' is not defined under conditions");
  }
  return sys;
}

ControlParams read_controller(const Reader& r) {
  if (!r.raw().is_object()) r.fail("expected an object");
  const Reader type_field = r.at("type");
  const std::string type = type_field.string();
  ControlKind kind{};
  try {
    kind = control_kind_from_string(type);
  } catch (const GuidanceError& e) {
    type_field.fail(e.what());
  }
  ControlParams params;
  switch (kind) {
    case ControlKind::kCfg:
      r.require_object({"type", "w"});
      params = CfgParams{r.number_or("w", 5.0)};
      break;
    case ControlKind::kWeightSchedule: {
      r.require_object({"type", "w_max", "shape"});
      WeightScheduleParams p;
      p.w_max = r.number_or("w_max", 5.0);
      if (r.has("shape")) {
        try {
          p.shape = schedule_shape_from_string(r.at("shape").string());
        } catch (const GuidanceError& e) {
          r.at("shape").fail(e.what());
        }
      }
      params = p;
      break;
    }
    case ControlKind::kApg:
      r.require_object({"type", "w", "eta"});
      params = ApgParams{r.number_or("w", 5.0), r.number_or("eta", 0.0)};
      break;
    case ControlKind::kCfgZeroStar:
      r.require_object({"type", "w"});
      params = CfgZeroStarParams{r.number_or("w", 5.0)};
      break;
    case ControlKind::kRectifiedCfgpp: {
      r.require_object({"type", "w", "lambda_max", "gamma"});
      RectifiedCfgppParams p;
      p.w = r.number_or("w", 5.0);
      if (r.has("lambda_max")) p.lambda_max = r.at("lambda_max").number();
      p.gamma = r.number_or("gamma", 1.0);
      params = p;
      break;
    }
    case ControlKind::kSmc:
      r.require_object({"type", "w", "lambda", "k", "boundary_layer"});
      params = SmcParams{r.number_or("w", 5.0), r.number_or("lambda", 6.0), r.number_or("k", 0.1),
                         r.number_or("boundary_layer", 0.0)};
      break;
  }
  try {
    validate(params);
  } catch (const GuidanceError& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    const std::string field = msg.substr(0, colon);
    if (r.has(field.c_str())) r.at(field.c_str()).fail(msg.substr(colon + 2));
    r.fail(msg);
  }
  return params;
}

SamplerConfig read_sampler(const Reader& r) {
  r.require_object({"scheme", "steps", "trajectories", "seed", "record_x", "tau_clamp"});
  SamplerConfig s;
  if (r.has("scheme")) {
    const Reader f = r.at("scheme");
    try {
      s.scheme = scheme_from_string(f.string());
    } catch (const std::invalid_argument& e) {
      f.fail(e.what());
    }
  }
  if (r.has("steps")) {
    const long long v = r.at("steps").integer();
    if (v < 2 || v > 1000000) r.at("steps").fail("steps must lie in [2, 1e6]");
    s.steps = static_cast<int>(v);
  }
  if (r.has("trajectories")) {
    const long long v = r.at("trajectories").integer();
    if (v < 1 || v > 10000000) r.at("trajectories").fail("trajectories must lie in [1, 1e7]");
    s.trajectories = static_cast<int>(v);
  }
  if (r.has("seed")) {
    const Reader f = r.at("seed");
    if (!f.raw().is_number_unsigned()) f.fail("seed must be a non-negative integer");
    s.seed = f.raw().get<std::uint64_t>();
  }
  if (r.has("record_x")) s.record_x = r.at("record_x").boolean();
  if (r.has("tau_clamp")) {
    s.tau_clamp = r.at("tau_clamp").number();
    if (!(s.tau_clamp > 0.0 && s.tau_clamp < 0.5)) r.at("tau_clamp").fail("tau_clamp must lie in (0, 0.5)");
  }
  return s;
}

SweepConfig read_sweep(const Reader& r, const ControlParams& controller) {
  r.require_object({"parameter", "values"});
  SweepConfig s;
  const Reader p = r.at("parameter");
  const std::string name = p.string();
  if (name == "w") {
    s.parameter = SweepParameter::kW;
  } else if (name == "lambda") {
    s.parameter = SweepParameter::kLambda;
  } else if (name == "k") {
    s.parameter = SweepParameter::kK;
  } else {
    p.fail("unknown sweep parameter '" + name + "' (expected w, lambda or k)");
  }
  s.values = r.at("values").numbers();
  if (s.values.empty()) r.at("values").fail("sweep values must be non-empty");
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    try {
      validate(with_swept_value(controller, s.parameter, s.values[i]));
    } catch (const GuidanceError& e) {
      r.at("values").at(i).fail(e.what());
    }
  }
  return s;
}

OutputConfig read_output(const Reader& r) {
  r.require_object({"directory", "formats"});
  OutputConfig o;
  if (r.has("directory")) o.directory = r.at("directory").string();
  if (r.has("formats")) {
    const Reader f = r.at("formats");
    o.formats.clear();
    const std::size_t n = f.array_size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::string fmt = f.at(i).string();
      if (fmt != "csv" && fmt != "json" && fmt != "svg") f.at(i).fail("unknown format '" + fmt + "'");
      o.formats.push_back(fmt);
    }
  }
  return o;
}

void validate_system_semantics(const Reader& root, const SystemConfig& sys) {
  const Reader comps = root.at("system").at("components");
  const std::size_t dim = sys.components.front().mean.size();
  for (std::size_t k = 0; k < sys.components.size(); ++k) {
    if (sys.components[k].mean.size() != dim) comps.at(k).at("mean").fail("dimension differs from component 0");
  }
  try {
    build_system(sys);
  } catch (const FlowSystemError& e) {
    comps.fail(e.what());
  }
}

json system_to_json(const SystemConfig& sys) {
  json comps = json::array();
  for (const auto& c : sys.components) {
    json jc = {{"weight", c.weight}, {"mean", c.mean}};
    if (!c.cov_diag.empty()) {
      jc["cov_diag"] = c.cov_diag;
    } else {
      jc["cov_lower"] = c.cov_lower;
    }
    comps.push_back(std::move(jc));
  }
  json conds = json::object();
  for (const auto& [id, subset] : sys.conditions) conds[id] = subset;
  return {{"components", comps}, {"conditions", conds}, {"target_condition", sys.target_condition}};
}

}  // namespace

ConfigError::ConfigError(std::string pointer, std::optional<int> line, const std::string& message,
                         const std::string& source)
    : std::runtime_error(format_config_error(pointer, line, message, source)),
      pointer_(std::move(pointer)),
      line_(line) {}

Mat ComponentConfig::covariance() const {
  const auto d = static_cast<Eigen::Index>(mean.size());
  Mat cov = Mat::Zero(d, d);
  if (!cov_diag.empty()) {
    for (Eigen::Index i = 0; i < d; ++i) cov(i, i) = cov_diag[static_cast<std::size_t>(i)];
    return cov;
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      cov(i, j) = cov_lower[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      cov(j, i) = cov(i, j);
    }
  }
  return cov;
}

std::string_view to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::kW:
      return "w";
    case SweepParameter::kLambda:
      return "lambda";
    case SweepParameter::kK:
      return "k";
  }
  return "unknown";
}

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
  json root_json;
  try {
    root_json = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; convert to a line.
    const auto offset = std::min<std::size_t>(e.byte, text.size());
    int line = 1;
    for (std::size_t i = 0; i + 1 < offset; ++i) line += text[i] == '\n' ? 1 : 0;
    throw ConfigError("", line, std::string("malformed JSON: ") + e.what(), source);
  }

  const JsonLineIndex lines(text);
  try {
    const Reader root(root_json, "");
    root.require_object({"system", "controller", "compare", "sampler", "sweep", "output"});
    ExperimentConfig cfg;
    cfg.system = read_system(root.at("system"));
    validate_system_semantics(root, cfg.system);
    cfg.controller = read_controller(root.at("controller"));
    if (root.has("compare")) {
      const Reader cmp = root.at("compare");
      cmp.require_object({"controllers"});
      const Reader list = cmp.at("controllers");
      const std::size_t n = list.array_size();
      for (std::size_t i = 0; i < n; ++i) cfg.compare.push_back(read_controller(list.at(i)));
    }
    if (root.has("sampler")) cfg.sampler = read_sampler(root.at("sampler"));
    if (root.has("sweep")) cfg.sweep = read_sweep(root.at("sweep"), cfg.controller);
    if (root.has("output")) cfg.output = read_output(root.at("output"));
    return cfg;
  } catch (const FieldError& e) {
    throw ConfigError(e.pointer, lines.line_of(e.pointer), e.message, source);
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", std::nullopt, "cannot open config file", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

json to_json(const ControlParams& params) {
  json j = {{"type", std::string(to_string(kind_of(params)))}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CfgParams> || std::is_same_v<T, CfgZeroStarParams>) {
          j["w"] = p.w;
        } else if constexpr (std::is_same_v<T, WeightScheduleParams>) {
          j["w_max"] = p.w_max;
          j["shape"] = std::string(to_string(p.shape));
        } else if constexpr (std::is_same_v<T, ApgParams>) {
          j["w"] = p.w;
          j["eta"] = p.eta;
        } else if constexpr (std::is_same_v<T, RectifiedCfgppParams>) {
          j["w"] = p.w;
          if (p.lambda_max) j["lambda_max"] = *p.lambda_max;
          j["gamma"] = p.gamma;
        } else if constexpr (std::is_same_v<T, SmcParams>) {
          j["w"] = p.w;
          j["lambda"] = p.lambda;
          j["k"] = p.k;
          j["boundary_layer"] = p.boundary_layer;
        }
      },
      params);
  return j;
}

ControlParams controller_from_json(const json& j) {
  try {
    return read_controller(Reader(j, ""));
  } catch (const FieldError& e) {
    throw ConfigError(e.pointer, std::nullopt, e.message, "<controller>");
  }
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["system"] = system_to_json(cfg.system);
  j["controller"] = to_json(cfg.controller);
  if (!cfg.compare.empty()) {
    json list = json::array();
    for (const auto& c : cfg.compare) list.push_back(to_json(c));
    j["compare"] = {{"controllers", list}};
  }
  j["sampler"] = {{"scheme", std::string(to_string(cfg.sampler.scheme))},
                  {"steps", cfg.sampler.steps},
                  {"trajectories", cfg.sampler.trajectories},
                  {"seed", cfg.sampler.seed},
                  {"record_x", cfg.sampler.record_x},
                  {"tau_clamp", cfg.sampler.tau_clamp}};
  if (cfg.sweep) {
    j["sweep"] = {{"parameter", std::string(to_string(cfg.sweep->parameter))}, {"values", cfg.sweep->values}};
  }
  j["output"] = {{"directory", cfg.output.directory}, {"formats", cfg.output.formats}};
  return j;
}

std::uint64_t config_fingerprint(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output");
  const std::string canonical = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fingerprint_hex(std::uint64_t fp) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

FlowSystem build_system(const SystemConfig& sys) {
  std::vector<GaussComponent> comps;
  for (const auto& c : sys.components) {
    comps.push_back(GaussComponent{c.weight, Eigen::Map<const Vec>(c.mean.data(), static_cast<Eigen::Index>(c.mean.size())),
                                   c.covariance()});
  }
  return FlowSystem(std::move(comps), sys.conditions);
}

BatchSpec make_batch_spec(const ExperimentConfig& cfg) {
  BatchSpec spec;
  spec.controller = cfg.controller;
  spec.integrator = IntegratorSpec{cfg.sampler.scheme, cfg.sampler.steps, cfg.sampler.tau_clamp};
  spec.condition = cfg.system.target_condition;
  spec.trajectories = cfg.sampler.trajectories;
  spec.seed = cfg.sampler.seed;
  spec.record_x = cfg.sampler.record_x;
  spec.fingerprint = config_fingerprint(cfg);
  return spec;
}

ControlParams with_swept_value(const ControlParams& params, SweepParameter p, double value) {
  ControlParams out = params;
  if (p == SweepParameter::kW) {
    std::visit(
        [&](auto& q) {
          using T = std::decay_t<decltype(q)>;
          if constexpr (std::is_same_v<T, WeightScheduleParams>) {
            q.w_max = value;
          } else {
            q.w = value;
          }
        },
        out);
    return out;
  }
  auto* smc = std::get_if<SmcParams>(&out);
  if (!smc) {
    throw GuidanceError("sweep parameter '" + std::string(to_string(p)) + "' requires an smc controller");
  }
  if (p == SweepParameter::kLambda) {
    smc->lambda = value;
  } else {
    smc->k = value;
  }
  return out;
}

ControlParams default_controller(ControlKind kind, double w) {
  switch (kind) {
    case ControlKind::kCfg:
      return CfgParams{w};
    case ControlKind::kWeightSchedule:
      return WeightScheduleParams{std::max(w, 1.0), ScheduleShape::kLinear};
    case ControlKind::kApg:
      return ApgParams{w, 0.0};
    case ControlKind::kCfgZeroStar:
      return CfgZeroStarParams{w};
    case ControlKind::kRectifiedCfgpp:
      return RectifiedCfgppParams{w, std::nullopt, 1.0};
    case ControlKind::kSmc:
      return SmcParams{w, 6.0, 0.1, 0.0};
  }
  return CfgParams{w};
}

}  // namespace cfgctrl
