// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgctrl/commands.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "cfgctrl/export.hpp"
#include "cfgctrl/metrics.hpp"
#include "cfgctrl/svg.hpp"

namespace cfgctrl {

namespace {

using nlohmann::json;

constexpr std::size_t kPlottedTraces = 8;

bool wants(const ExperimentConfig& cfg, const char* format) {
  return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), format) != cfg.output.formats.end();
}

bool wants(const std::vector<std::string>& formats, const char* format) {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void check_formats(const std::vector<std::string>& formats, const std::string& source) {
  for (const auto& f : formats) {
    if (f != "csv" && f != "json" && f != "svg") {
      throw ConfigError("/output/formats", std::nullopt, "unknown format '" + f + "'", source);
    }
  }
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

std::string controller_label(const ControlParams& p) { return std::string(to_string(kind_of(p))); }

double phase_lambda(const ControlParams& p) {
  if (const auto* smc = std::get_if<SmcParams>(&p)) return smc->lambda;
  return SmcParams{}.lambda;
}

std::vector<double> mean_e_curve(const RunResult& result) {
  std::vector<double> mean;
  std::size_t count = 0;
  for (const Trace* t : result.traces()) {
    if (mean.empty()) mean.assign(t->records.size(), 0.0);
    for (std::size_t n = 0; n < mean.size() && n < t->records.size(); ++n) mean[n] += t->records[n].e_norm;
    ++count;
  }
  for (auto& m : mean) m /= static_cast<double>(std::max<std::size_t>(count, 1));
  return mean;
}

std::vector<double> iota_steps(std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(i);
  return out;
}

std::string run_plots(const RunResult& result, const ControlParams& params) {
  svg::Panel e_panel{"error norm per step", "step", "|e|", {}};
  svg::Panel phase{"phase plane", "|e|", "d|e|/dtau", {}};
  const auto traces = result.traces();
  svg::Series cloud{"traces", {}, {}, svg::Style::kScatter};
  double e_max = 0.0;
  for (std::size_t i = 0; i < traces.size() && i < kPlottedTraces; ++i) {
    svg::Series s{"run " + std::to_string(i), {}, {}, svg::Style::kLine};
    for (const auto& r : traces[i]->records) {
      s.x.push_back(r.step);
      s.y.push_back(r.e_norm);
    }
    e_panel.series.push_back(std::move(s));
    for (const auto& p : phase_plane(*traces[i])) {
      cloud.x.push_back(p.e_norm);
      cloud.y.push_back(p.rate);
      e_max = std::max(e_max, p.e_norm);
    }
  }
  const auto mean = mean_e_curve(result);
  e_panel.series.push_back({"mean", iota_steps(mean.size()), mean, svg::Style::kDashed});
  const double lambda = phase_lambda(params);
  phase.series.push_back(std::move(cloud));
  phase.series.push_back({"slope -" + format_number(lambda), {0.0, e_max}, {0.0, -lambda * e_max}, svg::Style::kDashed});
  return svg::render({e_panel, phase});
}

std::optional<double> mean_reach_step(const RunResult& result, const ControlParams& params,
                                      const IntegratorSpec& integ) {
  const auto* smc = std::get_if<SmcParams>(&params);
  if (!smc) return std::nullopt;
  double sum = 0.0;
  std::size_t count = 0;
  for (const Trace* t : result.traces()) {
    if (const auto step = trace_reach_step(*t, *smc, integ.step_size())) {
      sum += *step;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

/// Report fields shared by the sweep and compare tables.
struct Row {
  std::string key;
  std::optional<QualityReport> report;
  std::optional<double> reach;
  std::size_t divergent = 0;
  std::string status = "ok";
  std::vector<double> mean_e;
};

Row evaluate(const FlowSystem& sys, BatchSpec spec, const ControlParams& params, const Condition& cond) {
  Row row;
  spec.controller = params;
  try {
    const RunResult result = run_batch(sys, spec);
    row.divergent = result.divergent_count();
    row.mean_e = mean_e_curve(result);
    row.reach = mean_reach_step(result, params, spec.integrator);
    if (row.divergent == result.outcomes.size()) {
      row.status = "diverged";
      return row;
    }
    row.report = quality_report(result, sys, cond);
  } catch (const std::exception& e) {
    row.status = std::string("failed: ") + e.what();
  }
  return row;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string row_csv(const Row& r) {
  const auto f = [&](auto getter) { return r.report ? format_number(getter(*r.report)) : std::string(); };
  return csv_field(r.key) + ',' + f([](const QualityReport& q) { return q.w2; }) + ',' +
         f([](const QualityReport& q) { return q.alignment; }) + ',' +
         f([](const QualityReport& q) { return q.oversaturation; }) + ',' +
         (r.report ? format_optional(r.report->e_decay_ratio) : std::string()) + ',' + format_optional(r.reach) + ',' +
         std::to_string(r.divergent) + ',' + csv_field(r.status) + '\n';
}

json row_json(const Row& r) {
  json j = r.report ? report_json(*r.report) : json::object();
  j["mean_reach_step"] = r.reach ? json(*r.reach) : json(nullptr);
  j["divergence_count"] = r.divergent;
  j["status"] = r.status;
  return j;
}

ExperimentConfig load_with_overrides(const RunOptions& opts) {
  return apply_overrides(load_config(opts.config), opts);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& opts) {
  if (opts.out) cfg.output.directory = opts.out->string();
  if (opts.seed) cfg.sampler.seed = *opts.seed;
  if (opts.formats) {
    check_formats(*opts.formats, "--format");
    cfg.output.formats = *opts.formats;
  }
  return cfg;
}

std::optional<int> trace_reach_step(const Trace& trace, const SmcParams& params, double dtau) {
  const double band = discrete_band(dtau, params.w, params.k);
  for (const auto& r : trace.records) {
    if (!r.s_norm) return std::nullopt;
    if (*r.s_norm <= band) return r.step;
  }
  return std::nullopt;
}

std::vector<ControlParams> resolve_compare_controllers(const ExperimentConfig& cfg,
                                                       const std::vector<std::string>& names) {
  if (names.empty()) return cfg.compare;
  std::vector<ControlParams> out;
  const double w = guidance_scale(cfg.controller);
  for (const auto& name : names) {
    ControlKind kind{};
    try {
      kind = control_kind_from_string(name);
    } catch (const GuidanceError& e) {
      throw ConfigError("/compare/controllers", std::nullopt, e.what(), "--controllers");
    }
    out.push_back(kind == kind_of(cfg.controller) ? cfg.controller : default_controller(kind, w));
  }
  return out;
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_with_overrides(opts);
    const FlowSystem sys = build_system(cfg.system);
    const BatchSpec spec = make_batch_spec(cfg);
    const RunResult result = run_batch(sys, spec);
    if (result.divergent_count() == result.outcomes.size()) {
      err << "error: all " << result.outcomes.size() << " trajectories diverged";
      if (!result.outcomes.empty()) err << " (" << result.outcomes.front().failure << ")";
      err << "\n";
      return kExitDivergence;
    }
    const QualityReport report = quality_report(result, sys, cfg.system.target_condition);
    const std::string prefix = "run_" + fingerprint_hex(spec.fingerprint);
    OutputWriter writer(cfg.output.directory);
    if (wants(cfg, "csv")) writer.write(prefix + "_trace.csv", trace_csv(result));
    if (wants(cfg, "json")) {
      json rep = report_json(report);
      rep["fingerprint"] = fingerprint_hex(spec.fingerprint);
      rep["controller"] = to_json(cfg.controller);
      rep["seed"] = cfg.sampler.seed;
      rep["trajectories"] = cfg.sampler.trajectories;
      writer.write(prefix + "_report.json", dump_json(rep));
      writer.write(prefix + "_trace.json", dump_json(trace_json(result)));
    }
    if (wants(cfg, "svg")) writer.write(prefix + "_plots.svg", run_plots(result, cfg.controller));

    out << "controller " << controller_label(cfg.controller) << ", " << result.outcomes.size() << " trajectories, "
        << report.n_divergent << " divergent\n";
    out << "w2 " << format_number(report.w2) << "  alignment " << format_number(report.alignment)
        << "  oversaturation " << format_number(report.oversaturation) << "\n";
    for (const auto& p : writer.written()) out << "wrote " << p.string() << "\n";
    return kExitOk;
  });
}

int cmd_sweep(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_with_overrides(opts);
    if (!cfg.sweep) throw ConfigError("/sweep", std::nullopt, "sweep command needs a sweep block", opts.config.string());
    const FlowSystem sys = build_system(cfg.system);
    const BatchSpec base = make_batch_spec(cfg);
    const std::string prefix = "sweep_" + fingerprint_hex(base.fingerprint);
    const std::string param = std::string(to_string(cfg.sweep->parameter));
    OutputWriter writer(cfg.output.directory);

    std::vector<Row> rows;
    for (const double value : cfg.sweep->values) {
      const ControlParams params = with_swept_value(cfg.controller, cfg.sweep->parameter, value);
      Row row = evaluate(sys, base, params, cfg.system.target_condition);
      row.key = format_number(value);
      out << param << " = " << row.key << ": " << row.status << "\n";
      if (wants(cfg, "json")) {
        json rep = row_json(row);
        rep["fingerprint"] = fingerprint_hex(base.fingerprint);
        rep["controller"] = to_json(params);
        writer.write(prefix + "_" + row.key + "_report.json", dump_json(rep));
      }
      rows.push_back(std::move(row));
    }

    if (wants(cfg, "csv")) {
      std::string csv = "value,w2,alignment,oversaturation,e_decay_ratio,mean_reach_step,divergence_count,status\n";
      for (const auto& r : rows) csv += row_csv(r);
      writer.write(prefix + "_table.csv", csv);
    }
    if (wants(cfg, "json")) {
      json table = {{"fingerprint", fingerprint_hex(base.fingerprint)},
                    {"parameter", param},
                    {"seed", cfg.sampler.seed},
                    {"controller", to_json(cfg.controller)}};
      json list = json::array();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        json r = row_json(rows[i]);
        r["value"] = cfg.sweep->values[i];
        list.push_back(std::move(r));
      }
      table["rows"] = std::move(list);
      writer.write(prefix + "_table.json", dump_json(table));
    }
    if (wants(cfg, "svg")) {
      std::vector<svg::Panel> panels;
      const auto field_panel = [&](const char* name, auto getter) {
        svg::Panel p{std::string(name) + " vs " + param, param, name, {}};
        svg::Series s{controller_label(cfg.controller), {}, {}, svg::Style::kLine};
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (!rows[i].report) continue;
          const std::optional<double> v = getter(*rows[i].report);
          if (!v) continue;
          s.x.push_back(cfg.sweep->values[i]);
          s.y.push_back(*v);
        }
        p.series.push_back(std::move(s));
        panels.push_back(std::move(p));
      };
      field_panel("w2", [](const QualityReport& q) { return std::optional<double>(q.w2); });
      field_panel("alignment", [](const QualityReport& q) { return std::optional<double>(q.alignment); });
      field_panel("oversaturation", [](const QualityReport& q) { return std::optional<double>(q.oversaturation); });
      field_panel("e_decay_ratio", [](const QualityReport& q) { return q.e_decay_ratio; });
      writer.write(prefix + "_curves.svg", svg::render(panels, 360, 300));
    }
    for (const auto& p : writer.written()) out << "wrote " << p.string() << "\n";
    return kExitOk;
  });
}

int cmd_compare(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ExperimentConfig cfg = load_with_overrides(opts);
    cfg.compare = resolve_compare_controllers(cfg, opts.controllers);
    if (cfg.compare.size() < 2) {
      throw ConfigError("/compare/controllers", std::nullopt, "compare needs at least two controllers",
                        opts.config.string());
    }
    const FlowSystem sys = build_system(cfg.system);
    const BatchSpec base = make_batch_spec(cfg);
    const std::string fp = fingerprint_hex(base.fingerprint);
    const std::string prefix = "compare_" + fp;

    std::vector<Row> rows;
    for (std::size_t i = 0; i < cfg.compare.size(); ++i) {
      Row row = evaluate(sys, base, cfg.compare[i], cfg.system.target_condition);
      row.key = controller_label(cfg.compare[i]);
      out << row.key << ": " << row.status;
      if (row.report) {
        out << "  w2 " << format_number(row.report->w2) << "  alignment " << format_number(row.report->alignment)
            << "  oversaturation " << format_number(row.report->oversaturation);
      }
      out << "\n";
      rows.push_back(std::move(row));
    }

    OutputWriter writer(cfg.output.directory);
    if (wants(cfg, "csv")) {
      std::string csv =
          "controller,w2,alignment,oversaturation,e_decay_ratio,mean_reach_step,divergence_count,status,seed,"
          "fingerprint\n";
      for (const auto& r : rows) {
        std::string line = row_csv(r);
        line.pop_back();
        csv += line + ',' + std::to_string(cfg.sampler.seed) + ',' + fp + '\n';
      }
      writer.write(prefix + "_table.csv", csv);
    }
    if (wants(cfg, "json")) {
      json table = {{"fingerprint", fp}, {"seed", cfg.sampler.seed}, {"trajectories", cfg.sampler.trajectories}};
      json list = json::array();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        json r = row_json(rows[i]);
        r["controller"] = to_json(cfg.compare[i]);
        list.push_back(std::move(r));
      }
      table["rows"] = std::move(list);
      writer.write(prefix + "_table.json", dump_json(table));
    }
    if (wants(cfg, "svg")) {
      svg::Panel p{"mean error norm", "step", "mean |e|", {}};
      for (const auto& r : rows) p.series.push_back({r.key, iota_steps(r.mean_e.size()), r.mean_e, svg::Style::kLine});
      writer.write(prefix + "_mean_e.svg", svg::render({p}, 640, 400));
    }
    for (const auto& p : writer.written()) out << "wrote " << p.string() << "\n";
    return kExitOk;
  });
}

int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    check_formats(opts.formats, "--format");
    if (!(opts.s0 > 0.0)) throw ControlLabError("s0 must be positive");
    if (opts.steps < 1) throw ControlLabError("steps must be >= 1");
    PerturbedDynamics dyn;
    dyn.dim = opts.dim;
    dyn.drift = opts.drift;
    dyn.deviation = opts.deviation;
    dyn.w = opts.w;
    dyn.delta = opts.delta;
    dyn.rho = opts.rho;
    dyn.k = opts.k;
    dyn.dt = opts.dt;
    dyn.seed = opts.seed;
    if (opts.dim < 1) throw ControlLabError("dimension must be >= 1");
    dyn.s0 = Vec::Constant(opts.dim, opts.s0 / std::sqrt(static_cast<double>(opts.dim)));
    dyn.validate();

    const Corridor corridor = stability_corridor(opts.delta, opts.w, opts.s0, opts.dt);
    out << "stability corridor: (" << format_number(corridor.k_min) << ", " << format_number(corridor.k_max) << ")\n";
    if (!corridor.feasible()) out << "warning: corridor is infeasible (k_min >= k_max)\n";

    json params = {{"delta", opts.delta}, {"rho", opts.rho},   {"w", opts.w},
                   {"k", opts.k},         {"dim", opts.dim},   {"dt", opts.dt},
                   {"steps", opts.steps}, {"s0", opts.s0},     {"drift", std::string(to_string(opts.drift))},
                   {"seed", opts.seed},   {"corridor", opts.corridor},
                   {"deviation", std::string(to_string(opts.deviation))}};

    OutputWriter writer(opts.out);
    if (opts.corridor) {
      std::vector<double> ks = opts.k_values;
      if (ks.empty()) {
        const double lo = std::max(corridor.k_min, 1e-3);
        ks = {0.5 * lo, 2.0 * lo, std::sqrt(lo * corridor.k_max), 0.5 * corridor.k_max, 10.0 * corridor.k_max};
      }
      params["k_values"] = ks;
      const std::string prefix = "synth_" + fingerprint_hex(fnv1a(params.dump()));
      const auto rows = corridor_sweep(dyn, ks, opts.steps);
      for (const auto& r : rows) {
        out << "k = " << format_number(r.k) << ": " << (r.reached ? "reached" : "not reached");
        if (r.reach_step) out << " at step " << *r.reach_step;
        out << ", oscillation amplitude " << format_number(r.osc_amplitude) << "\n";
      }
      if (wants(opts.formats, "csv")) writer.write(prefix + "_corridor.csv", corridor_csv(rows));
      if (wants(opts.formats, "json")) {
        json list = json::array();
        for (const auto& r : rows) {
          list.push_back({{"k", r.k},
                          {"reached", r.reached},
                          {"reach_step", r.reach_step ? json(*r.reach_step) : json(nullptr)},
                          {"residual_band", r.residual_band ? json(*r.residual_band) : json(nullptr)},
                          {"osc_amplitude", r.osc_amplitude}});
        }
        writer.write(prefix + "_corridor.json",
                     dump_json({{"parameters", params},
                                {"corridor", {{"k_min", corridor.k_min}, {"k_max", corridor.k_max}}},
                                {"rows", list}}));
      }
      if (wants(opts.formats, "svg")) {
        svg::Panel p{"oscillation amplitude vs k", "k", "max |s| (second half)", {}};
        svg::Series s{"amplitude", {}, {}, svg::Style::kLine};
        for (const auto& r : rows) {
          s.x.push_back(r.k);
          s.y.push_back(r.osc_amplitude);
        }
        p.series.push_back(std::move(s));
        writer.write(prefix + "_corridor.svg", svg::render({p}));
      }
    } else {
      const std::string prefix = "synth_" + fingerprint_hex(fnv1a(params.dump()));
      const ConvergenceReport rep = simulate_sliding(dyn, opts.steps);
      out << "discrete band: " << format_number(rep.band) << "\n";
      bool within = false;
      if (!rep.gain_condition_met) {
        out << "gain condition unmet (k*phi = " << format_number(opts.k * dyn.dominance_margin())
            << " <= delta = " << format_number(opts.delta) << ")\n";
      } else {
        out << "eta: " << format_number(*rep.eta) << ", bound: " << format_number(*rep.bound_steps) << " steps\n";
        within = rep.reach_step && *rep.reach_step <= *rep.bound_steps * 1.05;
        if (rep.reach_step) out << "reached band at step " << *rep.reach_step << "\n";
        out << "reached within bound: " << (within ? "yes" : "no") << "\n";
      }
      if (wants(opts.formats, "csv")) writer.write(prefix + "_trace.csv", sliding_csv(rep, opts.dt));
      if (wants(opts.formats, "json")) {
        json j = {{"parameters", params},
                  {"corridor", {{"k_min", corridor.k_min}, {"k_max", corridor.k_max}}},
                  {"gain_condition_met", rep.gain_condition_met},
                  {"band", rep.band},
                  {"reached", rep.reached},
                  {"reach_step", rep.reach_step ? json(*rep.reach_step) : json(nullptr)},
                  {"bound_steps", rep.bound_steps ? json(*rep.bound_steps) : json(nullptr)},
                  {"eta", rep.eta ? json(*rep.eta) : json(nullptr)},
                  {"reached_within_bound", within},
                  {"max_drift_norm", rep.max_drift_norm},
                  {"max_deviation_norm", rep.max_deviation_norm}};
        writer.write(prefix + "_report.json", dump_json(j));
      }
      if (wants(opts.formats, "svg")) {
        svg::Panel p{"sliding variable", "step", "|s|", {}};
        p.series.push_back({"|s|", iota_steps(rep.s_norm.size()), rep.s_norm, svg::Style::kLine});
        const double n_last = static_cast<double>(rep.s_norm.size() - 1);
        p.series.push_back({"band", {0.0, n_last}, {rep.band, rep.band}, svg::Style::kDashed});
        writer.write(prefix + "_trace.svg", svg::render({p}, 640, 400));
      }
    }
    for (const auto& p : writer.written()) out << "wrote " << p.string() << "\n";
    return kExitOk;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feedback-controlled guidance experiments on analytic flow systems", "cfgctrl"};
  app.require_subcommand(1);

  RunOptions run_opts;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string formats;
  std::string controllers;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed, "seed (overrides config)");
    sub->add_option("--format", formats, "comma-separated subset of csv,json,svg");
  };
  CLI::App* run = app.add_subcommand("run", "run one guided batch and report quality");
  add_common(run);
  CLI::App* sweep = app.add_subcommand("sweep", "sweep w, lambda or k over the config's value list");
  add_common(sweep);
  CLI::App* compare = app.add_subcommand("compare", "compare controllers on shared seeds");
  add_common(compare);
  compare->add_option("--controllers", controllers, "comma-separated controller types");

  SynthOptions synth_opts;
  std::string drift = "constant";
  std::string deviation = "rotation";
  std::string k_values;
  std::string synth_out = "out";
  CLI::App* synth = app.add_subcommand("synth", "simulate the perturbed sliding dynamics");
  synth->add_option("--delta", synth_opts.delta, "drift bound")->capture_default_str();
  synth->add_option("--rho", synth_opts.rho, "gain deviation bound")->capture_default_str();
  synth->add_option("--w", synth_opts.w, "nominal gain")->capture_default_str();
  synth->add_option("--k", synth_opts.k, "switching gain")->capture_default_str();
  synth->add_option("--dim", synth_opts.dim, "dimension")->capture_default_str();
  synth->add_option("--dt", synth_opts.dt, "step size")->capture_default_str();
  synth->add_option("--steps", synth_opts.steps, "number of steps")->capture_default_str();
  synth->add_option("--s0", synth_opts.s0, "initial norm of s")->capture_default_str();
  synth->add_option("--drift", drift, "constant, sinusoidal or noise")->capture_default_str();
  synth->add_option("--deviation", deviation, "zero, rotation or seeded")->capture_default_str();
  synth->add_option("--seed", synth_opts.seed, "seed")->capture_default_str();
  synth->add_flag("--corridor", synth_opts.corridor, "sweep k across the stability corridor");
  synth->add_option("--k-values", k_values, "comma-separated gains for --corridor");
  synth->add_option("--out", synth_out, "output directory")->capture_default_str();
  synth->add_option("--format", formats, "comma-separated subset of csv,json,svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o;
    std::ostringstream e_out;
    const int code = app.exit(e, o, e_out);
    out << o.str();
    err << e_out.str();
    return code == 0 ? kExitOk : kExitConfig;
  }

  const auto fill_run = [&](CLI::App* sub) {
    run_opts.config = config_path;
    if (sub->count("--out")) run_opts.out = out_dir;
    if (sub->count("--seed")) run_opts.seed = seed;
    if (sub->count("--format")) run_opts.formats = split_list(formats);
    run_opts.controllers = split_list(controllers);
  };
  if (run->parsed()) {
    fill_run(run);
    return cmd_run(run_opts, out, err);
  }
  if (sweep->parsed()) {
    fill_run(sweep);
    return cmd_sweep(run_opts, out, err);
  }
  if (compare->parsed()) {
    fill_run(compare);
    return cmd_compare(run_opts, out, err);
  }
  return guarded(err, [&] {
    try {
      synth_opts.drift = drift_kind_from_string(drift);
      synth_opts.deviation = gain_deviation_kind_from_string(deviation);
      for (const auto& k : split_list(k_values)) synth_opts.k_values.push_back(std::stod(k));
    } catch (const std::exception& e) {
      err << "argument error: " << e.what() << "\n";
      return kExitConfig;
    }
    synth_opts.out = synth_out;
    if (synth->count("--format")) synth_opts.formats = split_list(formats);
    return cmd_synth(synth_opts, out, err);
  });
}

}  // namespace cfgctrl
