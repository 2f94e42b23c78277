#include "polyflow/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "polyflow/simplify.hpp"

namespace polyflow::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::string artifact(const Config& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void require_artifact(const Config& cfg, const std::string& file, const std::string& what) {
  if (!fs::exists(artifact(cfg, file)))
    throw std::runtime_error("missing artifact: " + what + " (expected " + artifact(cfg, file) +
                             ")");
}

void merge_timing(const Config& cfg, const std::string& key, double seconds) {
  const std::string path = artifact(cfg, "timings.json");
  json j = fs::exists(path) ? read_json_file(path) : json::object();
  j[key] = seconds;
  write_json_file(path, j);
}

struct LoadedInputs {
  grid::RadialNetwork net;
  scen::Scenario scenario;
};

LoadedInputs load_inputs(const Config& cfg) {
  LoadedInputs in;
  in.net = io::load_network(cfg.network_path);
  const auto issues = grid::validate_network(in.net);
  if (!issues.empty()) throw std::runtime_error("network: " + issues.front());
  in.scenario = io::load_scenario(cfg.scenario_path);
  return in;
}

std::vector<Vec> dataset_inputs(const std::vector<data::Sample>& samples) {
  std::vector<Vec> xs;
  xs.reserve(samples.size());
  for (const auto& s : samples) xs.push_back(s.x);
  return xs;
}

void stage_generate(const Config& cfg) {
  const auto in = load_inputs(cfg);
  const double scale_max =
      cfg.dg_scales.empty() ? 1.0 : *std::max_element(cfg.dg_scales.begin(), cfg.dg_scales.end());
  const auto ranges = data::operating_ranges(in.scenario, in.net.base_mva, scale_max);
  const auto xs = data::sample_inputs(ranges, cfg.samples, cfg.seed);
  data::LabelStats stats;
  const auto samples = data::label_dataset(in.net, in.scenario, xs, &stats);
  if (samples.empty()) throw std::runtime_error("generate-data: no sample converged");
  const double drop_rate = static_cast<double>(stats.dropped) / static_cast<double>(cfg.samples);
  io::save_dataset_csv(samples, artifact(cfg, "dataset.csv"));
  io::save_domain_box(data::estimate_domain_box(dataset_inputs(samples), cfg.box_margin),
                      artifact(cfg, "domain_box.json"));
  write_json_file(artifact(cfg, "generate_meta.json"),
                  {{"requested", cfg.samples},
                   {"labeled", samples.size()},
                   {"dropped", stats.dropped},
                   {"drop_rate", drop_rate},
                   {"flagged_high_drop_rate", drop_rate >= 0.01}});
  if (drop_rate >= 0.01)
    std::cerr << "generate-data: warning: " << stats.dropped
              << " samples failed to converge; check the configured ranges\n";
}

nn::TrainConfig to_train_config(const Config& cfg, const MlpSpec& spec, uint64_t seed) {
  nn::TrainConfig tc;
  tc.epochs = spec.epochs;
  tc.batch = spec.batch;
  tc.learning_rate = spec.learning_rate;
  tc.seed = seed;
  tc.validation_fraction = cfg.validation_fraction;
  return tc;
}

void stage_train(const Config& cfg) {
  require_artifact(cfg, "dataset.csv", "dataset");
  const auto in = load_inputs(cfg);
  const auto samples = io::load_dataset_csv(artifact(cfg, "dataset.csv"));
  const auto xs = dataset_inputs(samples);
  std::vector<double> h_labels, loss_labels;
  h_labels.reserve(samples.size());
  loss_labels.reserve(samples.size());
  for (const auto& s : samples) {
    h_labels.push_back(s.h);
    loss_labels.push_back(s.p_loss);
  }

  auto vio_res = nn::train(xs, h_labels, cfg.vio.layers, to_train_config(cfg, cfg.vio, cfg.seed));
  auto loss_res =
      nn::train(xs, loss_labels, cfg.loss.layers, to_train_config(cfg, cfg.loss, cfg.seed + 1));
  vio_res.params.feature_names = in.scenario.feature_names();
  loss_res.params.feature_names = in.scenario.feature_names();
  io::save_mlp(vio_res.params, artifact(cfg, "vio_mlp.json"));
  io::save_mlp(loss_res.params, artifact(cfg, "loss_mlp.json"));
  write_json_file(artifact(cfg, "train_report.json"),
                  {{"vio",
                    {{"initial_val_mse", vio_res.initial_val_mse},
                     {"best_val_mse", vio_res.best_val_mse},
                     {"epochs_run", vio_res.trace.size()},
                     {"trace", vio_res.trace}}},
                   {"loss",
                    {{"initial_val_mse", loss_res.initial_val_mse},
                     {"best_val_mse", loss_res.best_val_mse},
                     {"epochs_run", loss_res.trace.size()},
                     {"trace", loss_res.trace}}}});
}

void stage_extract(const Config& cfg) {
  require_artifact(cfg, "vio_mlp.json", "weights");
  require_artifact(cfg, "dataset.csv", "dataset");
  require_artifact(cfg, "domain_box.json", "domain box");
  const auto vio = io::load_mlp(artifact(cfg, "vio_mlp.json"));
  const auto samples = io::load_dataset_csv(artifact(cfg, "dataset.csv"));
  const auto box = io::load_domain_box(artifact(cfg, "domain_box.json"));
  const auto box_scaled = pwl::scale_box(box, vio.scaler);
  const auto regions = pwl::collect_sample_regions(vio, dataset_inputs(samples), box_scaled);

  std::vector<io::RegionRecord> records;
  for (const auto& r : regions) {
    io::RegionRecord rec;
    rec.pattern = r.pattern.key();
    rec.poly = pwl::to_raw_frame(r.poly, vio.scaler);
    const auto aff = pwl::to_raw_frame(r.affine, vio.scaler);
    rec.affine_w = aff.w_out;
    rec.affine_b = aff.b_out;
    rec.sample_count = r.sample_count;
    records.push_back(std::move(rec));
  }
  io::save_regions(records, artifact(cfg, "regions.json"));
  write_json_file(artifact(cfg, "regions_meta.json"),
                  {{"regions_hit", records.size()},
                   {"neurons", vio.total_neurons()},
                   {"pattern_space", std::pow(2.0, vio.total_neurons())}});
}

void stage_simplify(const Config& cfg) {
  require_artifact(cfg, "regions.json", "regions");
  require_artifact(cfg, "vio_mlp.json", "weights");
  const auto vio = io::load_mlp(artifact(cfg, "vio_mlp.json"));
  const auto records = io::load_regions(artifact(cfg, "regions.json"));

  // Rebuild the collection in the model's scaled frame for the numerics.
  std::vector<pwl::RegionInfo> regions;
  for (const auto& rec : records) {
    pwl::RegionInfo info;
    info.poly = pwl::to_scaled_frame(rec.poly, vio.scaler);
    info.sample_count = rec.sample_count;
    regions.push_back(std::move(info));
  }

  const auto kept = simplify::prune_regions(regions);
  std::vector<io::RegionRecord> out;
  long rows_before = 0, rows_after = 0;
  for (size_t k = 0; k < kept.size(); ++k) {
    simplify::SimplifyStats stats;
    const auto slim = simplify::remove_redundant_rows(kept[k].region.poly, cfg.redundancy_tol,
                                                      &stats);
    rows_before += stats.rows_before;
    rows_after += stats.rows_after;
    io::RegionRecord rec;
    const size_t src = kept[k].source_index;
    rec.pattern = records[src].pattern;
    rec.affine_w = records[src].affine_w;
    rec.affine_b = records[src].affine_b;
    rec.sample_count = records[src].sample_count;
    rec.poly = pwl::to_raw_frame(slim, vio.scaler);
    rec.rows_removed = stats.removed;
    rec.witness = vio.scaler.shift.size() > 0
                      ? Vec(vio.scaler.shift + vio.scaler.scale.cwiseProduct(kept[k].witness))
                      : kept[k].witness;
    out.push_back(std::move(rec));
  }
  io::save_regions(out, artifact(cfg, "regions_simplified.json"));
  write_json_file(artifact(cfg, "simplify_meta.json"),
                  {{"regions_before", records.size()},
                   {"regions_after", out.size()},
                   {"mean_rows_before",
                    out.empty() ? 0.0 : static_cast<double>(rows_before) / out.size()},
                   {"mean_rows_after",
                    out.empty() ? 0.0 : static_cast<double>(rows_after) / out.size()},
                   {"redundancy_tol", cfg.redundancy_tol}});
}

std::string scenario_tag(const std::string& mode, size_t k) {
  return mode + "_s" + std::to_string(k + 1);
}

void stage_solve(const Config& cfg, const std::string& mode) {
  if (mode != "p2" && mode != "p3")
    throw std::runtime_error("solve: mode must be p2 or p3");
  require_artifact(cfg, "vio_mlp.json", "weights");
  require_artifact(cfg, "loss_mlp.json", "weights");
  require_artifact(cfg, "domain_box.json", "domain box");
  if (mode == "p3") require_artifact(cfg, "regions_simplified.json", "simplified regions");

  const auto in = load_inputs(cfg);
  const auto vio = io::load_mlp(artifact(cfg, "vio_mlp.json"));
  const auto loss = io::load_mlp(artifact(cfg, "loss_mlp.json"));
  const auto box = io::load_domain_box(artifact(cfg, "domain_box.json"));

  std::vector<pwl::Polytope> polys;
  if (mode == "p3") {
    for (const auto& rec : io::load_regions(artifact(cfg, "regions_simplified.json")))
      polys.push_back(pwl::to_scaled_frame(rec.poly, vio.scaler));
  }

  for (size_t k = 0; k < cfg.dg_scales.size(); ++k) {
    const auto sc_k = opt::scale_dg_availability(in.scenario, cfg.dg_scales[k]);
    opt::ScheduleInputs sin;
    sin.net = &in.net;
    sin.scenario = &sc_k;
    sin.violation_model = &vio;
    sin.loss_model = &loss;
    sin.regions = polys.empty() ? nullptr : &polys;
    sin.domain_box = box;
    sin.steps = cfg.solve_steps;
    opt::ScheduleColumns cols;
    const auto sched_mode =
        mode == "p2" ? opt::ScheduleMode::FullNetwork : opt::ScheduleMode::PrunedUnion;
    const auto model = opt::build_schedule_problem(sin, sched_mode, &cols);
    opt::BnbOptions opts;
    opts.node_limit = cfg.node_limit;
    opts.rel_gap = cfg.rel_gap;
    opts.warm_fixings = opt::warm_start_fixings(sin, sched_mode, cols);
    opts.branch_priority = opt::branch_priorities(model, cols);
    const auto res = opt::branch_and_bound(model, opts);

    const std::string tag = scenario_tag(mode, k);
    if (cfg.dump_models) {
      std::ofstream dump(artifact(cfg, "model_" + tag + ".txt"), std::ios::binary);
      dump << model.lp.to_text();
    }
    json out;
    out["status"] = res.status == opt::MilpStatus::Optimal      ? "optimal"
                    : res.status == opt::MilpStatus::Infeasible ? "infeasible"
                    : res.status == opt::MilpStatus::Unbounded  ? "unbounded"
                    : res.status == opt::MilpStatus::NodeLimit  ? "node_limit"
                                                                : "numerical";
    out["nodes"] = res.nodes;
    out["binaries"] = model.binaries.size();
    out["columns"] = model.lp.cols();
    out["rows"] = model.lp.row_count();
    out["dg_scale"] = cfg.dg_scales[k];
    if (cfg.rel_gap > 0.0) out["rel_gap"] = cfg.rel_gap;
    if (res.status == opt::MilpStatus::Optimal || res.status == opt::MilpStatus::NodeLimit) {
      out["objective"] = res.objective;
      out["best_bound"] = res.best_bound;
      json primal = json::object();
      for (int j = 0; j < model.lp.cols(); ++j) {
        const std::string& name = model.lp.col_names[static_cast<size_t>(j)];
        if (name.rfind("mlp_", 0) == 0 || name.rfind("union_x", 0) == 0 ||
            name.rfind("xs", 0) == 0)
          continue;
        primal[name] = res.x(j);
      }
      out["primal"] = primal;
      io::save_schedule_csv(opt::extract_schedule(cols, res.x),
                            artifact(cfg, "schedule_" + tag + ".csv"));
    }
    write_json_file(artifact(cfg, "solve_" + tag + ".json"), out);
    merge_timing(cfg, "solve_" + tag, res.wall_seconds);
    std::cerr << "solve " << tag << ": " << out["status"].get<std::string>() << ", nodes "
              << res.nodes << ", " << res.wall_seconds << "s\n";
  }
}

void stage_evaluate(const Config& cfg, const std::string& mode_filter) {
  const auto in = load_inputs(cfg);
  const nn::MlpParams* vio_ptr = nullptr;
  nn::MlpParams vio;
  if (fs::exists(artifact(cfg, "vio_mlp.json"))) {
    vio = io::load_mlp(artifact(cfg, "vio_mlp.json"));
    vio_ptr = &vio;
  }
  bool any = false;
  for (const std::string mode : {"p2", "p3"}) {
    if (!mode_filter.empty() && mode_filter != mode) continue;
    for (size_t k = 0; k < cfg.dg_scales.size(); ++k) {
      const std::string tag = scenario_tag(mode, k);
      const std::string sched_path = artifact(cfg, "schedule_" + tag + ".csv");
      if (!fs::exists(sched_path)) continue;
      any = true;
      const auto sched = io::load_schedule_csv(sched_path);
      const auto sc_k = opt::scale_dg_availability(in.scenario, cfg.dg_scales[k]);
      const auto audit = evaluate_schedule(in.net, sc_k, sched, vio_ptr);
      json j;
      j["total_cost"] = audit.total_cost;
      j["max_voltage_violation_pu"] = audit.max_voltage_violation;
      j["max_apparent_flow_pu"] = audit.max_apparent_flow;
      j["max_apparent_flow_mw"] = audit.max_apparent_flow * in.net.base_mva;
      j["max_flow_violation_mw"] = audit.max_flow_violation_mw;
      j["h_true"] = audit.h_true;
      if (!audit.h_model.empty()) j["h_model"] = audit.h_model;
      j["step_cost"] = audit.step_cost;
      j["converged"] = audit.converged;
      j["all_converged"] = audit.all_converged;
      const std::string solve_path = artifact(cfg, "solve_" + tag + ".json");
      if (fs::exists(solve_path)) {
        const json solved = read_json_file(solve_path);
        if (solved.contains("objective")) j["solver_objective"] = solved["objective"];
      }
      write_json_file(artifact(cfg, "evaluate_" + tag + ".json"), j);
    }
  }
  if (!any) throw std::runtime_error("missing artifact: schedule (run `solve` first)");
}

void stage_report(const Config& cfg) {
  if (!emit_report(cfg)) throw std::runtime_error("report: no artifacts to report on");
}

}  // namespace

Config load_config(const std::string& path) {
  const json j = read_json_file(path);
  const fs::path base = fs::path(path).parent_path();
  Config cfg;
  auto resolve = [&](const std::string& p) {
    return fs::path(p).is_absolute() ? p : (base / p).string();
  };
  cfg.network_path = resolve(j.at("network").get<std::string>());
  cfg.scenario_path = resolve(j.at("scenario").get<std::string>());
  cfg.out_dir = resolve(j.value("out_dir", "artifacts"));
  cfg.seed = j.value("seed", 1ull);
  if (j.contains("dataset")) {
    cfg.samples = j["dataset"].value("samples", cfg.samples);
    cfg.box_margin = j["dataset"].value("margin", cfg.box_margin);
    cfg.validation_fraction = j["dataset"].value("validation_fraction", cfg.validation_fraction);
  }
  auto read_mlp = [&](const char* key, MlpSpec& spec) {
    if (!j.contains(key)) return;
    const json& m = j[key];
    spec.layers = m.value("layers", spec.layers);
    spec.epochs = m.value("epochs", spec.epochs);
    spec.batch = m.value("batch", spec.batch);
    spec.learning_rate = m.value("learning_rate", spec.learning_rate);
  };
  read_mlp("vio_mlp", cfg.vio);
  read_mlp("loss_mlp", cfg.loss);
  if (j.contains("solve")) {
    cfg.dg_scales = j["solve"].value("dg_scales", cfg.dg_scales);
    cfg.solve_steps = j["solve"].value("steps", cfg.solve_steps);
    cfg.node_limit = j["solve"].value("node_limit", cfg.node_limit);
    cfg.rel_gap = j["solve"].value("rel_gap", cfg.rel_gap);
    cfg.dump_models = j["solve"].value("dump_model", cfg.dump_models);
  }
  if (j.contains("simplify"))
    cfg.redundancy_tol = j["simplify"].value("redundancy_tol", cfg.redundancy_tol);
  return cfg;
}

void run_stage(const Config& cfg, const std::string& stage, const std::string& mode) {
  fs::create_directories(cfg.out_dir);
  if (stage == "generate-data")
    stage_generate(cfg);
  else if (stage == "train")
    stage_train(cfg);
  else if (stage == "extract-regions")
    stage_extract(cfg);
  else if (stage == "simplify")
    stage_simplify(cfg);
  else if (stage == "solve") {
    if (mode.empty()) {
      stage_solve(cfg, "p2");
      stage_solve(cfg, "p3");
    } else {
      stage_solve(cfg, mode);
    }
  } else if (stage == "evaluate")
    stage_evaluate(cfg, mode);
  else if (stage == "report")
    stage_report(cfg);
  else
    throw std::runtime_error("unknown stage: " + stage);
}

AuditReport evaluate_schedule(const grid::RadialNetwork& net, const scen::Scenario& sc,
                              const scen::Schedule& sched, const nn::MlpParams* violation_model) {
  const int T = static_cast<int>(sched.p_hvac.rows());
  if (T > sc.series.horizon())
    throw std::invalid_argument("evaluate_schedule: schedule longer than the scenario");
  AuditReport rep;
  Vec p(net.n_bus), q(net.n_bus);
  for (int t = 0; t < T; ++t) {
    const Vec x = scen::feature_vector(sc, sched, t, net.base_mva);
    scen::injection_into(sc, x, p, q);
    const auto sol = grid::solve_power_flow(net, {p, q});
    rep.converged.push_back(sol.converged);
    if (violation_model) rep.h_model.push_back(nn::forward(*violation_model, x));
    if (!sol.converged) {
      rep.all_converged = false;
      rep.h_true.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.step_cost.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    rep.h_true.push_back(grid::violation_measure(sol, net));
    for (int j = 0; j < net.n_bus; ++j) {
      rep.max_voltage_violation = std::max(
          rep.max_voltage_violation,
          std::max(net.v_min_pu - sol.v(j), sol.v(j) - net.v_max_pu));
    }
    for (int b = 0; b < static_cast<int>(net.branches.size()); ++b) {
      const double s = std::hypot(sol.p_flow(b), sol.q_flow(b));
      rep.max_apparent_flow = std::max(rep.max_apparent_flow, s);
      rep.max_flow_violation_mw =
          std::max(rep.max_flow_violation_mw, (s - net.branch_limit(b)) * net.base_mva);
    }
    const double g_root_mw = grid::root_import(sol, net) * net.base_mva;
    const double cost =
        scen::energy_cost(g_root_mw, sc.series.eta_buy[static_cast<size_t>(t)],
                          sc.series.eta_sell[static_cast<size_t>(t)], sc.series.dt_hours);
    rep.step_cost.push_back(cost);
    rep.total_cost += cost;
  }
  rep.max_voltage_violation = std::max(rep.max_voltage_violation, 0.0);
  rep.max_flow_violation_mw = std::max(rep.max_flow_violation_mw, 0.0);
  return rep;
}

bool emit_report(const Config& cfg) {
  bool produced = false;
  std::ostringstream pruning_csv;
  pruning_csv << "metric,before,after\n";
  const std::string meta_path = artifact(cfg, "simplify_meta.json");
  const std::string regions_meta_path = artifact(cfg, "regions_meta.json");
  json summary;
  if (fs::exists(meta_path)) {
    const json meta = read_json_file(meta_path);
    json rm;
    if (fs::exists(regions_meta_path)) rm = read_json_file(regions_meta_path);
    const double space = rm.is_object() ? rm.value("pattern_space", 0.0) : 0.0;
    pruning_csv << "activation_regions," << io::format_double(space) << ","
                << meta["regions_after"].get<size_t>() << "\n";
    pruning_csv << "regions_with_samples," << meta["regions_before"].get<size_t>() << ","
                << meta["regions_after"].get<size_t>() << "\n";
    pruning_csv << "mean_rows_per_region," << io::format_double(meta["mean_rows_before"].get<double>())
                << "," << io::format_double(meta["mean_rows_after"].get<double>()) << "\n";
    summary["pruning"] = meta;
    if (rm.is_object()) summary["regions"] = rm;
    produced = true;
  } else {
    pruning_csv << "activation_regions,NA,NA\n";
  }

  std::ostringstream table;
  table << "scenario,mode,dg_scale,status,solver_objective,audited_cost,"
           "max_voltage_violation_pu,max_flow_violation_mw,nodes,wall_seconds\n";
  json timings;
  if (fs::exists(artifact(cfg, "timings.json")))
    timings = read_json_file(artifact(cfg, "timings.json"));
  json scenarios = json::array();
  for (size_t k = 0; k < cfg.dg_scales.size(); ++k) {
    for (const std::string mode : {"p2", "p3"}) {
      const std::string tag = scenario_tag(mode, k);
      const std::string solve_path = artifact(cfg, "solve_" + tag + ".json");
      const std::string eval_path = artifact(cfg, "evaluate_" + tag + ".json");
      if (!fs::exists(solve_path) && !fs::exists(eval_path)) continue;
      produced = true;
      json row;
      row["scenario"] = "S" + std::to_string(k + 1);
      row["mode"] = mode;
      row["dg_scale"] = cfg.dg_scales[k];
      std::string status = "NA", nodes = "NA", obj = "NA";
      if (fs::exists(solve_path)) {
        const json s = read_json_file(solve_path);
        status = s.value("status", "NA");
        nodes = std::to_string(s.value("nodes", 0L));
        if (s.contains("objective")) obj = io::format_double(s["objective"].get<double>());
        row["solve"] = s;
        row["solve"].erase("primal");
      }
      std::string cost = "NA", vv = "NA", fv = "NA";
      if (fs::exists(eval_path)) {
        const json e = read_json_file(eval_path);
        cost = io::format_double(e["total_cost"].get<double>());
        vv = io::format_double(e["max_voltage_violation_pu"].get<double>());
        fv = io::format_double(e["max_flow_violation_mw"].get<double>());
        row["evaluate"] = e;
      }
      std::string wall = "NA";
      if (timings.contains("solve_" + tag))
        wall = io::format_double(timings["solve_" + tag].get<double>());
      table << "S" << (k + 1) << "," << mode << "," << io::format_double(cfg.dg_scales[k]) << ","
            << status << "," << obj << "," << cost << "," << vv << "," << fv << "," << nodes << ","
            << wall << "\n";
      scenarios.push_back(row);
    }
  }
  summary["scenarios"] = scenarios;

  if (!produced) return false;
  std::ofstream p(artifact(cfg, "report_pruning.csv"), std::ios::binary);
  p << pruning_csv.str();
  std::ofstream t(artifact(cfg, "report_scenarios.csv"), std::ios::binary);
  t << table.str();
  write_json_file(artifact(cfg, "report.json"), summary);
  return true;
}

}  // namespace polyflow::pipeline
