// smartrel: batch front end for the reliability toolkit. Subcommands ingest
// the CSV schemas, run a fit or a simulation, and emit JSON/CSV artifacts
// plus a manifest that pins the command, flags, input hashes, and seed.
//
// Exit codes: 0 success, 2 validation error, 3 non-convergence (partial
// diagnostics are still written).

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "smartrel/common.hpp"
#include "smartrel/dataset.hpp"
#include "smartrel/degpath.hpp"
#include "smartrel/distfit.hpp"
#include "smartrel/doelab.hpp"
#include "smartrel/nhpp.hpp"
#include "smartrel/oodguard.hpp"
#include "smartrel/simgen.hpp"
#include "smartrel/smartframe.hpp"
#include "smartrel/uqvi.hpp"

using json = nlohmann::json;
using namespace smartrel;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError(ErrorCode::MalformedRow, "cannot open " + path);
  }
  std::uint64_t h = 1469598103934665603ULL;
  char buffer[8192];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buffer[i]);
      h *= 1099511628211ULL;
    }
  }
  std::ostringstream hex;
  hex << "fnv1a64:" << std::hex << h;
  return hex.str();
}

// Global run context collected by every subcommand.
struct RunContext {
  std::string command;
  std::map<std::string, std::string> flags;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  std::string manifest_path;  // defaults to first output + .manifest.json
};

void write_manifest(const RunContext& ctx) {
  if (ctx.outputs.empty() && ctx.manifest_path.empty()) return;
  json manifest;
  manifest["command"] = ctx.command;
  manifest["flags"] = ctx.flags;
  json inputs = json::object();
  for (const auto& path : ctx.inputs) inputs[path] = file_hash(path);
  manifest["inputs"] = inputs;
  json outputs = json::object();
  for (const auto& path : ctx.outputs) outputs[path] = file_hash(path);
  manifest["outputs"] = outputs;
  manifest["seed"] = ctx.seed;
  manifest["version"] = kVersion;
  const std::string path = ctx.manifest_path.empty()
                               ? ctx.outputs.front() + ".manifest.json"
                               : ctx.manifest_path;
  std::ofstream out(path);
  out << manifest.dump(2) << "\n";
}

void write_json(const std::string& path, const json& value) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError(ErrorCode::MalformedRow, "cannot write " + path);
  }
  out << value.dump(2) << "\n";
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError(ErrorCode::MalformedRow, "cannot open " + path);
  }
  json value;
  try {
    in >> value;
  } catch (const json::parse_error& err) {
    throw ValidationError(ErrorCode::InvalidConfig,
                          path + " is not valid JSON: " + err.what());
  }
  return value;
}

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t seed_flag) {
  if (seed_opt->count() > 0) return seed_flag;
  if (const char* env = std::getenv("SMARTREL_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return seed_flag;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (!field.empty()) grid.push_back(std::stod(field));
  }
  return grid;
}

json fit_result_json(const FitResult& result) {
  json out;
  out["model"] = result.model_tag;
  out["theta"] = std::vector<double>(result.theta_hat.begin(), result.theta_hat.end());
  out["loglik"] = result.loglik;
  out["converged"] = result.converged;
  out["n_iter"] = result.n_iter;
  if (result.std_errors) {
    out["std_errors"] =
        std::vector<double>(result.std_errors->begin(), result.std_errors->end());
  }
  out["boundary_params"] = result.boundary_params;
  out["flags"] = result.flags;
  return out;
}

nhpp::IntensityModel intensity_from_json(const json& spec, double horizon) {
  nhpp::IntensityModel model;
  model.tag = nhpp::tag_from_string(spec.at("tag").get<std::string>());
  const auto theta = spec.at("theta").get<std::vector<double>>();
  if (model.tag == nhpp::IntensityTag::ispline) {
    std::vector<double> knots;
    if (spec.contains("knots")) knots = spec["knots"].get<std::vector<double>>();
    const double tau = spec.value("tau", horizon);
    model.basis = nhpp::SplineBasis::make(tau, knots);
  }
  model.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(),
                                                  static_cast<Eigen::Index>(theta.size()));
  model.validate();
  return model;
}

std::vector<ExposureStep> exposure_from_json(const json& steps, const std::string& unit) {
  std::vector<ExposureStep> exposure;
  for (const auto& step : steps) {
    exposure.push_back({unit, step.at("start").get<double>(),
                        step.at("end").get<double>(), step.at("rate").get<double>()});
  }
  return exposure;
}

// ---------------------------------------------------------------- lifetime

int run_fit_lifetime(const std::string& data_path, const std::string& family_name,
                     const std::string& out_path, RunContext* ctx) {
  const auto records = load_lifetime_csv(data_path);
  const auto family = distfit::family_from_string(family_name);
  const auto fit = distfit::fit_lifetime(records, family);

  int n_failures = 0;
  for (const auto& rec : records) n_failures += rec.status;
  json out;
  out["family"] = family_name;
  out["mu"] = fit.theta_hat[0];
  out["sigma"] = fit.theta_hat[1];
  if (fit.std_errors) {
    out["se_mu"] = (*fit.std_errors)[0];
    out["se_sigma"] = (*fit.std_errors)[1];
  }
  out["loglik"] = fit.loglik;
  out["n"] = records.size();
  out["n_failures"] = n_failures;
  out["converged"] = fit.converged;
  out["flags"] = fit.flags;
  write_json(out_path, out);
  ctx->outputs.push_back(out_path);
  write_manifest(*ctx);
  if (!fit.converged) {
    std::cerr << "fit-lifetime: did not converge (diagnostics in " << out_path << ")\n";
    return 3;
  }
  return 0;
}

// -------------------------------------------------------------- degradation

int run_fit_degradation(const std::string& data_path, const std::string& model_name,
                        double threshold, int n_sim, std::uint64_t seed,
                        const std::string& out_path, const std::string& cdf_path,
                        const std::string& grid_text, RunContext* ctx) {
  const auto paths = load_degradation_csv(data_path, threshold);
  degpath::PathModel model{degpath::path_tag_from_string(model_name)};
  const auto fit = degpath::fit_gpm(paths, model);

  json out = fit_result_json(fit.result);
  out["alpha"] = std::vector<double>(fit.params.alpha.begin(), fit.params.alpha.end());
  json sigma = json::array();
  for (Eigen::Index r = 0; r < fit.params.sigma.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < fit.params.sigma.cols(); ++c) {
      row.push_back(fit.params.sigma(r, c));
    }
    sigma.push_back(row);
  }
  out["sigma"] = sigma;
  out["sigma_eps2"] = fit.params.sigma_eps2;
  out["threshold"] = threshold;
  write_json(out_path, out);
  ctx->outputs.push_back(out_path);

  if (!cdf_path.empty() && fit.result.converged) {
    std::vector<double> grid;
    if (!grid_text.empty()) {
      grid = parse_grid(grid_text);
    } else {
      double t_max = 0.0;
      for (const auto& p : paths) t_max = std::max(t_max, p.times.back());
      for (int k = 1; k <= 20; ++k) grid.push_back(1.5 * t_max * k / 20.0);
    }
    const auto cdf =
        degpath::failure_time_cdf(fit.params, model, threshold, grid, n_sim, seed);
    std::vector<std::vector<double>> rows;
    for (const auto& point : cdf) rows.push_back({point.t, point.cdf, point.mc_se});
    write_csv(cdf_path, {"t", "cdf", "mc_se"}, rows);
    ctx->outputs.push_back(cdf_path);
  }
  write_manifest(*ctx);
  if (!fit.result.converged) {
    std::cerr << "fit-degradation: did not converge (diagnostics in " << out_path
              << ")\n";
    return 3;
  }
  return 0;
}

// --------------------------------------------------------------------- nhpp

int run_fit_nhpp(const std::string& events_path, const std::string& exposure_path,
                 const std::string& followup_path, const std::string& model_name,
                 int knots, const std::string& out_path, const std::string& curve_path,
                 const std::string& bif_path, int bands, double level, int grid_points,
                 std::uint64_t seed, RunContext* ctx) {
  const auto events = load_events_csv(events_path);
  const auto exposure = load_exposure_csv(exposure_path);
  const auto followups = load_followup_csv(followup_path);
  const auto histories = build_histories(events, followups, &exposure);

  nhpp::FitNhppOptions opts;
  opts.n_spline_basis = knots;
  const auto tag = nhpp::tag_from_string(model_name);
  const auto fit = nhpp::fit_nhpp(histories, exposure, tag, opts);

  json out = fit_result_json(fit.result);
  if (fit.model.basis) {
    out["interior_knots"] = fit.model.basis->interior_knots();
    out["tau"] = fit.model.basis->tau();
  }
  write_json(out_path, out);
  ctx->outputs.push_back(out_path);

  double tau_max = 0.0;
  for (const auto& h : histories) tau_max = std::max(tau_max, h.follow_up_end);
  std::vector<double> grid;
  for (int k = 0; k <= grid_points; ++k) grid.push_back(tau_max * k / grid_points);

  if (!curve_path.empty() && fit.result.converged) {
    const auto curve = nhpp::expected_vs_observed(fit, histories, exposure, grid);
    std::vector<std::vector<double>> rows;
    if (bands > 0) {
      const auto band = nhpp::bootstrap_expected_bands(fit, histories, exposure, grid,
                                                       bands, level, seed);
      for (std::size_t k = 0; k < curve.size(); ++k) {
        rows.push_back({curve[k].t, curve[k].expected, curve[k].observed,
                        band.lower[k], band.upper[k]});
      }
      write_csv(curve_path, {"t", "expected", "observed", "lower", "upper"}, rows);
    } else {
      for (const auto& point : curve) {
        rows.push_back({point.t, point.expected, point.observed});
      }
      write_csv(curve_path, {"t", "expected", "observed"}, rows);
    }
    ctx->outputs.push_back(curve_path);
  }
  if (!bif_path.empty() && fit.result.converged) {
    std::vector<std::vector<double>> rows;
    for (double t : grid) rows.push_back({t, nhpp::baseline_bif(fit.model, t)});
    write_csv(bif_path, {"t", "lambda0"}, rows);
    ctx->outputs.push_back(bif_path);
  }
  write_manifest(*ctx);
  if (!fit.result.converged) {
    std::cerr << "fit-nhpp: did not converge (diagnostics in " << out_path << ")\n";
    return 3;
  }
  return 0;
}

// -------------------------------------------------------------------- gates

int run_fit_gates(const std::string& labeled_path, const std::string& out_path,
                  RunContext* ctx) {
  const CsvTable table = read_csv(labeled_path);
  const int label_col = table.column("label");
  const int failed_col = table.column("failed");
  if (label_col < 0 || failed_col < 0) {
    throw ValidationError(ErrorCode::MalformedRow,
                          labeled_path + ":1 needs 'label' and 'failed' columns");
  }
  std::vector<int> z_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (static_cast<int>(c) != label_col && static_cast<int>(c) != failed_col) {
      z_cols.push_back(static_cast<int>(c));
    }
  }
  std::vector<smartframe::LabeledOutcome> outcomes;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    smartframe::LabeledOutcome o;
    o.label = table.rows[r][label_col];
    const std::string& failed = table.rows[r][failed_col];
    if (failed != "0" && failed != "1") {
      throw ValidationError(ErrorCode::MalformedRow,
                            labeled_path + ":" + std::to_string(table.line_numbers[r]) +
                                " failed must be 0 or 1");
    }
    o.failed = failed == "1";
    o.z.resize(static_cast<Eigen::Index>(z_cols.size()));
    for (std::size_t k = 0; k < z_cols.size(); ++k) {
      o.z[static_cast<Eigen::Index>(k)] = std::stod(table.rows[r][z_cols[k]]);
    }
    outcomes.push_back(std::move(o));
  }
  const auto fits = smartframe::fit_gates(outcomes);
  json out = json::array();
  for (const auto& fit : fits) {
    json one;
    one["label"] = fit.label;
    one["beta"] = std::vector<double>(fit.beta.begin(), fit.beta.end());
    one["std_errors"] =
        std::vector<double>(fit.std_errors.begin(), fit.std_errors.end());
    one["loglik"] = fit.loglik;
    one["n"] = fit.n;
    one["converged"] = fit.converged;
    out.push_back(one);
  }
  write_json(out_path, out);
  ctx->outputs.push_back(out_path);
  write_manifest(*ctx);
  return 0;
}

// ----------------------------------------------------------------- simulate

int run_simulate(const std::string& scenario_path, std::uint64_t seed,
                 const std::string& out_path, const std::string& exposure_out,
                 const std::string& followup_out, RunContext* ctx) {
  const json scenario = load_json(scenario_path);
  const std::string kind = scenario.value("kind", std::string("smart"));

  if (kind == "smart") {
    const double horizon = scenario.at("horizon").get<double>();
    if (scenario.at("processes").size() > 8) {
      throw ValidationError(ErrorCode::InvalidConfig,
                            "at most 8 interruptive process types are supported");
    }
    std::vector<smartframe::InterruptiveProcess> processes;
    for (const auto& proc : scenario.at("processes")) {
      smartframe::InterruptiveProcess p;
      p.label = proc.at("label").get<std::string>();
      p.intensity = intensity_from_json(proc.at("intensity"), horizon);
      p.exposure = exposure_from_json(proc.at("exposure"), p.label);
      processes.push_back(std::move(p));
    }
    smartframe::GatingModel gating;
    for (const auto& gate : scenario.at("gates")) {
      gating.labels.push_back(gate.at("label").get<std::string>());
      const auto beta = gate.at("beta").get<std::vector<double>>();
      gating.betas.push_back(Eigen::Map<const Eigen::VectorXd>(
          beta.data(), static_cast<Eigen::Index>(beta.size())));
    }
    const auto z_values = scenario.value("z", std::vector<double>{});
    const Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(
        z_values.data(), static_cast<Eigen::Index>(z_values.size()));
    const auto stream = smartframe::simulate_smart(processes, gating, z, horizon, seed);
    std::ofstream out(out_path);
    out << "time,label,failed\n";
    for (const auto& event : stream) {
      out << format_double(event.time) << "," << event.label << ","
          << (event.failed ? 1 : 0) << "\n";
    }
    out.close();
    ctx->outputs.push_back(out_path);
    // independence across processes is assumed, not estimated
    json meta;
    meta["assumption"] = "interruptive processes are independent given z";
    meta["kind"] = kind;
    meta["horizon"] = horizon;
    write_json(out_path + ".meta.json", meta);
    ctx->outputs.push_back(out_path + ".meta.json");
  } else if (kind == "nhpp") {
    const double follow_up = scenario.at("follow_up").get<double>();
    const int n_units = scenario.value("n_units", 1);
    const auto model = intensity_from_json(scenario.at("intensity"), follow_up);
    std::vector<EventRow> events;
    std::vector<FollowupRow> followups;
    std::vector<ExposureStep> exposure_rows;
    SplitRng root(seed);
    for (int u = 0; u < n_units; ++u) {
      const std::string id = "u" + std::to_string(u + 1);
      auto steps = exposure_from_json(scenario.at("exposure"), id);
      SplitRng rng = root.split(static_cast<std::uint64_t>(u));
      const auto history =
          simgen::simulate_nhpp_with_rng(model, steps, follow_up, &rng);
      for (double t : history.event_times) events.push_back({id, t});
      followups.push_back({id, follow_up});
      exposure_rows.insert(exposure_rows.end(), steps.begin(), steps.end());
    }
    write_events_csv(out_path, events);
    ctx->outputs.push_back(out_path);
    if (!exposure_out.empty()) {
      write_exposure_csv(exposure_out, exposure_rows);
      ctx->outputs.push_back(exposure_out);
    }
    if (!followup_out.empty()) {
      write_followup_csv(followup_out, followups);
      ctx->outputs.push_back(followup_out);
    }
  } else if (kind == "lifetime") {
    const auto family =
        distfit::family_from_string(scenario.at("family").get<std::string>());
    distfit::LocScaleParams params{scenario.at("mu").get<double>(),
                                   scenario.at("sigma").get<double>()};
    std::optional<double> censor;
    if (scenario.contains("censor_time")) censor = scenario["censor_time"].get<double>();
    const auto records =
        simgen::simulate_lifetime(family, params, scenario.at("n").get<int>(), censor,
                                  seed);
    write_lifetime_csv(out_path, records);
    ctx->outputs.push_back(out_path);
  } else if (kind == "degradation") {
    degpath::PathModel model{
        degpath::path_tag_from_string(scenario.at("model").get<std::string>())};
    degpath::GpmParams params;
    const auto alpha = scenario.at("alpha").get<std::vector<double>>();
    params.alpha = Eigen::Map<const Eigen::VectorXd>(
        alpha.data(), static_cast<Eigen::Index>(alpha.size()));
    const auto sigma = scenario.at("sigma").get<std::vector<std::vector<double>>>();
    params.sigma.resize(static_cast<Eigen::Index>(sigma.size()),
                        static_cast<Eigen::Index>(sigma.size()));
    for (std::size_t r = 0; r < sigma.size(); ++r) {
      for (std::size_t c = 0; c < sigma[r].size(); ++c) {
        params.sigma(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            sigma[r][c];
      }
    }
    params.sigma_eps2 = scenario.at("sigma_eps2").get<double>();
    const auto grid = scenario.at("time_grid").get<std::vector<double>>();
    const auto paths = simgen::simulate_degradation(
        model, params, scenario.at("n_units").get<int>(), grid, seed);
    write_degradation_csv(out_path, paths);
    ctx->outputs.push_back(out_path);
  } else {
    throw ValidationError(ErrorCode::InvalidConfig, "unknown scenario kind '" + kind + "'");
  }
  write_manifest(*ctx);
  return 0;
}

// ---------------------------------------------------------------------- ood

struct FeatureTable {
  Eigen::MatrixXd features;
  std::vector<std::string> labels;  // "?" marks scoring-only rows
};

FeatureTable load_features(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header[0] != "label") {
    throw ValidationError(ErrorCode::MalformedRow,
                          path + ":1 first column must be 'label'");
  }
  const auto d = static_cast<Eigen::Index>(table.header.size()) - 1;
  if (d < 1) {
    throw ValidationError(ErrorCode::MalformedRow, path + " has no feature columns");
  }
  FeatureTable out;
  out.features.resize(static_cast<Eigen::Index>(table.rows.size()), d);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out.labels.push_back(table.rows[r][0]);
    for (Eigen::Index c = 0; c < d; ++c) {
      out.features(static_cast<Eigen::Index>(r), c) =
          std::stod(table.rows[r][static_cast<std::size_t>(c) + 1]);
    }
  }
  return out;
}

int run_ood(const std::string& train_path, const std::string& score_path,
            double target_fpr, std::optional<double> threshold_flag,
            const std::string& out_path, const std::string& eval_path,
            RunContext* ctx) {
  const FeatureTable train = load_features(train_path);
  Eigen::MatrixXd labeled(train.features.rows(), train.features.cols());
  std::vector<std::string> labels;
  Eigen::Index n_labeled = 0;
  for (Eigen::Index r = 0; r < train.features.rows(); ++r) {
    if (train.labels[static_cast<std::size_t>(r)] == "?") continue;
    labeled.row(n_labeled++) = train.features.row(r);
    labels.push_back(train.labels[static_cast<std::size_t>(r)]);
  }
  labeled.conservativeResize(n_labeled, Eigen::NoChange);
  const auto estimate = oodguard::fit_lda(labeled, labels);

  std::vector<double> train_scores;
  for (Eigen::Index r = 0; r < n_labeled; ++r) {
    train_scores.push_back(
        oodguard::confidence_score(estimate, labeled.row(r).transpose()));
  }
  const double threshold = threshold_flag
                               ? *threshold_flag
                               : oodguard::calibrate_threshold(train_scores, target_fpr);

  const FeatureTable to_score =
      score_path.empty() ? train : load_features(score_path);
  std::vector<std::vector<double>> rows;
  std::vector<double> in_scores;
  std::vector<double> ood_scores;
  std::vector<std::string> known(estimate.class_labels);
  for (Eigen::Index r = 0; r < to_score.features.rows(); ++r) {
    const double score =
        oodguard::confidence_score(estimate, to_score.features.row(r).transpose());
    const bool flagged = score < threshold;
    rows.push_back({static_cast<double>(r), score, flagged ? 1.0 : 0.0});
    const std::string& label = to_score.labels[static_cast<std::size_t>(r)];
    if (label == "?") continue;
    if (std::find(known.begin(), known.end(), label) != known.end()) {
      in_scores.push_back(score);
    } else {
      ood_scores.push_back(score);
    }
  }
  write_csv(out_path, {"row_id", "score", "flag"}, rows);
  ctx->outputs.push_back(out_path);

  json meta;
  meta["threshold"] = threshold;
  meta["ridge_applied"] = estimate.ridge_applied;
  meta["n_classes"] = estimate.n_classes();
  if (!in_scores.empty() && !ood_scores.empty()) {
    meta["auc"] = oodguard::detector_auc(in_scores, ood_scores);
  }
  write_json(out_path + ".meta.json", meta);
  ctx->outputs.push_back(out_path + ".meta.json");

  if (!eval_path.empty()) {
    if (in_scores.empty() || ood_scores.empty()) {
      throw ValidationError(ErrorCode::TooFewScores,
                            "detector evaluation needs both known-class and "
                            "novel-class rows in the scored file");
    }
    const auto roc = oodguard::detector_roc(in_scores, ood_scores);
    std::vector<std::vector<double>> eval_rows;
    for (const auto& point : roc) {
      eval_rows.push_back({point.threshold, point.fpr, point.tpr});
    }
    write_csv(eval_path, {"threshold", "fpr", "tpr"}, eval_rows);
    ctx->outputs.push_back(eval_path);
  }
  write_manifest(*ctx);
  return 0;
}

// ---------------------------------------------------------------------- doe

std::vector<std::array<double, 2>> parse_z_levels(const std::string& text) {
  std::vector<std::array<double, 2>> levels;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (field.size() != 2 || (field[0] != '0' && field[0] != '1') ||
        (field[1] != '0' && field[1] != '1')) {
      throw ValidationError(ErrorCode::InvalidConfig,
                            "z levels must look like 10,01,11");
    }
    levels.push_back({field[0] == '1' ? 1.0 : 0.0, field[1] == '1' ? 1.0 : 0.0});
  }
  return levels;
}

int run_doe(const std::string& gen_path, const std::string& design_path,
            const std::string& responses_path, const std::string& out_path,
            const std::string& grid_path, int resolution, int replicates,
            double min_prop, const std::string& z_levels_text, RunContext* ctx) {
  if (!gen_path.empty()) {
    auto levels = parse_z_levels(z_levels_text);
    const auto design = doelab::gen_mixture_design(3, 2, min_prop, replicates, levels);
    std::vector<std::vector<double>> rows;
    for (const auto& run : design.runs) {
      rows.push_back({static_cast<double>(run.run), run.x[0], run.x[1], run.x[2],
                      run.z1, run.z2, static_cast<double>(run.replicate)});
    }
    write_csv(gen_path, {"run", "x1", "x2", "x3", "z1", "z2", "rep"}, rows);
    ctx->outputs.push_back(gen_path);
    write_manifest(*ctx);
    return 0;
  }

  if (design_path.empty() || responses_path.empty() || out_path.empty()) {
    throw ValidationError(ErrorCode::InvalidConfig,
                          "doe fit needs --design, --responses and --out");
  }
  const CsvTable design_table = read_csv(design_path);
  const std::vector<std::string> expected{"run", "x1", "x2", "x3", "z1", "z2", "rep"};
  if (design_table.header != expected) {
    throw ValidationError(ErrorCode::MalformedRow,
                          design_path + ":1 header must be run,x1,x2,x3,z1,z2,rep");
  }
  doelab::MixtureDesign design;
  design.min_prop = min_prop;
  std::map<std::pair<int, int>, std::size_t> row_of;
  for (std::size_t r = 0; r < design_table.rows.size(); ++r) {
    doelab::MixtureRun run;
    run.run = static_cast<int>(std::lround(std::stod(design_table.rows[r][0])));
    run.x = Eigen::Vector3d(std::stod(design_table.rows[r][1]),
                            std::stod(design_table.rows[r][2]),
                            std::stod(design_table.rows[r][3]));
    run.z1 = std::stod(design_table.rows[r][4]);
    run.z2 = std::stod(design_table.rows[r][5]);
    run.replicate = static_cast<int>(std::lround(std::stod(design_table.rows[r][6])));
    row_of[{run.run, run.replicate}] = design.runs.size();
    design.runs.push_back(run);
  }
  const CsvTable resp_table = read_csv(responses_path);
  if (resp_table.header != std::vector<std::string>{"run", "rep", "y"}) {
    throw ValidationError(ErrorCode::MalformedRow,
                          responses_path + ":1 header must be run,rep,y");
  }
  std::vector<double> responses(design.runs.size(),
                                std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < resp_table.rows.size(); ++r) {
    const int run = static_cast<int>(std::lround(std::stod(resp_table.rows[r][0])));
    const int rep = static_cast<int>(std::lround(std::stod(resp_table.rows[r][1])));
    const auto it = row_of.find({run, rep});
    if (it == row_of.end()) {
      throw ValidationError(ErrorCode::MalformedRow,
                            responses_path + ":" +
                                std::to_string(resp_table.line_numbers[r]) +
                                " no matching design row");
    }
    responses[it->second] = std::stod(resp_table.rows[r][2]);
  }
  for (double y : responses) {
    if (std::isnan(y)) {
      throw ValidationError(ErrorCode::DimensionMismatch,
                            "every design row needs a response");
    }
  }
  const auto fit = doelab::fit_surrogate(design, responses);

  json out;
  out["beta"] = std::vector<double>(fit.beta.begin(), fit.beta.end());
  out["beta_pair"] = std::vector<double>(fit.beta_pair.begin(), fit.beta_pair.end());
  out["gamma"] = {{fit.gamma(0, 0), fit.gamma(0, 1), fit.gamma(0, 2)},
                  {fit.gamma(1, 0), fit.gamma(1, 1), fit.gamma(1, 2)}};
  out["delta12"] = fit.delta12;
  out["gamma_main"] = {fit.gamma_main[0], fit.gamma_main[1]};
  out["sigma_eps2"] = fit.sigma_eps2;
  write_json(out_path, out);
  ctx->outputs.push_back(out_path);

  if (!grid_path.empty()) {
    // one grid file per z-combination present in the design
    std::vector<std::pair<double, double>> combos;
    for (const auto& run : design.runs) {
      const std::pair<double, double> combo{run.z1, run.z2};
      if (std::find(combos.begin(), combos.end(), combo) == combos.end()) {
        combos.push_back(combo);
      }
    }
    for (const auto& [z1, z2] : combos) {
      const auto grid = doelab::predict_simplex_grid(fit, z1, z2, resolution, min_prop);
      std::vector<std::vector<double>> rows;
      for (const auto& point : grid) {
        // plot data is clamped to the AUC range; the fit itself is not
        rows.push_back({point.x[0], point.x[1], point.x[2],
                        std::clamp(point.yhat, 0.0, 1.0)});
      }
      const auto dot = grid_path.rfind('.');
      const std::string base = dot == std::string::npos ? grid_path : grid_path.substr(0, dot);
      const std::string ext = dot == std::string::npos ? "" : grid_path.substr(dot);
      const std::string path = base + "_z1-" + std::to_string(static_cast<int>(z1)) +
                               "_z2-" + std::to_string(static_cast<int>(z2)) + ext;
      write_csv(path, {"x1", "x2", "x3", "yhat"}, rows);
      ctx->outputs.push_back(path);
    }
  }
  write_manifest(*ctx);
  return 0;
}

// ----------------------------------------------------------------------- uq

int run_uq(const std::string& data_path, double s0_sq, double sigma_sq,
           const std::string& out_path, const std::string& predict_path,
           const std::string& pred_out, RunContext* ctx) {
  const CsvTable table = read_csv(data_path);
  if (table.header.empty() || table.header[0] != "y") {
    throw ValidationError(ErrorCode::MalformedRow,
                          data_path + ":1 first column must be 'y'");
  }
  const auto d = static_cast<Eigen::Index>(table.header.size()) - 1;
  uqvi::BayesLinearModel model;
  model.x.resize(static_cast<Eigen::Index>(table.rows.size()), d);
  model.y.resize(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    model.y[static_cast<Eigen::Index>(r)] = std::stod(table.rows[r][0]);
    for (Eigen::Index c = 0; c < d; ++c) {
      model.x(static_cast<Eigen::Index>(r), c) =
          std::stod(table.rows[r][static_cast<std::size_t>(c) + 1]);
    }
  }
  model.prior_var = s0_sq;
  model.noise_var = sigma_sq;

  const auto fit = uqvi::fit_vi(model);
  const auto post = uqvi::exact_posterior(model);
  json out;
  out["mean"] = std::vector<double>(fit.q.mean.begin(), fit.q.mean.end());
  std::vector<double> variances;
  for (Eigen::Index j = 0; j < d; ++j) variances.push_back(std::exp(fit.q.log_var[j]));
  out["variance"] = variances;
  out["elbo"] = fit.elbo_trace.back();
  out["log_evidence"] = post.log_evidence;
  out["n_iter"] = fit.n_iter;
  out["converged"] = fit.converged;
  write_json(out_path, out);
  ctx->outputs.push_back(out_path);

  if (!predict_path.empty()) {
    const CsvTable new_table = read_csv(predict_path);
    if (static_cast<Eigen::Index>(new_table.header.size()) != d) {
      throw ValidationError(ErrorCode::DimensionMismatch,
                            predict_path + " must have the x_1..x_d columns");
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < new_table.rows.size(); ++r) {
      Eigen::VectorXd x_new(d);
      for (Eigen::Index c = 0; c < d; ++c) {
        x_new[c] = std::stod(new_table.rows[r][static_cast<std::size_t>(c)]);
      }
      const auto pred = uqvi::posterior_predict(model, fit.q, x_new);
      std::vector<double> row;
      for (Eigen::Index c = 0; c < d; ++c) row.push_back(x_new[c]);
      row.push_back(pred.mean);
      row.push_back(pred.variance);
      rows.push_back(row);
    }
    std::vector<std::string> header = new_table.header;
    header.push_back("pred_mean");
    header.push_back("pred_variance");
    write_csv(pred_out.empty() ? predict_path + ".pred.csv" : pred_out, header, rows);
    ctx->outputs.push_back(pred_out.empty() ? predict_path + ".pred.csv" : pred_out);
  }
  write_manifest(*ctx);
  return 0;
}

// ------------------------------------------------------------------- report

int run_report(const std::string& manifest_path) {
  const json manifest = load_json(manifest_path);
  std::cout << "command: " << manifest.value("command", std::string("?")) << "\n";
  std::cout << "version: " << manifest.value("version", std::string("?")) << "\n";
  std::cout << "seed: " << manifest.value("seed", 0ULL) << "\n";
  bool all_match = true;
  for (const char* section : {"inputs", "outputs"}) {
    if (!manifest.contains(section)) continue;
    for (const auto& [path, recorded] : manifest[section].items()) {
      std::string current;
      try {
        current = file_hash(path);
      } catch (const Error&) {
        current = "missing";
      }
      const bool match = current == recorded.get<std::string>();
      all_match = all_match && match;
      std::cout << section << " " << path << " " << (match ? "ok" : "CHANGED") << "\n";
    }
  }
  if (!all_match) {
    std::cerr << "report: recorded hashes do not match the files on disk\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistical reliability toolkit for AI systems"};
  app.require_subcommand(1);

  RunContext ctx;
  int exit_code = 0;

  // fit-lifetime
  auto* fit_lifetime = app.add_subcommand("fit-lifetime",
                                          "Censored lifetime MLE (weibull/lognormal)");
  std::string fl_data;
  std::string fl_family = "weibull";
  std::string fl_out = "fit.json";
  fit_lifetime->add_option("--data", fl_data, "lifetime.csv")->required();
  fit_lifetime->add_option("--family", fl_family, "weibull or lognormal");
  fit_lifetime->add_option("--out", fl_out, "fit report JSON");
  fit_lifetime->callback([&] {
    ctx.command = "fit-lifetime";
    ctx.flags = {{"data", fl_data}, {"family", fl_family}, {"out", fl_out}};
    ctx.inputs = {fl_data};
    exit_code = run_fit_lifetime(fl_data, fl_family, fl_out, &ctx);
  });

  // fit-degradation
  auto* fit_deg = app.add_subcommand("fit-degradation",
                                     "General path model fit and failure-time cdf");
  std::string fd_data;
  std::string fd_model = "random_intercept_slope";
  double fd_threshold = 0.0;
  int fd_nsim = 10000;
  std::uint64_t fd_seed = 0;
  std::string fd_out = "fit.json";
  std::string fd_cdf;
  std::string fd_grid;
  std::string fd_config;
  fit_deg->add_option("--data", fd_data, "degradation.csv")->required();
  fit_deg->add_option("--model", fd_model, "random_intercept_slope or random_slope");
  fit_deg->add_option("--threshold", fd_threshold, "failure threshold D_f");
  fit_deg->add_option("--n-sim", fd_nsim, "Monte Carlo draws for the cdf");
  auto* fd_seed_opt = fit_deg->add_option("--seed", fd_seed, "RNG seed");
  fit_deg->add_option("--out", fd_out, "fit report JSON");
  fit_deg->add_option("--cdf", fd_cdf, "failure-time cdf CSV");
  fit_deg->add_option("--grid", fd_grid, "comma-separated cdf time grid");
  fit_deg->add_option("--config", fd_config, "JSON config {model, D_f, n_sim, seed}");
  fit_deg->callback([&] {
    if (!fd_config.empty()) {
      const json config = load_json(fd_config);
      if (config.contains("model") && fit_deg->count("--model") == 0) {
        fd_model = config["model"].get<std::string>();
      }
      if (config.contains("D_f") && fit_deg->count("--threshold") == 0) {
        fd_threshold = config["D_f"].get<double>();
      }
      if (config.contains("n_sim") && fit_deg->count("--n-sim") == 0) {
        fd_nsim = config["n_sim"].get<int>();
      }
      if (config.contains("seed") && fd_seed_opt->count() == 0) {
        fd_seed = config["seed"].get<std::uint64_t>();
      }
      ctx.inputs.push_back(fd_config);
    }
    ctx.command = "fit-degradation";
    ctx.seed = resolve_seed(fd_seed_opt, fd_seed);
    ctx.flags = {{"data", fd_data},       {"model", fd_model},
                 {"threshold", format_double(fd_threshold)},
                 {"n_sim", std::to_string(fd_nsim)},
                 {"out", fd_out},         {"cdf", fd_cdf}};
    ctx.inputs.push_back(fd_data);
    exit_code = run_fit_degradation(fd_data, fd_model, fd_threshold, fd_nsim, ctx.seed,
                                    fd_out, fd_cdf, fd_grid, &ctx);
  });

  // fit-nhpp
  auto* fit_nhpp_cmd = app.add_subcommand("fit-nhpp",
                                          "Exposure-adjusted NHPP fit with curves");
  std::string fn_events;
  std::string fn_exposure;
  std::string fn_followup;
  std::string fn_model = "power_law";
  int fn_knots = 5;
  std::string fn_out = "fit.json";
  std::string fn_curve;
  std::string fn_bif;
  int fn_bands = 300;
  bool fn_no_bands = false;
  double fn_level = 0.95;
  int fn_grid_points = 25;
  std::uint64_t fn_seed = 0;
  fit_nhpp_cmd->add_option("--events", fn_events, "events.csv")->required();
  fit_nhpp_cmd->add_option("--exposure", fn_exposure, "exposure.csv")->required();
  fit_nhpp_cmd->add_option("--followup", fn_followup, "followup.csv")->required();
  fit_nhpp_cmd->add_option("--model", fn_model,
                           "power_law|musa_okumoto|gompertz|weibull_srgm|ispline");
  fit_nhpp_cmd->add_option("--knots", fn_knots, "spline basis count");
  fit_nhpp_cmd->add_option("--out", fn_out, "fit report JSON");
  fit_nhpp_cmd->add_option("--curve", fn_curve, "expected-vs-observed CSV");
  fit_nhpp_cmd->add_option("--bif", fn_bif, "baseline intensity CSV");
  fit_nhpp_cmd->add_option("--bands", fn_bands, "bootstrap replicates for bands");
  fit_nhpp_cmd->add_flag("--no-bands", fn_no_bands, "skip bootstrap bands");
  fit_nhpp_cmd->add_option("--level", fn_level, "band level");
  fit_nhpp_cmd->add_option("--grid-points", fn_grid_points, "curve grid resolution");
  auto* fn_seed_opt = fit_nhpp_cmd->add_option("--seed", fn_seed, "RNG seed");
  fit_nhpp_cmd->callback([&] {
    ctx.command = "fit-nhpp";
    ctx.seed = resolve_seed(fn_seed_opt, fn_seed);
    ctx.flags = {{"events", fn_events},   {"exposure", fn_exposure},
                 {"followup", fn_followup}, {"model", fn_model},
                 {"knots", std::to_string(fn_knots)}, {"out", fn_out},
                 {"curve", fn_curve},     {"bif", fn_bif},
                 {"bands", std::to_string(fn_no_bands ? 0 : fn_bands)},
                 {"level", format_double(fn_level)}};
    ctx.inputs = {fn_events, fn_exposure, fn_followup};
    exit_code = run_fit_nhpp(fn_events, fn_exposure, fn_followup, fn_model, fn_knots,
                             fn_out, fn_curve, fn_bif, fn_no_bands ? 0 : fn_bands,
                             fn_level, fn_grid_points, ctx.seed, &ctx);
  });

  // fit-gates
  auto* fit_gates_cmd = app.add_subcommand("fit-gates",
                                           "Logistic failure gates per process");
  std::string fg_labeled;
  std::string fg_out = "gates.json";
  fit_gates_cmd->add_option("--labeled", fg_labeled, "labeled outcome CSV")->required();
  fit_gates_cmd->add_option("--out", fg_out, "gates JSON");
  fit_gates_cmd->callback([&] {
    ctx.command = "fit-gates";
    ctx.flags = {{"labeled", fg_labeled}, {"out", fg_out}};
    ctx.inputs = {fg_labeled};
    exit_code = run_fit_gates(fg_labeled, fg_out, &ctx);
  });

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "Seeded scenario simulation");
  std::string sm_scenario;
  std::uint64_t sm_seed = 0;
  std::string sm_out = "events.csv";
  std::string sm_exposure_out;
  std::string sm_followup_out;
  simulate_cmd->add_option("--scenario", sm_scenario, "scenario JSON")->required();
  auto* sm_seed_opt = simulate_cmd->add_option("--seed", sm_seed, "RNG seed");
  simulate_cmd->add_option("--out", sm_out, "output CSV");
  simulate_cmd->add_option("--exposure-out", sm_exposure_out, "exposure CSV (nhpp kind)");
  simulate_cmd->add_option("--followup-out", sm_followup_out, "followup CSV (nhpp kind)");
  simulate_cmd->callback([&] {
    ctx.command = "simulate";
    ctx.seed = resolve_seed(sm_seed_opt, sm_seed);
    // a scenario-embedded seed applies when neither flag nor env was given
    if (sm_seed_opt->count() == 0 && std::getenv("SMARTREL_SEED") == nullptr) {
      const json scenario = load_json(sm_scenario);
      if (scenario.contains("seed")) ctx.seed = scenario["seed"].get<std::uint64_t>();
    }
    ctx.flags = {{"scenario", sm_scenario}, {"out", sm_out}};
    ctx.inputs = {sm_scenario};
    exit_code = run_simulate(sm_scenario, ctx.seed, sm_out, sm_exposure_out,
                             sm_followup_out, &ctx);
  });

  // ood
  auto* ood_cmd = app.add_subcommand("ood", "Mahalanobis confidence scoring");
  std::string od_train;
  std::string od_score;
  double od_target_fpr = 0.05;
  double od_threshold = 0.0;
  std::string od_out = "scores.csv";
  std::string od_eval;
  ood_cmd->add_option("--train", od_train, "labeled features.csv")->required();
  ood_cmd->add_option("--score", od_score, "features to score (default: train)");
  ood_cmd->add_option("--target-fpr", od_target_fpr, "calibration false-positive rate");
  auto* od_thr_opt = ood_cmd->add_option("--threshold", od_threshold, "explicit threshold");
  ood_cmd->add_option("--out", od_out, "scores CSV");
  ood_cmd->add_option("--eval", od_eval, "threshold-sweep CSV (fpr, tpr)");
  ood_cmd->callback([&] {
    ctx.command = "ood";
    ctx.flags = {{"train", od_train}, {"score", od_score}, {"out", od_out},
                 {"target_fpr", format_double(od_target_fpr)}};
    ctx.inputs = {od_train};
    if (!od_score.empty()) ctx.inputs.push_back(od_score);
    std::optional<double> threshold;
    if (od_thr_opt->count() > 0) threshold = od_threshold;
    exit_code = run_ood(od_train, od_score, od_target_fpr, threshold, od_out, od_eval,
                        &ctx);
  });

  // doe
  auto* doe_cmd = app.add_subcommand("doe", "Mixture design generation and surrogate fit");
  std::string doe_gen;
  std::string doe_design;
  std::string doe_responses;
  std::string doe_out = "coefficients.json";
  std::string doe_grid;
  int doe_resolution = 30;
  int doe_replicates = 2;
  double doe_min_prop = 0.01;
  std::string doe_z_levels = "10,01,11";
  doe_cmd->add_option("--gen-design", doe_gen, "write the 28-run design CSV here");
  doe_cmd->add_option("--design", doe_design, "design CSV to fit");
  doe_cmd->add_option("--responses", doe_responses, "responses CSV (run, rep, y)");
  doe_cmd->add_option("--out", doe_out, "coefficients JSON");
  doe_cmd->add_option("--grid", doe_grid, "simplex prediction grid CSV base name");
  doe_cmd->add_option("--resolution", doe_resolution, "lattice resolution");
  doe_cmd->add_option("--replicates", doe_replicates, "replicates per run");
  doe_cmd->add_option("--min-prop", doe_min_prop, "minimum mixture proportion");
  doe_cmd->add_option("--z-levels", doe_z_levels,
                      "crossed z combinations for runs 8-28, e.g. 10,01,11");
  doe_cmd->callback([&] {
    ctx.command = "doe";
    ctx.flags = {{"gen_design", doe_gen},   {"design", doe_design},
                 {"responses", doe_responses}, {"out", doe_out},
                 {"z_levels", doe_z_levels}};
    if (!doe_design.empty()) ctx.inputs.push_back(doe_design);
    if (!doe_responses.empty()) ctx.inputs.push_back(doe_responses);
    exit_code = run_doe(doe_gen, doe_design, doe_responses, doe_out, doe_grid,
                        doe_resolution, doe_replicates, doe_min_prop, doe_z_levels,
                        &ctx);
  });

  // uq
  auto* uq_cmd = app.add_subcommand("uq", "Variational inference for the linear surrogate");
  std::string uq_data;
  double uq_s0 = 1.0;
  double uq_sigma = 1.0;
  std::string uq_out = "q.json";
  std::string uq_predict;
  std::string uq_pred_out;
  uq_cmd->add_option("--data", uq_data, "design CSV (y, x_1..x_d)")->required();
  uq_cmd->add_option("--s0-sq", uq_s0, "prior variance s0^2");
  uq_cmd->add_option("--sigma-sq", uq_sigma, "noise variance sigma^2");
  uq_cmd->add_option("--out", uq_out, "variational parameters JSON");
  uq_cmd->add_option("--predict", uq_predict, "new-design CSV (x_1..x_d)");
  uq_cmd->add_option("--pred-out", uq_pred_out, "predictive CSV");
  uq_cmd->callback([&] {
    ctx.command = "uq";
    ctx.flags = {{"data", uq_data},
                 {"s0_sq", format_double(uq_s0)},
                 {"sigma_sq", format_double(uq_sigma)},
                 {"out", uq_out}};
    ctx.inputs = {uq_data};
    if (!uq_predict.empty()) ctx.inputs.push_back(uq_predict);
    exit_code = run_uq(uq_data, uq_s0, uq_sigma, uq_out, uq_predict, uq_pred_out, &ctx);
  });

  // report
  auto* report_cmd = app.add_subcommand("report", "Verify a run manifest");
  std::string rp_manifest;
  report_cmd->add_option("--manifest", rp_manifest, "manifest JSON")->required();
  report_cmd->callback([&] { exit_code = run_report(rp_manifest); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  } catch (const ConvergenceError& err) {
    std::cerr << err.what() << "\n";
    return 3;
  } catch (const ValidationError& err) {
    std::cerr << err.what() << "\n";
    return 2;
  } catch (const Error& err) {
    std::cerr << err.what() << "\n";
    return 2;
  } catch (const json::exception& err) {
    std::cerr << "invalid JSON input: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "unexpected error: " << err.what() << "\n";
    return 2;
  }
  return exit_code;
}
