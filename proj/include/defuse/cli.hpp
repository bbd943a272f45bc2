// Command-line front end: synth, match, eval, embed and sweep. The tool in
// tools/ is a thin wrapper around run() so tests can drive the exact same
// code path in-process.

#pragma once

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "defuse/pipeline.hpp"

namespace defuse::cli {

namespace detail {

/// Pipeline options shared by match/eval/embed and sweep arms. Values read
/// from a config file become the defaults; explicitly passed flags win.
struct PipelineFlags {
  PipelineConfig config;
  std::string baseline;  // eval/sweep only; empty = pipeline

  std::string sigma_text = "auto";
  std::string geodesic_text = "capped";
  std::string formulation_text = "scholkopf";
  std::string distance_text = "geodesic";
  std::string criterion_text = "pixel";
  std::string descriptors_text;
  double tolerance_value = 8.0;
  CLI::Option* tolerance_option = nullptr;

  void apply_config_entry(const std::string& key, const std::string& value) {
    auto need_double = [&] {
      char* end = nullptr;
      double v = std::strtod(value.c_str(), &end);
      if (end != value.c_str() + value.size() || value.empty())
        throw ParamError("config: '" + key + "' needs a number, got '" + value + "'");
      return v;
    };
    auto need_int = [&] { return static_cast<int>(need_double()); };
    if (key == "r") config.r = need_int();
    else if (key == "k") config.k = need_int();
    else if (key == "nu") config.nu = need_double();
    else if (key == "co") config.co = need_double();
    else if (key == "sigma") sigma_text = value;
    else if (key == "geodesic") geodesic_text = value;
    else if (key == "max-updates") config.max_updates = need_int();
    else if (key == "formulation") formulation_text = value;
    else if (key == "distance") distance_text = value;
    else if (key == "criterion") criterion_text = value;
    else if (key == "tolerance") config.tolerance = need_double();
    else if (key == "overlap-threshold") config.overlap_threshold = need_double();
    else if (key == "overlap-samples") config.overlap_samples = need_int();
    else if (key == "descriptors") descriptors_text = value;
    else if (key == "baseline") baseline = value;
    else throw ParamError("config: unknown key '" + key + "'");
  }

  void load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open config file");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream ss(line);
      std::string key, value;
      if (!(ss >> key)) continue;
      if (key[0] == '#') continue;
      if (!(ss >> value))
        throw ParseError(path + ":" + std::to_string(line_no) + ": missing value");
      apply_config_entry(key, value);
    }
  }

  void register_options(CLI::App* app, bool with_eval, bool with_baseline) {
    app->add_option("--r", config.r, "candidate neighbors per descriptor")
        ->capture_default_str();
    app->add_option("--k", config.k, "spatial neighbors in the correspondence graph")
        ->capture_default_str();
    app->add_option("--nu", config.nu, "one-class SVM nu")->capture_default_str();
    app->add_option("--co", config.co, "one-class SVM Co")->capture_default_str();
    app->add_option("--sigma", sigma_text, "kernel bandwidth: auto or a value")
        ->capture_default_str();
    app->add_option("--geodesic", geodesic_text, "geodesic mode: exact or capped")
        ->capture_default_str();
    app->add_option("--max-updates", config.max_updates,
                    "settled vertices per Dijkstra source in capped mode")
        ->capture_default_str();
    app->add_option("--formulation", formulation_text,
                    "one-class SVM dual: scholkopf or paper-eq8")
        ->capture_default_str();
    app->add_option("--distance", distance_text,
                    "correspondence distance: geodesic or reprojection")
        ->capture_default_str();
    app->add_option("--descriptors", descriptors_text,
                    "comma-separated subset of descriptors to use");
    if (with_eval) {
      app->add_option("--criterion", criterion_text, "correctness rule: pixel or overlap")
          ->capture_default_str();
      tolerance_option =
          app->add_option("--tolerance", tolerance_value,
                          "pixel tolerance (overrides the ground-truth file)");
      app->add_option("--overlap-threshold", config.overlap_threshold,
                      "overlap-error threshold")
          ->capture_default_str();
      app->add_option("--overlap-samples", config.overlap_samples,
                      "stratified samples for ellipse areas")
          ->capture_default_str();
    }
    if (with_baseline)
      app->add_option("--baseline", baseline, "evaluate a baseline: cat, ranking, ratio or sm");
  }

  void finalize() {
    if (sigma_text == "auto") {
      config.sigma.reset();
    } else {
      char* end = nullptr;
      double v = std::strtod(sigma_text.c_str(), &end);
      if (end != sigma_text.c_str() + sigma_text.size() || sigma_text.empty())
        throw ParamError("--sigma must be 'auto' or a number");
      config.sigma = v;
    }
    if (geodesic_text == "exact") config.geodesic_mode = GeodesicMode::exact;
    else if (geodesic_text == "capped") config.geodesic_mode = GeodesicMode::capped;
    else throw ParamError("--geodesic must be exact or capped");
    if (formulation_text == "scholkopf") config.formulation = OcsvmFormulation::scholkopf;
    else if (formulation_text == "paper-eq8") config.formulation = OcsvmFormulation::paper_eq8;
    else throw ParamError("--formulation must be scholkopf or paper-eq8");
    if (distance_text == "geodesic") config.distance = DistanceMode::geodesic;
    else if (distance_text == "reprojection") config.distance = DistanceMode::reprojection;
    else throw ParamError("--distance must be geodesic or reprojection");
    if (criterion_text == "pixel") config.criterion = Criterion::pixel;
    else if (criterion_text == "overlap") config.criterion = Criterion::overlap;
    else throw ParamError("--criterion must be pixel or overlap");
    if (tolerance_option && tolerance_option->count() > 0)
      config.tolerance = tolerance_value;
    config.descriptors.clear();
    if (!descriptors_text.empty()) {
      std::size_t pos = 0;
      while (pos < descriptors_text.size()) {
        std::size_t comma = descriptors_text.find(',', pos);
        if (comma == std::string::npos) comma = descriptors_text.size();
        std::string name = descriptors_text.substr(pos, comma - pos);
        if (!name.empty()) config.descriptors.push_back(name);
        pos = comma + 1;
      }
      if (config.descriptors.empty()) throw ParamError("--descriptors lists no names");
    }
    if (!baseline.empty() && baseline != "cat" && baseline != "ranking" &&
        baseline != "ratio" && baseline != "sm")
      throw ParamError("--baseline must be cat, ranking, ratio or sm");
  }
};

inline std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::string part = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (part.empty()) continue;
    auto dots = part.find("..");
    try {
      if (dots == std::string::npos) {
        seeds.push_back(std::stoull(part));
      } else {
        std::uint64_t lo = std::stoull(part.substr(0, dots));
        std::uint64_t hi = std::stoull(part.substr(dots + 2));
        if (hi < lo) throw ParamError("--seeds range '" + part + "' is descending");
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::invalid_argument&) {
      throw ParamError("--seeds: cannot parse '" + part + "'");
    } catch (const std::out_of_range&) {
      throw ParamError("--seeds: value out of range in '" + part + "'");
    }
  }
  if (seeds.empty()) throw ParamError("--seeds lists no seeds");
  return seeds;
}

/// Arms file: one `arm <name> <flags...>` per line; flags are the same ones
/// match/eval accept, including --baseline.
inline std::vector<SweepArm> parse_arms_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open arms file");
  std::vector<SweepArm> arms;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string head;
    if (!(ss >> head) || head[0] == '#') continue;
    if (head != "arm")
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'arm <name> <flags...>'");
    SweepArm arm;
    if (!(ss >> arm.name))
      throw ParseError(path + ":" + std::to_string(line_no) + ": arm needs a name");
    for (const auto& existing : arms)
      if (existing.name == arm.name)
        throw ParseError(path + ":" + std::to_string(line_no) + ": duplicate arm '" +
                         arm.name + "'");
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);

    CLI::App arm_app{"arm"};
    PipelineFlags flags;
    flags.register_options(&arm_app, true, true);
    std::reverse(tokens.begin(), tokens.end());  // CLI11 consumes reversed argv
    try {
      arm_app.parse(tokens);
    } catch (const CLI::ParseError& e) {
      throw ParamError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    flags.finalize();
    arm.config = flags.config;
    arm.baseline = flags.baseline;
    arms.push_back(std::move(arm));
  }
  if (arms.empty()) throw ParseError(path + ": no arms defined");
  return arms;
}

inline std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline void write_pr_csv(const std::string& path, const PrResult& pr) {
  auto out = io_detail::open_output(path);
  out << "recall,precision\n";
  for (const auto& pt : pr.curve)
    out << fmt_full(pt.recall) << ',' << fmt_full(pt.precision) << '\n';
}

inline void print_eval_summary(std::ostream& os, const Evaluation& eval) {
  os << "entries " << eval.entries.size() << "\n";
  os << "total_correct_possible " << eval.total_possible << "\n";
  os << "tp " << eval.pr.tp << " fp " << eval.pr.fp << " fn " << eval.pr.fn << "\n";
  if (!eval.pr.curve.empty()) {
    os << "precision_at_full " << fmt4(eval.pr.curve.back().precision) << "\n";
    os << "recall_at_full " << fmt4(eval.pr.curve.back().recall) << "\n";
  }
  os << "ap " << fmt_full(eval.pr.ap) << "\n";
}

}  // namespace detail

/// Entry point; args exclude the program name. Exit codes: 0 success,
/// 1 usage error, 2 data error, 3 convergence error.
inline int run(const std::vector<std::string>& args) {
  CLI::App app{"descriptor fusion in the homography space"};
  app.require_subcommand(1);

  // --config prescan: values become the defaults the flags override
  std::string config_path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") config_path = args[i + 1];

  // synth ---------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic scene");
  std::string synth_spec_path, synth_prefix;
  synth_cmd->add_option("--spec", synth_spec_path, "scene spec file")->required();
  synth_cmd->add_option("--out-prefix", synth_prefix, "output path prefix")->required();
  synth_cmd->callback([&] {
    SceneSpec spec = parse_scene_spec(synth_spec_path);
    Scene scene = generate_scene(spec);
    save_feature_set(synth_prefix + "_p.feat", scene.features_p);
    save_feature_set(synth_prefix + "_q.feat", scene.features_q);
    save_ground_truth(synth_prefix + "_gt.txt", scene.ground_truth);
    std::cout << "features_p " << scene.features_p.count() << "\n"
              << "features_q " << scene.features_q.count() << "\n"
              << "objects " << scene.ground_truth.object_transforms.size() << "\n";
  });

  // match ---------------------------------------------------------------
  auto* match_cmd = app.add_subcommand("match", "run the matching pipeline");
  detail::PipelineFlags match_flags;
  if (!config_path.empty()) match_flags.load_config_file(config_path);
  std::string match_p, match_q, match_out, match_config_opt;
  match_cmd->add_option("features_p", match_p, "image P feature file")->required();
  match_cmd->add_option("features_q", match_q, "image Q feature file")->required();
  match_cmd->add_option("--out", match_out, "match report output path")->required();
  match_cmd->add_option("--config", match_config_opt, "config file (key value lines)");
  match_flags.register_options(match_cmd, false, false);
  match_cmd->callback([&] {
    match_flags.finalize();
    FeatureSet p = load_feature_set(match_p);
    FeatureSet q = load_feature_set(match_q);
    MatchOutcome outcome = run_match_pipeline(p, q, match_flags.config);
    // entry indices refer to frames, which restrict_descriptors leaves intact
    std::vector<ReportEntry> entries;
    for (const auto& pair : outcome.entries)
      entries.push_back({p.frames[pair.p_index].id, q.frames[pair.q_index].id,
                         pair.score, pair.tag, Correctness::unknown});
    save_match_report(match_out, entries, outcome.report_header);
    std::cout << "candidates " << outcome.candidates.size() << "\n"
              << "selected " << outcome.selected.size() << "\n"
              << "report " << match_out << "\n";
  });

  // eval ----------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand(
      "eval", "precision/recall against ground truth (pipeline, report or baseline)");
  detail::PipelineFlags eval_flags;
  if (!config_path.empty()) eval_flags.load_config_file(config_path);
  std::string eval_p, eval_q, eval_gt, eval_report, eval_out, eval_pr_out, eval_config_opt;
  eval_cmd->add_option("features_p", eval_p, "image P feature file")->required();
  eval_cmd->add_option("features_q", eval_q, "image Q feature file")->required();
  eval_cmd->add_option("--gt", eval_gt, "ground-truth file")->required();
  eval_cmd->add_option("--report", eval_report, "evaluate an existing match report");
  eval_cmd->add_option("--out", eval_out, "write the labeled report here");
  eval_cmd->add_option("--pr-out", eval_pr_out, "write the precision-recall curve CSV here");
  eval_cmd->add_option("--config", eval_config_opt, "config file (key value lines)");
  eval_flags.register_options(eval_cmd, true, true);
  eval_cmd->callback([&] {
    eval_flags.finalize();
    if (!eval_report.empty() && !eval_flags.baseline.empty())
      throw ParamError("--report and --baseline are mutually exclusive");
    FeatureSet p = load_feature_set(eval_p);
    FeatureSet q = load_feature_set(eval_q);
    SceneGroundTruth gt = load_ground_truth(eval_gt);

    std::vector<ScoredPair> pairs;
    std::vector<std::string> header = eval_flags.config.header_lines();
    if (!eval_report.empty()) {
      pairs = to_scored_pairs(load_match_report(eval_report), p, q);
      header = {"evaluated report"};  // no path: keeps equal inputs byte-equal
    } else if (!eval_flags.baseline.empty()) {
      pairs = run_baseline(eval_flags.baseline, p, q, eval_flags.config);
      header = {"baseline " + eval_flags.baseline};
    } else {
      MatchOutcome outcome = run_match_pipeline(p, q, eval_flags.config);
      pairs = std::move(outcome.entries);
      header = outcome.report_header;
    }
    Evaluation eval = evaluate_pairs(pairs, p, q, gt, eval_flags.config);
    for (auto& line : eval_flags.config.eval_header_lines()) header.push_back(line);
    header.push_back("total_correct_possible " + std::to_string(eval.total_possible));
    header.push_back("ap " + fmt_full(eval.pr.ap));
    if (!eval_out.empty()) save_match_report(eval_out, eval.entries, header);
    if (!eval_pr_out.empty()) detail::write_pr_csv(eval_pr_out, eval.pr);
    detail::print_eval_summary(std::cout, eval);
  });

  // embed ---------------------------------------------------------------
  auto* embed_cmd = app.add_subcommand("embed", "emit the 2-D MDS embedding CSV");
  detail::PipelineFlags embed_flags;
  if (!config_path.empty()) embed_flags.load_config_file(config_path);
  std::string embed_p, embed_q, embed_gt, embed_out, embed_config_opt;
  embed_cmd->add_option("features_p", embed_p, "image P feature file")->required();
  embed_cmd->add_option("features_q", embed_q, "image Q feature file")->required();
  embed_cmd->add_option("--out", embed_out, "output CSV path")->required();
  embed_cmd->add_option("--gt", embed_gt, "optional ground truth for the correct column");
  embed_cmd->add_option("--config", embed_config_opt, "config file (key value lines)");
  embed_flags.register_options(embed_cmd, true, false);
  embed_cmd->callback([&] {
    embed_flags.finalize();
    const PipelineConfig& cfg = embed_flags.config;
    FeatureSet p = load_feature_set(embed_p);
    FeatureSet q = load_feature_set(embed_q);
    if (!cfg.descriptors.empty()) {
      p = restrict_descriptors(p, cfg.descriptors);
      q = restrict_descriptors(q, cfg.descriptors);
    }
    CandidateSet cands = build_candidates(p, q, cfg.r);
    if (cands.flat.empty()) throw DataError("no candidates");
    SquareMatrix d;
    if (cfg.distance == DistanceMode::geodesic) {
      CorrespondenceGraph graph = build_graph(cands, cfg.k);
      d = geodesic_all_pairs(graph, cfg.geodesic_mode, cfg.max_updates);
    } else {
      d = reprojection_all_pairs(cands.flat);
    }
    MdsEmbedding embedding = mds_embed(d);

    SceneGroundTruth gt;
    bool have_gt = !embed_gt.empty();
    if (have_gt) {
      gt = load_ground_truth(embed_gt);
      if (cfg.tolerance) gt.pixel_tolerance = *cfg.tolerance;
    }
    auto out = io_detail::open_output(embed_out);
    out << "corr_id,x,y,source_tags,correct\n";
    for (int i = 0; i < cands.size(); ++i) {
      const Correspondence& c = cands.flat[i];
      std::string tags;
      for (const auto& [name, dist] : c.sources) {
        if (!tags.empty()) tags += ';';
        tags += name;
      }
      int correct = -1;
      if (have_gt)
        correct = label_correct(p, q, c.p_index, c.q_index, gt, cfg.criterion,
                                cfg.overlap_threshold, cfg.overlap_samples)
                      ? 1
                      : 0;
      out << i << ',' << fmt_full(embedding.coords[i][0]) << ','
          << fmt_full(embedding.coords[i][1]) << ',' << tags << ',' << correct << '\n';
    }
    std::cout << "embedded " << cands.size() << " correspondences\n";
  });

  // sweep ---------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "multi-seed experiment runner");
  std::string sweep_template, sweep_seeds, sweep_arms_path, sweep_prefix;
  sweep_cmd->add_option("--spec-template", sweep_template, "scene spec template")->required();
  sweep_cmd->add_option("--seeds", sweep_seeds, "seed list, e.g. 1,2,5..20")->required();
  sweep_cmd->add_option("--arms", sweep_arms_path, "arms file (arm <name> <flags...>)")
      ->required();
  sweep_cmd->add_option("--out-prefix", sweep_prefix, "output path prefix")->required();
  sweep_cmd->callback([&] {
    SceneSpec spec = parse_scene_spec(sweep_template);
    auto seeds = detail::parse_seeds(sweep_seeds);
    auto arms = detail::parse_arms_file(sweep_arms_path);
    SweepResult result = run_sweep(spec, seeds, arms);

    auto runs = io_detail::open_output(sweep_prefix + "_runs.csv");
    runs << "arm,seed,map,precision_at_full,runtime_ms\n";
    for (const auto& r : result.runs) {
      runs << r.arm << ',' << r.seed << ',';
      if (r.failed)
        runs << "nan,nan";
      else
        runs << fmt_full(r.map) << ',' << fmt_full(r.precision_at_full);
      char ms[32];
      std::snprintf(ms, sizeof ms, "%.1f", r.runtime_ms);
      runs << ',' << ms << '\n';
    }

    std::ostringstream table;
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %5s %9s %10s %11s\n", "arm", "runs",
                  "failures", "mean_map", "stddev_map");
    table << line;
    for (const auto& s : result.summary) {
      std::snprintf(line, sizeof line, "%-16s %5d %9d %10.4f %11.4f\n", s.arm.c_str(),
                    s.runs, s.failures, s.mean_map, s.stddev_map);
      table << line;
    }
    auto summary = io_detail::open_output(sweep_prefix + "_summary.txt");
    summary << table.str();
    std::cout << table.str();
    for (const auto& r : result.runs)
      if (r.failed)
        std::cerr << "arm " << r.arm << " seed " << r.seed << " failed: " << r.error
                  << "\n";
  });

  std::vector<std::string> argv = args;
  std::reverse(argv.begin(), argv.end());  // CLI11 consumes reversed argv
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace defuse::cli
