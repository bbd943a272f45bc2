// End-to-end orchestration: candidates -> graph -> geodesic distances ->
// kernel -> one-class SVM -> per-feature selection -> report entries, plus
// ground-truth evaluation and the multi-seed sweep runner.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "defuse/baselines.hpp"
#include "defuse/candidates.hpp"
#include "defuse/evaluation.hpp"
#include "defuse/feature_io.hpp"
#include "defuse/geodesic.hpp"
#include "defuse/ocsvm.hpp"
#include "defuse/synth.hpp"

namespace defuse {

enum class DistanceMode { geodesic, reprojection };
enum class Criterion { pixel, overlap };

struct PipelineConfig {
  int r = 5;
  int k = 8;
  double nu = 0.5;
  double co = 1.0;
  std::optional<double> sigma;  // empty = the heuristic ("auto")
  GeodesicMode geodesic_mode = GeodesicMode::capped;
  int max_updates = 200;
  OcsvmFormulation formulation = OcsvmFormulation::scholkopf;
  DistanceMode distance = DistanceMode::geodesic;
  Criterion criterion = Criterion::pixel;
  std::optional<double> tolerance;  // overrides the ground-truth file's value
  double overlap_threshold = 0.5;
  int overlap_samples = 20000;
  std::vector<std::string> descriptors;  // empty = use all

  std::vector<std::string> header_lines() const {
    std::vector<std::string> h;
    h.push_back("config r " + std::to_string(r));
    h.push_back("config k " + std::to_string(k));
    h.push_back("config nu " + fmt_full(nu));
    h.push_back("config co " + fmt_full(co));
    h.push_back("config sigma " + (sigma ? fmt_full(*sigma) : std::string("auto")));
    h.push_back(std::string("config geodesic ") +
                (geodesic_mode == GeodesicMode::exact ? "exact" : "capped"));
    h.push_back("config max-updates " + std::to_string(max_updates));
    h.push_back("config formulation " + to_string(formulation));
    h.push_back(std::string("config distance ") +
                (distance == DistanceMode::geodesic ? "geodesic" : "reprojection"));
    std::string names = "all";
    if (!descriptors.empty()) {
      names.clear();
      for (const auto& d : descriptors) {
        if (!names.empty()) names += ',';
        names += d;
      }
    }
    h.push_back("config descriptors " + names);
    return h;
  }

  std::vector<std::string> eval_header_lines() const {
    std::vector<std::string> h;
    h.push_back(std::string("config criterion ") +
                (criterion == Criterion::pixel ? "pixel" : "overlap"));
    h.push_back("config tolerance " +
                (tolerance ? fmt_full(*tolerance) : std::string("from-ground-truth")));
    if (criterion == Criterion::overlap) {
      h.push_back("config overlap-threshold " + fmt_full(overlap_threshold));
      h.push_back("config overlap-samples " + std::to_string(overlap_samples));
    }
    return h;
  }
};

struct MatchOutcome {
  CandidateSet candidates;
  SquareMatrix distances;  // geodesic or raw reprojection, per config
  double sigma = 0.0;
  OcsvmSolution solution;
  std::vector<int> selected;  // indices into candidates.flat, by ascending p id
  std::vector<ScoredPair> entries;  // selected, sorted by descending score
  std::vector<std::string> report_header;
};

/// Runs the full matching pipeline on in-memory feature sets.
inline MatchOutcome run_match_pipeline(const FeatureSet& features_p,
                                       const FeatureSet& features_q,
                                       const PipelineConfig& config) {
  const FeatureSet* p = &features_p;
  const FeatureSet* q = &features_q;
  FeatureSet p_subset, q_subset;
  if (!config.descriptors.empty()) {
    p_subset = restrict_descriptors(features_p, config.descriptors);
    q_subset = restrict_descriptors(features_q, config.descriptors);
    p = &p_subset;
    q = &q_subset;
  }

  MatchOutcome out;
  out.candidates = build_candidates(*p, *q, config.r);
  if (out.candidates.flat.empty()) throw DataError("no candidates");

  if (config.distance == DistanceMode::geodesic) {
    CorrespondenceGraph graph = build_graph(out.candidates, config.k);
    out.distances = geodesic_all_pairs(graph, config.geodesic_mode, config.max_updates);
  } else {
    out.distances = reprojection_all_pairs(out.candidates.flat);
  }

  if (config.sigma) {
    if (!(*config.sigma > 0.0)) throw ParamError("sigma must be > 0");
    out.sigma = *config.sigma;
  } else {
    out.sigma = resolve_sigma(out.distances);
  }
  KernelMatrix kernel = build_kernel(out.distances, out.sigma);
  out.solution = solve_ocsvm(kernel, config.formulation, config.co, config.nu);

  out.selected = select_per_feature(out.candidates, out.solution.scores);
  for (int idx : out.selected) {
    const Correspondence& c = out.candidates.flat[idx];
    out.entries.push_back({c.p_index, c.q_index, out.solution.scores[idx], c.source_tag()});
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [&](const ScoredPair& a, const ScoredPair& b) {
              if (a.score != b.score) return a.score > b.score;
              int pa = p->frames[a.p_index].id, pb = p->frames[b.p_index].id;
              if (pa != pb) return pa < pb;
              return q->frames[a.q_index].id < q->frames[b.q_index].id;
            });

  // per-source stats for the report header (multi-source candidates count
  // toward each of their tags)
  std::map<std::string, int> cand_counts, sel_counts;
  for (const auto& c : out.candidates.flat)
    for (const auto& [name, dist] : c.sources) ++cand_counts[name];
  for (int idx : out.selected)
    for (const auto& [name, dist] : out.candidates.flat[idx].sources) ++sel_counts[name];

  out.report_header = config.header_lines();
  out.report_header.push_back("sigma " + fmt_full(out.sigma));
  out.report_header.push_back("candidates total " + std::to_string(out.candidates.size()));
  for (const auto& [name, count] : cand_counts)
    out.report_header.push_back("candidates source " + name + " " + std::to_string(count));
  out.report_header.push_back("selected total " + std::to_string(out.selected.size()));
  for (const auto& [name, count] : sel_counts) {
    char frac[32];
    std::snprintf(frac, sizeof frac, "%.4f",
                  out.selected.empty() ? 0.0
                                       : static_cast<double>(count) / out.selected.size());
    out.report_header.push_back("selected source " + name + " " +
                                std::to_string(count) + " " + frac);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ground-truth evaluation

inline bool label_correct(const FeatureSet& p, const FeatureSet& q, int p_index,
                          int q_index, const SceneGroundTruth& gt, Criterion criterion,
                          double overlap_threshold = 0.5, int overlap_samples = 20000) {
  Correspondence c;
  c.p_index = p_index;
  c.q_index = q_index;
  c.p_id = p.frames[p_index].id;
  c.q_id = q.frames[q_index].id;
  c.p_center = p.frames[p_index].center;
  c.q_center = q.frames[q_index].center;
  if (criterion == Criterion::pixel) return label_correct_pixel(c, gt);
  return label_correct_overlap(c, gt, p, q, overlap_threshold, overlap_samples);
}

/// Criterion-aware count of p-features that admit any correct match.
inline int total_correct_possible(const FeatureSet& p, const FeatureSet& q,
                                  const SceneGroundTruth& gt, Criterion criterion,
                                  double overlap_threshold = 0.5,
                                  int overlap_samples = 20000) {
  if (criterion == Criterion::pixel) return total_correct_possible(p, q, gt);
  int total = 0;
  for (int i = 0; i < p.count(); ++i) {
    if (gt.object_of(p.frames[i].id) == kBackgroundObject) continue;
    for (int j = 0; j < q.count(); ++j) {
      if (label_correct(p, q, i, j, gt, criterion, overlap_threshold, overlap_samples)) {
        ++total;
        break;
      }
    }
  }
  return total;
}

struct Evaluation {
  std::vector<ReportEntry> entries;  // labeled, same order as the input pairs
  PrResult pr;
  int total_possible = 0;
};

/// Labels score-sorted pairs against the ground truth and computes the
/// precision-recall curve and AP.
inline Evaluation evaluate_pairs(const std::vector<ScoredPair>& pairs,
                                 const FeatureSet& p, const FeatureSet& q,
                                 const SceneGroundTruth& gt,
                                 const PipelineConfig& config) {
  SceneGroundTruth effective = gt;
  if (config.tolerance) effective.pixel_tolerance = *config.tolerance;

  Evaluation eval;
  std::vector<int> labels(pairs.size(), 0);
  parallel_for(static_cast<int>(pairs.size()), [&](int i) {
    labels[i] = label_correct(p, q, pairs[i].p_index, pairs[i].q_index, effective,
                              config.criterion, config.overlap_threshold,
                              config.overlap_samples)
                    ? 1
                    : 0;
  });
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ReportEntry e;
    e.p_id = p.frames[pairs[i].p_index].id;
    e.q_id = q.frames[pairs[i].q_index].id;
    e.score = pairs[i].score;
    e.tag = pairs[i].tag;
    e.correct = labels[i] ? Correctness::yes : Correctness::no;
    eval.entries.push_back(std::move(e));
  }
  eval.total_possible =
      total_correct_possible(p, q, effective, config.criterion,
                             config.overlap_threshold, config.overlap_samples);
  // a matchable p-feature is credited once: further correct entries for the
  // same feature count as false positives, so recall stays within [0,1] for
  // methods that rank more than one candidate per feature
  std::vector<int> pr_labels(labels.size(), 0);
  std::set<int> credited;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (labels[i] && credited.insert(p.frames[pairs[i].p_index].id).second)
      pr_labels[i] = 1;
  eval.pr = precision_recall(pr_labels, eval.total_possible);
  return eval;
}

/// Maps report entries (feature ids) back to indices in the feature sets.
inline std::vector<ScoredPair> to_scored_pairs(const std::vector<ReportEntry>& entries,
                                               const FeatureSet& p, const FeatureSet& q) {
  auto p_index = p.id_index_map();
  auto q_index = q.id_index_map();
  std::vector<ScoredPair> pairs;
  pairs.reserve(entries.size());
  for (const auto& e : entries) {
    auto pi = p_index.find(e.p_id);
    auto qi = q_index.find(e.q_id);
    if (pi == p_index.end())
      throw DataError("report references p feature id " + std::to_string(e.p_id) +
                      " which is not in the feature file");
    if (qi == q_index.end())
      throw DataError("report references q feature id " + std::to_string(e.q_id) +
                      " which is not in the feature file");
    pairs.push_back({pi->second, qi->second, e.score, e.tag});
  }
  return pairs;
}

/// Dispatches one of the fusion/verification baselines by name.
inline std::vector<ScoredPair> run_baseline(const std::string& name,
                                            const FeatureSet& p, const FeatureSet& q,
                                            const PipelineConfig& config) {
  const FeatureSet* pp = &p;
  const FeatureSet* qq = &q;
  FeatureSet p_subset, q_subset;
  if (!config.descriptors.empty()) {
    p_subset = restrict_descriptors(p, config.descriptors);
    q_subset = restrict_descriptors(q, config.descriptors);
    pp = &p_subset;
    qq = &q_subset;
  }
  if (name == "cat") return baseline_cat(*pp, *qq).entries;
  if (name == "ranking") return baseline_ranking(*pp, *qq).entries;
  if (name == "ratio") return baseline_ratio(*pp, *qq).entries;
  if (name == "sm") {
    CandidateSet cands = build_candidates(*pp, *qq, config.r);
    if (cands.flat.empty()) throw DataError("no candidates");
    return baseline_sm(cands, *pp, *qq).entries;
  }
  throw ParamError("unknown baseline '" + name + "'");
}

// ---------------------------------------------------------------------------
// Sweep runner

struct SweepArm {
  std::string name;
  PipelineConfig config;
  std::string baseline;  // empty = full pipeline
};

struct SweepRun {
  std::string arm;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double map = 0.0;
  double precision_at_full = 0.0;
  double runtime_ms = 0.0;
};

struct SweepArmSummary {
  std::string arm;
  int runs = 0;
  int failures = 0;
  double mean_map = 0.0;
  double stddev_map = 0.0;
};

struct SweepResult {
  std::vector<SweepRun> runs;
  std::vector<SweepArmSummary> summary;
};

/// Per-seed scene generation + per-arm pipeline/baseline evaluation. Arm
/// failures are recorded and the sweep continues.
inline SweepResult run_sweep(const SceneSpec& template_spec,
                             const std::vector<std::uint64_t>& seeds,
                             const std::vector<SweepArm>& arms) {
  if (seeds.empty()) throw ParamError("sweep needs at least one seed");
  if (arms.empty()) throw ParamError("sweep needs at least one arm");
  SweepResult result;
  for (std::uint64_t seed : seeds) {
    SceneSpec spec = template_spec;
    spec.seed = seed;
    Scene scene = generate_scene(spec);
    for (const auto& arm : arms) {
      SweepRun run;
      run.arm = arm.name;
      run.seed = seed;
      auto start = std::chrono::steady_clock::now();
      try {
        std::vector<ScoredPair> entries;
        if (arm.baseline.empty())
          entries = run_match_pipeline(scene.features_p, scene.features_q, arm.config)
                        .entries;
        else
          entries = run_baseline(arm.baseline, scene.features_p, scene.features_q,
                                 arm.config);
        Evaluation eval = evaluate_pairs(entries, scene.features_p, scene.features_q,
                                         scene.ground_truth, arm.config);
        run.map = eval.pr.ap;
        run.precision_at_full =
            eval.pr.curve.empty() ? 0.0 : eval.pr.curve.back().precision;
      } catch (const Error& e) {
        run.failed = true;
        run.error = e.what();
      }
      run.runtime_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
      result.runs.push_back(std::move(run));
    }
  }

  for (const auto& arm : arms) {
    SweepArmSummary s;
    s.arm = arm.name;
    std::vector<double> maps;
    for (const auto& run : result.runs) {
      if (run.arm != arm.name) continue;
      ++s.runs;
      if (run.failed)
        ++s.failures;
      else
        maps.push_back(run.map);
    }
    if (!maps.empty()) {
      double mean = 0.0;
      for (double m : maps) mean += m;
      mean /= static_cast<double>(maps.size());
      double var = 0.0;
      for (double m : maps) var += (m - mean) * (m - mean);
      s.mean_map = mean;
      s.stddev_map = maps.size() > 1 ? std::sqrt(var / (maps.size() - 1)) : 0.0;
    }
    result.summary.push_back(std::move(s));
  }
  return result;
}

}  // namespace defuse
