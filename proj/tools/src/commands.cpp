#include "nohnms/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "nohnms/cli/parallel.hpp"
#include "nohnms/errors.hpp"

namespace nohnms::cli {

namespace {

constexpr std::size_t kChunkRecords = 256;

std::unordered_map<std::string, std::size_t> index_scenes(const std::vector<GroundTruthScene>& scenes) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (!index.emplace(scenes[i].image_id, i).second) {
      throw ContractError("duplicate image_id in scene file: " + scenes[i].image_id);
    }
  }
  return index;
}

std::string fixed4(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

}  // namespace

// ---- synth -----------------------------------------------------------------

SyntheticDataset synthesize(const GeneratorConfig& generator, const OracleConfig& oracle, unsigned threads) {
  generator.validate();
  oracle.validate();
  SyntheticDataset data;
  data.scenes.resize(generator.scenes);
  data.detections.resize(generator.scenes);
  parallel_for(generator.scenes, threads, [&](std::size_t i) {
    GroundTruthScene scene = generate_scene(generator, i);
    const auto proposals = generate_proposals(scene, generator, i);
    data.detections[i] = DetectionRecord{scene.image_id, annotate_oracle(proposals, scene, oracle, generator.seed, i)};
    data.scenes[i] = std::move(scene);
  });
  return data;
}

std::size_t verify_means(const std::vector<GroundTruthScene>& scenes,
                         const std::vector<DetectionRecord>& detections, double tolerance) {
  const auto index = index_scenes(scenes);
  std::size_t checked = 0;
  for (const DetectionRecord& record : detections) {
    const auto it = index.find(record.image_id);
    if (it == index.end()) throw ContractError("verify: unknown image_id " + record.image_id);
    const auto& gt = scenes[it->second].gt_boxes;
    for (const Detection& d : record.detections) {
      if (!d.noh_mean) continue;
      const auto decoded = decode_relative(*d.noh_mean, d.box).as_array();
      const bool hit = std::any_of(gt.begin(), gt.end(), [&](const BBox& g) {
        const auto target = g.as_array();
        for (std::size_t k = 0; k < 4; ++k) {
          if (std::abs(decoded[k] - target[k]) > tolerance) return false;
        }
        return true;
      });
      if (!hit) {
        throw ContractError("verify: a hallucinated mean in " + record.image_id +
                            " does not decode to any GT box");
      }
      ++checked;
    }
  }
  return checked;
}

void cmd_synth(const SynthOptions& options, std::ostream& log) {
  if (options.verify && !options.oracle.perfect) {
    throw ContractError("--verify needs --perfect: noisy means do not decode onto GT boxes");
  }
  const SyntheticDataset data = synthesize(options.generator, options.oracle, options.threads);

  LineWriter scenes(options.scenes_out);
  for (const auto& s : data.scenes) scenes.write(format_scene_line(s));
  scenes.close();
  LineWriter dets(options.detections_out);
  for (const auto& r : data.detections) dets.write(format_detection_line(r));
  dets.close();

  if (options.verify) {
    const std::size_t checked =
        verify_means(read_scene_file(options.scenes_out), read_detection_file(options.detections_out));
    log << "verify: " << checked << " hallucination means decode onto GT boxes\n";
  }
}

// ---- suppress --------------------------------------------------------------

DetectionRecord suppress_record(const DetectionRecord& record, const SuppressionConfig& config) {
  DetectionRecord out{record.image_id, {}};
  try {
    const SuppressionResult result = suppress(record.detections, config);
    out.detections.reserve(result.kept.size());
    for (const KeptDetection& k : result.kept) {
      Detection d = record.detections.at(k.source_index);
      d.score = k.score;
      d.source_index = out.detections.size();
      out.detections.push_back(std::move(d));
    }
  } catch (const ContractError& e) {
    throw ContractError("image " + record.image_id + ": " + e.what());
  }
  return out;
}

std::vector<DetectionRecord> suppress_records(const std::vector<DetectionRecord>& records,
                                              const SuppressionConfig& config, unsigned threads) {
  config.validate();
  std::vector<DetectionRecord> out(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) { out[i] = suppress_record(records[i], config); });
  return out;
}

void cmd_suppress(const SuppressOptions& options) {
  options.config.validate();
  LineReader reader(options.input);
  LineWriter writer(options.output);
  std::vector<DetectionRecord> chunk;
  std::string line;
  bool more = true;
  while (more) {
    chunk.clear();
    while (chunk.size() < kChunkRecords && (more = reader.next(line))) {
      chunk.push_back(parse_detection_line(line, reader.line_number()));
    }
    for (const auto& r : suppress_records(chunk, options.config, options.threads)) {
      writer.write(format_detection_line(r));
    }
  }
  writer.close();
}

// ---- eval ------------------------------------------------------------------

MetricReport evaluate_records(const std::vector<GroundTruthScene>& scenes,
                              const std::vector<DetectionRecord>& detections, const EvalOptions& eval,
                              unsigned threads) {
  if (!(eval.iou_threshold > 0.0 && eval.iou_threshold <= 1.0)) {
    throw ContractError("evaluation IoU threshold must lie in (0, 1]");
  }
  if (eval.k && *eval.k == 0) throw ContractError("k must be positive");
  const auto index = index_scenes(scenes);
  std::vector<const DetectionRecord*> by_scene(scenes.size(), nullptr);
  for (const DetectionRecord& record : detections) {
    const auto it = index.find(record.image_id);
    if (it == index.end()) throw ContractError("detections reference unknown image_id " + record.image_id);
    if (by_scene[it->second]) throw ContractError("duplicate detection record for image_id " + record.image_id);
    by_scene[it->second] = &record;
  }

  std::vector<ImageTally> tallies(scenes.size());
  parallel_for(scenes.size(), threads, [&](std::size_t i) {
    EvalImage image{{}, scenes[i].gt_boxes, scenes[i].ignore_boxes};
    if (by_scene[i]) {
      image.detections.reserve(by_scene[i]->detections.size());
      for (const Detection& d : by_scene[i]->detections) image.detections.push_back({d.box, d.score});
    }
    tallies[i] = tally_image(image, eval);
  });
  return summarize(tallies, eval.k);
}

std::string render_report(const MetricReport& report, const EvalOptions& eval) {
  const std::string k = report.k ? std::to_string(*report.k) : std::string("all");
  std::ostringstream out;
  out << "images      " << report.counts.images << '\n'
      << "gt          " << report.counts.gt << '\n'
      << "detections  " << report.counts.detections << '\n'
      << "tp          " << report.counts.tp << '\n'
      << "fp          " << report.counts.fp << '\n'
      << "ignored     " << report.counts.ignored << '\n'
      << "AP          " << fixed4(report.ap) << '\n'
      << "Recall@" << k << std::string(k.size() < 5 ? 5 - k.size() : 1, ' ') << fixed4(report.recall) << '\n'
      << "MR-2        " << fixed4(report.mr2) << '\n';
  if (report.no_ground_truth) {
    out << "warning     no ground truth: AP, Recall and MR-2 are sentinel values\n";
  }
  out << "# conventions\n"
      << "#   match: greedy by score, IoU >= " << format_number(eval.iou_threshold)
      << ", ties to the lowest GT index\n"
      << "#   ignore: unmatched detection with IoF >= " << format_number(eval.iou_threshold)
      << " against an ignore region is dropped\n"
      << "#   k: top " << k << " detections per image before matching\n"
      << "#   AP: all-points interpolated precision over recall increments\n"
      << "#   MR-2: 9 FPPI points 10^[-2:0.25:0], miss rate 1 below the curve, floor 1e-10\n";
  return out.str();
}

void write_curve_csv(const MetricReport& report, const fs::path& path) {
  LineWriter writer(path);
  writer.write("rank,score,recall,precision,fppi,missrate");
  for (std::size_t i = 0; i < report.curve.points.size(); ++i) {
    const CurvePoint& p = report.curve.points[i];
    writer.write(std::to_string(i + 1) + ',' + format_number(p.score) + ',' + format_number(p.recall) + ',' +
                 format_number(p.precision) + ',' + format_number(p.fppi) + ',' + format_number(1.0 - p.recall));
  }
  writer.close();
}

MetricReport cmd_eval(const EvalCommandOptions& options, std::ostream& out) {
  const auto scenes = read_scene_file(options.scenes);
  const auto detections = read_detection_file(options.detections);
  MetricReport report = evaluate_records(scenes, detections, options.eval, options.threads);
  out << render_report(report, options.eval);
  if (options.curve_out) write_curve_csv(report, *options.curve_out);
  return report;
}

// ---- sweep -----------------------------------------------------------------

void SweepGrid::validate() const {
  if (methods.empty() || nms_thresholds.empty()) throw ContractError("sweep grids must not be empty");
  const bool noh = std::find(methods.begin(), methods.end(), Method::Noh) != methods.end();
  if (noh && (density_thresholds.empty() || noh_sigmas.empty())) {
    throw ContractError("sweeping noh needs non-empty d_t and sigma grids");
  }
}

std::vector<SweepRow> run_sweep(const std::vector<GroundTruthScene>& scenes,
                                const std::vector<DetectionRecord>& detections, const SweepGrid& grid,
                                const SuppressionConfig& base, const EvalOptions& eval, unsigned threads) {
  grid.validate();
  std::vector<SweepRow> rows;
  auto run = [&](Method method, double nt, std::optional<double> dt, std::optional<double> sigma) {
    SuppressionConfig cfg = base;
    cfg.method = method;
    cfg.nms_threshold = nt;
    if (dt) cfg.density_threshold = *dt;
    if (sigma) cfg.noh_sigma = *sigma;
    cfg.validate();
    const auto suppressed = suppress_records(detections, cfg, threads);
    rows.push_back({method, nt, dt, sigma, evaluate_records(scenes, suppressed, eval, threads)});
  };
  for (Method method : grid.methods) {
    for (double nt : grid.nms_thresholds) {
      if (method != Method::Noh) {
        run(method, nt, std::nullopt, std::nullopt);
        continue;
      }
      for (double dt : grid.density_thresholds) {
        for (double sigma : grid.noh_sigmas) run(method, nt, dt, sigma);
      }
    }
  }
  return rows;
}

std::string sweep_csv_header() { return "method,nt,dt,noh_sigma,ap,recall,mr2"; }

std::string sweep_csv_row(const SweepRow& row) {
  std::string out(to_string(row.method));
  out += ',' + format_number(row.nms_threshold);
  out += ',' + (row.density_threshold ? format_number(*row.density_threshold) : std::string());
  out += ',' + (row.noh_sigma ? format_number(*row.noh_sigma) : std::string());
  out += ',' + format_number(row.report.ap);
  out += ',' + format_number(row.report.recall);
  out += ',' + format_number(row.report.mr2);
  return out;
}

void cmd_sweep(const SweepOptions& options) {
  options.grid.validate();
  const auto scenes = read_scene_file(options.scenes);
  const auto detections = read_detection_file(options.detections);
  const auto rows = run_sweep(scenes, detections, options.grid, options.base, options.eval, options.threads);
  LineWriter writer(options.output);
  writer.write(sweep_csv_header());
  for (const auto& row : rows) writer.write(sweep_csv_row(row));
  writer.close();
}

// ---- field -----------------------------------------------------------------

std::vector<FieldCell> suppression_field(const FieldOptions& options) {
  if (options.resolution < 2) throw ContractError("field resolution must be at least 2");
  if (!(options.extent > 0.0) || !std::isfinite(options.extent)) throw ContractError("field extent must be positive");
  validate(options.mean);

  const BBox selected(0.0, 0.0, 1.0, 1.0);
  Detection best{selected, 1.0, options.density, options.mean, 0};
  std::vector<FieldCell> cells;
  cells.reserve(options.methods.size() * options.resolution * options.resolution);
  const double span = 2.0 * options.extent;
  const double steps = static_cast<double>(options.resolution - 1);

  for (Method method : options.methods) {
    SuppressionConfig cfg = options.base;
    cfg.method = method;
    cfg.validate();
    for (std::size_t j = 0; j < options.resolution; ++j) {
      const double dy = -options.extent + span * static_cast<double>(j) / steps;
      for (std::size_t i = 0; i < options.resolution; ++i) {
        const double dx = -options.extent + span * static_cast<double>(i) / steps;
        const BBox neighbor(dx * selected.w(), dy * selected.h(), selected.w(), selected.h());
        const double overlap = iou(selected, neighbor);
        const double multiplier =
            overlap < cfg.nms_threshold ? 1.0 : rescore_at(best, neighbor, 1.0, overlap, cfg);
        cells.push_back({method, dx, dy, multiplier});
      }
    }
  }
  return cells;
}

void cmd_field(const FieldOptions& options) {
  const auto cells = suppression_field(options);
  LineWriter writer(options.output);
  writer.write("method,dx,dy,multiplier");
  for (const FieldCell& c : cells) {
    writer.write(std::string(to_string(c.method)) + ',' + format_number(c.dx) + ',' + format_number(c.dy) + ',' +
                 format_number(c.multiplier));
  }
  writer.close();
}

}  // namespace nohnms::cli
