#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nohnms/crowd_oracle.hpp"
#include "nohnms/metrics.hpp"
#include "nohnms/records.hpp"
#include "nohnms/suppression.hpp"

namespace nohnms::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitContract = 2, kExitIo = 3 };

// ---- synth -----------------------------------------------------------------

struct SynthOptions {
  GeneratorConfig generator;
  OracleConfig oracle;
  fs::path scenes_out;
  fs::path detections_out;
  bool verify = false;
  unsigned threads = 1;
};

/// Scene and pre-NMS detection records for scenes [0, config.scenes).
struct SyntheticDataset {
  std::vector<GroundTruthScene> scenes;
  std::vector<DetectionRecord> detections;
};

SyntheticDataset synthesize(const GeneratorConfig& generator, const OracleConfig& oracle, unsigned threads = 1);

/// Checks that every decoded hallucination mean lands on a GT box of its
/// image within `tolerance` per coordinate. Returns the number of means
/// checked; throws ContractError naming the first image that fails.
std::size_t verify_means(const std::vector<GroundTruthScene>& scenes,
                         const std::vector<DetectionRecord>& detections, double tolerance = 1e-9);

void cmd_synth(const SynthOptions& options, std::ostream& log);

// ---- suppress --------------------------------------------------------------

struct SuppressOptions {
  SuppressionConfig config;
  fs::path input;
  fs::path output;
  unsigned threads = 1;
};

/// Kept detections of one record, re-scored and in output order. Errors are
/// rethrown as ContractError prefixed with the record's image_id.
DetectionRecord suppress_record(const DetectionRecord& record, const SuppressionConfig& config);

std::vector<DetectionRecord> suppress_records(const std::vector<DetectionRecord>& records,
                                              const SuppressionConfig& config, unsigned threads = 1);

void cmd_suppress(const SuppressOptions& options);

// ---- eval ------------------------------------------------------------------

struct EvalCommandOptions {
  fs::path detections;
  fs::path scenes;
  EvalOptions eval;
  std::optional<fs::path> curve_out;
  unsigned threads = 1;
};

/// Pairs detection records with scenes by image_id. Scenes without a record
/// contribute no detections; unknown or repeated image_ids are errors.
MetricReport evaluate_records(const std::vector<GroundTruthScene>& scenes,
                              const std::vector<DetectionRecord>& detections, const EvalOptions& eval,
                              unsigned threads = 1);

/// Key/value block with 4-decimal metrics and the evaluation conventions.
std::string render_report(const MetricReport& report, const EvalOptions& eval);

void write_curve_csv(const MetricReport& report, const fs::path& path);

MetricReport cmd_eval(const EvalCommandOptions& options, std::ostream& out);

// ---- sweep -----------------------------------------------------------------

struct SweepGrid {
  std::vector<Method> methods{Method::Greedy, Method::Noh};
  std::vector<double> nms_thresholds{0.5};
  /// Only NOH rows iterate density thresholds and sigmas.
  std::vector<double> density_thresholds{0.3};
  std::vector<double> noh_sigmas{0.2};

  void validate() const;
};

struct SweepRow {
  Method method;
  double nms_threshold;
  std::optional<double> density_threshold;
  std::optional<double> noh_sigma;
  MetricReport report;
};

/// Rows in grid order: method, then N_t, then d_t, then sigma.
std::vector<SweepRow> run_sweep(const std::vector<GroundTruthScene>& scenes,
                                const std::vector<DetectionRecord>& detections, const SweepGrid& grid,
                                const SuppressionConfig& base, const EvalOptions& eval, unsigned threads = 1);

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);

struct SweepOptions {
  fs::path detections;
  fs::path scenes;
  fs::path output;
  SweepGrid grid;
  SuppressionConfig base;
  EvalOptions eval;
  unsigned threads = 1;
};

void cmd_sweep(const SweepOptions& options);

// ---- field -----------------------------------------------------------------

struct FieldOptions {
  std::vector<Method> methods{Method::Greedy, Method::SoftLinear, Method::SoftGaussian, Method::Adaptive,
                              Method::Noh};
  SuppressionConfig base;
  /// Grid points per axis, spanning [-extent, extent] in units of box size.
  std::size_t resolution = 61;
  double extent = 1.5;
  /// Side-channel attached to the selected box for Adaptive and NOH.
  double density = 0.6;
  RelCoeffs mean{0.3, 0.0, 0.0, 0.0};
  fs::path output;
};

struct FieldCell {
  Method method;
  double dx;
  double dy;
  double multiplier;
};

/// Score multiplier applied to a same-shaped neighbor whose center sits at
/// (dx, dy) box sizes from the selected box; 1 wherever IoU < N_t.
std::vector<FieldCell> suppression_field(const FieldOptions& options);

void cmd_field(const FieldOptions& options);

}  // namespace nohnms::cli
