#include <CLI11.hpp>
#include <iostream>
#include <sstream>

#include "nohnms/cli/commands.hpp"
#include "nohnms/errors.hpp"

namespace {

using namespace nohnms;
using namespace nohnms::cli;


constexpr const char* kFormatHelp =
    "Files are UTF-8, one JSON object per line (LF). Boxes are [x, y, w, h] with (x, y) the top-left corner.\n"
    "  scenes:     {\"image_id\", \"width\", \"height\", \"gt\": [[x,y,w,h]...], \"ignore\": [[x,y,w,h]...]}\n"
    "  detections: {\"image_id\", \"detections\": [{\"bbox\": [x,y,w,h], \"score\", \"density\"?, \"mu\"?: [dx,dy,dw,dh]}]}\n"
    "Exit codes: 0 success, 2 input-contract violation, 3 IO failure.";

// Suppression flags shared by suppress, sweep and field.
struct SuppressionFlags {
  SuppressionConfig config;
  std::string method = "greedy";
  std::string fallback = "greedy";
  std::size_t max_dets = 100;

  void add(CLI::App& app, bool with_method) {
    if (with_method) {
      app.add_option("--method", method, "greedy|soft-linear|soft-gaussian|adaptive|noh")
          ->check(CLI::IsMember({"greedy", "soft-linear", "soft-gaussian", "adaptive", "noh"}))
          ->capture_default_str();
    }
    app.add_option("--nt", config.nms_threshold, "NMS IoU threshold N_t")->capture_default_str();
    app.add_option("--soft-sigma", config.soft_sigma, "Soft-NMS Gaussian parameter")->capture_default_str();
    app.add_option("--noh-sigma", config.noh_sigma, "NOH Gaussian spread")->capture_default_str();
    app.add_option("--dt", config.density_threshold, "NOH density threshold d_t")->capture_default_str();
    app.add_option("--fallback", fallback, "rule below d_t: greedy|soft-linear|soft-gaussian")
        ->check(CLI::IsMember({"greedy", "soft-linear", "soft-gaussian"}))
        ->capture_default_str();
    app.add_option("--score-floor", config.score_floor, "drop detections whose final score is <= floor")
        ->capture_default_str();
    app.add_option("--max-dets", max_dets, "detections kept per image (0 = unlimited)")->capture_default_str();
  }

  SuppressionConfig resolve() const {
    SuppressionConfig c = config;
    c.method = *parse_method(method);
    c.fallback = *parse_method(fallback);
    c.max_detections = max_dets == 0 ? std::nullopt : std::optional<std::size_t>(max_dets);
    return c;
  }
};

struct EvalFlags {
  EvalOptions eval;
  std::size_t k = 100;

  void add(CLI::App& app) {
    app.add_option("--k", k, "per-image detection cap for Recall@k (0 = unlimited)")->capture_default_str();
    app.add_option("--iou", eval.iou_threshold, "evaluation IoU threshold")->capture_default_str();
  }

  EvalOptions resolve() const {
    EvalOptions e = eval;
    e.k = k == 0 ? std::nullopt : std::optional<std::size_t>(k);
    return e;
  }
};

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) {
    const auto m = parse_method(n);
    if (!m) throw ContractError("unknown method: " + n);
    out.push_back(*m);
  }
  return out;
}

RelCoeffs parse_mean(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ContractError("--mu expects four comma-separated numbers");
    }
  }
  if (values.size() != 4) throw ContractError("--mu expects four comma-separated numbers");
  return {values[0], values[1], values[2], values[3]};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detection post-processing toolkit: NOH-NMS and baseline suppression, synthetic crowds, "
               "pedestrian-detection metrics."};
  app.footer(kFormatHelp);
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "worker threads (output is identical for any value)")
      ->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "generate crowded scenes and oracle-annotated proposals");
  SynthOptions synth_opts;
  auto& gen = synth_opts.generator;
  synth->add_option("--scenes", gen.scenes)->capture_default_str();
  synth->add_option("--gt-min", gen.gt_per_scene.min)->capture_default_str();
  synth->add_option("--gt-max", gen.gt_per_scene.max)->capture_default_str();
  synth->add_option("--overlap-frac", gen.overlap_pair_fraction, "fraction of GT in overlapping pairs")
      ->capture_default_str();
  synth->add_option("--pair-iou-min", gen.pair_iou_range.min)->capture_default_str();
  synth->add_option("--pair-iou-max", gen.pair_iou_range.max)->capture_default_str();
  synth->add_option("--proposals", gen.proposals_per_gt, "proposals per GT box")->capture_default_str();
  synth->add_option("--jitter-center", gen.jitter_center_std)->capture_default_str();
  synth->add_option("--jitter-logsize", gen.jitter_logsize_std)->capture_default_str();
  synth->add_option("--score-noise", gen.score_noise_std)->capture_default_str();
  synth->add_option("--width", gen.image_width)->capture_default_str();
  synth->add_option("--height", gen.image_height)->capture_default_str();
  synth->add_option("--seed", gen.seed)->capture_default_str();
  synth->add_option("--mean-noise", synth_opts.oracle.mean_noise_std)->capture_default_str();
  synth->add_option("--density-noise", synth_opts.oracle.density_noise_std)->capture_default_str();
  synth->add_flag("--perfect", synth_opts.oracle.perfect, "noise-free oracle side-channel");
  synth->add_flag("--verify", synth_opts.verify, "re-read outputs and check every mu decodes onto a GT box");
  synth->add_option("--scenes-out", synth_opts.scenes_out)->required();
  synth->add_option("--dets-out", synth_opts.detections_out)->required();

  // suppress
  auto* supp = app.add_subcommand("suppress", "run NMS on every record of a detection file");
  SuppressOptions supp_opts;
  SuppressionFlags supp_flags;
  supp_flags.add(*supp, true);
  supp->add_option("--in", supp_opts.input)->required();
  supp->add_option("--out", supp_opts.output)->required();

  // eval
  auto* eval = app.add_subcommand("eval", "AP, Recall@k and MR-2 of a detection file");
  EvalCommandOptions eval_opts;
  EvalFlags eval_flags;
  eval_flags.add(*eval);
  std::string curve_path;
  eval->add_option("--dets", eval_opts.detections)->required();
  eval->add_option("--scenes", eval_opts.scenes)->required();
  eval->add_option("--curve", curve_path, "write (rank,score,recall,precision,fppi,missrate) CSV");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "suppress + evaluate over a hyper-parameter grid");
  SweepOptions sweep_opts;
  SuppressionFlags sweep_flags;
  EvalFlags sweep_eval;
  sweep_flags.add(*sweep, false);
  sweep_eval.add(*sweep);
  std::vector<std::string> sweep_methods{"greedy", "noh"};
  sweep->add_option("--dets", sweep_opts.detections, "pre-NMS detections")->required();
  sweep->add_option("--scenes", sweep_opts.scenes)->required();
  sweep->add_option("--out", sweep_opts.output)->required();
  sweep->add_option("--methods", sweep_methods)->delimiter(',')->capture_default_str();
  sweep->add_option("--nt-grid", sweep_opts.grid.nms_thresholds)->delimiter(',')->capture_default_str();
  sweep->add_option("--dt-grid", sweep_opts.grid.density_thresholds)->delimiter(',')->capture_default_str();
  sweep->add_option("--sigma-grid", sweep_opts.grid.noh_sigmas, "NOH sigma values")
      ->delimiter(',')
      ->capture_default_str();

  // field
  auto* field = app.add_subcommand("field", "suppression-degree surface as CSV");
  FieldOptions field_opts;
  SuppressionFlags field_flags;
  field_flags.add(*field, false);
  std::vector<std::string> field_methods{"greedy", "soft-linear", "soft-gaussian", "adaptive", "noh"};
  std::string mean_text = "0.3,0,0,0";
  field->add_option("--methods", field_methods)->delimiter(',')->capture_default_str();
  field->add_option("--resolution", field_opts.resolution, "grid points per axis")->capture_default_str();
  field->add_option("--extent", field_opts.extent, "half-width of the offset grid, in box sizes")
      ->capture_default_str();
  field->add_option("--density", field_opts.density, "density of the selected box")->capture_default_str();
  field->add_option("--mu", mean_text, "hallucinated mean dx,dy,dw,dh")->capture_default_str();
  field->add_option("--out", field_opts.output)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitContract;
  }

  try {
    if (*synth) {
      synth_opts.threads = threads;
      cmd_synth(synth_opts, std::cerr);
    } else if (*supp) {
      supp_opts.config = supp_flags.resolve();
      supp_opts.threads = threads;
      cmd_suppress(supp_opts);
    } else if (*eval) {
      eval_opts.eval = eval_flags.resolve();
      if (!curve_path.empty()) eval_opts.curve_out = curve_path;
      eval_opts.threads = threads;
      cmd_eval(eval_opts, std::cout);
    } else if (*sweep) {
      sweep_opts.base = sweep_flags.resolve();
      sweep_opts.eval = sweep_eval.resolve();
      sweep_opts.grid.methods = parse_methods(sweep_methods);
      sweep_opts.threads = threads;
      cmd_sweep(sweep_opts);
    } else if (*field) {
      field_opts.base = field_flags.resolve();
      field_opts.methods = parse_methods(field_methods);
      field_opts.mean = parse_mean(mean_text);
      cmd_field(field_opts);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitContract;
  } catch (const GeneratorError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitContract;
  }
  return kExitOk;
}
