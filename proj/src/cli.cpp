#include "detcal/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "detcal/eval.hpp"
#include "detcal/io.hpp"
#include "detcal/pipeline.hpp"
#include "detcal/recalibrate.hpp"
#include "detcal/synth.hpp"
#include "detcal/toytrain.hpp"

namespace detcal::cli {

namespace {

using recalibrate::Method;

/// Writes through `fn` to a file, or to `fallback` when the path is empty or "-".
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& fn) {
  if (path.empty() || path == "-") {
    fn(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write '" + path + "'");
  fn(file);
  if (!file) throw DataError("failed writing '" + path + "'");
}

Method method_or_throw(const std::string& name) {
  const auto m = recalibrate::parse_method(name);
  if (!m) throw UsageError("unknown method '" + name + "' (expected isotonic or temperature)");
  return *m;
}

recalibrate::FitTargets targets_or_throw(const std::vector<std::string>& names) {
  recalibrate::FitTargets t;
  if (names.empty() || (names.size() == 1 && names.front() == "all")) return t;
  t.classification = false;
  t.elements.fill(false);
  for (const auto& n : names) {
    if (n == "cls") {
      t.classification = true;
    } else if (const auto e = parse_element(n)) {
      t.elements[index_of(*e)] = true;
    } else {
      throw UsageError("unknown target '" + n + "'");
    }
  }
  return t;
}

eval::EvalOptions eval_options(std::size_t bins, const std::vector<double>& levels) {
  eval::EvalOptions opts;
  if (bins == 0) throw UsageError("--bins must be positive");
  opts.bin_edges = eval::uniform_bin_edges(bins);
  if (!levels.empty()) {
    opts.levels = levels;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (!(levels[i] > 0.0 && levels[i] < 1.0) || (i > 0 && !(levels[i] > levels[i - 1]))) {
        throw UsageError("--levels must be strictly increasing values in (0,1)");
      }
    }
  }
  return opts;
}

void add_eval_flags(CLI::App* cmd, std::size_t& bins, std::vector<double>& levels) {
  cmd->add_option("--bins", bins, "Classification bins (uniform)")->capture_default_str();
  cmd->add_option("--levels", levels, "Regression confidence levels, comma separated")->delimiter(',');
}

struct GenArgs {
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double inflate = 1.0;
  double bias = 0.0;
  double var_min = 0.01;
  double var_max = 0.25;
  std::string score_law = "calibrated";
  double score_shift = 0.0;
  double score_compression = 1.0;
  double score_pivot = 0.5;
  std::string out;
};

void cmd_gen(const GenArgs& a, std::ostream& out) {
  synth::SynthConfig cfg;
  cfg.n = a.n;
  cfg.seed = a.seed;
  for (auto& e : cfg.elements) {
    e.inflation = a.inflate;
    e.bias = a.bias;
    e.variance_min = a.var_min;
    e.variance_max = a.var_max;
  }
  const auto law = synth::parse_score_law(a.score_law);
  if (!law) throw UsageError("unknown score law '" + a.score_law + "'");
  cfg.score = {*law, a.score_shift, a.score_compression, a.score_pivot};
  cfg.validate();
  const Dataset data = synth::generate(cfg);
  emit(a.out, out, [&](std::ostream& os) { io::write_dump(os, data); });
}

struct EvalArgs {
  std::string dump;
  std::size_t bins = 10;
  std::vector<double> levels;
  std::string curves;
  std::string label = "eval";
  std::vector<std::string> correlate;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto opts = eval_options(a.bins, a.levels);
  const auto dump = io::read_dump_file(a.dump);
  const auto curves = eval::evaluate_all(dump.dataset, dump.annotation, opts);
  if (!a.curves.empty()) {
    emit(a.curves, out, [&](std::ostream& os) {
      bool first = true;
      for (const auto& c : curves) {
        eval::write_curve_report(os, c, first);
        first = false;
      }
    });
  }
  eval::write_ece_header(out);
  eval::write_ece_row(out, a.label, eval::summarize(curves));
  if (!a.correlate.empty()) {
    if (a.correlate.size() != 2) throw UsageError("--correlate takes exactly two elements");
    const auto ea = parse_element(a.correlate[0]);
    const auto eb = parse_element(a.correlate[1]);
    if (!ea || !eb) throw UsageError("--correlate: unknown element");
    out << "correlation," << element_name(*ea) << ',' << element_name(*eb) << ','
        << eval::format_real(eval::error_correlation(dump.dataset, *ea, *eb)) << '\n';
  }
}

struct FitArgs {
  std::string dump;
  std::string method = "isotonic";
  std::vector<std::string> targets;
  std::size_t bins = 10;
  bool raw_labels = false;
  std::string timestamp = "unspecified";
  std::string out;
};

void cmd_fit(const FitArgs& a, std::ostream& out) {
  recalibrate::FitOptions opts;
  opts.method = method_or_throw(a.method);
  opts.targets = targets_or_throw(a.targets);
  if (a.bins == 0) throw UsageError("--bins must be positive");
  opts.classification.bin_edges = eval::uniform_bin_edges(a.bins);
  opts.classification.raw_labels = a.raw_labels;
  const auto dump = io::read_dump_file(a.dump);
  opts.provenance = {io::file_fingerprint(a.dump), a.timestamp};
  const auto bundle = recalibrate::fit_bundle(dump.dataset, dump.annotation, opts);
  emit(a.out, out, [&](std::ostream& os) { io::write_bundle(os, bundle); });
}

struct ApplyArgs {
  std::string dump;
  std::string model;
  std::string out;
};

void cmd_apply(const ApplyArgs& a, std::ostream& out) {
  const auto dump = io::read_dump_file(a.dump);
  const auto bundle = io::read_bundle_file(a.model);
  const auto applied = recalibrate::apply_bundle(bundle, dump.dataset, dump.annotation);
  emit(a.out, out, [&](std::ostream& os) { io::write_dump(os, applied.dataset, applied.annotation); });
}

struct SweepArgs {
  std::string dump;
  std::string eval_dump;
  double eval_fraction = 0.5;
  std::vector<double> fractions;
  std::string method = "temperature";
  std::uint64_t seed = 0;
  std::size_t bins = 10;
  std::vector<double> levels;
};

void cmd_sweep(const SweepArgs& a, std::ostream& out) {
  if (a.fractions.empty()) throw UsageError("--fractions must list at least one value");
  for (double f : a.fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw UsageError("--fractions values must lie in (0,1]");
  }
  const Method method = method_or_throw(a.method);
  const auto opts = eval_options(a.bins, a.levels);
  const auto dump = io::read_dump_file(a.dump);

  std::optional<Dataset> recal, evaluation;
  if (!a.eval_dump.empty()) {
    recal = dump.dataset;
    evaluation = io::read_dump_file(a.eval_dump).dataset;
  } else {
    if (!(a.eval_fraction > 0.0 && a.eval_fraction < 1.0)) throw UsageError("--eval-fraction must lie in (0,1)");
    auto parts = synth::split(dump.dataset, a.eval_fraction, a.seed);
    if (parts.remainder.empty()) throw DataError("dump too small to hold out an evaluation split");
    evaluation = validate_dataset(std::move(parts.sample));
    recal = validate_dataset(std::move(parts.remainder));
  }
  if (!dump.annotation.empty()) throw DataError("sweep expects a dump without applied isotonic maps");

  const auto rows = pipeline::robustness_sweep(*recal, *evaluation, a.fractions, method, a.seed, opts);
  out << "# detcal.sweep v1\nmethod,fraction,recal_count,cls";
  for (Element e : kAllElements) out << ',' << element_name(e);
  out << ",avg.\n";
  for (const auto& r : rows) {
    out << recalibrate::method_name(method) << ',' << eval::format_real(r.fraction) << ',' << r.recal_count;
    for (double v : r.summary.columns) out << ',' << eval::format_real(v);
    out << ',' << eval::format_real(r.summary.average) << '\n';
  }
}

struct ToyArgs {
  toytrain::TrainConfig train;
  toytrain::TaskConfig task;
  std::string norm = "l1";
  std::string trace;
  std::optional<double> compare_lambda;
};

void write_summary_row(std::ostream& os, double lambda, const toytrain::ToyTrainTrace& trace) {
  const auto best = std::min_element(trace.begin(), trace.end(),
                                     [](const auto& a, const auto& b) { return a.heldout_ece < b.heldout_ece; });
  const auto& last = trace.back();
  os << eval::format_real(lambda) << ',' << last.epoch << ',' << eval::format_real(last.heldout_ece) << ','
     << eval::format_real(best->heldout_ece) << ',' << best->epoch << ',' << eval::format_real(last.heldout_l2)
     << '\n';
}

void cmd_train_toy(ToyArgs a, std::ostream& out) {
  const auto norm = toytrain::parse_calib_norm(a.norm);
  if (!norm) throw UsageError("--norm must be l1 or l2");
  a.train.norm = *norm;
  a.train.validate();
  if (a.compare_lambda && !(*a.compare_lambda >= 0.0)) throw UsageError("--compare-lambda must be >= 0");
  const auto task = toytrain::make_task(a.task);
  const auto result = toytrain::train_toy(a.train, task);
  if (!a.trace.empty()) emit(a.trace, out, [&](std::ostream& os) { toytrain::write_trace(os, result.trace); });

  out << "# detcal.toy-summary v1\nlambda,final_epoch,final_ece,min_ece,min_epoch,final_l2\n";
  write_summary_row(out, a.train.lambda, result.trace);
  if (a.compare_lambda) {
    auto other = a.train;
    other.lambda = *a.compare_lambda;
    write_summary_row(out, other.lambda, toytrain::train_toy(other, task).trace);
  }
}

struct CrossArgs {
  std::string fit_dump;
  std::string eval_dump;
  std::string method = "temperature";
  std::size_t bins = 10;
  std::vector<double> levels;
};

void cmd_cross_eval(const CrossArgs& a, std::ostream& out) {
  const Method method = method_or_throw(a.method);
  const auto opts = eval_options(a.bins, a.levels);
  const auto fit = io::read_dump_file(a.fit_dump);
  const auto target = io::read_dump_file(a.eval_dump);
  if (!fit.annotation.empty() || !target.annotation.empty()) {
    throw DataError("cross-eval expects dumps without applied isotonic maps");
  }
  const auto result = pipeline::cross_evaluate(fit.dataset, target.dataset, method, opts);
  eval::write_ece_header(out);
  eval::write_ece_row(out, "uncalibrated", result.baseline);
  eval::write_ece_row(out, recalibrate::method_name(method), result.recalibrated);
}

// CLI11 only reads config files on the top-level app, so subcommands load theirs here.
void load_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::ParseError& ex) {
    throw DataError(path + ": " + ex.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty()) throw UsageError(path + ": sections are not supported (" + item.fullname() + ")");
    CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config") throw UsageError(path + ": unknown key " + item.name);
    if (opt->count() > 0) continue;
    try {
      opt->add_result(item.inputs);
      opt->run_callback();
    } catch (const CLI::ParseError& ex) {
      throw UsageError(path + ": " + item.name + ": " + ex.what());
    }
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Calibration evaluation and recalibration for probabilistic object detectors", "detcal"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic detection dump");
  std::string gen_config;
  g->add_option("--config", gen_config, "Key-value config file (flags on the command line win)");
  g->add_option("--n", gen.n, "Number of records")->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  g->add_option("--inflate", gen.inflate, "Reported / true variance ratio (> 0)")->capture_default_str();
  g->add_option("--bias", gen.bias, "Mean bias added to every element")->capture_default_str();
  g->add_option("--var-min", gen.var_min, "Lower end of the true variance range")->capture_default_str();
  g->add_option("--var-max", gen.var_max, "Upper end of the true variance range")->capture_default_str();
  g->add_option("--score-law", gen.score_law, "calibrated | logit_shift | compressed")->capture_default_str();
  g->add_option("--score-shift", gen.score_shift, "Logit shift for logit_shift")->capture_default_str();
  g->add_option("--score-compression", gen.score_compression, "Logit compression factor")->capture_default_str();
  g->add_option("--score-pivot", gen.score_pivot, "Compression pivot probability")->capture_default_str();
  g->add_option("-o,--out", gen.out, "Output dump (default stdout)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Calibration curves and ECE of a dump");
  e->add_option("--dump", ev.dump, "Detection dump")->required();
  add_eval_flags(e, ev.bins, ev.levels);
  e->add_option("--curves", ev.curves, "Write plot-data tables here");
  e->add_option("--label", ev.label, "Method label of the summary row")->capture_default_str();
  e->add_option("--correlate", ev.correlate, "Two elements whose residual correlation to report")->delimiter(',');

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit recalibrators on a dump");
  f->add_option("--dump", fit.dump, "Recalibration dump")->required();
  f->add_option("--method", fit.method, "isotonic | temperature")->capture_default_str();
  f->add_option("--targets", fit.targets, "all, or a list of cls and element names")->delimiter(',');
  f->add_option("--bins", fit.bins, "Classification bins")->capture_default_str();
  f->add_flag("--raw-labels", fit.raw_labels, "Fit classification on raw labels instead of bin accuracies");
  f->add_option("--timestamp", fit.timestamp, "Fit time recorded in the bundle")->capture_default_str();
  f->add_option("-o,--out", fit.out, "Output bundle (default stdout)");

  ApplyArgs ap;
  auto* a = app.add_subcommand("apply", "Apply a bundle to a dump");
  a->add_option("--dump", ap.dump, "Detection dump")->required();
  a->add_option("--model", ap.model, "Bundle written by fit")->required();
  a->add_option("-o,--out", ap.out, "Output dump (default stdout)");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "ECE after fitting on shrinking recalibration subsets");
  s->add_option("--dump", sw.dump, "Recalibration dump")->required();
  s->add_option("--eval-dump", sw.eval_dump, "Separate evaluation dump (default: hold out part of --dump)");
  s->add_option("--eval-fraction", sw.eval_fraction, "Held-out share when --eval-dump is absent")->capture_default_str();
  s->add_option("--fractions", sw.fractions, "Recalibration fractions, comma separated")->delimiter(',')->required();
  s->add_option("--method", sw.method, "isotonic | temperature")->capture_default_str();
  s->add_option("--seed", sw.seed, "Subsampling seed")->capture_default_str();
  add_eval_flags(s, sw.bins, sw.levels);

  ToyArgs toy;
  auto* t = app.add_subcommand("train-toy", "Train the toy heteroscedastic regressor and trace calibration");
  std::string toy_config;
  t->add_option("--config", toy_config, "Key-value config file (flags on the command line win)");
  t->add_option("--lambda", toy.train.lambda, "Calibration loss weight")->capture_default_str();
  t->add_option("--norm", toy.norm, "Calibration loss norm: l1 | l2")->capture_default_str();
  t->add_option("--epochs", toy.train.epochs, "Epochs with the attenuated loss")->capture_default_str();
  t->add_option("--pretrain-epochs", toy.train.pretrain_epochs, "Squared-error epochs")->capture_default_str();
  t->add_option("--lr", toy.train.learning_rate, "Learning rate")->capture_default_str();
  t->add_option("--lr-decay", toy.train.lr_decay, "Inverse-time decay of the learning rate")->capture_default_str();
  t->add_option("--pretrain-lr", toy.train.pretrain_learning_rate, "Pretraining learning rate")->capture_default_str();
  t->add_option("--batch", toy.train.batch_size, "Minibatch size")->capture_default_str();
  t->add_option("--hidden", toy.train.hidden, "Hidden width")->capture_default_str();
  t->add_option("--seed", toy.train.seed, "Initialization and shuffling seed")->capture_default_str();
  t->add_option("--task-seed", toy.task.seed, "Synthetic task seed")->capture_default_str();
  t->add_option("--n-train", toy.task.n_train, "Training split size")->capture_default_str();
  t->add_option("--n-heldout", toy.task.n_heldout, "Held-out split size")->capture_default_str();
  t->add_option("--features", toy.task.features, "Feature dimension")->capture_default_str();
  t->add_option("--outputs", toy.task.outputs, "Regression outputs (1-6)")->capture_default_str();
  t->add_option("--trace", toy.trace, "Write the per-epoch trace here");
  t->add_option("--compare-lambda", toy.compare_lambda, "Also train with this lambda and report both");

  CrossArgs cx;
  auto* c = app.add_subcommand("cross-eval", "Fit on one dump, evaluate on another");
  c->add_option("--fit-dump", cx.fit_dump, "Dump used for fitting")->required();
  c->add_option("--eval-dump", cx.eval_dump, "Dump used for evaluation")->required();
  c->add_option("--method", cx.method, "isotonic | temperature")->capture_default_str();
  add_eval_flags(c, cx.bins, cx.levels);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return kUsageError;
  }

  try {
    if (g->parsed()) load_config(g, gen_config);
    if (t->parsed()) load_config(t, toy_config);
    if (g->parsed()) cmd_gen(gen, out);
    if (e->parsed()) cmd_eval(ev, out);
    if (f->parsed()) cmd_fit(fit, out);
    if (a->parsed()) cmd_apply(ap, out);
    if (s->parsed()) cmd_sweep(sw, out);
    if (t->parsed()) cmd_train_toy(toy, out);
    if (c->parsed()) cmd_cross_eval(cx, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return kUsageError;
  } catch (const DegenerateFitError& ex) {
    err << "error: degenerate fit: " << ex.what() << "\n";
    return kDegenerateFit;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kDataError;
  }
  return kSuccess;
}

}  // namespace detcal::cli
