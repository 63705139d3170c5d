// Command-line driver: prepare, train, eval, gradcheck, sweep, predict, synth.
//
//   dann prepare --config run.json
//   dann train --config run.json --task locate --seed 7
//   dann eval --config run.json --task interpret --mfs
//   dann gradcheck --seed 7
//   dann sweep --config run.json
//   dann predict --config run.json < sentences.txt
//   dann synth --channel sense --work-dir fixture --seed 7

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dann/error.hpp"
#include "dann/numcore/graph.hpp"
#include "dann/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> task;
  std::optional<std::string> ablate;
  std::optional<std::string> work_dir;
  std::optional<std::string> checkpoint;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> k_folds;
  bool mfs = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--task", o.task, "locate | interpret")->check(CLI::IsMember({"locate", "interpret"}));
  cmd->add_flag("--mfs", o.mfs, "interpretation with the most-frequent-sense baseline");
  cmd->add_option("--ablate", o.ablate, "disable the sense or pron branch")->check(CLI::IsMember({"sense", "pron"}));
  cmd->add_option("--work-dir", o.work_dir, "directory for dumps, checkpoints and reports");
  cmd->add_option("--checkpoint", o.checkpoint, "locator checkpoint for predict");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--k-folds", o.k_folds, "cross-validation folds");
}

dann::pipeline::RunConfig resolve(const Overrides& o) {
  dann::pipeline::RunConfig c;
  if (!o.config_path.empty()) c = dann::pipeline::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.task) c.task = *o.task;
  if (o.ablate) c.ablate = *o.ablate;
  if (o.work_dir) c.work_dir = *o.work_dir;
  if (o.checkpoint) c.checkpoint = *o.checkpoint;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.k_folds) c.k_folds = *o.k_folds;
  if (o.mfs) c.mfs = true;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-attentive pun location and pun-gloss interpretation"};
  app.require_subcommand(1);
  Overrides o;
  std::string channel = "sense";
  bool corrupt = false;

  auto* prepare = app.add_subcommand("prepare", "parse corpus, gold files and lexicons into JSON-lines dumps");
  auto* train = app.add_subcommand("train", "cross-validated training with per-fold checkpoints and a report");
  auto* eval = app.add_subcommand("eval", "re-score the fold checkpoints of a training run");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of both models");
  auto* sweep = app.add_subcommand("sweep", "location F1 over the sweep_ds sense caps (CSV)");
  auto* predict = app.add_subcommand("predict", "locate the pun in each stdin line");
  auto* synth = app.add_subcommand("synth", "write a planted-signal fixture corpus");
  for (auto* cmd : {prepare, train, eval, gradcheck, sweep, predict, synth}) add_common(cmd, o);
  gradcheck->add_flag("--corrupt-backward", corrupt, "fault injection: scale weight gradients")->group("");
  synth->add_option("--channel", channel, "sense | pron | interp")->check(CLI::IsMember({"sense", "pron", "interp"}));

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve(o);
    if (*prepare) return dann::pipeline::cmd_prepare(cfg, std::cout);
    if (*train) return dann::pipeline::cmd_train(cfg, std::cout);
    if (*eval) return dann::pipeline::cmd_eval(cfg, std::cout);
    if (*gradcheck) {
      dann::testing_hooks::corrupt_weight_backward = corrupt;
      return dann::pipeline::cmd_gradcheck(cfg, std::cout);
    }
    if (*sweep) return dann::pipeline::cmd_sweep(cfg, std::cout);
    if (*predict) return dann::pipeline::cmd_predict(cfg, std::cin, std::cout, std::cerr);
    if (*synth) return dann::pipeline::cmd_synth(cfg, channel, std::cout);
  } catch (const dann::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dann::pipeline::kExitError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dann::pipeline::kExitError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dann::pipeline::kExitError;
  }
  return dann::pipeline::kExitOk;
}
