/* Copyright 2026 The camrefine Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "app.hpp"

#include <CLI11.hpp>

#include <functional>
#include <memory>

#include "camrefine/errors.hpp"

namespace camrefine::cli {
namespace {

// Flags are parsed into private holders and applied on top of the TOML
// file only when given on the command line.
class Flags {
 public:
  explicit Flags(CLI::App* app) : app_(app) {}

  template <typename T, typename Field>
  CLI::Option* Add(const std::string& name, Field RunConfig::*field, const std::string& help) {
    auto holder = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(name, *holder, help);
    appliers_.push_back({opt, [holder, field](RunConfig* c) { c->*field = Field(*holder); }});
    return opt;
  }

  void Path(const std::string& name, fs::path RunConfig::*field, const std::string& help) {
    Add<std::string>(name, field, help);
  }

  void NoSplit() {
    CLI::Option* opt = app_->add_flag("--no-split", "run on the whole image without splitting");
    appliers_.push_back({opt, [](RunConfig* c) { c->split = false; }});
  }

  void Apply(RunConfig* c) const {
    for (const auto& [opt, apply] : appliers_) {
      if (opt->count() > 0) apply(c);
    }
  }

  std::string config_file;

 private:
  CLI::App* app_;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig*)>>> appliers_;
};

void AddCommon(Flags& f, CLI::App* app, bool model, bool dataset) {
  app->add_option("--config", f.config_file, "TOML run configuration");
  f.Path("--out", &RunConfig::out, "output directory");
  f.Add<int>("--workers", &RunConfig::workers, "worker threads (output never depends on it)");
  f.Add<std::uint64_t>("--seed", &RunConfig::seed, "random seed");
  if (model) {
    f.Path("--model", &RunConfig::model, "ONNX classifier");
    f.Path("--manifest", &RunConfig::manifest, "model manifest (default: <model>.manifest)");
  }
  if (dataset) {
    f.Path("--list", &RunConfig::list, "image id list");
    f.Path("--images", &RunConfig::images, "image directory");
    f.Path("--labels", &RunConfig::labels, "ground-truth label PNG directory");
    f.Path("--saliency", &RunConfig::saliency, "saliency PNG directory");
    f.Path("--class-file", &RunConfig::class_file, "image-level class list");
  }
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Class activation map extraction and refinement"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  struct Sub {
    CLI::App* app;
    std::unique_ptr<Flags> flags;
    std::function<int(const RunConfig&, std::ostream&)> run;
  };
  std::vector<Sub> subs;
  auto add = [&](const std::string& name, const std::string& help, auto run) -> Flags& {
    CLI::App* sub = app.add_subcommand(name, help);
    subs.push_back({sub, std::make_unique<Flags>(sub), run});
    return *subs.back().flags;
  };

  Flags& cam = add("cam", "plain class activation maps per image and class", CmdCam);
  AddCommon(cam, subs.back().app, true, true);

  Flags& infer = add("infer", "split, iterative inference and merge", CmdInfer);
  AddCommon(infer, subs.back().app, true, true);
  infer.Add<int>("--max-iterations", &RunConfig::max_iterations, "inference passes per patch");
  infer.Add<float>("--erase-threshold", &RunConfig::erase_threshold,
                   "erase pixels at or above this normalised activation");
  infer.Add<float>("--stop-fraction", &RunConfig::stop_fraction,
                   "stop once new activations fall below this image fraction");
  infer.NoSplit();

  Flags& eval = add("eval", "threshold sweep, mIoU, recall and breakdown", CmdEval);
  AddCommon(eval, subs.back().app, false, true);
  eval.Path("--maps", &RunConfig::maps, "response map directory");
  eval.Path("--predictions", &RunConfig::predictions, "label PNG directory to score directly");
  eval.Add<std::vector<float>>("--thresholds", &RunConfig::thresholds,
                               "background thresholds (default 0.05..0.95)")
      ->delimiter(',');
  eval.Path("--csv", &RunConfig::csv, "also write the mIoU curve as CSV");

  Flags& pseudo_flags = add("pseudo", "palette pseudo labels from response maps", CmdPseudo);
  AddCommon(pseudo_flags, subs.back().app, false, true);
  pseudo_flags.Path("--maps", &RunConfig::maps, "response map directory");
  pseudo_flags.Add<float>("--bg-threshold", &RunConfig::bg_threshold, "background score");
  pseudo_flags.Path("--report", &RunConfig::report, "eval report to take best_threshold from");

  Flags& loss_flags = add("loss-check", "finite-difference check of the refinement loss",
                          CmdLossCheck);
  AddCommon(loss_flags, subs.back().app, false, false);
  loss_flags.Add<double>("--alpha", &RunConfig::alpha, "saliency term weight");
  loss_flags.Add<int>("--instances", &RunConfig::instances, "random instances per class count");
  loss_flags.Add<std::vector<int>>("--classes", &RunConfig::loss_classes, "class counts")
      ->delimiter(',');
  loss_flags.Add<int>("--height", &RunConfig::loss_height, "instance height");
  loss_flags.Add<int>("--width", &RunConfig::loss_width, "instance width");
  loss_flags.Add<double>("--step", &RunConfig::step, "central difference step");
  loss_flags.Add<double>("--tolerance", &RunConfig::tolerance, "max relative error");

  Flags& overlay = add("overlay", "blend response maps over their images", CmdOverlay);
  AddCommon(overlay, subs.back().app, false, true);
  overlay.Path("--maps", &RunConfig::maps, "response map directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitHardError;
  }

  for (const Sub& sub : subs) {
    if (!sub.app->parsed()) continue;
    RunConfig config;
    config.command = sub.app->get_name();
    try {
      if (!sub.flags->config_file.empty()) ApplyTomlFile(sub.flags->config_file, &config);
      sub.flags->Apply(&config);
      return sub.run(config, out);
    } catch (const std::exception& e) {
      err << config.command << ": " << e.what() << "\n";
      return kExitHardError;
    }
  }
  return kExitHardError;
}

}  // namespace camrefine::cli
