#include <algorithm>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tiledit/commands.hpp"
#include "tiledit/errors.hpp"

using namespace tiledit;

int main(int argc, char** argv) {
  CLI::App app{"Tiled latent inversion and switched-guidance editing"};
  app.set_version_flag("--version", kToolVersion);
  app.set_config("--config", "",
                 "INI file with one section per subcommand, e.g. [invert] steps=25");
  app.require_subcommand(1);

  InvertOptions io;
  EditOptions eo;
  ReconstructOptions ro;
  DemoOptions dm;
  TrainToyOptions tr;
  PlotOptions po;
  SweepOptions so;

  CLI::App* invert = app.add_subcommand("invert", "Tiled noise inversion of a source image");
  invert->add_option("--input", io.input, "Source PNG")->required();
  invert->add_option("--out", io.out, "Output directory for the inverted latent")->required();
  invert->add_option("--tile-size", io.tile_size, "Tile side in pixels (0 = one tile)");
  invert->add_option("--steps", io.steps, "Sampler steps (default 50)");
  invert->add_option("--backend", io.backend, "analytic:<world> or a model directory");
  invert->add_option("--codec", io.codec, "identity or box:<factor>");
  invert->add_flag("--cache-eps", io.cache_eps, "Store per-step noise for exact replay");
  invert->add_option("--seed", io.seed, "Run seed");

  CLI::App* edit = app.add_subcommand("edit", "Guided reverse run from an inverted latent");
  edit->add_option("--inverted", eo.inverted, "Directory written by invert")->required();
  edit->add_option("--out", eo.out, "Edited PNG path")->required();
  edit->add_option("--backend", eo.backend, "Override the recorded backend");
  edit->add_option("--codec", eo.codec, "Override the recorded codec");
  edit->add_option("--class", eo.target_class, "Target class index");
  edit->add_option("--prompt", eo.prompt, "Text prompt (text-encoder backends only)");
  edit->add_option("--lambda", eo.lambda_scale, "Guidance scale lambda (default 0.5)");
  edit->add_option("--tau", eo.tau, "Switch step (default from the canvas/base ratio)");
  edit->add_option("--mode", eo.mode, "Guidance mode")
      ->check(CLI::IsMember({"CFG", "CFGPP", "NDCFG", "NDCFGPP"}));
  edit->add_option("--dilation-factor", eo.dilation_factor,
                   "Convolution dilation (default from the canvas/base ratio)");
  edit->add_option("--dilation-profile", eo.dilation_profile, "Dilation profile file");
  edit->add_option("--vanilla-eval", eo.vanilla_eval, "Vanilla estimator evaluation")
      ->check(CLI::IsMember({"full-canvas", "tile-wise"}));
  edit->add_flag("--record", eo.record, "Record the trajectory next to the output");
  edit->add_option("--record-dir", eo.record_dir, "Trajectory directory override");
  edit->add_option("--preview-every", eo.preview_every, "Preview cadence in steps");

  CLI::App* rec = app.add_subcommand("reconstruct", "Unconditional reverse reconstruction");
  rec->add_option("--inverted", ro.inverted, "Directory written by invert")->required();
  rec->add_option("--out", ro.out, "Reconstruction PNG path")->required();
  rec->add_option("--backend", ro.backend, "Override the recorded backend");
  rec->add_option("--codec", ro.codec, "Override the recorded codec");
  rec->add_flag("--use-cache", ro.use_cache, "Replay stored epsilons instead of predicting");

  CLI::App* demo = app.add_subcommand("demo", "Emit procedural demo images");
  demo->add_option("--out-dir", dm.out_dir, "Output directory")->required();
  demo->add_option("--world", dm.world, "Builtin world name, or 'corpus'");
  demo->add_option("--size", dm.size, "Image side length");
  demo->add_option("--count", dm.count, "Images per class");
  demo->add_option("--seed", dm.seed, "Run seed");

  CLI::App* train = app.add_subcommand("train-toy", "Train the toy conv denoiser");
  train->add_option("--out", tr.out, "Model output directory")->required();
  train->add_option("--size", tr.size, "Corpus image side length");
  train->add_option("--epochs", tr.epochs, "Training epochs");
  train->add_option("--lr", tr.lr, "Adam learning rate");
  train->add_option("--train-steps", tr.train_steps, "Forward-process steps");
  train->add_option("--sample-steps", tr.sample_steps, "Default sampler steps");
  train->add_option("--seed", tr.seed, "Run seed");

  CLI::App* plot = app.add_subcommand("plot", "Render a recorded trajectory as a grid PNG");
  plot->add_option("--trajectory", po.trajectory, "Trajectory directory")->required();
  plot->add_option("--out", po.out, "Grid PNG path")->required();

  CLI::App* sweep = app.add_subcommand("sweep-lambda", "Edit at several lambda values");
  sweep->add_option("--inverted", so.inverted, "Directory written by invert")->required();
  sweep->add_option("--out-dir", so.out_dir, "Output directory")->required();
  sweep->add_option("--values", so.values, "Lambda values")->delimiter(',');
  sweep->add_option("--backend", so.backend, "Override the recorded backend");
  sweep->add_option("--codec", so.codec, "Override the recorded codec");
  sweep->add_option("--class", so.target_class, "Target class index");
  sweep->add_option("--tau", so.tau, "Switch step (default from the canvas/base ratio)");
  sweep->add_option("--mode", so.mode, "Guidance mode")
      ->check(CLI::IsMember({"CFGPP", "NDCFGPP"}));
  sweep->add_option("--dilation-factor", so.dilation_factor, "Convolution dilation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: usage: " << msg << "\n";
    return 2;
  }

  try {
    if (invert->parsed()) return cmd_invert(io);
    if (edit->parsed()) return cmd_edit(eo);
    if (rec->parsed()) return cmd_reconstruct(ro);
    if (demo->parsed()) return cmd_demo(dm);
    if (train->parsed()) return cmd_train_toy(tr);
    if (plot->parsed()) return cmd_plot(po);
    if (sweep->parsed()) return cmd_sweep_lambda(so);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_usage_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: internal-failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
