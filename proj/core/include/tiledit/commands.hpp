#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tiledit {

inline constexpr const char* kToolVersion = "0.1.0";

// Command bodies behind the CLI surface. Each writes its outputs plus a run
// manifest echoing the effective configuration (args.* keys), returns 0 on
// success and throws Error otherwise; the binary maps usage errors to exit
// code 2 and runtime failures to 3.

struct InvertOptions {
  std::string input;  // source PNG
  std::string out;    // output directory
  std::string backend = "analytic:texture";
  std::string codec = "identity";
  int tile_size = 0;  // pixels per tile side; 0 means one canvas-sized tile
  int steps = 50;
  bool cache_eps = false;
  std::uint64_t seed = 0;
};
int cmd_invert(const InvertOptions& o);

struct EditOptions {
  std::string inverted;  // directory written by cmd_invert
  std::string out;       // edited PNG
  std::string backend;   // empty: reuse the invert run manifest
  std::string codec;     // empty: reuse the invert run manifest
  int target_class = -1;
  std::string prompt;  // only text-encoder backends accept prompts
  double lambda_scale = 0.5;
  int tau = -1;             // -1: default by canvas/base scale factor
  std::string mode = "NDCFGPP";
  int dilation_factor = 0;  // 0: default by canvas/base scale factor
  std::string dilation_profile;  // optional profile file
  std::string vanilla_eval = "full-canvas";
  bool record = false;
  std::string record_dir;  // empty: <out>.trajectory
  int preview_every = 5;
};
int cmd_edit(const EditOptions& o);

struct ReconstructOptions {
  std::string inverted;
  std::string out;  // PNG
  std::string backend;
  std::string codec;
  bool use_cache = false;
};
int cmd_reconstruct(const ReconstructOptions& o);

struct DemoOptions {
  std::string out_dir;
  std::string world = "texture";  // builtin world name, or "corpus"
  int size = 32;
  int count = 4;  // images per class
  std::uint64_t seed = 0;
};
int cmd_demo(const DemoOptions& o);

struct TrainToyOptions {
  std::string out;  // model directory
  int size = 32;
  int epochs = 8;
  double lr = 2e-3;
  int train_steps = 1000;
  int sample_steps = 50;
  std::uint64_t seed = 0;
};
int cmd_train_toy(const TrainToyOptions& o);

struct PlotOptions {
  std::string trajectory;  // directory written by cmd_edit --record
  std::string out;         // grid PNG
};
int cmd_plot(const PlotOptions& o);

struct SweepOptions {
  std::string inverted;
  std::string out_dir;
  std::vector<double> values = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::string backend;
  std::string codec;
  int target_class = -1;
  int tau = -1;
  std::string mode = "NDCFGPP";
  int dilation_factor = 0;
};
int cmd_sweep_lambda(const SweepOptions& o);

}  // namespace tiledit
