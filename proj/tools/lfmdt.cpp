// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

// lfmdt: command-line front end. Errors are reported on stderr as a single
// line "error[<kind>]: <message>" with exit status 1.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lfmdt/complexity.hpp"
#include "lfmdt/error.hpp"
#include "lfmdt/lightfield.hpp"
#include "lfmdt/network.hpp"
#include "lfmdt/training.hpp"
#include "lfmdt/verify.hpp"

#ifndef LFMDT_VERSION
#define LFMDT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace lfmdt;
using Json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// configuration: defaults < --config file < --set / --seed

struct Run {
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  NetworkConfig net;
  TrainConfig train;
  Json inputs = Json::array();
  Json outputs = Json::array();
};

void apply_setting(Run& run, const std::string& key, const std::string& value) {
  if (apply_train_setting(run.train, key, value)) return;
  if (apply_network_setting(run.net, key, value)) return;
  raise(ErrorKind::config, "unknown key '" + key + "'");
}

void resolve(Run& run) {
  if (!run.config_path.empty()) {
    for (const auto& [k, v] : read_settings(run.config_path)) apply_setting(run, k, v);
  }
  for (const auto& o : run.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      raise(ErrorKind::config, "override '" + o + "' is not key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_setting(run, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  if (run.seed) run.train.seed = *run.seed;
  run.net.validate();
}

Json settings_json(const std::string& text) {
  Json j = Json::object();
  for (const auto& [k, v] : parse_settings(text)) j[k] = v;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) raise(ErrorKind::io, "failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorKind::io, "cannot create directory " + dir.string() + ": " + ec.message());
}

// No timestamps or host data: reruns with the same inputs give the same bytes.
void write_manifest(const Run& run, const fs::path& path) {
  Json m;
  m["tool"] = "lfmdt";
  m["version"] = LFMDT_VERSION;
  m["command"] = run.command;
  m["seed"] = run.train.seed;
  m["config_file"] = run.config_path;
  m["overrides"] = run.overrides;
  m["network"] = settings_json(format_network_config(run.net));
  m["train"] = settings_json(format_train_config(run.train));
  m["inputs"] = run.inputs;
  m["outputs"] = run.outputs;
  write_text(path, m.dump(2) + "\n");
}

fs::path manifest_for_file(const fs::path& out) {
  return fs::path(out.string() + ".manifest.json");
}

// ---------------------------------------------------------------------------
// light-field helpers

LightField clamp01(LightField lf) {
  for (auto& v : lf.tensor().values()) v = std::clamp(v, 0.0f, 1.0f);
  return lf;
}

LightField channel(const LightField& lf, std::size_t c) {
  LightField out(lf.U(), lf.V(), lf.H(), lf.W(), 1);
  const auto src = lf.tensor().values();
  const auto dst = out.tensor().values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i * lf.C() + c];
  return out;
}

LightField merge(const std::vector<LightField>& planes) {
  const LightField& p = planes.front();
  LightField out(p.U(), p.V(), p.H(), p.W(), planes.size());
  const auto dst = out.tensor().values();
  for (std::size_t c = 0; c < planes.size(); ++c) {
    const auto src = planes[c].tensor().values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i * planes.size() + c] = src[i];
  }
  return out;
}

LightField read_input(Run& run, const std::string& path) {
  std::vector<std::string> warnings;
  LightField lf = read_lfb(path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << path << ": " << w << '\n';
  run.inputs.push_back(path);
  return lf;
}

void check_grid(const LightField& lf, const NetworkConfig& net) {
  if (lf.U() != net.U || lf.V() != net.V) {
    raise(ErrorKind::dimension, "input has " + std::to_string(lf.U()) + "x" +
                                    std::to_string(lf.V()) + " views, config expects " +
                                    std::to_string(net.U) + "x" + std::to_string(net.V));
  }
  if (lf.C() != 1 && lf.C() != 3) {
    raise(ErrorKind::dimension, "input must have 1 or 3 channels, got " + std::to_string(lf.C()));
  }
}

ParameterStore<float> load_weights(Run& run, const std::string& path) {
  ParameterStore<float> store = read_checkpoint(path);
  check_layout(store, run.net);
  run.inputs.push_back(path);
  return store;
}

LightField as_y(const LightField& lf) { return lf.C() == 3 ? rgb_to_y(lf) : lf; }

// ---------------------------------------------------------------------------
// commands

int cmd_synth(Run& run, const std::string& spec_path, const std::string& out) {
  const SceneSpec spec = read_scene_spec(spec_path);
  run.inputs.push_back(spec_path);
  write_lfb(synth_lightfield(spec), out);
  run.outputs.push_back(out);
  write_manifest(run, manifest_for_file(out));
  return 0;
}

int cmd_resample(Run& run, const std::string& in, const std::string& out, std::size_t scale,
                 bool up) {
  const std::size_t r = scale == 0 ? run.net.scale : scale;
  const LightField lf = read_input(run, in);
  write_lfb(clamp01(up ? upsample_bicubic(lf, r) : degrade(lf, r)), out);
  run.outputs.push_back(out);
  write_manifest(run, manifest_for_file(out));
  return 0;
}

int cmd_init(Run& run, const std::string& out, bool zero) {
  const ParameterStore<float> store =
      zero ? zero_params<float>(run.net) : init_params<float>(run.net, run.train.seed);
  write_checkpoint(store, out);
  run.outputs.push_back(out);
  write_manifest(run, manifest_for_file(out));
  return 0;
}

int cmd_train(Run& run, const std::vector<std::string>& scenes, const std::string& out_dir) {
  std::vector<LightField> fields;
  for (const auto& s : scenes) {
    if (fs::path(s).extension() == ".lfb") {
      fields.push_back(as_y(read_input(run, s)));
    } else {
      fields.push_back(synth_lightfield(read_scene_spec(s)));
      run.inputs.push_back(s);
    }
  }
  ensure_dir(out_dir);
  const TrainResult r = train_toy(run.net, fields, run.train, [](const LossPoint& p) {
    std::printf("step %zu loss %.6f psnr %.2f lr %g\n", p.step, p.loss, p.psnr, p.lr);
    std::fflush(stdout);
  });
  const fs::path dir(out_dir);
  write_checkpoint(r.params, dir / "weights.lfmw");
  write_text(dir / "loss.csv", loss_curve_csv(r.curve));
  run.outputs = {(dir / "weights.lfmw").string(), (dir / "loss.csv").string()};
  write_manifest(run, dir / "manifest.json");
  std::printf("initial L1 %.6f, final L1 %.6f\n", r.initial_loss, r.final_loss);
  return 0;
}

LightField super_resolve(const LightField& lr, const NetworkConfig& net,
                         const ParameterStore<float>& params) {
  if (lr.C() == 1) return LightField(lf_mdtnet_forward(lr.tensor(), net, params));
  // Colour: the network sees Y; Cb and Cr are upsampled bicubically.
  const LightField ycc = rgb_to_ycbcr(lr);
  LightField y(lf_mdtnet_forward(channel(ycc, 0).tensor(), net, params));
  return ycbcr_to_rgb(merge({std::move(y), upsample_bicubic(channel(ycc, 1), net.scale),
                             upsample_bicubic(channel(ycc, 2), net.scale)}));
}

int cmd_infer(Run& run, const std::string& weights, const std::string& in,
              const std::string& out) {
  const ParameterStore<float> params = load_weights(run, weights);
  const LightField lr = read_input(run, in);
  check_grid(lr, run.net);
  write_lfb(clamp01(super_resolve(lr, run.net, params)), out);
  run.outputs.push_back(out);
  write_manifest(run, manifest_for_file(out));
  return 0;
}

int cmd_eval(Run& run, const std::string& pred, const std::string& gt) {
  const LightField p = as_y(read_input(run, pred));
  const LightField g = as_y(read_input(run, gt));
  std::printf("PSNR: %.2f dB, SSIM: %.4f\n", psnr_y(p, g), ssim_y(p, g));
  return 0;
}

int cmd_profile(Run& run, std::size_t H, std::size_t W, const std::string& out_dir) {
  const ComplexityReport rep = network_analytic(run.net, H, W);
  std::fputs(rep.text().c_str(), stdout);
  if (out_dir.empty()) {
    std::printf("\n%s", rep.csv().c_str());
    return 0;
  }
  ensure_dir(out_dir);
  const fs::path dir(out_dir);
  write_text(dir / "profile.txt", rep.text());
  write_text(dir / "profile.csv", rep.csv());
  run.outputs = {(dir / "profile.txt").string(), (dir / "profile.csv").string()};
  write_manifest(run, dir / "manifest.json");
  return 0;
}

int cmd_gradcheck(Run& run, std::size_t H, std::size_t W, const GradCheckOptions& options,
                  double tolerance) {
  const NetworkCheckProblem problem = make_check_problem(run.net, H, W, run.train.seed);
  const GradCheckResult r = network_gradcheck(problem, options);
  const bool pass = r.max_rel_error <= tolerance;
  std::printf("max relative error: %.3e over %zu coordinates (tolerance %.1e): %s\n",
              r.max_rel_error, r.samples.size(), tolerance, pass ? "PASS" : "FAIL");
  return pass ? 0 : 2;
}

int cmd_dump_features(Run& run, const std::string& weights, const std::string& in,
                      const std::string& out_dir) {
  const ParameterStore<float> params = load_weights(run, weights);
  const LightField lr = as_y(read_input(run, in));
  check_grid(lr, run.net);
  Graph<float> g;
  BoundParams<float> bound(g, params, false);
  ForwardTrace<float> trace;
  lf_mdtnet_forward(g.constant(lr.tensor()), run.net, bound, &trace);

  ensure_dir(out_dir);
  const fs::path dir(out_dir);
  const std::size_t block = trace.dsa.size() - 1;
  Json ranges = Json::array();
  for (std::size_t j = 0; j < trace.dsa[block].size(); ++j) {
    // .lfb holds [0, 1]; each branch is min-max scaled and the range recorded.
    Tensor<float> t = trace.dsa[block][j].value();
    const auto [lo, hi] = std::minmax_element(t.values().begin(), t.values().end());
    const float mn = *lo, span = *hi - *lo;
    Json range = {{"branch", j}, {"min", mn}, {"max", *hi}};
    for (auto& v : t.values()) v = span > 0.0f ? (v - mn) / span : 0.0f;
    const fs::path file = dir / ("block" + std::to_string(block) + "_branch" +
                                 std::to_string(j) + ".lfb");
    write_lfb(LightField(std::move(t)), file);
    run.outputs.push_back(file.string());
    ranges.push_back(range);
  }
  write_text(dir / "ranges.json", ranges.dump(2) + "\n");
  run.outputs.push_back((dir / "ranges.json").string());
  write_manifest(run, dir / "manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LF-MDTNet light-field super-resolution toolkit"};
  app.set_version_flag("--version", std::string("lfmdt ") + LFMDT_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Run run;
  app.add_option("--config", run.config_path, "key = value settings file");
  app.add_option("--set", run.overrides, "override a setting, key=value (repeatable)");
  app.add_option("--seed", run.seed, "seed for initialisation, shuffling and checks");

  std::string a, b, c, out_dir;
  std::vector<std::string> scenes;
  std::size_t scale = 0, height = 0, width = 0;
  bool zero = false;
  GradCheckOptions gc;
  double tolerance = 1e-4;

  auto* synth = app.add_subcommand("synth", "render a synthetic HR light field from a JSON scene");
  synth->add_option("spec", a)->required();
  synth->add_option("out", b)->required();

  auto* degrade_cmd = app.add_subcommand("degrade", "bicubic down-sampling by the scale factor");
  degrade_cmd->add_option("in", a)->required();
  degrade_cmd->add_option("out", b)->required();
  degrade_cmd->add_option("--scale", scale, "factor (default: config scale)");

  auto* upsample = app.add_subcommand("upsample", "bicubic up-sampling by the scale factor");
  upsample->add_option("in", a)->required();
  upsample->add_option("out", b)->required();
  upsample->add_option("--scale", scale, "factor (default: config scale)");

  auto* init = app.add_subcommand("init", "write initial weights for the config");
  init->add_option("out", a)->required();
  init->add_flag("--zero", zero, "all weights and biases zero (output equals bicubic)");

  auto* train = app.add_subcommand("train", "train on scenes (.json specs or HR .lfb fields)");
  train->add_option("scenes", scenes)->required();
  train->add_option("--out", out_dir, "output directory")->required();

  auto* infer = app.add_subcommand("infer", "super-resolve an LR light field");
  infer->add_option("weights", a)->required();
  infer->add_option("in", b)->required();
  infer->add_option("out", c)->required();

  auto* eval = app.add_subcommand("eval", "Y-channel PSNR and SSIM of a prediction");
  eval->add_option("pred", a)->required();
  eval->add_option("gt", b)->required();

  auto* profile = app.add_subcommand("profile", "analytic parameter and MAC report");
  height = 32;
  width = 32;
  profile->add_option("--height", height, "LR height per SAI")->capture_default_str();
  profile->add_option("--width", width, "LR width per SAI")->capture_default_str();
  profile->add_option("--out", out_dir, "write profile.txt, profile.csv and a manifest here");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the full network");
  std::size_t gh = 8, gw = 8;
  gradcheck->add_option("--height", gh, "LR height")->capture_default_str();
  gradcheck->add_option("--width", gw, "LR width")->capture_default_str();
  gradcheck->add_option("--coords", gc.coordinates, "sampled coordinates")->capture_default_str();
  gradcheck->add_option("--step", gc.h, "central difference step")->capture_default_str();
  gradcheck->add_option("--tol", tolerance, "pass threshold")->capture_default_str();
  gradcheck->add_flag("--per-array", gc.per_array, "--coords applies to every array");

  auto* dump = app.add_subcommand("dump-features", "last-block DSA branch outputs as .lfb");
  dump->add_option("weights", a)->required();
  dump->add_option("in", b)->required();
  dump->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error[usage]: %s\n", e.what());
    return 1;
  }

  try {
    run.command = app.get_subcommands().front()->get_name();
    resolve(run);
    gc.seed = run.train.seed;
    if (*synth) return cmd_synth(run, a, b);
    if (*degrade_cmd) return cmd_resample(run, a, b, scale, false);
    if (*upsample) return cmd_resample(run, a, b, scale, true);
    if (*init) return cmd_init(run, a, zero);
    if (*train) return cmd_train(run, scenes, out_dir);
    if (*infer) return cmd_infer(run, a, b, c);
    if (*eval) return cmd_eval(run, a, b);
    if (*profile) return cmd_profile(run, height, width, out_dir);
    if (*gradcheck) return cmd_gradcheck(run, gh, gw, gc, tolerance);
    if (*dump) return cmd_dump_features(run, a, b, out_dir);
  } catch (const Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[internal]: %s\n", e.what());
    return 1;
  }
  return 0;
}
