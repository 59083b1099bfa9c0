// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Arguments, when given, select criteria by number.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "lfmdt/complexity.hpp"
#include "lfmdt/error.hpp"
#include "lfmdt/lightfield.hpp"
#include "lfmdt/mdt.hpp"
#include "lfmdt/network.hpp"
#include "lfmdt/ops.hpp"
#include "lfmdt/training.hpp"
#include "lfmdt/verify.hpp"
#include "oracles.hpp"

#ifndef LFMDT_SOURCE_DIR
#error "LFMDT_SOURCE_DIR must point at the repository root"
#endif

namespace fs = std::filesystem;
using namespace lfmdt;

namespace {

const fs::path kConfigs = fs::path(LFMDT_SOURCE_DIR) / "configs";

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

NetworkConfig load_config(const std::string& name) {
  return network_config_from(read_settings(kConfigs / name));
}

template <typename T>
bool bit_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(T)) == 0;
}

// ---------------------------------------------------------------------------

Outcome gradient_integrity() {
  const NetworkConfig toy = load_config("toy.conf");
  const auto t0 = Clock::now();
  const NetworkCheckProblem p = make_check_problem(toy, 8, 8, 0);
  GradCheckOptions opt;
  opt.h = 1e-3;
  opt.coordinates = 200;
  const GradCheckResult r = network_gradcheck(p, opt);
  const double secs = seconds_since(t0);

  std::set<std::size_t> arrays;
  for (const auto& s : r.samples) arrays.insert(s.array);
  std::set<std::string> families;
  const auto& entries = p.params.entries();
  for (std::size_t a : arrays) {
    const std::string& n = entries[a].name;
    families.insert(n.substr(n.rfind('.') + 1));
  }
  const bool covered = arrays.size() == entries.size();
  const bool pass = covered && r.samples.size() == 200 && r.max_rel_error <= 1e-4 && secs <= 60.0;
  return {pass, fmt("max rel err %.2e (<= 1e-4) over %zu coordinates, %zu/%zu arrays, %zu "
                    "families, %.1f s (<= 60 s)",
                    r.max_rel_error, r.samples.size(), arrays.size(), entries.size(),
                    families.size(), secs)};
}

Outcome dsa_oracle() {
  const auto t0 = Clock::now();
  oracle::Rng rng(2026);
  double worst = 0.0;
  const int cases = 40;
  for (int i = 0; i < cases; ++i) {
    const oracle::MdtCase c = oracle::random_mdt_case(rng);
    const std::size_t per = c.config.branch_channels();
    for (std::size_t j = 0; j < c.params.size(); ++j) {
      const auto xj = oracle::channel_slice(c.x, j * per, (j + 1) * per);
      const auto& p = c.params[j];
      worst = std::max(worst, oracle::max_abs_diff(dsa_forward(xj, p),
                                                   oracle::dsa(xj, p.subset.coords(), p.disparity,
                                                               p.query, p.key)));
    }
    worst = std::max(worst, oracle::max_abs_diff(mdt_forward(c.x, c.config, c.params),
                                                 oracle::mdt(c.x, c.params)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs <= 10.0,
          fmt("%d random configurations, max abs diff %.2e (<= 1e-12), %.2f s (<= 10 s)", cases,
              worst, secs)};
}

template <typename T>
struct RowSumMonitor {
  double worst = 0.0;
  std::size_t rows = 0;
  bool finite = true;

  void attach(Graph<T>& g) {
    g.set_softmax_observer([this](const Tensor<T>& p) {
      const std::size_t cols = p.shape().back();
      for (std::size_t r = 0; r < p.size() / cols; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          const double v = p[r * cols + c];
          finite = finite && std::isfinite(v);
          s += v;
        }
        worst = std::max(worst, std::abs(s - 1.0));
        ++rows;
      }
    });
  }
};

template <typename T>
void observe_network(RowSumMonitor<T>& m, const NetworkConfig& cfg, double magnitude,
                     std::uint64_t seed) {
  oracle::Rng rng(seed);
  const auto lr = oracle::random_tensor<T>(Shape{cfg.U, cfg.V, 6, 6, 1}, rng, 0.0, magnitude);
  const ParameterStore<T> params = init_params<T>(cfg, seed);
  Graph<T> g;
  m.attach(g);
  BoundParams<T> bound(g, params, false);
  lf_mdtnet_forward(g.constant(lr), cfg, bound);
}

template <typename T>
void observe_dsa(RowSumMonitor<T>& m, double magnitude, std::uint64_t seed) {
  oracle::Rng rng(seed);
  const SaiSubset subset({{0, 0}, {1, 1}, {2, 2}});
  const auto x = oracle::random_tensor<T>(Shape{3, 3, 5, 5, 4}, rng, -magnitude, magnitude);
  Graph<T> g;
  m.attach(g);
  const DsaBranchVars<T> p{g.constant(oracle::random_tensor<T>(Shape{12, 8}, rng)),
                           g.constant(oracle::random_tensor<T>(Shape{8, 4}, rng)),
                           g.constant(oracle::random_tensor<T>(Shape{8, 4}, rng))};
  dsa_forward(g.constant(x), subset, p);
}

Outcome attention_normalisation() {
  RowSumMonitor<float> f32;
  RowSumMonitor<double> f64;
  const NetworkConfig toy = load_config("toy.conf");
  NetworkConfig wide;
  wide.blocks = 1;
  for (double mag : {1.0, 1e3}) {
    for (std::uint64_t seed : {1u, 2u}) {
      observe_network(f32, toy, mag, seed);
      observe_network(f64, toy, mag, seed);
      observe_network(f32, wide, mag, seed);
      observe_dsa(f32, mag, seed);
      observe_dsa(f64, mag, seed);
    }
  }
  const double worst = std::max(f32.worst, f64.worst);
  const bool pass = f32.finite && f64.finite && f32.rows > 0 && f64.rows > 0 && worst <= 1e-6;
  return {pass, fmt("%zu f32 rows, %zu f64 rows, inputs up to 1e3: max |row sum - 1| %.2e "
                    "(<= 1e-6)",
                    f32.rows, f64.rows, worst)};
}

Outcome architecture_identity() {
  std::vector<std::pair<std::string, NetworkConfig>> configs = {{"toy", load_config("toy.conf")},
                                                                {"default", NetworkConfig{}}};
  NetworkConfig x4;
  x4.blocks = 2;
  x4.scale = 4;
  configs.emplace_back("default r=4", x4);
  std::string detail;
  bool pass = true;
  oracle::Rng rng(4);
  for (const auto& [name, cfg] : configs) {
    const auto lr = oracle::random_tensor<float>(Shape{cfg.U, cfg.V, 12, 10, 1}, rng, 0.0, 1.0);
    const Tensor<float> out = lf_mdtnet_forward(lr, cfg, zero_params<float>(cfg));
    const Tensor<float> bic = bicubic_resize_sais(lr, static_cast<double>(cfg.scale));
    const bool same = bit_equal(out, bic);
    pass = pass && same;
    detail += (detail.empty() ? "" : ", ") + name + (same ? " bit-exact" : " DIFFERS");
  }
  return {pass, "zero weights vs bicubic at f32: " + detail};
}

Outcome complexity_crosscheck() {
  std::string detail;
  bool pass = true;
  oracle::Rng rng(5);
  for (const auto& [name, cfg, hw] :
       std::vector<std::tuple<std::string, NetworkConfig, std::size_t>>{
           {"toy", load_config("toy.conf"), 8}, {"default", NetworkConfig{}, 32}}) {
    const auto lr = oracle::random_tensor<float>(Shape{cfg.U, cfg.V, hw, hw, 1}, rng, 0.0, 1.0);
    const ParameterStore<float> params = init_params<float>(cfg, 0);
    const VerifyResult v = verify_against_instrumented(cfg, lr, params);
    const ComplexityReport rep = network_analytic(cfg, hw, hw);
    const bool ok = v.ok && v.analytic_total == v.instrumented_total &&
                    rep.total_params() == params.total_count();
    pass = pass && ok;
    detail += fmt("%s%s: MACs %llu/%llu, params %llu/%llu", detail.empty() ? "" : "; ",
                  name.c_str(), (unsigned long long)v.analytic_total,
                  (unsigned long long)v.instrumented_total,
                  (unsigned long long)rep.total_params(),
                  (unsigned long long)params.total_count());
    if (name == "default") {
      detail += " | ratios vs baseline:";
      for (const auto& r : rep.ratios) {
        detail += " " + r.category + " " + format_ratio(r.mdt, r.baseline);
      }
      detail += " | published: projection 33%, qk 32% (not asserted)";
    }
    for (const auto& d : v.diffs) detail += " [" + d + "]";
  }
  return {pass, detail};
}

Outcome toy_learning() {
  const auto t0 = Clock::now();
  TrainConfig train;
  Settings net_settings;
  for (const auto& [k, v] : read_settings(kConfigs / "learning.conf")) {
    if (!apply_train_setting(train, k, v)) net_settings.emplace_back(k, v);
  }
  const NetworkConfig net = network_config_from(net_settings);
  const bool setup = net.blocks == 2 && net.channels == 16 && net.scale == 2 &&
                     train.steps == 500 && train.lr == 2e-4 && train.patch == 32 &&
                     train.decay_step == 0;
  const SceneSpec spec = read_scene_spec(kConfigs / "two_layer_scene.json");
  const LightField hr = synth_lightfield(spec);
  const TrainResult r = train_toy(net, {hr}, train);

  const LightField lr = degrade(hr, net.scale);
  const LightField sr(lf_mdtnet_forward(lr.tensor(), net, r.params));
  const double psnr_bic = psnr_y(upsample_bicubic(lr, net.scale), hr);
  const double psnr_sr = psnr_y(sr, hr);
  const double secs = seconds_since(t0);
  const bool a = r.final_loss <= r.initial_loss / 10.0;
  const bool b = psnr_sr >= psnr_bic + 1.0;
  return {setup && a && b && secs <= 900.0,
          fmt("(a) L1 %.5f -> %.5f, ratio %.2f (>= 10) %s; (b) PSNR bicubic %.2f dB, SR %.2f dB, "
              "gain %.2f dB (>= 1) %s; %.0f s (<= 900 s)",
              r.initial_loss, r.final_loss, r.initial_loss / r.final_loss, a ? "ok" : "MISSED",
              psnr_bic, psnr_sr, psnr_sr - psnr_bic, b ? "ok" : "MISSED", secs)};
}

Outcome generator_fidelity() {
  double worst = 0.0;
  std::string detail;
  for (double d : {0.5, 1.0, 2.0}) {
    SceneSpec s;
    s.U = s.V = 5;
    s.H = s.W = 64;
    SceneLayer layer;
    layer.disparity = d;
    layer.texture = random_texture(static_cast<std::uint64_t>(d * 10));
    s.layers.push_back(layer);
    const LightField lf = synth_lightfield(s);
    double sum = 0.0;
    int n = 0;
    for (std::size_t y = 8; y < 56; y += 8) {
      const double slope = estimate_epi_slope(extract_epi(lf, 2, y), 3.0, 8, 56);
      worst = std::max(worst, std::abs(slope - d));
      sum += slope;
      ++n;
    }
    detail += fmt("%sd=%.1f mean slope %.3f", detail.empty() ? "" : ", ", d, sum / n);
  }
  // Two-layer scene: background above the inset, foreground inside it.
  const LightField two = synth_lightfield(layered_scene(5, 5, 64, 64, {0.5, 2.0}, 7));
  const double back = estimate_epi_slope(extract_epi(two, 2, 4), 3.0, 8, 56);
  const double front = estimate_epi_slope(extract_epi(two, 2, 32), 3.0, 24, 40);
  worst = std::max({worst, std::abs(back - 0.5), std::abs(front - 2.0)});
  detail += fmt("; layered 0.5/2.0 -> %.3f/%.3f; worst error %.3f px (<= 0.25)", back, front,
                worst);
  return {worst <= 0.25, detail};
}

Outcome ablation_harness() {
  std::string detail;
  bool pass = true;
  const auto t0 = Clock::now();
  for (char row = 'a'; row <= 'i'; ++row) {
    const std::string file = std::string(1, row) + ".conf";
    bool ok = false;
    double err = 0.0;
    try {
      const NetworkConfig cfg = load_config("ablation/" + file);
      oracle::Rng rng(static_cast<std::uint64_t>(row));
      const auto lr = oracle::random_tensor<float>(Shape{cfg.U, cfg.V, 8, 8, 1}, rng, 0.0, 1.0);
      const Tensor<float> out = lf_mdtnet_forward(lr, cfg, init_params<float>(cfg, 0));
      bool finite = true;
      for (float v : out.values()) finite = finite && std::isfinite(v);
      GradCheckOptions opt;
      opt.coordinates = 60;
      err = network_gradcheck(make_check_problem(cfg, 6, 6, 1), opt).max_rel_error;
      ok = finite && out.shape() == (Shape{cfg.U, cfg.V, 16, 16, 1}) && err <= 1e-4;
    } catch (const Error& e) {
      detail += fmt(" [%c: %s]", row, e.what());
    }
    pass = pass && ok;
    detail += fmt("%s(%c) %s %.1e", row == 'a' ? "" : ", ", row, ok ? "ok" : "FAILED", err);
  }
  detail += fmt("; gradcheck tolerance 1e-4; %.1f s", seconds_since(t0));
  return {pass, detail};
}

Outcome format_round_trips() {
  std::mt19937_64 rng(9);
  auto below = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  const fs::path dir = fs::temp_directory_path() / ("lfmdt_acceptance_" + std::to_string(rng()));
  fs::create_directories(dir);
  int lfb_ok = 0, ckpt_ok = 0;
  const int cases = 120;
  for (int i = 0; i < cases; ++i) {
    LightField lf(1 + below(5), 1 + below(5), 1 + below(12), 1 + below(12), below(2) ? 3 : 1);
    for (auto& v : lf.tensor().values()) {
      // Include the exact end points and values that are not short decimals.
      const std::size_t k = below(10);
      v = k == 0 ? 0.0f : k == 1 ? 1.0f : std::ldexp(static_cast<float>(rng() >> 40), -24);
    }
    const fs::path f = dir / ("f" + std::to_string(i) + ".lfb");
    write_lfb(lf, f);
    std::vector<std::string> warnings;
    const LightField back = read_lfb(f, &warnings);
    if (warnings.empty() && bit_equal(back.tensor(), lf.tensor()) &&
        encode_lfb(back) == encode_lfb(lf)) {
      ++lfb_ok;
    }

    ParameterStore<float> store;
    const std::size_t n = 1 + below(6);
    for (std::size_t j = 0; j < n; ++j) {
      Shape shape(1 + below(4));
      for (auto& e : shape) e = 1 + below(5);
      Tensor<float> t(shape);
      for (auto& v : t.values()) {
        v = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
        if (!std::isfinite(v)) v = -0.0f;
      }
      store.add("p" + std::to_string(i) + ".w" + std::to_string(j), std::move(t));
    }
    const fs::path c = dir / ("c" + std::to_string(i) + ".lfmw");
    write_checkpoint(store, c);
    const ParameterStore<float> sback = read_checkpoint(c);
    bool same = sback.size() == store.size();
    for (std::size_t j = 0; same && j < store.size(); ++j) {
      same = sback.entries()[j].name == store.entries()[j].name &&
             bit_equal(sback.entries()[j].value, store.entries()[j].value);
    }
    if (same && encode_checkpoint(sback) == encode_checkpoint(store)) ++ckpt_ok;
  }
  fs::remove_all(dir);
  return {lfb_ok == cases && ckpt_ok == cases,
          fmt(".lfb %d/%d bit-exact, LFMW %d/%d bit-exact", lfb_ok, cases, ckpt_ok, cases)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "gradient integrity", gradient_integrity},
      {2, "DSA oracle equivalence", dsa_oracle},
      {3, "attention normalisation", attention_normalisation},
      {4, "architecture identity", architecture_identity},
      {5, "complexity cross-check", complexity_crosscheck},
      {6, "toy learning", toy_learning},
      {7, "generator fidelity", generator_fidelity},
      {8, "ablation harness", ablation_harness},
      {9, "format round trips", format_round_trips},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
