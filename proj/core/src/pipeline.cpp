#include "twinsim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "twinsim/errors.hpp"
#include "twinsim/io.hpp"
#include "twinsim/numeric.hpp"
#include "twinsim/rng.hpp"
#include "twinsim/theory.hpp"

namespace twinsim {

namespace {

std::uint32_t resolve_margin(const ExperimentConfig& cfg) {
  if (cfg.analysis.margin >= 0) return std::uint32_t(cfg.analysis.margin);
  const int bin = cfg.detector.bin_factor;
  const int r = cfg.source.kernel.radius;
  return std::uint32_t((r + bin - 1) / bin);  // kernel radius in analysis pixels
}

ShiftVector resolve_shift(const ExperimentConfig& cfg) {
  if (cfg.analysis.shift) return *cfg.analysis.shift;
  const int bin = cfg.detector.bin_factor;
  const int r_binned = (cfg.source.kernel.radius + bin - 1) / bin;
  // Default decorrelation shift: safely beyond the correlation length,
  // never zero (a zero shift would reproduce the quantum estimator).
  return ShiftVector{std::max(1, 4 * r_binned), 0};
}

double region_mean(const RealFrameStack& stack, const Region& region) {
  NeumaierSum sum;
  for (std::size_t f = 0; f < stack.n_frames(); ++f) {
    auto frame = stack.frame(f);
    for (std::uint32_t i : region.indices()) sum.add(frame[i]);
  }
  return sum.value() / (double(stack.n_frames()) * double(region.size()));
}

/// Block-averaged mask values on the analysis (post-binning) grid.
std::vector<double> binned_mask_values(const ObjectMask& mask, int bin) {
  if (bin <= 1) return mask.values();
  const std::uint32_t bw = mask.width() / std::uint32_t(bin);
  const std::uint32_t bh = mask.height() / std::uint32_t(bin);
  std::vector<double> out(std::size_t(bw) * bh, 0.0);
  for (std::uint32_t r = 0; r < bh; ++r) {
    for (std::uint32_t c = 0; c < bw; ++c) {
      double acc = 0.0;
      for (int br = 0; br < bin; ++br) {
        for (int bc = 0; bc < bin; ++bc) {
          acc += mask.alpha(r * bin + br, c * bin + bc);
        }
      }
      out[std::size_t(r) * bw + c] = acc / double(bin * bin);
    }
  }
  return out;
}

}  // namespace

SimulatedStacks simulate_detected(const ExperimentConfig& config, std::uint64_t master_seed,
                                  unsigned threads) {
  config.validate();
  const SourceModel source = config.source.build();
  const Geometry& geom = config.geometry;
  const ObjectMask mask = build_mask(config.object, geom.width, geom.height);
  const DetectorModel& det = config.detector;

  switch (source.kind) {
    case SourceKind::twin: {
      FramePair pre = gen_twin_pairs(source, geom, master_seed, threads);
      FramePair detected = run_chain(pre.signal, pre.idler, mask, det, master_seed, threads);
      return SimulatedStacks{std::move(detected.signal), std::move(detected.idler)};
    }
    case SourceKind::coherent_split: {
      // Equal per-arm budget with the twin source: a Poisson beam of mean
      // 2 n0 split 50/50 leaves n0 per arm. The second output is mirrored
      // so the halves pair under the mirror map like twin beams do.
      FrameStack base = gen_coherent(2.0 * source.n0, geom, master_seed, threads);
      auto [s, i] = split_frames(base, 0.5, master_seed, threads);
      i = i.mirrored();
      FramePair detected = run_chain(s, i, mask, det, master_seed, threads);
      return SimulatedStacks{std::move(detected.signal), std::move(detected.idler)};
    }
    case SourceKind::coherent:
    case SourceKind::thermal: {
      FrameStack stack = source.kind == SourceKind::coherent
                             ? gen_coherent(source.n0, geom, master_seed, threads)
                             : gen_thermal(source.n0, source.modes, geom, master_seed, threads);
      stack = apply_object(stack, mask, master_seed, threads);
      stack = apply_loss(stack, det.eta_signal, master_seed, threads);
      stack = add_background(stack, det, master_seed, threads);
      stack = bin_pixels(stack, det.bin_factor);
      return SimulatedStacks{std::move(stack), std::nullopt};
    }
  }
  throw config_error("simulate: unknown source kind");
}

CalibrationData run_calibration(const ExperimentConfig& config, unsigned threads) {
  if (config.analysis.calib_frames < 2) {
    throw config_error("calibration: calib_frames must be >= 2");
  }
  ExperimentConfig calib_cfg = config;
  calib_cfg.object.kind = "none";
  calib_cfg.object.alpha = 0.0;
  calib_cfg.object.path.clear();
  calib_cfg.geometry.n_frames = config.analysis.calib_frames;

  const std::uint64_t master = rng::derive_seed(config.seed, rng::Stream::calibration, 0);
  SimulatedStacks stacks = simulate_detected(calib_cfg, master, threads);
  if (!stacks.is_pair()) {
    throw config_error("calibration: source kind does not produce a beam pair");
  }
  RealFramePair real = to_real(stacks.pair());

  CalibrationData out;
  if (config.analysis.flat_field) {
    out.gains_signal = flat_field_gains(real.signal);
    out.gains_idler = flat_field_gains(real.idler);
  }
  RealFramePair corrected{apply_gains(real.signal, out.gains_signal),
                          apply_gains(real.idler, out.gains_idler)};

  const Region region = Region::interior(corrected.signal.geometry(), resolve_margin(config));
  out.frame_sigmas = estimate_sigma_stack(corrected, region, threads);
  out.sigma = summarize_sigma(out.frame_sigmas);
  out.excess_idler = estimate_excess_noise(corrected.idler, region);
  out.n_i_ref = region_mean(real.idler, region);
  return out;
}

AnalyzeOptions AnalyzeOptions::from_config(const ExperimentConfig& config) {
  AnalyzeOptions opts;
  opts.flat_field = config.analysis.flat_field;
  opts.shift = resolve_shift(config);
  opts.n_bins = config.analysis.n_bins;
  opts.min_members = config.analysis.min_members;
  opts.margin = resolve_margin(config);
  if (config.object.kind == "uniform") opts.alpha_for_theory = config.object.alpha;
  return opts;
}

AnalysisReport analyze_pair(const FramePair& detected, const AnalyzeOptions& options,
                            const CalibrationData* calib) {
  if (detected.signal.geometry() != detected.idler.geometry()) {
    throw data_error("analyze: signal and idler geometries differ");
  }
  if (detected.signal.n_frames() < 2) throw data_error("analyze: need at least 2 frames");
  const Geometry& geom = detected.signal.geometry();
  const RealFramePair real = to_real(detected);

  AnalysisReport rep;
  rep.region = Region::interior(geom, options.margin);

  // Sigma uses self flat-fielding (gradients live in the frames at hand);
  // the absorption maps use calibration gains so a static object is not
  // divided out with the gradients.
  RealFramePair sigma_pair =
      options.flat_field ? RealFramePair{flat_field(real.signal), flat_field(real.idler)}
                         : real;
  rep.frame_sigmas = estimate_sigma_stack(sigma_pair, rep.region, options.threads);
  rep.sigma = summarize_sigma(rep.frame_sigmas);

  rep.n_i_ref = calib ? calib->n_i_ref : region_mean(real.idler, rep.region);
  rep.excess_idler =
      calib ? calib->excess_idler : estimate_excess_noise(sigma_pair.idler, rep.region);

  RealFramePair alpha_pair = real;
  if (calib && options.flat_field) {
    alpha_pair = RealFramePair{apply_gains(real.signal, calib->gains_signal),
                               apply_gains(real.idler, calib->gains_idler)};
  }

  rep.classes = classify_frames(rep.frame_sigmas, options.n_bins, options.min_members);
  std::vector<int> class_of_frame(detected.signal.n_frames(), -1);
  for (const auto& cls : rep.classes) {
    for (std::size_t f : cls.members) class_of_frame[f] = cls.id;
  }

  std::array<SnrAccumulator, 3> global;
  std::vector<std::array<SnrAccumulator, 3>> per_class(rep.classes.size());
  for (int s = 0; s < 3; ++s) {
    global[s] = SnrAccumulator(geom.width, geom.height, Scheme(s));
    for (auto& pc : per_class) pc[s] = SnrAccumulator(geom.width, geom.height, Scheme(s));
  }

  for (std::size_t f = 0; f < detected.signal.n_frames(); ++f) {
    const AlphaMap maps[3] = {
        alpha_quantum(alpha_pair, f, rep.n_i_ref),
        alpha_diff_classical(alpha_pair, f, options.shift, rep.n_i_ref),
        alpha_direct_classical(alpha_pair.signal, f, rep.n_i_ref),
    };
    for (int s = 0; s < 3; ++s) {
      global[s].add(maps[s]);
      if (class_of_frame[f] >= 0) per_class[std::size_t(class_of_frame[f])][s].add(maps[s]);
    }
  }

  for (int s = 0; s < 3; ++s) {
    rep.snr[s] = global[s].finalize();
    rep.mean_maps[s] = global[s].mean_map();
  }

  {
    const AlphaMap& mq = rep.mean_maps[std::size_t(Scheme::quantum)];
    NeumaierSum sum;
    std::size_t n = 0;
    for (std::uint32_t i : rep.region.indices()) {
      if (!mq.valid(i)) continue;
      sum.add(mq.values[i]);
      ++n;
    }
    rep.alpha_hat = n > 0 ? sum.value() / double(n) : 0.0;
  }
  rep.alpha_for_theory = options.alpha_for_theory == options.alpha_for_theory
                             ? options.alpha_for_theory
                             : std::clamp(rep.alpha_hat, 0.0, 1.0);

  rep.r_cl = r_ratio(rep.snr[std::size_t(Scheme::quantum)],
                     rep.snr[std::size_t(Scheme::direct_classical)], rep.region);
  rep.r_dcl = r_ratio(rep.snr[std::size_t(Scheme::quantum)],
                      rep.snr[std::size_t(Scheme::diff_classical)], rep.region);

  const double sigma_for_theory = calib ? calib->sigma.mean : rep.sigma.mean;
  const theory::TheoryPoint point{rep.alpha_for_theory, sigma_for_theory, rep.excess_idler,
                                  0.0, 1.0};
  rep.r_cl_theory = theory::r_direct_classical(point);
  rep.r_dcl_theory = theory::r_diff_classical(point);

  for (auto& cls : rep.classes) {
    auto& pc = per_class[std::size_t(cls.id)];
    const SnrReport snr_q = pc[std::size_t(Scheme::quantum)].finalize();
    const SnrReport snr_dcl = pc[std::size_t(Scheme::diff_classical)].finalize();
    const SnrReport snr_cl = pc[std::size_t(Scheme::direct_classical)].finalize();
    const RatioEstimate rc = r_ratio(snr_q, snr_cl, rep.region);
    const RatioEstimate rd = r_ratio(snr_q, snr_dcl, rep.region);
    cls.r_cl = rc.value;
    cls.r_cl_err = rc.se;
    cls.r_dcl = rd.value;
    cls.r_dcl_err = rd.se;
    const theory::TheoryPoint cp{rep.alpha_for_theory, cls.sigma_j, rep.excess_idler, 0.0, 1.0};
    rep.class_r_cl_theory.push_back(theory::r_direct_classical(cp));
    rep.class_r_dcl_theory.push_back(theory::r_diff_classical(cp));
  }
  return rep;
}

SimulateOutputs run_simulate(const ExperimentConfig& config,
                             const std::filesystem::path& out_dir, unsigned threads) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  const std::uint64_t master = rng::derive_seed(config.seed, rng::Stream::run, 0);
  SimulatedStacks stacks = simulate_detected(config, master, threads);

  SimulateOutputs out;
  if (stacks.is_pair()) {
    io::write_fstk(out_dir / "signal.fstk", stacks.signal);
    io::write_fstk(out_dir / "idler.fstk", *stacks.idler);
    out.files = {"signal.fstk", "idler.fstk"};
  } else {
    io::write_fstk(out_dir / "single.fstk", stacks.signal);
    out.files = {"single.fstk"};
  }
  out.files.push_back("manifest.json");
  write_manifest(out_dir / "manifest.json", config, out.files);
  return out;
}

namespace {

void write_sigma_csv(const std::filesystem::path& path,
                     std::span<const SigmaEstimate> sigmas) {
  io::CsvWriter csv(path);
  csv.row({"frame_id", "sigma", "mean_signal", "mean_idler"});
  for (const auto& s : sigmas) {
    csv.row({std::to_string(s.frame_id), io::format_double(s.sigma),
             io::format_double(s.mean_signal), io::format_double(s.mean_idler)});
  }
}

void write_class_csv(const std::filesystem::path& path, const AnalysisReport& rep) {
  io::CsvWriter csv(path);
  csv.row({"j", "sigma_j", "n_frames", "R_cl", "R_cl_err", "R_dcl", "R_dcl_err", "R_cl_theory",
           "R_dcl_theory"});
  for (std::size_t k = 0; k < rep.classes.size(); ++k) {
    const auto& c = rep.classes[k];
    csv.row({std::to_string(c.id), io::format_double(c.sigma_j),
             std::to_string(c.members.size()), io::format_double(c.r_cl),
             io::format_double(c.r_cl_err), io::format_double(c.r_dcl),
             io::format_double(c.r_dcl_err), io::format_double(rep.class_r_cl_theory[k]),
             io::format_double(rep.class_r_dcl_theory[k])});
  }
}

io::AffineScale common_scale(const std::array<AlphaMap, 3>& maps) {
  std::vector<double> all;
  for (const auto& m : maps) all.insert(all.end(), m.values.begin(), m.values.end());
  return io::auto_scale(all);
}

}  // namespace

AnalyzeOutputs run_analyze(const FramePair& detected, const ExperimentConfig& config,
                           const std::filesystem::path& out_dir, const CalibrationData* calib,
                           unsigned threads) {
  std::filesystem::create_directories(out_dir);
  AnalyzeOptions opts = AnalyzeOptions::from_config(config);
  opts.threads = threads;

  AnalyzeOutputs out;
  out.report = analyze_pair(detected, opts, calib);

  write_sigma_csv(out_dir / "sigma_frames.csv", out.report.frame_sigmas);
  write_class_csv(out_dir / "classes.csv", out.report);
  out.files = {"sigma_frames.csv", "classes.csv"};

  // The three mean absorption maps share one gray scale.
  const io::AffineScale scale = common_scale(out.report.mean_maps);
  for (int s = 0; s < 3; ++s) {
    const std::string name = std::string("alpha_") + scheme_tag(Scheme(s)) + "_mean.pgm";
    io::write_map_pgm(out_dir / name, out.report.mean_maps[std::size_t(s)], scale);
    out.files.push_back(name);
    out.files.push_back(name + ".json");
  }
  return out;
}

AnalyzeOutputs run_analyze_files(const std::filesystem::path& signal_path,
                                 const std::filesystem::path& idler_path,
                                 const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir, unsigned threads) {
  FramePair pair{io::read_fstk(signal_path), io::read_fstk(idler_path)};
  if (pair.signal.geometry() != pair.idler.geometry()) {
    throw data_error("analyze: stack geometries do not match");
  }
  return run_analyze(pair, config, out_dir, nullptr, threads);
}

SweepResult run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                      unsigned threads) {
  config.validate();
  std::vector<double> targets = config.sweep.sigmas;
  if (targets.empty()) {
    for (double eta : config.sweep.etas) targets.push_back(1.0 - eta);
  }
  if (targets.size() < 2) throw config_error("sweep: need at least 2 points");
  if (config.object.kind == "none") {
    throw config_error("sweep: an absorbing object is required to measure SNR");
  }
  std::filesystem::create_directories(out_dir);

  SweepResult result;
  for (std::size_t idx = 0; idx < targets.size(); ++idx) {
    ExperimentConfig point_cfg = config;
    point_cfg.detector.eta_signal = 1.0 - targets[idx];
    point_cfg.detector.eta_idler = 1.0 - targets[idx];
    if (config.sweep.frames_per_point > 0) {
      point_cfg.geometry.n_frames = config.sweep.frames_per_point;
    }
    point_cfg.seed = rng::derive_seed(config.seed, rng::Stream::sweep_point, idx);

    const CalibrationData calib = run_calibration(point_cfg, threads);
    SimulatedStacks stacks = simulate_detected(
        point_cfg, rng::derive_seed(point_cfg.seed, rng::Stream::run, 0), threads);
    if (!stacks.is_pair()) throw config_error("sweep: source must produce a beam pair");

    AnalyzeOptions opts = AnalyzeOptions::from_config(point_cfg);
    opts.threads = threads;
    const AnalysisReport rep = analyze_pair(stacks.pair(), opts, &calib);

    SweepPoint p;
    p.sigma_target = targets[idx];
    p.eta = point_cfg.detector.eta_signal;
    p.sigma_measured = calib.sigma.mean;
    p.sigma_se = calib.sigma.se;
    p.excess = calib.excess_idler;
    p.alpha_hat = rep.alpha_hat;
    p.r_cl = rep.r_cl;
    p.r_dcl = rep.r_dcl;
    p.r_cl_theory = rep.r_cl_theory;
    p.r_dcl_theory = rep.r_dcl_theory;
    p.n_frames = point_cfg.geometry.n_frames;
    result.points.push_back(p);
  }

  std::sort(result.points.begin(), result.points.end(),
            [](const SweepPoint& a, const SweepPoint& b) {
              return a.sigma_measured < b.sigma_measured;
            });
  std::vector<double> sig, rcl, rdcl;
  for (const auto& p : result.points) {
    sig.push_back(p.sigma_measured);
    rcl.push_back(p.r_cl.value);
    rdcl.push_back(p.r_dcl.value);
  }
  result.r_cl_crossing = r_unity_crossing(sig, rcl);
  result.r_dcl_crossing = r_unity_crossing(sig, rdcl);

  {
    io::CsvWriter csv(out_dir / "sweep.csv");
    csv.row({"point", "eta", "sigma_target", "sigma_meas", "sigma_err", "excess", "alpha_hat",
             "R_cl", "R_cl_err", "R_cl_theory", "R_dcl", "R_dcl_err", "R_dcl_theory",
             "n_frames"});
    for (std::size_t i = 0; i < result.points.size(); ++i) {
      const auto& p = result.points[i];
      csv.row({std::to_string(i), io::format_double(p.eta), io::format_double(p.sigma_target),
               io::format_double(p.sigma_measured), io::format_double(p.sigma_se),
               io::format_double(p.excess), io::format_double(p.alpha_hat),
               io::format_double(p.r_cl.value), io::format_double(p.r_cl.se),
               io::format_double(p.r_cl_theory), io::format_double(p.r_dcl.value),
               io::format_double(p.r_dcl.se), io::format_double(p.r_dcl_theory),
               std::to_string(p.n_frames)});
    }
  }
  {
    const double alpha = config.object.alpha;
    const double lo = *std::min_element(sig.begin(), sig.end());
    const double hi = *std::max_element(sig.begin(), sig.end());
    io::CsvWriter csv(out_dir / "theory_curves.csv");
    csv.row({"sigma", "R_cl", "R_dcl"});
    for (const auto& cp : theory::tabulate_r_curves(alpha, 0.0, lo, hi, 101)) {
      csv.row({io::format_double(cp.sigma), io::format_double(cp.r_cl),
               io::format_double(cp.r_dcl)});
    }
  }
  result.files = {"sweep.csv", "theory_curves.csv", "manifest.json"};
  write_manifest(out_dir / "manifest.json", config, result.files);
  return result;
}

DemoResult run_demo_pi(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                       unsigned threads) {
  config.validate();
  if (config.object.kind != "pi") {
    throw config_error("demo-pi: config must select the pi glyph object");
  }
  std::filesystem::create_directories(out_dir);

  const CalibrationData calib = run_calibration(config, threads);
  SimulatedStacks stacks =
      simulate_detected(config, rng::derive_seed(config.seed, rng::Stream::demo, 0), threads);
  if (!stacks.is_pair()) throw config_error("demo-pi: source must produce a beam pair");
  const FramePair detected = stacks.pair();
  const Geometry& geom = detected.signal.geometry();

  RealFramePair real = to_real(detected);
  if (config.analysis.flat_field) {
    real = RealFramePair{apply_gains(real.signal, calib.gains_signal),
                         apply_gains(real.idler, calib.gains_idler)};
  }

  const ShiftVector shift = resolve_shift(config);
  std::array<SnrAccumulator, 3> acc;
  for (int s = 0; s < 3; ++s) acc[s] = SnrAccumulator(geom.width, geom.height, Scheme(s));
  for (std::size_t f = 0; f < detected.signal.n_frames(); ++f) {
    acc[0].add(alpha_quantum(real, f, calib.n_i_ref));
    acc[1].add(alpha_diff_classical(real, f, shift, calib.n_i_ref));
    acc[2].add(alpha_direct_classical(real.signal, f, calib.n_i_ref));
  }
  std::array<AlphaMap, 3> maps{acc[0].mean_map(), acc[1].mean_map(), acc[2].mean_map()};

  // Truth on the analysis grid, for residuals and the glyph contrast.
  const ObjectMask mask = build_mask(config.object, config.geometry.width,
                                     config.geometry.height);
  const std::vector<double> truth = binned_mask_values(mask, config.detector.bin_factor);
  const Region region = Region::interior(geom, resolve_margin(config));

  std::array<double, 3> rms{};
  for (int s = 0; s < 3; ++s) {
    NeumaierSum sq;
    std::size_t n = 0;
    for (std::uint32_t i : region.indices()) {
      bool ok = true;
      for (int t = 0; t < 3; ++t) ok = ok && maps[std::size_t(t)].valid(i);
      if (!ok) continue;  // compare the schemes on a common pixel set
      const double d = maps[std::size_t(s)].values[i] - truth[i];
      sq.add(d * d);
      ++n;
    }
    rms[std::size_t(s)] = n > 0 ? std::sqrt(sq.value() / double(n)) : 0.0;
  }

  DemoResult out;
  out.rms_q = rms[0];
  out.rms_dcl = rms[1];
  out.rms_cl = rms[2];

  {
    // Glyph membership comes from the glyph shape, not the run's alpha, so
    // the contrast test stays meaningful for a fully transparent object.
    const ObjectMask shape = ObjectMask::pi_glyph(config.geometry.width,
                                                  config.geometry.height, 1.0);
    const std::vector<double> shape_binned =
        binned_mask_values(shape, config.detector.bin_factor);
    const AlphaMap& mq = maps[0];
    std::vector<double> glyph, background;
    for (std::uint32_t i : region.indices()) {
      if (!mq.valid(i)) continue;
      (shape_binned[i] > 0.0 ? glyph : background).push_back(mq.values[i]);
    }
    if (!glyph.empty() && !background.empty()) {
      const auto g = mean_variance(glyph);
      const auto b = mean_variance(background);
      out.glyph_contrast_q = g.mean - b.mean;
      out.glyph_contrast_q_se =
          std::sqrt(g.var_sample / double(g.n) + b.var_sample / double(b.n));
    }
  }

  const io::AffineScale scale = common_scale(maps);
  for (int s = 0; s < 3; ++s) {
    const std::string name = std::string("alpha_") + scheme_tag(Scheme(s)) + ".pgm";
    io::write_map_pgm(out_dir / name, maps[std::size_t(s)], scale);
    out.files.push_back(name);
    out.files.push_back(name + ".json");
  }
  out.files.push_back("manifest.json");
  write_manifest(out_dir / "manifest.json", config, out.files);
  return out;
}

void run_render(const std::filesystem::path& stack_path, std::optional<std::size_t> frame,
                const std::filesystem::path& out_pgm) {
  const FrameStack stack = io::read_fstk(stack_path);
  const std::size_t npix = stack.n_pixels();
  std::vector<double> values(npix, 0.0);
  std::string kind;
  if (frame) {
    if (*frame >= stack.n_frames()) throw data_error("render: frame index out of range");
    auto f = stack.frame(*frame);
    for (std::size_t i = 0; i < npix; ++i) values[i] = f[i];
    kind = "counts_frame_" + std::to_string(*frame);
  } else {
    std::vector<double> comp(npix, 0.0);
    for (std::size_t fi = 0; fi < stack.n_frames(); ++fi) {
      auto f = stack.frame(fi);
      for (std::size_t i = 0; i < npix; ++i) {
        const double v = f[i];
        const double t = values[i] + v;
        comp[i] += std::abs(values[i]) >= std::abs(v) ? (values[i] - t) + v : (v - t) + values[i];
        values[i] = t;
      }
    }
    for (std::size_t i = 0; i < npix; ++i) {
      values[i] = (values[i] + comp[i]) / double(stack.n_frames());
    }
    kind = "counts_mean";
  }
  io::write_values_pgm(out_pgm, values, stack.geometry().width, stack.geometry().height,
                       io::auto_scale(values), 65535, kind);
}

}  // namespace twinsim
