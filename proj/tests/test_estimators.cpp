#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "twinsim/detector.hpp"
#include "twinsim/errors.hpp"
#include "twinsim/estimators.hpp"
#include "twinsim/source.hpp"
#include "twinsim/theory.hpp"

using namespace twinsim;

namespace {

RealFramePair real_pair(std::uint32_t w, std::uint32_t h, std::uint32_t frames,
                        std::vector<double> signal, std::vector<double> idler) {
  Geometry geom{w, h, frames};
  RealFramePair p{RealFrameStack(geom, Arm::signal), RealFrameStack(geom, Arm::idler)};
  p.signal.data() = std::move(signal);
  p.idler.data() = std::move(idler);
  return p;
}

SourceModel twin_source(double n0, double modes) {
  SourceModel s;
  s.kind = SourceKind::twin;
  s.n0 = n0;
  s.modes = modes;
  return s;
}

RealFramePair detected_twin(double n0, double modes, double eta, double alpha, Geometry geom,
                            std::uint64_t seed) {
  auto pre = gen_twin_pairs(twin_source(n0, modes), geom, seed);
  DetectorModel det;
  det.eta_signal = det.eta_idler = eta;
  auto pair = run_chain(pre.signal, pre.idler,
                        ObjectMask::uniform(geom.width, geom.height, alpha), det, seed + 1);
  return to_real(pair);
}

}  // namespace

TEST_CASE("estimate_sigma: arithmetic cases") {
  SUBCASE("two-pixel example evaluates to 2") {
    auto p = real_pair(2, 1, 1, {0.0, 2.0}, {0.0, 2.0});
    // N_i(m(x)) = [2, 0] against N_s = [0, 2]: differences [2, -2],
    // population variance 4, mean sum 2.
    auto est = estimate_sigma(p, Region::full({2, 1, 1}), 0);
    CHECK(est.sigma == doctest::Approx(2.0));
    CHECK(est.n_pixels == 2);
    CHECK(est.mean_signal == doctest::Approx(1.0));
    CHECK(est.mean_idler == doctest::Approx(1.0));
  }
  SUBCASE("mirror-identical arms give sigma 0") {
    auto pair = gen_twin_pairs(twin_source(100.0, 50.0), {8, 8, 3}, 4);
    auto est = estimate_sigma(to_real(pair), Region::full({8, 8, 3}), 1);
    CHECK(est.sigma == 0.0);
  }
  SUBCASE("empty illumination is an error") {
    auto p = real_pair(2, 2, 1, std::vector<double>(4, 0.0), std::vector<double>(4, 0.0));
    CHECK_THROWS_AS(estimate_sigma(p, Region::full({2, 2, 1}), 0), data_error);
  }
}

TEST_CASE("estimate_sigma: translation invariance under a common offset") {
  auto pair = detected_twin(500.0, 1e4, 0.7, 0.0, {16, 16, 4}, 11);
  const Region region = Region::full({16, 16, 4});
  const auto base = estimate_sigma(pair, region, 2);
  const double c = 100.0;
  RealFramePair shifted = pair;
  for (auto& v : shifted.signal.data()) v += c;
  for (auto& v : shifted.idler.data()) v += c;
  const auto est = estimate_sigma(shifted, region, 2);
  const double mean_sum = base.mean_signal + base.mean_idler;
  CHECK(est.sigma ==
        doctest::Approx(base.sigma * mean_sum / (mean_sum + 2.0 * c)).epsilon(1e-12));
}

TEST_CASE("excess noise estimator") {
  Geometry geom{64, 64, 50};
  const Region region = Region::full(geom);

  SUBCASE("Poisson frames have E near 0") {
    auto stack = to_real(gen_coherent(1000.0, geom, 6));
    CHECK(std::abs(estimate_excess_noise(stack, region)) < 0.02);
  }
  SUBCASE("multithermal frames have E near n0 / M") {
    auto stack = to_real(gen_thermal(1000.0, 1e4, geom, 7));
    CHECK(std::abs(estimate_excess_noise(stack, region) - 0.1) < 0.02);
  }
  SUBCASE("constant frames are maximally sub-Poissonian, E = -1") {
    RealFrameStack flat(geom, Arm::single);
    std::fill(flat.data().begin(), flat.data().end(), 123.0);
    CHECK(estimate_excess_noise(flat, region, 0) == doctest::Approx(-1.0));
  }
  SUBCASE("zero mean is an error") {
    RealFrameStack zeros(geom, Arm::single);
    CHECK_THROWS_AS(estimate_excess_noise(zeros, region, 0), data_error);
  }
}

TEST_CASE("flat field: gain correction" * doctest::timeout(120)) {
  SUBCASE("uniform stack is unchanged and needs at least two frames") {
    Geometry geom{8, 8, 4};
    RealFrameStack flat(geom, Arm::single);
    std::fill(flat.data().begin(), flat.data().end(), 100.0);
    auto out = flat_field(flat);
    CHECK(out.data() == flat.data());
    RealFrameStack one({8, 8, 1}, Arm::single);
    CHECK_THROWS_AS(flat_field(one), data_error);
  }
  SUBCASE("a deterministic linear gradient is removed") {
    Geometry geom{64, 64, 300};
    auto stack = gen_coherent(10000.0, geom, 17);
    RealFrameStack graded = to_real(stack);
    for (std::size_t f = 0; f < geom.n_frames; ++f) {
      auto frame = graded.frame(f);
      for (std::uint32_t r = 0; r < geom.height; ++r) {
        for (std::uint32_t c = 0; c < geom.width; ++c) {
          frame[geom.index(r, c)] =
              std::round(frame[geom.index(r, c)] * (1.0 + 0.1 * double(c) / geom.width));
        }
      }
    }
    auto out = flat_field(graded);

    // Global mean preserved to 1e-9 relative.
    double before = 0.0, after = 0.0;
    for (double v : graded.data()) before += v;
    for (double v : out.data()) after += v;
    CHECK(std::abs(after - before) < 1e-9 * before);

    // Post-correction temporal means uniform within 0.5%.
    const std::size_t npix = geom.n_pixels();
    std::vector<double> temporal(npix, 0.0);
    for (std::size_t f = 0; f < geom.n_frames; ++f) {
      auto frame = out.frame(f);
      for (std::size_t i = 0; i < npix; ++i) temporal[i] += frame[i];
    }
    const double global = after / double(npix * geom.n_frames);
    for (std::size_t i = 0; i < npix; ++i) {
      REQUIRE(std::abs(temporal[i] / double(geom.n_frames) - global) < 0.005 * global);
    }
  }
  SUBCASE("a dead pixel is an error") {
    Geometry geom{4, 4, 3};
    RealFrameStack stack(geom, Arm::single);
    std::fill(stack.data().begin(), stack.data().end(), 5.0);
    for (std::size_t f = 0; f < 3; ++f) stack.frame(f)[7] = 0.0;
    CHECK_THROWS_AS(flat_field(stack), data_error);
  }
}

TEST_CASE("calibrate_center: registration search" * doctest::timeout(120)) {
  Geometry geom{32, 32, 20};
  auto pair = detected_twin(1000.0, 1e4, 0.9, 0.0, geom, 23);

  SUBCASE("registered twins return the zero shift with confidence") {
    auto cal = calibrate_center(pair, 3);
    CHECK(cal.shift == ShiftVector{0, 0});
    CHECK_FALSE(cal.low_confidence);
    CHECK(cal.sigma_at_min == doctest::Approx(0.1).epsilon(0.5));
  }
  SUBCASE("an artificially rolled idler is recovered") {
    const int dx = 3, dy = -2;
    RealFramePair rolled = pair;
    for (std::size_t f = 0; f < geom.n_frames; ++f) {
      auto src = pair.idler.frame(f);
      auto dst = rolled.idler.frame(f);
      for (std::uint32_t r = 0; r < geom.height; ++r) {
        for (std::uint32_t c = 0; c < geom.width; ++c) {
          const std::uint32_t sr = (r - dy + geom.height) % geom.height;
          const std::uint32_t sc = (c - dx + geom.width) % geom.width;
          dst[geom.index(r, c)] = src[geom.index(sr, sc)];
        }
      }
    }
    auto cal = calibrate_center(rolled, 4);
    CHECK(cal.shift == ShiftVector{dx, dy});
    CHECK_FALSE(cal.low_confidence);
  }
  SUBCASE("independent arms are flagged low-confidence") {
    auto a = gen_twin_pairs(twin_source(1000.0, 1e4), geom, 101);
    auto b = gen_twin_pairs(twin_source(1000.0, 1e4), geom, 202);
    RealFramePair indep = to_real(FramePair{a.signal, b.idler});
    auto cal = calibrate_center(indep, 3);
    CHECK(cal.low_confidence);
  }
  SUBCASE("fewer than 10 frames is an error") {
    auto small = detected_twin(100.0, 100.0, 1.0, 0.0, {16, 16, 5}, 3);
    CHECK_THROWS_AS(calibrate_center(small, 2), config_error);
  }
}

TEST_CASE("absorption estimators: arithmetic and reductions") {
  SUBCASE("single-pixel values") {
    auto p = real_pair(1, 1, 1, {95.0}, {100.0});
    CHECK(alpha_quantum(p, 0, 100.0).values[0] == doctest::Approx(0.05));
    CHECK(alpha_direct_classical(p.signal, 0, 100.0).values[0] == doctest::Approx(0.05));
    CHECK_THROWS_AS(alpha_quantum(p, 0, 0.0), config_error);
    CHECK_THROWS_AS(alpha_direct_classical(p.signal, 0, -5.0), config_error);
  }
  SUBCASE("identical arms give the zero map") {
    auto pair = gen_twin_pairs(twin_source(50.0, 10.0), {8, 8, 2}, 9);
    auto rp = to_real(FramePair{pair.signal, pair.idler});
    auto map = alpha_quantum(rp, 0, 50.0);
    for (double v : map.values) CHECK(v == 0.0);
  }
  SUBCASE("zero shift reproduces the quantum estimator exactly") {
    auto pair = detected_twin(300.0, 100.0, 0.8, 0.1, {12, 10, 3}, 31);
    auto q = alpha_quantum(pair, 1, 240.0);
    auto d = alpha_diff_classical(pair, 1, ShiftVector{0, 0}, 240.0);
    CHECK(q.values == d.values);
  }
  SUBCASE("out-of-range shifted references are flagged invalid") {
    auto pair = detected_twin(300.0, 100.0, 1.0, 0.0, {8, 8, 2}, 32);
    auto d = alpha_diff_classical(pair, 0, ShiftVector{3, 0}, 300.0);
    std::size_t invalid = 0;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
      if (!d.valid(i)) ++invalid;
    }
    CHECK(invalid == 3 * 8);  // three columns of mirrored positions run off-grid
  }
  SUBCASE("unbiasedness at the mean: noiseless inputs return alpha exactly") {
    const double nbar = 1000.0, alpha = 0.07;
    auto p = real_pair(4, 4, 1, std::vector<double>(16, (1.0 - alpha) * nbar),
                       std::vector<double>(16, nbar));
    for (double v : alpha_quantum(p, 0, nbar).values) CHECK(v == doctest::Approx(alpha));
    for (double v : alpha_diff_classical(p, 0, {1, 0}, nbar).values) {
      if (v == v) CHECK(v == doctest::Approx(alpha));
    }
    for (double v : alpha_direct_classical(p.signal, 0, nbar).values) {
      CHECK(v == doctest::Approx(alpha));
    }
  }
}

TEST_CASE("absorption estimators: scale invariance") {
  auto pair = detected_twin(500.0, 1e4, 0.7, 0.05, {16, 16, 2}, 41);
  const double ref = 350.0;
  auto base = alpha_quantum(pair, 0, ref);

  RealFramePair scaled4 = pair;
  for (auto& v : scaled4.signal.data()) v *= 4.0;
  for (auto& v : scaled4.idler.data()) v *= 4.0;
  // Power-of-two scaling is exact in floating point.
  CHECK(alpha_quantum(scaled4, 0, 4.0 * ref).values == base.values);

  RealFramePair scaled3 = pair;
  for (auto& v : scaled3.signal.data()) v *= 3.0;
  for (auto& v : scaled3.idler.data()) v *= 3.0;
  auto m3 = alpha_quantum(scaled3, 0, 3.0 * ref);
  for (std::size_t i = 0; i < m3.values.size(); ++i) {
    CHECK(m3.values[i] == doctest::Approx(base.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("snr_map: arithmetic, degeneracy, permutation invariance") {
  SUBCASE("two frames at 0.04 and 0.06") {
    AlphaMap a{1, 1, Scheme::quantum, {0.04}};
    AlphaMap b{1, 1, Scheme::quantum, {0.06}};
    const AlphaMap frames[2] = {a, b};
    auto rep = snr_map(frames);
    CHECK(rep.snr[0] == doctest::Approx(0.05 / 0.0141421356).epsilon(1e-6));
    CHECK(rep.n_defined == 1);
    CHECK(rep.spatial_mean == doctest::Approx(3.5355339).epsilon(1e-6));
  }
  SUBCASE("constant pixels are flagged undefined, not infinite") {
    AlphaMap a{2, 1, Scheme::quantum, {0.05, 0.04}};
    AlphaMap b{2, 1, Scheme::quantum, {0.05, 0.06}};
    const AlphaMap frames[2] = {a, b};
    auto rep = snr_map(frames);
    CHECK(!(rep.snr[0] == rep.snr[0]));  // NaN
    CHECK(rep.snr[1] == rep.snr[1]);
    CHECK(rep.n_defined == 1);
  }
  SUBCASE("fewer than two frames is an error") {
    AlphaMap a{1, 1, Scheme::quantum, {0.05}};
    const AlphaMap frames[1] = {a};
    CHECK_THROWS_AS(snr_map(std::span<const AlphaMap>(frames, 1)), data_error);
  }
  SUBCASE("frame order does not change the report") {
    std::mt19937_64 eng(5);
    std::normal_distribution<double> noise(0.05, 0.01);
    std::vector<AlphaMap> maps;
    for (int f = 0; f < 20; ++f) {
      AlphaMap m{4, 4, Scheme::quantum, std::vector<double>(16)};
      for (auto& v : m.values) v = noise(eng);
      maps.push_back(std::move(m));
    }
    auto rep1 = snr_map(maps);
    std::vector<AlphaMap> shuffled = maps;
    std::shuffle(shuffled.begin(), shuffled.end(), eng);
    auto rep2 = snr_map(shuffled);
    for (std::size_t i = 0; i < rep1.snr.size(); ++i) {
      REQUIRE(rep2.snr[i] ==
              doctest::Approx(rep1.snr[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("alpha_cl temporal variance follows Poisson propagation" * doctest::timeout(120)) {
  // Var(alpha_cl) = Var(N_s) / ref^2 = 1 / ref for a Poisson beam at mean ref.
  const double n0 = 2000.0;
  Geometry geom{32, 32, 300};
  auto signal = to_real(gen_coherent(n0, geom, 55));
  SnrAccumulator acc(32, 32, Scheme::direct_classical);
  for (std::size_t f = 0; f < geom.n_frames; ++f) {
    acc.add(alpha_direct_classical(signal, f, n0));
  }
  auto rep = acc.finalize();
  // Recover the pooled variance from SNR = mean / sd: average sd^2.
  double var_sum = 0.0;
  std::size_t n = 0;
  auto mean_map = acc.mean_map();
  for (std::size_t i = 0; i < rep.snr.size(); ++i) {
    if (!(rep.snr[i] == rep.snr[i])) continue;
    const double sd = mean_map.values[i] / rep.snr[i];
    var_sum += sd * sd;
    ++n;
  }
  CHECK(var_sum / double(n) == doctest::Approx(1.0 / n0).epsilon(0.05));
}

TEST_CASE("alpha_dcl variance exceeds alpha_q by the predicted factor" *
          doctest::timeout(120)) {
  // Decorrelating the reference raises the noise by (2 - alpha) /
  // (2 sigma (1 - alpha) + alpha) at negligible excess noise.
  const double alpha = 0.05, eta = 0.65, sigma = 1.0 - eta;
  Geometry geom{64, 64, 200};
  auto pair = detected_twin(4000.0, 1e6, eta, alpha, geom, 60);
  const double ref = 0.65 * 4000.0;

  SnrAccumulator acc_q(64, 64, Scheme::quantum);
  SnrAccumulator acc_d(64, 64, Scheme::diff_classical);
  for (std::size_t f = 0; f < geom.n_frames; ++f) {
    acc_q.add(alpha_quantum(pair, f, ref));
    acc_d.add(alpha_diff_classical(pair, f, {8, 0}, ref));
  }
  auto q = acc_q.finalize();
  auto d = acc_d.finalize();
  auto mq = acc_q.mean_map();
  auto md = acc_d.mean_map();
  double vq = 0.0, vd = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < q.snr.size(); ++i) {
    if (!(q.snr[i] == q.snr[i]) || !(d.snr[i] == d.snr[i])) continue;
    vq += (mq.values[i] / q.snr[i]) * (mq.values[i] / q.snr[i]);
    vd += (md.values[i] / d.snr[i]) * (md.values[i] / d.snr[i]);
    ++n;
  }
  const double predicted = (2.0 - alpha) / (2.0 * sigma * (1.0 - alpha) + alpha);
  CHECK(vd / vq == doctest::Approx(predicted).epsilon(0.10));
}

TEST_CASE("classify_frames: binning rules") {
  auto sigma_list = [](std::initializer_list<double> values) {
    std::vector<SigmaEstimate> v;
    std::size_t id = 0;
    for (double s : values) v.push_back({id++, s, 10, 1.0, 1.0});
    return v;
  };

  SUBCASE("identical sigmas collapse into one class") {
    auto s = sigma_list({0.3, 0.3, 0.3, 0.3});
    auto classes = classify_frames(s, 3, 2);
    REQUIRE(classes.size() == 1);
    CHECK(classes[0].members.size() == 4);
    CHECK(classes[0].sigma_j == doctest::Approx(0.3));
  }
  SUBCASE("spec arithmetic example") {
    auto s = sigma_list({0.1, 0.2, 0.8, 0.9});
    auto classes = classify_frames(s, 2, 2);
    REQUIRE(classes.size() == 2);
    CHECK(classes[0].sigma_j == doctest::Approx(0.15));
    CHECK(classes[1].sigma_j == doctest::Approx(0.85));
    CHECK(classes[0].members == std::vector<std::size_t>{0, 1});
    CHECK(classes[1].members == std::vector<std::size_t>{2, 3});
  }
  SUBCASE("underpopulated classes are dropped; empty result is an error") {
    auto s = sigma_list({0.1, 0.1, 0.1, 0.9});
    auto classes = classify_frames(s, 2, 3);
    REQUIRE(classes.size() == 1);
    CHECK(classes[0].sigma_j == doctest::Approx(0.1));
    CHECK_THROWS_AS(classify_frames(s, 2, 20), data_error);
  }
  SUBCASE("retained classes partition with strictly increasing sigma_j") {
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> uni(0.2, 0.8);
    std::vector<SigmaEstimate> s;
    for (std::size_t f = 0; f < 200; ++f) s.push_back({f, uni(eng), 10, 1.0, 1.0});
    auto classes = classify_frames(s, 4, 2);
    std::vector<bool> seen(200, false);
    double last = -1.0;
    for (const auto& c : classes) {
      CHECK(c.sigma_j > last);
      last = c.sigma_j;
      for (auto f : c.members) {
        CHECK(!seen[f]);
        seen[f] = true;
      }
    }
  }
  SUBCASE("a mixture of two efficiencies yields two classes") {
    Geometry geom{32, 32, 80};
    auto a = detected_twin(1000.0, 1e4, 0.5, 0.0, geom, 71);
    auto b = detected_twin(1000.0, 1e4, 0.7, 0.0, geom, 72);
    const Region region = Region::full(geom);
    auto sa = estimate_sigma_stack(a, region);
    auto sb = estimate_sigma_stack(b, region);
    for (auto& e : sb) e.frame_id += geom.n_frames;
    sa.insert(sa.end(), sb.begin(), sb.end());
    auto classes = classify_frames(sa, 2, 10);
    REQUIRE(classes.size() == 2);
    CHECK(classes[0].sigma_j == doctest::Approx(0.3).epsilon(0.1));
    CHECK(classes[1].sigma_j == doctest::Approx(0.5).epsilon(0.1));
    CHECK(classes[0].members.size() == 80);
    CHECK(classes[1].members.size() == 80);
  }
}

TEST_CASE("r_ratio: identity, exclusions") {
  SnrReport a;
  a.scheme = Scheme::quantum;
  a.width = a.height = 4;
  a.snr.assign(16, 2.0);
  a.n_frames = 10;
  SnrReport b = a;
  b.scheme = Scheme::direct_classical;
  const Region region = Region::full({4, 4, 1});

  auto r = r_ratio(a, b, region);
  CHECK(r.value == doctest::Approx(1.0));
  CHECK(r.se == 0.0);
  CHECK(r.n_used == 16);
  CHECK(r.n_excluded == 0);

  // Undefined pixels are excluded; more than half excluded is an error.
  for (std::size_t i = 0; i < 7; ++i) b.snr[i] = AlphaMap::invalid_value();
  r = r_ratio(a, b, region);
  CHECK(r.n_excluded == 7);
  for (std::size_t i = 0; i < 9; ++i) b.snr[i] = AlphaMap::invalid_value();
  CHECK_THROWS_AS(r_ratio(a, b, region), data_error);
}

TEST_CASE("r_unity_crossing interpolates 1/R^2 exactly on ideal curves") {
  const double alpha = 0.05;
  std::vector<double> sig{0.2, 0.35, 0.5, 0.65, 0.8, 0.9};
  std::vector<double> rcl, rdcl;
  for (double s : sig) {
    theory::TheoryPoint p{alpha, s, 0.0, 0.0, 1.0};
    rcl.push_back(theory::r_direct_classical(p));
    rdcl.push_back(theory::r_diff_classical(p));
  }
  // Bracketed crossing: exact root of Eq. 2 at (1 - 2a) / (2 (1 - a)).
  CHECK(r_unity_crossing(sig, rcl) ==
        doctest::Approx(theory::direct_classical_crossing_sigma(alpha, 0.0)).epsilon(1e-9));
  // Extrapolated crossing: Eq. 1 reaches 1 exactly at sigma = 1 when E = 0.
  CHECK(r_unity_crossing(sig, rdcl) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(r_unity_crossing(std::vector<double>{0.5}, std::vector<double>{1.0}),
                  data_error);
}
