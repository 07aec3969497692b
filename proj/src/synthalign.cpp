#include "timepoint/synthalign.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace timepoint::synth {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kSubIntervalProb = 0.25;
constexpr double kFlipProb = 0.5;

void mark(KeypointMask& mask, Index i) {
  if (i >= 0 && i < static_cast<Index>(mask.size())) mask[i] = 1;
}

int pick_waveform(const std::array<double, 4>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return 3;
}

}  // namespace

void SynthConfig::validate() const {
  if (length < 32) throw std::invalid_argument("SynthConfig: length must be >= 32");
  double sum = 0.0;
  for (double p : waveform_probs) {
    if (p < 0.0) throw std::invalid_argument("SynthConfig: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("SynthConfig: waveform_probs must sum to 1");
  if (noise_sigma < 0.0)
    throw std::invalid_argument("SynthConfig: noise_sigma must be >= 0");
}

std::vector<int> AnnotatedSignal::keypoint_indices() const {
  std::vector<int> idx;
  for (Index i = 0; i < static_cast<Index>(kp_mask.size()); ++i)
    if (kp_mask[i]) idx.push_back(static_cast<int>(i));
  return idx;
}

KeypointMask local_extrema_mask(const Signal& x) {
  const Index len = x.size();
  if (len < 3) throw std::invalid_argument("local_extrema_mask: need length >= 3");
  KeypointMask mask(len, 0);
  for (Index t = 1; t + 1 < len; ++t) {
    const double dl = x[t] - x[t - 1];
    const double dr = x[t + 1] - x[t];
    if (dl * dr < 0.0) mask[t] = 1;
  }
  return mask;
}

KeypointMask annotate_keypoints(const Signal& x) {
  KeypointMask mask = local_extrema_mask(x);
  Index lo = 0, hi = 0;
  x.minCoeff(&lo);
  x.maxCoeff(&hi);
  mask[lo] = 1;
  mask[hi] = 1;
  return mask;
}

Signal sine_composition(Index length, const std::vector<double>& freqs,
                        const std::vector<double>& amps,
                        const std::vector<double>& phases, KeypointMask& mask) {
  Signal out = Signal::Zero(length);
  for (std::size_t w = 0; w < freqs.size(); ++w) {
    for (Index t = 0; t < length; ++t) {
      const double u = static_cast<double>(t) / static_cast<double>(length - 1);
      out[t] += amps[w] * std::sin(kTwoPi * freqs[w] * u + phases[w]);
    }
  }
  const KeypointMask ext = local_extrema_mask(out);
  for (Index t = 0; t < length; ++t)
    if (ext[t]) mark(mask, t);
  return out;
}

Signal block_wave(Index length, const std::vector<Index>& cuts,
                  const std::vector<double>& levels, KeypointMask& mask) {
  if (levels.size() != cuts.size() + 1)
    throw std::invalid_argument("block_wave: need one level per segment");
  Signal out(length);
  std::size_t seg = 0;
  for (Index t = 0; t < length; ++t) {
    while (seg < cuts.size() && t >= cuts[seg]) ++seg;
    out[t] = levels[seg];
  }
  for (Index c : cuts) mark(mask, c);  // first index of each new block
  return out;
}

Signal sawtooth_wave(Index length, double freq, double amp, double phase,
                     bool triangle, KeypointMask& mask) {
  Signal out(length);
  for (Index t = 0; t < length; ++t) {
    const double u = static_cast<double>(t) / static_cast<double>(length - 1);
    const double frac = std::fmod(freq * u + phase, 1.0);
    if (triangle) {
      out[t] = amp * (4.0 * std::abs(frac - 0.5) - 1.0);
    } else {
      out[t] = amp * (2.0 * frac - 1.0);
    }
  }
  const KeypointMask ext = local_extrema_mask(out);
  for (Index t = 0; t < length; ++t)
    if (ext[t]) mark(mask, t);
  return out;
}

Signal rbf_bumps(Index length, const std::vector<double>& centers,
                 const std::vector<double>& widths,
                 const std::vector<double>& amps, KeypointMask& mask) {
  Signal out = Signal::Zero(length);
  for (std::size_t b = 0; b < centers.size(); ++b) {
    const double c = centers[b] * static_cast<double>(length - 1);
    const double w = widths[b] * static_cast<double>(length - 1);
    for (Index t = 0; t < length; ++t) {
      const double d = (static_cast<double>(t) - c) / w;
      out[t] += amps[b] * std::exp(-0.5 * d * d);
    }
    mark(mask, static_cast<Index>(std::llround(c)));
  }
  return out;
}

namespace {

// Renders one randomly parameterized generator over [begin, end) of the
// domain, adding its keypoints (segment-local indices shifted by begin).
void render_generator(int type, Index begin, Index end, Rng& rng, Signal& total,
                      KeypointMask& mask) {
  const Index seg_len = end - begin;
  KeypointMask local(seg_len, 0);
  Signal rendered;
  switch (type) {
    case 0: {  // sine composition
      const auto n_waves = static_cast<std::size_t>(rng.uniform_int(1, 3));
      std::vector<double> freqs(n_waves), amps(n_waves), phases(n_waves);
      for (std::size_t w = 0; w < n_waves; ++w) {
        freqs[w] = rng.uniform(1.0, 8.0);
        amps[w] = rng.uniform(0.3, 1.0);
        phases[w] = rng.uniform(0.0, kTwoPi);
      }
      rendered = sine_composition(seg_len, freqs, amps, phases, local);
      break;
    }
    case 1: {  // block wave
      const auto n_blocks = static_cast<int>(rng.uniform_int(2, 8));
      const Index min_gap = std::max<Index>(3, seg_len / (4 * n_blocks));
      std::vector<Index> cuts;
      for (int attempt = 0; attempt < 64 && static_cast<int>(cuts.size()) < n_blocks - 1; ++attempt) {
        const Index c = rng.uniform_int(min_gap, seg_len - 1 - min_gap);
        bool ok = true;
        for (Index e : cuts)
          if (std::abs(e - c) < min_gap) ok = false;
        if (ok) cuts.push_back(c);
      }
      std::sort(cuts.begin(), cuts.end());
      std::vector<double> levels(cuts.size() + 1);
      for (auto& v : levels) v = rng.uniform(-1.0, 1.0);
      rendered = block_wave(seg_len, cuts, levels, local);
      break;
    }
    case 2: {  // sawtooth / triangle
      const double freq = rng.uniform(1.0, 6.0);
      const double amp = rng.uniform(0.3, 1.0);
      const double phase = rng.uniform(0.0, 1.0);
      const bool triangle = rng.bernoulli(0.5);
      rendered = sawtooth_wave(seg_len, freq, amp, phase, triangle, local);
      break;
    }
    default: {  // rbf bumps
      const auto n_blobs = static_cast<std::size_t>(rng.uniform_int(1, 5));
      std::vector<double> centers(n_blobs), widths(n_blobs), amps(n_blobs);
      for (std::size_t b = 0; b < n_blobs; ++b) {
        centers[b] = rng.uniform(0.05, 0.95);
        widths[b] = rng.uniform(0.02, 0.15);
        amps[b] = rng.uniform(0.3, 1.0) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
      }
      rendered = rbf_bumps(seg_len, centers, widths, amps, local);
      break;
    }
  }
  total.segment(begin, seg_len) += rendered;
  for (Index t = 0; t < seg_len; ++t)
    if (local[t]) mark(mask, begin + t);
}

}  // namespace

std::pair<Signal, KeypointMask> generate_clean(const SynthConfig& config, Rng& rng) {
  config.validate();
  const Index len = config.length;
  Signal total = Signal::Zero(len);
  KeypointMask mask(len, 0);

  const auto n_gen = static_cast<int>(rng.uniform_int(1, 3));
  for (int g = 0; g < n_gen; ++g) {
    const int type = pick_waveform(config.waveform_probs, rng);
    Index begin = 0, end = len;
    if (rng.bernoulli(kSubIntervalProb)) {
      begin = rng.uniform_int(1, len / 4);
      end = len - rng.uniform_int(1, len / 4);
      // Pattern start/end marks, emitted only for strict sub-intervals.
      mark(mask, begin);
      mark(mask, end - 1);
    }
    render_generator(type, begin, end, rng, total, mask);
  }

  if (config.trend_enabled) {
    const double slope = rng.uniform(-1.0, 1.0);
    const double intercept = rng.uniform(-0.5, 0.5);
    for (Index t = 0; t < len; ++t) {
      const double u = static_cast<double>(t) / static_cast<double>(len - 1);
      total[t] += slope * (u - 0.5) + intercept;
    }
  }

  if (config.flip_enabled && rng.bernoulli(kFlipProb)) {
    const Index flip_len = rng.uniform_int(len / 8, len / 2);
    const Index s = rng.uniform_int(0, len - flip_len);
    total.segment(s, flip_len) *= -1.0;
    mark(mask, s);
    mark(mask, s + flip_len - 1);
  }

  // Degenerate draws (e.g. a lone RBF blob) can leave fewer than two marks.
  int ones = std::accumulate(mask.begin(), mask.end(), 0);
  if (ones < 2) {
    Index lo = 0, hi = 0;
    total.minCoeff(&lo);
    total.maxCoeff(&hi);
    mark(mask, lo);
    mark(mask, hi);
  }
  return {std::move(total), std::move(mask)};
}

AnnotatedSignal generate_sample(const SynthConfig& config, Rng& rng) {
  auto [clean, mask] = generate_clean(config, rng);
  if (config.noise_sigma > 0.0)
    for (Index t = 0; t < clean.size(); ++t)
      clean[t] += rng.normal(0.0, config.noise_sigma);
  return AnnotatedSignal{std::move(clean), std::move(mask)};
}

AnnotatedSignal generate_sample(const SynthConfig& config) {
  Rng rng(config.rng_seed);
  return generate_sample(config, rng);
}

namespace {

std::vector<std::pair<int, int>> list_indexed_correspondences(
    const std::vector<std::pair<int, int>>& pos_pairs, const KeypointMask& src,
    const KeypointMask& dst) {
  std::vector<int> src_rank(src.size(), -1), dst_rank(dst.size(), -1);
  int r = 0;
  for (std::size_t i = 0; i < src.size(); ++i)
    if (src[i]) src_rank[i] = r++;
  r = 0;
  for (std::size_t i = 0; i < dst.size(); ++i)
    if (dst[i]) dst_rank[i] = r++;
  std::vector<std::pair<int, int>> out;
  out.reserve(pos_pairs.size());
  for (const auto& [p, q] : pos_pairs)
    out.emplace_back(src_rank[p], dst_rank[q]);
  return out;
}

}  // namespace

TrainingPair make_training_pair_from_theta(const SynthConfig& config,
                                           const cpab::CpabTheta& theta,
                                           Rng& rng) {
  auto [clean, mask] = generate_clean(config, rng);
  const Index len = clean.size();
  const cpab::Tessellation tess(static_cast<int>(theta.dim()) + 1);
  const cpab::CpabTransform t(tess, theta);

  TrainingPair pair;
  pair.theta = theta;
  pair.theta_original = cpab::CpabTheta{VectorXd::Zero(theta.dim())};

  Signal warped_clean = cpab::warp_signal(clean, t);
  auto wk = cpab::warp_keypoints(mask, t);

  pair.original.signal = std::move(clean);
  pair.original.kp_mask = mask;
  pair.warped.signal = std::move(warped_clean);
  pair.warped.kp_mask = wk.mask;
  if (config.noise_sigma > 0.0) {
    for (Index i = 0; i < len; ++i)
      pair.original.signal[i] += rng.normal(0.0, config.noise_sigma);
    for (Index i = 0; i < len; ++i)
      pair.warped.signal[i] += rng.normal(0.0, config.noise_sigma);
  }
  pair.correspondences =
      list_indexed_correspondences(wk.correspondence, mask, wk.mask);
  return pair;
}

TrainingPair make_training_pair(const SynthConfig& config,
                                const cpab::CpaPrior& prior, Rng& rng) {
  const cpab::CpabTheta theta = cpab::sample_theta(prior, rng);
  return make_training_pair_from_theta(config, theta, rng);
}

TrainingPair make_training_pair(const SynthConfig& config,
                                const cpab::CpaPrior& prior) {
  Rng rng(config.rng_seed);
  return make_training_pair(config, prior, rng);
}

TrainingPair make_finetune_pair_from_thetas(const Signal& x,
                                            const cpab::CpabTheta& theta1,
                                            const cpab::CpabTheta& theta2) {
  const KeypointMask mask = annotate_keypoints(x);
  const cpab::Tessellation tess(static_cast<int>(theta1.dim()) + 1);
  const cpab::CpabTransform t1(tess, theta1);
  const cpab::CpabTransform t2(tess, theta2);

  TrainingPair pair;
  pair.theta_original = theta1;
  pair.theta = theta2;
  pair.original.signal = cpab::warp_signal(x, t1);
  pair.warped.signal = cpab::warp_signal(x, t2);
  const auto wk1 = cpab::warp_keypoints(mask, t1);
  const auto wk2 = cpab::warp_keypoints(mask, t2);
  pair.original.kp_mask = wk1.mask;
  pair.warped.kp_mask = wk2.mask;

  // Join the two correspondence lists on the shared source keypoint.
  std::vector<int> to1(mask.size(), -1), to2(mask.size(), -1);
  for (const auto& [p, q] : wk1.correspondence) to1[p] = q;
  for (const auto& [p, q] : wk2.correspondence) to2[p] = q;
  std::vector<std::pair<int, int>> pos_pairs;
  for (std::size_t p = 0; p < mask.size(); ++p)
    if (to1[p] >= 0 && to2[p] >= 0) pos_pairs.emplace_back(to1[p], to2[p]);
  pair.correspondences =
      list_indexed_correspondences(pos_pairs, wk1.mask, wk2.mask);
  return pair;
}

TrainingPair make_finetune_pair(const Signal& x, const cpab::CpaPrior& prior,
                                Rng& rng) {
  const auto theta1 = cpab::sample_theta(prior, rng);
  const auto theta2 = cpab::sample_theta(prior, rng);
  return make_finetune_pair_from_thetas(x, theta1, theta2);
}

}  // namespace timepoint::synth
