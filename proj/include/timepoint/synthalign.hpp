#ifndef TIMEPOINT_SYNTHALIGN_HPP
#define TIMEPOINT_SYNTHALIGN_HPP

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "timepoint/common.hpp"
#include "timepoint/cpab.hpp"

namespace timepoint::synth {

using KeypointMask = std::vector<std::uint8_t>;

struct SynthConfig {
  Index length = 512;
  // Draw probabilities for {sine, block, sawtooth, rbf}.
  std::array<double, 4> waveform_probs{0.6, 0.15, 0.05, 0.2};
  double noise_sigma = 0.1;
  bool trend_enabled = true;
  bool flip_enabled = true;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct AnnotatedSignal {
  Signal signal;
  KeypointMask kp_mask;

  std::vector<int> keypoint_indices() const;
};

struct TrainingPair {
  AnnotatedSignal original;
  AnnotatedSignal warped;
  // Warp parameters: original = base o T^{theta_original} (zero for synthetic
  // pairs), warped = base o T^{theta}.
  cpab::CpabTheta theta;
  cpab::CpabTheta theta_original;
  // (i, j) pairs indexing the original / warped keypoint lists.
  std::vector<std::pair<int, int>> correspondences;
};

// ---- individual waveform generators (deterministic given parameters) ----
// Each returns the rendered signal and marks its salient points in `mask`.

Signal sine_composition(Index length, const std::vector<double>& freqs,
                        const std::vector<double>& amps,
                        const std::vector<double>& phases, KeypointMask& mask);
Signal block_wave(Index length, const std::vector<Index>& cuts,
                  const std::vector<double>& levels, KeypointMask& mask);
Signal sawtooth_wave(Index length, double freq, double amp, double phase,
                     bool triangle, KeypointMask& mask);
Signal rbf_bumps(Index length, const std::vector<double>& centers,
                 const std::vector<double>& widths,
                 const std::vector<double>& amps, KeypointMask& mask);

// Strict local extrema (discrete derivative sign changes).
KeypointMask local_extrema_mask(const Signal& x);

// Extrema plus the global min/max indices; the heuristic labels used for
// fine-tuning on real data.
KeypointMask annotate_keypoints(const Signal& x);

// Noise-free composite plus its keypoint mask; rng state is consumed in a
// fixed draw order so callers can reproduce the stream.
std::pair<Signal, KeypointMask> generate_clean(const SynthConfig& config,
                                               Rng& rng);

AnnotatedSignal generate_sample(const SynthConfig& config);
AnnotatedSignal generate_sample(const SynthConfig& config, Rng& rng);

// Original/warped pair with ground-truth correspondences; noise is drawn
// independently for each side, after warping.
TrainingPair make_training_pair(const SynthConfig& config,
                                const cpab::CpaPrior& prior);
TrainingPair make_training_pair(const SynthConfig& config,
                                const cpab::CpaPrior& prior, Rng& rng);
TrainingPair make_training_pair_from_theta(const SynthConfig& config,
                                           const cpab::CpabTheta& theta,
                                           Rng& rng);

// Two independently warped views of a real signal, with heuristic keypoints.
TrainingPair make_finetune_pair(const Signal& x, const cpab::CpaPrior& prior,
                                Rng& rng);
TrainingPair make_finetune_pair_from_thetas(const Signal& x,
                                            const cpab::CpabTheta& theta1,
                                            const cpab::CpabTheta& theta2);

}  // namespace timepoint::synth

#endif  // TIMEPOINT_SYNTHALIGN_HPP
