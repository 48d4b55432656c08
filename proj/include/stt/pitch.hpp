#pragma once

#include <string>
#include <vector>

#include "stt/audio.hpp"

namespace stt {

struct PitchParams {
  double frame_ms = 40.0;
  double hop_ms = 10.0;
  double f0_min_hz = 75.0;
  double f0_max_hz = 500.0;
  double voicing_threshold = 0.45;
};

struct PitchFrame {
  double time_s = 0.0;      // frame center
  bool voiced = false;
  double f0_hz = 0.0;       // NaN when unvoiced
  double correlation = 0.0; // xcorr: peak normalized cross-correlation;
                            // peakpick: amplitude ratio of the two peaks
};

struct PitchTrack {
  std::vector<PitchFrame> frames;
};

// Waveform-matching estimator: per frame, the lag in [sr/f0_max, sr/f0_min]
// maximizing the normalized cross-correlation, refined by parabolic
// interpolation. Voiced iff the peak correlation reaches voicing_threshold.
PitchTrack estimate_f0_xcorr(const AudioBuffer& audio,
                             const PitchParams& params = {});

// Peak-picking contrast method: period = distance between the largest local
// waveform peak and the largest peak at an in-band separation from it.
// Voiced iff both peaks exceed 0.1 of the frame peak.
PitchTrack estimate_f0_peakpick(const AudioBuffer& audio,
                                const PitchParams& params = {});

// CSV "time_s,f0_hz,correlation" with the literal NaN in the f0 column for
// unvoiced frames.
std::string pitch_csv(const PitchTrack& track);

}  // namespace stt
