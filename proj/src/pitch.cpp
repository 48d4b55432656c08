#include "stt/pitch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace stt {

namespace {

struct FrameGeometry {
  int frame_len = 0;
  int hop = 0;
  int lag_min = 0;
  int lag_max = 0;
};

FrameGeometry check_params(const AudioBuffer& audio, const PitchParams& p) {
  if (audio.samples.empty() || audio.sample_rate_hz <= 0) {
    throw std::invalid_argument("pitch: empty audio");
  }
  if (p.f0_min_hz <= 0.0 || p.f0_max_hz <= p.f0_min_hz) {
    throw std::invalid_argument("pitch: need 0 < f0_min < f0_max");
  }
  if (p.frame_ms < 2000.0 / p.f0_min_hz) {
    throw std::invalid_argument(
        "pitch: frame of " + std::to_string(p.frame_ms) +
        " ms is shorter than two periods of f0_min (need >= " +
        std::to_string(2000.0 / p.f0_min_hz) + " ms)");
  }
  FrameGeometry g;
  const double sr = audio.sample_rate_hz;
  g.frame_len = static_cast<int>(std::llround(p.frame_ms * sr / 1000.0));
  g.hop = static_cast<int>(std::llround(p.hop_ms * sr / 1000.0));
  if (g.hop <= 0) {
    throw std::invalid_argument("pitch: hop must cover at least one sample");
  }
  g.lag_min = static_cast<int>(std::ceil(sr / p.f0_max_hz));
  g.lag_max = static_cast<int>(std::floor(sr / p.f0_min_hz));
  g.lag_min = std::max(g.lag_min, 1);
  if (static_cast<std::size_t>(g.frame_len) > audio.samples.size()) {
    throw std::invalid_argument("pitch: audio shorter than one analysis frame");
  }
  return g;
}

double clamp_lag(double lag, const AudioBuffer& audio, const PitchParams& p) {
  const double sr = audio.sample_rate_hz;
  return std::clamp(lag, sr / p.f0_max_hz, sr / p.f0_min_hz);
}

}  // namespace

PitchTrack estimate_f0_xcorr(const AudioBuffer& audio, const PitchParams& params) {
  const FrameGeometry g = check_params(audio, params);
  const double sr = audio.sample_rate_hz;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  PitchTrack track;
  const std::size_t n = audio.samples.size();
  for (std::size_t start = 0; start + g.frame_len <= n;
       start += static_cast<std::size_t>(g.hop)) {
    const double* x = audio.samples.data() + start;
    const int len = g.frame_len;

    // r(tau) = sum x[n] x[n+tau] / sqrt(sum x[n]^2 * sum x[n+tau]^2)
    double best_r = 0.0;
    int best_lag = 0;
    std::vector<double> r(static_cast<std::size_t>(g.lag_max) + 1, 0.0);
    for (int lag = g.lag_min; lag <= g.lag_max && lag < len; ++lag) {
      double cross = 0.0, e0 = 0.0, e1 = 0.0;
      for (int i = 0; i + lag < len; ++i) {
        cross += x[i] * x[i + lag];
        e0 += x[i] * x[i];
        e1 += x[i + lag] * x[i + lag];
      }
      const double denom = std::sqrt(e0 * e1);
      const double value = denom > 0.0 ? cross / denom : 0.0;
      r[static_cast<std::size_t>(lag)] = value;
      if (value > best_r) {
        best_r = value;
        best_lag = lag;
      }
    }

    PitchFrame frame;
    frame.time_s = (static_cast<double>(start) + g.frame_len / 2.0) / sr;
    frame.correlation = best_r;
    if (best_lag > 0 && best_r >= params.voicing_threshold) {
      // A periodic frame correlates equally well at every multiple of its
      // period, and edge effects can tip the argmax to a multiple. Take the
      // shortest lag that comes within 0.1% of the peak.
      int pick = best_lag;
      for (int lag = g.lag_min; lag < best_lag; ++lag) {
        if (r[static_cast<std::size_t>(lag)] >= best_r * 0.999) {
          pick = lag;
          break;
        }
      }
      double lag = pick;
      // parabolic interpolation around the integer peak
      if (pick > g.lag_min && pick < g.lag_max) {
        const double rm = r[static_cast<std::size_t>(pick) - 1];
        const double r0 = r[static_cast<std::size_t>(pick)];
        const double rp = r[static_cast<std::size_t>(pick) + 1];
        const double denom = rm - 2.0 * r0 + rp;
        if (std::abs(denom) > 1e-30) {
          const double delta = 0.5 * (rm - rp) / denom;
          if (std::abs(delta) <= 0.5) lag += delta;
        }
      }
      lag = clamp_lag(lag, audio, params);
      frame.voiced = true;
      frame.f0_hz = sr / lag;
    } else {
      frame.voiced = false;
      frame.f0_hz = nan;
    }
    track.frames.push_back(frame);
  }
  return track;
}

PitchTrack estimate_f0_peakpick(const AudioBuffer& audio,
                                const PitchParams& params) {
  const FrameGeometry g = check_params(audio, params);
  const double sr = audio.sample_rate_hz;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  PitchTrack track;
  const std::size_t n = audio.samples.size();
  for (std::size_t start = 0; start + g.frame_len <= n;
       start += static_cast<std::size_t>(g.hop)) {
    const double* x = audio.samples.data() + start;
    const int len = g.frame_len;

    // local maxima of the waveform
    std::vector<int> peaks;
    for (int i = 1; i + 1 < len; ++i) {
      if (x[i] > x[i - 1] && x[i] >= x[i + 1]) peaks.push_back(i);
    }
    double frame_peak = 0.0;
    for (int i = 0; i < len; ++i) frame_peak = std::max(frame_peak, std::abs(x[i]));

    PitchFrame frame;
    frame.time_s = (static_cast<double>(start) + g.frame_len / 2.0) / sr;
    frame.voiced = false;
    frame.f0_hz = nan;
    frame.correlation = 0.0;

    if (!peaks.empty() && frame_peak > 0.0) {
      // largest peak, then the largest peak at an in-band separation from it
      int p1 = peaks.front();
      for (int p : peaks) {
        if (x[p] > x[p1]) p1 = p;
      }
      int p2 = -1;
      for (int p : peaks) {
        const int dist = std::abs(p - p1);
        if (dist < g.lag_min || dist > g.lag_max) continue;
        if (p2 < 0 || x[p] > x[p2]) p2 = p;
      }
      if (p2 >= 0) {
        const double threshold = 0.1 * frame_peak;
        if (x[p1] >= threshold && x[p2] >= threshold) {
          const double period = clamp_lag(std::abs(p2 - p1), audio, params);
          frame.voiced = true;
          frame.f0_hz = sr / period;
          frame.correlation = x[p1] > 0.0 ? std::clamp(x[p2] / x[p1], -1.0, 1.0) : 0.0;
        }
      }
    }
    track.frames.push_back(frame);
  }
  return track;
}

std::string pitch_csv(const PitchTrack& track) {
  std::string out = "time_s,f0_hz,correlation\n";
  char buf[96];
  for (const auto& f : track.frames) {
    if (f.voiced) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", f.time_s, f.f0_hz,
                    f.correlation);
    } else {
      std::snprintf(buf, sizeof(buf), "%.9g,NaN,%.9g\n", f.time_s, f.correlation);
    }
    out += buf;
  }
  return out;
}

}  // namespace stt
