#pragma once

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace difflab {

// Noise schedule family. ScaledLinear is the reference family (beta linear
// in sqrt space); Linear is available for comparison only.
enum class ScheduleFamily { ScaledLinear, Linear };

inline const char* to_string(ScheduleFamily f) {
  return f == ScheduleFamily::ScaledLinear ? "scaled_linear" : "linear";
}

inline ScheduleFamily schedule_family_from_string(const std::string& s) {
  if (s == "scaled_linear") return ScheduleFamily::ScaledLinear;
  if (s == "linear") return ScheduleFamily::Linear;
  throw std::invalid_argument("unknown schedule family '" + s + "'");
}

struct ScheduleConfig {
  double linear_start = 0.00085;
  double linear_end = 0.012;
  int total_steps = 1000;
  int skip = 50;
  ScheduleFamily family = ScheduleFamily::ScaledLinear;

  void validate() const {
    if (!(linear_start > 0.0) || !(linear_start <= linear_end) || !(linear_end < 1.0))
      throw std::invalid_argument("schedule requires 0 < linear_start <= linear_end < 1");
    if (total_steps < 1) throw std::invalid_argument("schedule requires total_steps >= 1");
    if (skip < 1 || skip > total_steps)
      throw std::invalid_argument("schedule requires 1 <= skip <= total_steps");
  }
};

// Per-step noise increments beta_t and the cumulative signal-retention
// product alpha_bar_t = prod_{s<=t} (1 - beta_s), both indexed by timestep
// t in [1, T]. Immutable after construction; safe for concurrent reads.
class NoiseSchedule {
 public:
  NoiseSchedule(ScheduleConfig cfg, std::vector<double> betas, std::vector<double> alpha_bars,
                std::vector<int> inference_steps)
      : cfg_(cfg),
        betas_(std::move(betas)),
        alpha_bars_(std::move(alpha_bars)),
        inference_steps_(std::move(inference_steps)) {}

  const ScheduleConfig& config() const { return cfg_; }
  int total_steps() const { return cfg_.total_steps; }
  int skip() const { return cfg_.skip; }

  double beta(int t) const {
    check_t(t);
    return betas_[static_cast<std::size_t>(t - 1)];
  }
  double alpha_bar(int t) const {
    check_t(t);
    return alpha_bars_[static_cast<std::size_t>(t - 1)];
  }
  double alpha_bar_final() const { return alpha_bars_.back(); }

  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alpha_bars() const { return alpha_bars_; }

  // Descending DDIM timestep indices for the configured skip.
  const std::vector<int>& inference_steps() const { return inference_steps_; }

 private:
  void check_t(int t) const {
    if (t < 1 || t > cfg_.total_steps)
      throw std::invalid_argument("timestep " + std::to_string(t) + " outside [1, " +
                                  std::to_string(cfg_.total_steps) + "]");
  }

  ScheduleConfig cfg_;
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
  std::vector<int> inference_steps_;
};

// Indistinguishability threshold for the terminal retention level: pure
// noise and fully-noised data stay statistically close only when
// alpha_bar_T is below 1/d, d = H*W*C.
inline double alpha_threshold(long d) {
  if (d < 1) throw std::invalid_argument("alpha_threshold requires d >= 1");
  return 1.0 / static_cast<double>(d);
}

// Descending indices [T, T-S, T-2S, ...] down to the smallest reachable
// index >= 1, so the chain always terminates at a low-noise step.
inline std::vector<int> inference_indices(int total_steps, int skip) {
  if (skip < 1 || skip > total_steps)
    throw std::invalid_argument("inference_indices requires 1 <= S <= T");
  std::vector<int> steps;
  for (int t = total_steps; t >= 1; t -= skip) steps.push_back(t);
  return steps;
}

inline std::vector<int> inference_indices(const NoiseSchedule& sched, int skip) {
  return inference_indices(sched.total_steps(), skip);
}

inline NoiseSchedule build_schedule(const ScheduleConfig& cfg) {
  cfg.validate();
  const int T = cfg.total_steps;
  std::vector<double> betas(static_cast<std::size_t>(T));
  if (cfg.family == ScheduleFamily::ScaledLinear) {
    const double s0 = std::sqrt(cfg.linear_start);
    const double s1 = std::sqrt(cfg.linear_end);
    for (int t = 1; t <= T; ++t) {
      const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(T - 1);
      const double s = s0 + frac * (s1 - s0);
      betas[static_cast<std::size_t>(t - 1)] = s * s;
    }
  } else {
    for (int t = 1; t <= T; ++t) {
      const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(T - 1);
      betas[static_cast<std::size_t>(t - 1)] = cfg.linear_start + frac * (cfg.linear_end - cfg.linear_start);
    }
  }
  // running product, not exp-sum, so the product identity holds exactly
  std::vector<double> alpha_bars(static_cast<std::size_t>(T));
  double prod = 1.0;
  for (int t = 1; t <= T; ++t) {
    prod *= 1.0 - betas[static_cast<std::size_t>(t - 1)];
    alpha_bars[static_cast<std::size_t>(t - 1)] = prod;
  }
  return NoiseSchedule(cfg, std::move(betas), std::move(alpha_bars),
                       inference_indices(T, cfg.skip));
}

inline void write_schedule_csv(const NoiseSchedule& sched, std::ostream& os) {
  os << "t,beta,alpha_bar\n";
  os.precision(17);
  for (int t = 1; t <= sched.total_steps(); ++t)
    os << t << ',' << sched.beta(t) << ',' << sched.alpha_bar(t) << '\n';
}

}  // namespace difflab
