#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

#include "difflab/rng.hpp"
#include "difflab/schedule.hpp"

namespace difflab {

inline Eigen::VectorXd gaussian_vector(long d, Rng& rng) {
  Eigen::VectorXd e(d);
  for (long i = 0; i < d; ++i) e[i] = rng.normal();
  return e;
}

// One training sample after noising. target_epsilon is what the denoiser is
// asked to predict: the drawn noise for standard samples, the re-derived
// objective for offset samples.
struct ForwardSample {
  Eigen::VectorXd x_t;
  int t = 0;
  Eigen::VectorXd epsilon;
  Eigen::VectorXd x_start_used;
  Eigen::VectorXd target_epsilon;
};

// x_t = sqrt(ab) * x_start + sqrt(1 - ab) * epsilon
inline Eigen::VectorXd noised_at(const Eigen::Ref<const Eigen::VectorXd>& x_start, double alpha_bar,
                                 const Eigen::Ref<const Eigen::VectorXd>& epsilon) {
  if (!(alpha_bar >= 0.0 && alpha_bar <= 1.0))
    throw std::invalid_argument("noised_at requires alpha_bar in [0, 1]");
  return std::sqrt(alpha_bar) * x_start + std::sqrt(1.0 - alpha_bar) * epsilon;
}

inline ForwardSample forward_diffuse(const Eigen::Ref<const Eigen::VectorXd>& x0, int t,
                                     const NoiseSchedule& sched, Rng& rng) {
  ForwardSample fs;
  fs.t = t;
  fs.epsilon = gaussian_vector(x0.size(), rng);
  fs.x_t = noised_at(x0, sched.alpha_bar(t), fs.epsilon);
  fs.x_start_used = x0;
  fs.target_epsilon = fs.epsilon;
  return fs;
}

// x0_hat = (x_t - sqrt(1 - ab) * eps_hat) / sqrt(ab)
inline Eigen::VectorXd recover_x0(const Eigen::Ref<const Eigen::VectorXd>& x_t,
                                  const Eigen::Ref<const Eigen::VectorXd>& eps_hat, double alpha_bar) {
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0))
    throw std::invalid_argument("recover_x0 requires alpha_bar in (0, 1]");
  return (x_t - std::sqrt(1.0 - alpha_bar) * eps_hat) / std::sqrt(alpha_bar);
}

// Offset noising: the chain starts from x_start instead of x_0, and the
// target is re-derived so that removing it still recovers the true x_0:
//   x_t      = sqrt(ab) * x_start + sqrt(1 - ab) * eps
//   eps_new  = (x_t - sqrt(ab) * x_0) / sqrt(1 - ab)
//            = eps + sqrt(ab / (1 - ab)) * (x_start - x_0)
inline ForwardSample offset_sample(const Eigen::Ref<const Eigen::VectorXd>& x0,
                                   const Eigen::Ref<const Eigen::VectorXd>& x_start, int t,
                                   double alpha_bar, const Eigen::Ref<const Eigen::VectorXd>& epsilon) {
  if (!(alpha_bar < 1.0))
    throw std::invalid_argument("offset target is singular at alpha_bar = 1");
  ForwardSample fs;
  fs.t = t;
  fs.epsilon = epsilon;
  fs.x_t = noised_at(x_start, alpha_bar, epsilon);
  fs.x_start_used = x_start;
  fs.target_epsilon = (fs.x_t - std::sqrt(alpha_bar) * x0) / std::sqrt(1.0 - alpha_bar);
  return fs;
}

// Boundary-routed offset noising for timesteps inside the first skip window.
inline ForwardSample offset_forward(const Eigen::Ref<const Eigen::VectorXd>& x0,
                                    const Eigen::Ref<const Eigen::VectorXd>& x_start, int t,
                                    const NoiseSchedule& sched, int skip, Rng& rng) {
  if (t < sched.total_steps() - skip)
    throw std::invalid_argument("offset_forward requires t >= T - S (got t = " + std::to_string(t) +
                                ")");
  return offset_sample(x0, x_start, t, sched.alpha_bar(t), gaussian_vector(x0.size(), rng));
}

}  // namespace difflab
