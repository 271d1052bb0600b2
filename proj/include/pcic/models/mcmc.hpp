#pragma once

#include <pcic/core.hpp>
#include <pcic/parallel.hpp>
#include <pcic/random.hpp>

#include <cmath>
#include <cstdint>
#include <sstream>

namespace pcic {

inline constexpr double kMinAcceptance = 0.05;
inline constexpr double kMaxAcceptance = 0.8;

/// Gaussian random-walk Metropolis with per-coordinate proposal scales. Keeps every
/// `thin`-th state after `burn_in` steps, so (steps - burn_in) / thin draws are returned.
template <class LogDensity>
PosteriorDraws rw_metropolis(LogDensity&& logdensity, const Vector& init, std::size_t steps,
                             const Vector& proposal_scale, std::size_t burn_in, std::size_t thin,
                             std::uint64_t seed) {
  if (thin < 1 || steps < burn_in + thin) {
    throw DomainError("rw_metropolis: steps must be at least burn_in + thin");
  }
  if (proposal_scale.size() != init.size() || !(proposal_scale.array() > 0.0).all()) {
    throw DomainError("rw_metropolis: proposal scales must be positive, one per coordinate");
  }
  Rng rng(seed);
  Vector current = init;
  double current_lp = logdensity(current);
  if (!std::isfinite(current_lp)) throw SamplerError("rw_metropolis: initial state has zero density");

  const std::size_t kept = (steps - burn_in) / thin;
  RowMatrix draws(static_cast<Eigen::Index>(kept), init.size());
  Vector proposal(init.size());
  std::size_t accepted = 0;
  std::size_t row = 0;
  for (std::size_t t = 1; t <= steps; ++t) {
    for (Eigen::Index j = 0; j < init.size(); ++j) {
      proposal[j] = current[j] + proposal_scale[j] * standard_normal(rng);
    }
    const double lp = logdensity(proposal);
    if (std::isfinite(lp) && std::log(uniform01(rng)) < lp - current_lp) {
      current.swap(proposal);
      current_lp = lp;
      ++accepted;
    }
    if (t > burn_in && (t - burn_in) % thin == 0 && row < kept) {
      draws.row(static_cast<Eigen::Index>(row++)) = current.transpose();
    }
  }

  Provenance prov{"rw-metropolis", seed, burn_in, thin, std::nullopt, {}};
  const double rate = static_cast<double>(accepted) / static_cast<double>(steps);
  prov.acceptance_rate = rate;
  if (rate < kMinAcceptance || rate > kMaxAcceptance) {
    std::ostringstream msg;
    msg << "acceptance rate " << rate << " outside [" << kMinAcceptance << ", " << kMaxAcceptance << "]";
    prov.warnings.push_back(msg.str());
  }
  return PosteriorDraws(std::move(draws), std::move(prov));
}

template <class LogDensity>
PosteriorDraws rw_metropolis(LogDensity&& logdensity, const Vector& init, std::size_t steps,
                             double proposal_scale, std::size_t burn_in, std::size_t thin,
                             std::uint64_t seed) {
  return rw_metropolis(std::forward<LogDensity>(logdensity), init, steps,
                       Vector::Constant(init.size(), proposal_scale), burn_in, thin, seed);
}

inline constexpr std::size_t kPilotSteps = 500;

/// Runs a 500-step pilot at `pilot_scale`, then a main chain started from the pilot's last
/// state with proposal scales 2.38/sqrt(p) times the pilot's per-coordinate standard deviation.
/// Returns `m` draws.
template <class LogDensity>
PosteriorDraws tuned_rw_metropolis(LogDensity&& logdensity, const Vector& init, std::size_t m,
                                   std::size_t burn_in, std::size_t thin, std::uint64_t seed,
                                   double pilot_scale = 0.1) {
  const auto pilot = rw_metropolis(logdensity, init, kPilotSteps, pilot_scale, 0, 1,
                                   derive_seed(seed, 0x9170));
  const auto& chain = pilot.matrix();
  const Vector mean = chain.colwise().mean().transpose();
  Vector scale(init.size());
  const double factor = 2.38 / std::sqrt(static_cast<double>(init.size()));
  for (Eigen::Index j = 0; j < init.size(); ++j) {
    const double var = (chain.col(j).array() - mean[j]).square().sum() /
                       static_cast<double>(chain.rows() - 1);
    const double sd = std::sqrt(var);
    scale[j] = factor * (sd > 0.0 ? sd : pilot_scale);
  }
  const Vector start = chain.row(chain.rows() - 1).transpose();
  return rw_metropolis(std::forward<LogDensity>(logdensity), start, burn_in + m * thin, scale,
                       burn_in, thin, seed);
}

}  // namespace pcic
