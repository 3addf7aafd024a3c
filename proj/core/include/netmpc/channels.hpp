#pragma once

#include <cstdint>
#include <random>
#include <variant>

#include "netmpc/linalg.hpp"

namespace netmpc {

// Reproducible random stream keyed by (seed, stream id). Distinct stream ids
// seed independent Mersenne Twister states through std::seed_seq.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  double uniform();  // [0, 1)
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  // Draw from N(0, L L') given a lower Cholesky-like factor L.
  VectorXd gaussian(const MatrixXd& L);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_, stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// Stream id layout for per-path roles.
enum class StreamRole : std::uint64_t {
  initial_state = 1,
  process_noise = 2,
  measurement_noise = 3,
  sensor_channel = 4,
  control_channel = 5,
  moments = 6,
};

std::uint64_t stream_id(std::uint64_t path, StreamRole role);

struct BernoulliChannel {
  double p = 1.0;
  int sample(RngStream& rng) const { return rng.bernoulli(p) ? 1 : 0; }
};

class GilbertElliottChannel {
 public:
  GilbertElliottChannel(double p_gb, double p_bg, double p_good, double p_bad);

  // Transition first, then emit. The first call draws the previous state
  // from the stationary distribution.
  int sample(RngStream& rng);

  bool good() const { return good_; }
  double stationary_good() const;
  double mean_rate() const;

 private:
  double p_gb_, p_bg_, p_good_, p_bad_;
  bool good_ = true;
  bool started_ = false;
};

struct ChannelSpec {
  enum class Kind { bernoulli, gilbert_elliott };
  Kind kind = Kind::bernoulli;
  double p = 1.0;  // bernoulli success probability
  double p_gb = 0.0, p_bg = 1.0, p_good = 1.0, p_bad = 0.0;

  static ChannelSpec bernoulli(double p);
  static ChannelSpec gilbert_elliott(double p_gb, double p_bg, double p_good,
                                     double p_bad);
  void validate() const;  // throws InvalidArgument
  double mean_rate() const;
  bool always_delivers() const;
};

class Channel {
 public:
  explicit Channel(const ChannelSpec& spec);
  int sample(RngStream& rng);

 private:
  std::variant<BernoulliChannel, GilbertElliottChannel> impl_;
};

}  // namespace netmpc
