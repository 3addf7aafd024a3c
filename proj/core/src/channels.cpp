#include "netmpc/channels.hpp"

#include "netmpc/error.hpp"

namespace netmpc {

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x6e6d7063u};
  engine_.seed(seq);
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

VectorXd RngStream::gaussian(const MatrixXd& L) {
  VectorXd z(L.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal();
  return L * z;
}

std::uint64_t stream_id(std::uint64_t path, StreamRole role) {
  return (path << 8) | static_cast<std::uint64_t>(role);
}

GilbertElliottChannel::GilbertElliottChannel(double p_gb, double p_bg, double p_good,
                                             double p_bad)
    : p_gb_(p_gb), p_bg_(p_bg), p_good_(p_good), p_bad_(p_bad) {
  ChannelSpec::gilbert_elliott(p_gb, p_bg, p_good, p_bad).validate();
}

double GilbertElliottChannel::stationary_good() const {
  const double s = p_gb_ + p_bg_;
  return s > 0.0 ? p_bg_ / s : 1.0;
}

double GilbertElliottChannel::mean_rate() const {
  const double pi = stationary_good();
  return pi * p_good_ + (1.0 - pi) * p_bad_;
}

int GilbertElliottChannel::sample(RngStream& rng) {
  if (!started_) {
    good_ = rng.uniform() < stationary_good();
    started_ = true;
  }
  good_ = good_ ? !rng.bernoulli(p_gb_) : rng.bernoulli(p_bg_);
  return rng.bernoulli(good_ ? p_good_ : p_bad_) ? 1 : 0;
}

ChannelSpec ChannelSpec::bernoulli(double p) {
  ChannelSpec s;
  s.kind = Kind::bernoulli;
  s.p = p;
  return s;
}

ChannelSpec ChannelSpec::gilbert_elliott(double p_gb, double p_bg, double p_good,
                                         double p_bad) {
  ChannelSpec s;
  s.kind = Kind::gilbert_elliott;
  s.p_gb = p_gb;
  s.p_bg = p_bg;
  s.p_good = p_good;
  s.p_bad = p_bad;
  return s;
}

void ChannelSpec::validate() const {
  auto prob = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
      throw InvalidArgument(std::string("channel probability ") + name +
                            " must lie in [0, 1]");
  };
  if (kind == Kind::bernoulli) {
    prob(p, "p");
  } else {
    prob(p_gb, "p_gb");
    prob(p_bg, "p_bg");
    prob(p_good, "p_good");
    prob(p_bad, "p_bad");
  }
}

double ChannelSpec::mean_rate() const {
  if (kind == Kind::bernoulli) return p;
  return GilbertElliottChannel(p_gb, p_bg, p_good, p_bad).mean_rate();
}

bool ChannelSpec::always_delivers() const {
  if (kind == Kind::bernoulli) return p >= 1.0;
  return p_good >= 1.0 && (p_bad >= 1.0 || p_gb <= 0.0);
}

Channel::Channel(const ChannelSpec& spec) : impl_(BernoulliChannel{spec.p}) {
  spec.validate();
  if (spec.kind == ChannelSpec::Kind::gilbert_elliott)
    impl_ = GilbertElliottChannel(spec.p_gb, spec.p_bg, spec.p_good, spec.p_bad);
}

int Channel::sample(RngStream& rng) {
  return std::visit([&](auto& ch) { return ch.sample(rng); }, impl_);
}

}  // namespace netmpc
