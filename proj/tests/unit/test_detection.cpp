#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "biphoton/detection.hpp"

using namespace biphoton;

namespace {

ChannelProbabilities uniform_probs() {
  // Diagonal polarization in both arms at partial overlap: every outcome is possible.
  TwoPhotonState s;
  for (Pol x : {Pol::H, Pol::V}) {
    for (Pol y : {Pol::H, Pol::V}) s.set_amplitude({Path::a, x}, {Path::b, y}, 0.5);
  }
  return coincidence_probabilities_at_kernel(s, {}, 0.3);
}

AcquisitionConfig config(std::uint64_t seed) {
  AcquisitionConfig c;
  c.pair_rate = 2e5;
  c.duration = 1.0;
  c.efficiency = {0.2, 0.25, 0.3, 0.2};
  c.dark_rate = {300.0, 200.0, 100.0, 400.0};
  c.rng_seed = seed;
  return c;
}

TimestampStreams streams_of(std::initializer_list<std::vector<double>> per_detector) {
  TimestampStreams s;
  std::size_t i = 0;
  for (const auto& t : per_detector) {
    s[i].detector = kDetectors[i];
    s[i].times = t;
    ++i;
  }
  return s;
}

}  // namespace

TEST(Detection, AccidentalRate) {
  EXPECT_DOUBLE_EQ(accidental_rate(1e4, 2e4, 5e-9), 2.0 * 5e-9 * 1e4 * 2e4);
  EXPECT_DOUBLE_EQ(accidental_rate(0.0, 2e4, 5e-9), 0.0);
}

TEST(Detection, ExpectedCountsByHand) {
  const ChannelProbabilities p = uniform_probs();
  AcquisitionConfig c = config(1);
  const ChannelMeans m = expected_counts(p, c);

  std::array<double, 4> singles{};
  for (Channel ch : kChannels) {
    const auto [d1, d2] = detectors_of(ch);
    singles[static_cast<std::size_t>(d1)] += c.pair_rate * p[ch] * c.efficiency[static_cast<std::size_t>(d1)];
    singles[static_cast<std::size_t>(d2)] += c.pair_rate * p[ch] * c.efficiency[static_cast<std::size_t>(d2)];
  }
  for (Detector d : kDetectors) {
    const auto i = static_cast<std::size_t>(d);
    const double e = c.efficiency[i];
    singles[i] += c.pair_rate * p.bunched_at(d) * (2 * e - e * e) + c.dark_rate[i];
    EXPECT_NEAR(m.singles[i], singles[i] * c.duration, 1e-9);
  }
  for (Channel ch : kChannels) {
    const auto [d1, d2] = detectors_of(ch);
    const auto i1 = static_cast<std::size_t>(d1), i2 = static_cast<std::size_t>(d2);
    const double truth = c.pair_rate * p[ch] * c.efficiency[i1] * c.efficiency[i2];
    const double acc = 2 * c.coincidence_window * singles[i1] * singles[i2];
    EXPECT_NEAR(m[ch], truth + acc, 1e-9);
  }

  c.model_accidentals = false;
  const ChannelMeans m2 = expected_counts(p, c);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(m2.accidentals[i], 0.0);
    EXPECT_EQ(m2.coincidences[i], m2.true_coincidences[i]);
  }
}

TEST(Detection, SamplingIsDeterministic) {
  const ChannelProbabilities p = uniform_probs();
  EXPECT_EQ(sample_counts(p, config(5)), sample_counts(p, config(5)));
  EXPECT_NE(sample_counts(p, config(5)), sample_counts(p, config(6)));
  const auto a = generate_timestamps(p, config(5));
  const auto b = generate_timestamps(p, config(5));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a[i].times, b[i].times);
}

TEST(Detection, SampleMeanMatchesExpectation) {
  const ChannelProbabilities p = uniform_probs();
  AcquisitionConfig c = config(0);
  c.duration = 0.01;
  const ChannelMeans m = expected_counts(p, c);
  const int n = 400;
  std::array<double, 6> sum{};
  for (int s = 0; s < n; ++s) {
    c.rng_seed = 1000 + s;
    const ChannelCounts k = sample_counts(p, c);
    for (std::size_t i = 0; i < 6; ++i) sum[i] += static_cast<double>(k.coincidences[i]);
  }
  for (std::size_t i = 0; i < 6; ++i) {
    const double sigma = std::sqrt(m.coincidences[i] / n);
    EXPECT_NEAR(sum[i] / n, m.coincidences[i], 5 * sigma) << to_string(kChannels[i]);
  }
}

TEST(Detection, TimestampsReproduceExpectedCounts) {
  const ChannelProbabilities p = uniform_probs();
  const AcquisitionConfig c = config(77);
  const ChannelMeans m = expected_counts(p, c);
  const ChannelCounts k = count_coincidences(generate_timestamps(p, c), c.coincidence_window);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(static_cast<double>(k.coincidences[i]), m.coincidences[i], 5 * std::sqrt(m.coincidences[i]))
        << to_string(kChannels[i]);
  }
  for (std::size_t d = 0; d < 4; ++d) {
    EXPECT_NEAR(static_cast<double>(k.singles[d]), m.singles[d], 5 * std::sqrt(m.singles[d]));
  }
}

TEST(Detection, CountsHandMadeStreams) {
  // Hc at 0, 10, 20 ns; Hd at 3 ns (within 5 ns of 0) and 17 ns (within 5 of 20).
  const auto s = streams_of({{0.0, 10e-9, 20e-9}, {}, {3e-9, 17e-9}, {100e-9}});
  const ChannelCounts k = count_coincidences(s, 5e-9);
  EXPECT_EQ(k[Channel::HcHd], 2);
  EXPECT_EQ(k[Channel::HcVd], 0);
  EXPECT_EQ(k[Channel::HdVd], 0);
  EXPECT_EQ(k.singles_at(Detector::Hc), 3);
  EXPECT_EQ(k.singles_at(Detector::Vc), 0);

  // Each event joins at most one coincidence in a channel.
  const auto t = streams_of({{0.0}, {}, {1e-9, 2e-9}, {}});
  EXPECT_EQ(count_coincidences(t, 5e-9)[Channel::HcHd], 1);
  // Window edges are inclusive.
  const auto u = streams_of({{0.0}, {}, {4e-9}, {}});
  EXPECT_EQ(count_coincidences(u, 4e-9)[Channel::HcHd], 1);
}

TEST(Detection, CountErrors) {
  const auto unsorted = streams_of({{2.0, 1.0}, {}, {}, {}});
  EXPECT_THROW(count_coincidences(unsorted, 5e-9), std::invalid_argument);
  const auto repeated = streams_of({{1.0, 1.0}, {}, {}, {}});
  EXPECT_THROW(count_coincidences(repeated, 5e-9), std::invalid_argument);
  EXPECT_THROW(count_coincidences(streams_of({{}, {}, {}, {}}), 0.0), std::invalid_argument);
}

TEST(Detection, TimestampFileRoundTrip) {
  const auto s = generate_timestamps(uniform_probs(), [] {
    AcquisitionConfig c = config(3);
    c.duration = 0.01;
    return c;
  }());
  std::stringstream io;
  write_timestamps(io, s);
  const TimestampStreams back = read_timestamps(io);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(back[i].detector, s[i].detector);
    EXPECT_EQ(back[i].times, s[i].times);
  }
  std::istringstream bad("Hc 1.0\n");
  EXPECT_THROW(read_timestamps(bad), std::invalid_argument);
  std::istringstream unknown("Xx\t1.0\n");
  EXPECT_THROW(read_timestamps(unknown), std::invalid_argument);
  std::istringstream comments("# header\n\nVd\t2.5\n");
  EXPECT_EQ(read_timestamps(comments)[3].times, std::vector<double>{2.5});
}

TEST(Detection, ConfigValidation) {
  AcquisitionConfig c;
  c.efficiency[2] = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.coincidence_window = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.dark_rate[0] = -1.0;
  EXPECT_THROW(sample_counts(uniform_probs(), c), std::invalid_argument);
}
