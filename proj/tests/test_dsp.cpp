#include <doctest.h>

#include <cmath>
#include <complex>

#include "tmr/dsp.hpp"
#include "tmr/error.hpp"
#include "tmr/fft.hpp"
#include "tmr/rng.hpp"

using namespace tmr;

namespace {

std::vector<double> sine(double freq, double fs, std::size_t n, double amp = 1.0,
                         double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / fs + phase);
  return x;
}

double db(double ratio) { return 20.0 * std::log10(ratio); }

// Peak amplitude of a sinusoidal component estimated over interior samples.
double interior_peak(const std::vector<double>& x, std::size_t trim) {
  double peak = 0.0;
  for (std::size_t i = trim; i + trim < x.size(); ++i)
    peak = std::max(peak, std::fabs(x[i]));
  return peak;
}

}  // namespace

TEST_CASE("fft round trip and a known transform") {
  std::vector<std::complex<double>> x = {{1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}};
  auto y = x;
  fft(y, false);
  // DC bin is the plain sum.
  CHECK(y[0].real() == doctest::Approx(15.0).epsilon(1e-12));
  fft(y, true);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(y[i].real() == doctest::Approx(x[i].real()).epsilon(1e-12));
    CHECK(y[i].imag() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }
}

TEST_CASE("butterworth bandpass meets the response spec (two-pass)") {
  const auto sos = butter_bandpass(4, 1.0, 20.0, 100.0);
  REQUIRE(sos.size() == 4);

  // Two-pass (zero-phase) attenuation is |H|^2.
  auto two_pass_db = [&](double f) {
    return 2.0 * db(std::abs(sos_response(sos, f, 100.0)));
  };
  CHECK(two_pass_db(0.2) <= -30.0);
  CHECK(two_pass_db(40.0) <= -30.0);
  CHECK(std::fabs(two_pass_db(10.0)) <= 1.0);
}

TEST_CASE("sosfiltfilt: 10 Hz passband sine preserved, 0.1 Hz drift removed") {
  const auto sos = butter_bandpass(4, 1.0, 20.0, 100.0);
  const std::size_t n = 3000;

  const auto pass = sosfiltfilt(sos, sine(10.0, 100.0, n));
  CHECK(interior_peak(pass, 300) == doctest::Approx(1.0).epsilon(0.12));

  const auto drift = sosfiltfilt(sos, sine(0.1, 100.0, n));
  CHECK(interior_peak(drift, 300) < std::pow(10.0, -30.0 / 20.0));
}

TEST_CASE("sosfiltfilt is zero-phase (impulse stays put, lag = 0)") {
  const auto sos = butter_bandpass(4, 1.0, 20.0, 100.0);
  std::vector<double> x(801, 0.0);
  x[400] = 1.0;
  const auto y = sosfiltfilt(sos, x);
  std::size_t peak = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (std::fabs(y[i]) > std::fabs(y[peak])) peak = i;
  CHECK(peak == 400);

  SUBCASE("cross-correlation lag of a band-limited signal is 0") {
    Rng rng(4);
    std::vector<double> raw(2000);
    for (auto& v : raw) v = rng.normal();
    const auto band = sosfiltfilt(sos, raw);  // band-limited input
    const auto out = sosfiltfilt(sos, band);
    // argmax over lags in [-20, 20] of the cross-correlation.
    double best = -1e300;
    int best_lag = -99;
    for (int lag = -20; lag <= 20; ++lag) {
      double acc = 0.0;
      for (std::size_t i = 100; i + 100 < band.size(); ++i) {
        const auto j = static_cast<std::ptrdiff_t>(i) + lag;
        acc += band[i] * out[static_cast<std::size_t>(j)];
      }
      if (acc > best) {
        best = acc;
        best_lag = lag;
      }
    }
    CHECK(best_lag == 0);
  }
}

TEST_CASE("sosfiltfilt rejects too-short inputs") {
  const auto sos = butter_bandpass(4, 1.0, 20.0, 100.0);
  const std::vector<double> x(filtfilt_min_length(sos), 0.0);
  CHECK_THROWS_AS(sosfiltfilt(sos, x), NumericError);
}

TEST_CASE("resample 1000 -> 100 Hz: 5 Hz sine within 1e-3") {
  const double fs = 1000.0;
  const std::size_t n = 20000;  // 20 s
  const auto x = sine(5.0, fs, n);
  const auto y = resample_series(x, fs, 100.0);
  CHECK(y.size() == (n - 1) / 10 + 1);

  double max_err = 0.0;
  for (std::size_t k = 200; k + 200 < y.size(); ++k) {
    const double expect = std::sin(2.0 * M_PI * 5.0 * static_cast<double>(k) / 100.0);
    max_err = std::max(max_err, std::fabs(y[k] - expect));
  }
  CHECK(max_err < 1e-3);
}

TEST_CASE("resample: identity passthrough at equal rates") {
  const auto x = sine(3.0, 100.0, 500);
  const auto y = resample_series(x, 100.0, 100.0);
  REQUIRE(y.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("resample: 35 Hz at 500 Hz lands above the guard band, attenuated >= 30 dB") {
  const double fs = 500.0;
  const std::size_t n = 10000;
  const auto x = sine(35.0, fs, n);
  const auto y = resample_series(x, fs, 100.0);
  CHECK(db(interior_peak(y, 100)) <= -30.0);
}

TEST_CASE("resample: upsampling is rejected") {
  const std::vector<double> x(100, 0.0);
  CHECK_THROWS_AS(resample_series(x, 100.0, 200.0), ConfigError);
}

TEST_CASE("analytic signal") {
  SUBCASE("pure 2 Hz cosine: phase advances 2 pi per 0.5 s") {
    const double fs = 100.0;
    const std::size_t n = 450;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
      x[i] = std::cos(2.0 * M_PI * 2.0 * static_cast<double>(i) / fs);
    const auto z = analytic_signal(x);
    // Unwrapped phase slope over interior samples.
    double prev = std::arg(z[50]);
    double unwrapped = prev;
    for (std::size_t i = 51; i < n - 50; ++i) {
      double ph = std::arg(z[i]);
      double d = ph - prev;
      while (d > M_PI) d -= 2.0 * M_PI;
      while (d < -M_PI) d += 2.0 * M_PI;
      unwrapped += d;
      prev = ph;
    }
    const double slope =
        (unwrapped - std::arg(z[50])) / (static_cast<double>(n - 100 - 1) / fs);
    CHECK(slope == doctest::Approx(2.0 * M_PI * 2.0).epsilon(0.01));
  }
  SUBCASE("AM 13 Hz tone: envelope recovered within 5% RMS") {
    const double fs = 100.0;
    const std::size_t n = 450;
    std::vector<double> x(n), env(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      env[i] = 1.0 + 0.5 * std::sin(2.0 * M_PI * 1.0 * t);
      x[i] = env[i] * std::cos(2.0 * M_PI * 13.0 * t);
    }
    const auto z = analytic_signal(x);
    double err2 = 0.0, ref2 = 0.0;
    for (std::size_t i = 25; i + 25 < n; ++i) {
      const double d = std::abs(z[i]) - env[i];
      err2 += d * d;
      ref2 += env[i] * env[i];
    }
    CHECK(std::sqrt(err2 / ref2) < 0.05);
  }
  SUBCASE("zero signal: amplitude 0") {
    const std::vector<double> x(128, 0.0);
    const auto z = analytic_signal(x);
    for (const auto& v : z) CHECK(std::abs(v) == doctest::Approx(0.0));
  }
}

TEST_CASE("moving average: impulse smears to a 20-sample plateau of height 1/20") {
  std::vector<double> x(100, 0.0);
  x[50] = 1.0;
  const auto y = moving_average(x, 20);
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] > 0.0) {
      ++nonzero;
      CHECK(y[i] == doctest::Approx(1.0 / 20.0).epsilon(1e-12));
    }
  }
  CHECK(nonzero == 20);

  SUBCASE("edges are truncated, not zero padded") {
    std::vector<double> ones(30, 1.0);
    const auto z = moving_average(ones, 20);
    for (double v : z) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
}
