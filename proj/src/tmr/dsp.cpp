#include "tmr/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tmr/error.hpp"
#include "tmr/fft.hpp"

namespace tmr {

namespace {

using cplx = std::complex<double>;

double bessel_i0(double x) {
  // Series expansion; converges quickly for the beta range used here.
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

// One section, transposed direct form II, with initial state scaled to the
// first input sample (suppresses the startup transient after padding).
void sosfilt_one(const Sos& s, std::vector<double>& x) {
  const double k = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  const double zi2_unit = s.b2 - s.a2 * k;
  const double zi1_unit = s.b1 - s.a1 * k + zi2_unit;
  double z1 = zi1_unit * (x.empty() ? 0.0 : x[0]);
  double z2 = zi2_unit * (x.empty() ? 0.0 : x[0]);
  for (double& v : x) {
    const double in = v;
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    v = out;
  }
}

}  // namespace

std::vector<Sos> butter_bandpass(int order, double low_hz, double high_hz,
                                 double fs_hz) {
  if (order < 1) throw ConfigError("butter_bandpass: order must be >= 1");
  const double nyq = fs_hz / 2.0;
  if (!(0.0 < low_hz && low_hz < high_hz && high_hz < nyq))
    throw ConfigError("butter_bandpass: need 0 < low < high < Nyquist");

  // Analog Butterworth prototype poles on the unit circle, left half plane.
  std::vector<cplx> proto;
  for (int k = 0; k < order; ++k) {
    const double theta = M_PI * (2.0 * k + order + 1.0) / (2.0 * order);
    proto.emplace_back(std::cos(theta), std::sin(theta));
  }

  // Prewarped band edges, lowpass -> bandpass in the analog domain.
  const double w1 = 2.0 * fs_hz * std::tan(M_PI * low_hz / fs_hz);
  const double w2 = 2.0 * fs_hz * std::tan(M_PI * high_hz / fs_hz);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  std::vector<cplx> poles;
  for (const cplx& p : proto) {
    const cplx s = p * (bw / 2.0);
    const cplx d = std::sqrt(s * s - w0 * w0);
    poles.push_back(s + d);
    poles.push_back(s - d);
  }
  // `order` analog zeros at the origin; gain bw^order for a unity passband.
  double gain = std::pow(bw, order);

  // Bilinear transform. Zeros at s=0 map to z=+1; the `order` zeros at
  // infinity map to z=-1.
  const double fs2 = 2.0 * fs_hz;
  std::vector<cplx> zpoles;
  cplx denom_prod(1.0, 0.0);
  for (const cplx& p : poles) {
    zpoles.push_back((fs2 + p) / (fs2 - p));
    denom_prod *= (fs2 - p);
  }
  const cplx num_prod = std::pow(cplx(fs2, 0.0), order);  // fs2 - 0, order times
  gain *= (num_prod / denom_prod).real();

  // Pair conjugate poles into sections; each section takes one zero at +1 and
  // one at -1, i.e. numerator (1 - z^-2).
  std::vector<cplx> upper;
  for (const cplx& p : zpoles)
    if (p.imag() > 1e-12) upper.push_back(p);
  std::vector<cplx> reals;
  for (const cplx& p : zpoles)
    if (std::fabs(p.imag()) <= 1e-12) reals.push_back(p);

  std::vector<Sos> sos;
  for (const cplx& p : upper) {
    Sos s;
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    s.a1 = -2.0 * p.real();
    s.a2 = std::norm(p);
    sos.push_back(s);
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    Sos s;
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    s.a1 = -(reals[i].real() + reals[i + 1].real());
    s.a2 = reals[i].real() * reals[i + 1].real();
    sos.push_back(s);
  }
  if (sos.size() != static_cast<std::size_t>(order))
    throw NumericError("butter_bandpass: section pairing failed");
  sos[0].b0 *= gain;
  sos[0].b1 *= gain;
  sos[0].b2 *= gain;
  return sos;
}

std::complex<double> sos_response(std::span<const Sos> sos, double f_hz,
                                  double fs_hz) {
  const cplx zinv = std::exp(cplx(0.0, -2.0 * M_PI * f_hz / fs_hz));
  cplx h(1.0, 0.0);
  for (const Sos& s : sos) {
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) /
         (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
  }
  return h;
}

std::size_t filtfilt_min_length(std::span<const Sos> sos) {
  return 3 * (2 * sos.size() + 1);
}

std::vector<double> sosfiltfilt(std::span<const Sos> sos,
                                std::span<const double> x) {
  const std::size_t padlen = filtfilt_min_length(sos);
  if (x.size() <= padlen)
    throw NumericError("sosfiltfilt: input shorter than filter startup (need > " +
                       std::to_string(padlen) + " samples)");

  // Odd reflection about the end samples.
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * padlen);
  for (std::size_t i = 0; i < padlen; ++i)
    ext.push_back(2.0 * x[0] - x[padlen - i]);
  ext.insert(ext.end(), x.begin(), x.end());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < padlen; ++i)
    ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

  for (const Sos& s : sos) sosfilt_one(s, ext);
  std::reverse(ext.begin(), ext.end());
  for (const Sos& s : sos) sosfilt_one(s, ext);
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(padlen),
                             ext.begin() + static_cast<std::ptrdiff_t>(padlen + n));
}

std::vector<double> kaiser_lowpass(double cutoff_hz, double transition_hz,
                                   double fs_hz, double atten_db) {
  const double delta_w = 2.0 * M_PI * transition_hz / fs_hz;
  double beta = 0.0;
  if (atten_db > 50.0)
    beta = 0.1102 * (atten_db - 8.7);
  else if (atten_db >= 21.0)
    beta = 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
  std::size_t n = static_cast<std::size_t>(std::ceil((atten_db - 7.95) / (2.285 * delta_w)));
  if (n % 2 == 0) ++n;  // odd length -> integer group delay
  const auto m = static_cast<std::ptrdiff_t>(n - 1) / 2;

  std::vector<double> h(n);
  const double wc = 2.0 * M_PI * cutoff_hz / fs_hz;
  const double i0b = bessel_i0(beta);
  for (std::ptrdiff_t i = -m; i <= m; ++i) {
    const double sinc = i == 0 ? wc / M_PI : std::sin(wc * i) / (M_PI * i);
    const double r = static_cast<double>(i) / static_cast<double>(m);
    const double win = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
    h[static_cast<std::size_t>(i + m)] = sinc * win;
  }
  // Unity DC gain.
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v /= sum;
  return h;
}

std::vector<double> fir_zero_phase(std::span<const double> taps,
                                   std::span<const double> x) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto nt = static_cast<std::ptrdiff_t>(taps.size());
  const std::ptrdiff_t d = (nt - 1) / 2;
  if (n == 0) return {};
  auto mirrored = [&](std::ptrdiff_t i) {
    // Reflect about the edges without repeating the edge sample.
    while (i < 0 || i >= n) {
      if (i < 0) i = -i;
      if (i >= n) i = 2 * (n - 1) - i;
    }
    return x[static_cast<std::size_t>(i)];
  };
  std::vector<double> y(static_cast<std::size_t>(n));
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    if (i - d >= 0 && i - d + nt <= n) {
      const double* xp = x.data() + (i - d);
      for (std::ptrdiff_t j = 0; j < nt; ++j) acc += taps[static_cast<std::size_t>(j)] * xp[j];
    } else {
      for (std::ptrdiff_t j = 0; j < nt; ++j)
        acc += taps[static_cast<std::size_t>(j)] * mirrored(i - d + j);
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

std::vector<double> resample_series(std::span<const double> x, double src_hz,
                                    double target_hz) {
  if (target_hz > src_hz) throw ConfigError("resample: upsampling unsupported");
  if (src_hz <= 0.0 || target_hz <= 0.0) throw ConfigError("resample: bad rates");
  if (src_hz == target_hz) return std::vector<double>(x.begin(), x.end());

  const double ratio = src_hz / target_hz;
  const auto m = static_cast<std::size_t>(std::llround(ratio));
  if (std::fabs(ratio - static_cast<double>(m)) > 1e-9 || m < 1)
    throw ConfigError("resample: source rate must be an integer multiple of target");

  // Anti-alias at 45% of the output Nyquist so everything above the guard
  // band is suppressed before decimation.
  const double cutoff = 0.45 * (target_hz / 2.0);
  const auto taps = kaiser_lowpass(cutoff, 0.1 * target_hz, src_hz, 70.0);
  const auto filtered = fir_zero_phase(taps, x);

  const std::size_t n_out = x.empty() ? 0 : (x.size() - 1) / m + 1;
  std::vector<double> y(n_out);
  for (std::size_t k = 0; k < n_out; ++k) y[k] = filtered[k * m];
  return y;
}

std::vector<std::complex<double>> analytic_signal(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw NumericError("analytic_signal: input too short");
  std::vector<cplx> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = cplx(x[i], 0.0);
  fft(buf, false);
  // Single-sided spectrum: DC (and Nyquist for even n) kept, positive
  // frequencies doubled, negative frequencies zeroed.
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) buf[k] *= 2.0;
  for (std::size_t k = half + 1; k < n; ++k) buf[k] = cplx(0.0, 0.0);
  fft(buf, true);
  return buf;
}

std::vector<double> moving_average(std::span<const double> x, int window) {
  if (window < 1) throw ConfigError("moving_average: window must be >= 1");
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t lo = (window - 1) / 2;
  const std::ptrdiff_t hi = window / 2;
  std::vector<double> y(static_cast<std::size_t>(n));
  double acc = 0.0;
  std::ptrdiff_t left = 0, right = -1;  // current inclusive window [left, right]
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t want_l = std::max<std::ptrdiff_t>(0, i - lo);
    const std::ptrdiff_t want_r = std::min<std::ptrdiff_t>(n - 1, i + hi);
    while (right < want_r) acc += x[static_cast<std::size_t>(++right)];
    while (left < want_l) acc -= x[static_cast<std::size_t>(left++)];
    y[static_cast<std::size_t>(i)] = acc / static_cast<double>(want_r - want_l + 1);
  }
  return y;
}

}  // namespace tmr
