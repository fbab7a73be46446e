// Signal-processing kernels: IIR design (notch, Butterworth bandpass and
// lowpass), causal biquad filtering, Welch PSD, band power, zero-crossing
// rate. All routines are pure and deterministic.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "affectbench/core.hpp"

namespace afb {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// One second-order section, a0 normalized to 1.
struct Biquad {
    double b0 = 0, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
};

struct BiquadCascade {
    std::vector<Biquad> sections;
    double sample_rate_hz = 0.0;
};

// |H(f)| of the cascade evaluated on the unit circle.
inline double magnitude_response(const BiquadCascade& f, double freq_hz) {
    const double w = 2.0 * kPi * freq_hz / f.sample_rate_hz;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    std::complex<double> h(1.0, 0.0);
    for (const auto& s : f.sections)
        h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    return std::abs(h);
}

namespace detail {

// Section poles must lie strictly inside the unit circle.
inline void assert_stable(const BiquadCascade& f, const char* what) {
    for (const auto& s : f.sections) {
        // roots of z^2 + a1 z + a2
        const std::complex<double> disc = std::sqrt(std::complex<double>(s.a1 * s.a1 - 4 * s.a2));
        const std::complex<double> r1 = (-s.a1 + disc) / 2.0;
        const std::complex<double> r2 = (-s.a1 - disc) / 2.0;
        if (std::abs(r1) >= 1.0 || std::abs(r2) >= 1.0)
            throw parameter_error(std::string(what) + ": designed section is unstable");
    }
}

// Analog Butterworth prototype poles, unit cutoff, order n.
inline std::vector<std::complex<double>> butter_prototype(int n) {
    std::vector<std::complex<double>> poles;
    for (int k = 0; k < n; ++k) {
        const double theta = kPi * (2.0 * k + n + 1.0) / (2.0 * n);
        poles.emplace_back(std::cos(theta), std::sin(theta));
    }
    return poles;
}

inline std::complex<double> bilinear(std::complex<double> s) { return (1.0 + s) / (1.0 - s); }

// Groups digital poles into biquad denominators: conjugate pairs use the
// upper-half representative; leftover real poles are paired sequentially.
inline std::vector<Biquad> denominators_from_poles(std::vector<std::complex<double>> poles) {
    std::vector<std::complex<double>> upper;
    std::vector<double> real;
    for (const auto& p : poles) {
        if (p.imag() > 1e-9)
            upper.push_back(p);
        else if (p.imag() >= -1e-9)
            real.push_back(p.real());
    }
    std::sort(upper.begin(), upper.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    std::sort(real.begin(), real.end());
    std::vector<Biquad> out;
    for (const auto& p : upper) {
        Biquad s;
        s.a1 = -2.0 * p.real();
        s.a2 = std::norm(p);
        out.push_back(s);
    }
    for (std::size_t i = 0; i + 1 < real.size(); i += 2) {
        Biquad s;
        s.a1 = -(real[i] + real[i + 1]);
        s.a2 = real[i] * real[i + 1];
        out.push_back(s);
    }
    if (real.size() % 2 == 1) {  // single first-order section
        Biquad s;
        s.a1 = -real.back();
        s.a2 = 0.0;
        out.push_back(s);
    }
    return out;
}

}  // namespace detail

// Narrow notch at f0 with quality factor q. DC and Nyquist gain are
// exactly 1; gain at f0 is exactly 0.
inline BiquadCascade design_notch(double f0_hz, double q, double fs_hz) {
    if (!(fs_hz > 0)) throw parameter_error("design_notch: sample rate must be positive");
    if (!(f0_hz > 0 && f0_hz < fs_hz / 2))
        throw parameter_error("design_notch: notch frequency must lie in (0, Nyquist)");
    if (!(q > 0)) throw parameter_error("design_notch: q must be positive");
    const double w0 = 2.0 * kPi * f0_hz / fs_hz;
    const double beta = std::tan(w0 / (2.0 * q));
    const double gain = 1.0 / (1.0 + beta);
    Biquad s;
    s.b0 = gain;
    s.b1 = -2.0 * gain * std::cos(w0);
    s.b2 = gain;
    s.a1 = -2.0 * gain * std::cos(w0);
    s.a2 = 2.0 * gain - 1.0;
    BiquadCascade f{{s}, fs_hz};
    detail::assert_stable(f, "design_notch");
    return f;
}

// Butterworth bandpass; `order` is the prototype order, so the result has
// 2*order poles in `order` sections. Band edges sit at -3 dB exactly
// (bilinear transform with prewarped edges).
inline BiquadCascade design_bandpass(double lo_hz, double hi_hz, int order, double fs_hz) {
    if (!(fs_hz > 0)) throw parameter_error("design_bandpass: sample rate must be positive");
    if (!(lo_hz > 0 && lo_hz < hi_hz && hi_hz < fs_hz / 2))
        throw parameter_error("design_bandpass: need 0 < lo < hi < Nyquist");
    if (order < 1) throw parameter_error("design_bandpass: order must be >= 1");
    const double w1 = std::tan(kPi * lo_hz / fs_hz);
    const double w2 = std::tan(kPi * hi_hz / fs_hz);
    const double bw = w2 - w1;
    const double w0sq = w1 * w2;
    std::vector<std::complex<double>> zpoles;
    for (const auto& p : detail::butter_prototype(order)) {
        // lowpass -> bandpass: s^2 - bw*p*s + w0^2 = 0
        const std::complex<double> b = bw * p;
        const std::complex<double> disc = std::sqrt(b * b - 4.0 * w0sq);
        zpoles.push_back(detail::bilinear((b + disc) / 2.0));
        zpoles.push_back(detail::bilinear((b - disc) / 2.0));
    }
    BiquadCascade f;
    f.sample_rate_hz = fs_hz;
    for (auto& s : detail::denominators_from_poles(zpoles)) {
        s.b0 = 1.0;
        s.b1 = 0.0;
        s.b2 = -1.0;  // one zero at z=+1 and one at z=-1 per section
        f.sections.push_back(s);
    }
    // normalize each section to unit gain at the warped center frequency
    const double fc = fs_hz / kPi * std::atan(std::sqrt(w0sq));
    BiquadCascade probe{{}, fs_hz};
    for (auto& s : f.sections) {
        probe.sections = {s};
        const double g = magnitude_response(probe, fc);
        s.b0 /= g;
        s.b1 /= g;
        s.b2 /= g;
    }
    detail::assert_stable(f, "design_bandpass");
    return f;
}

// Butterworth lowpass, unit gain at DC.
inline BiquadCascade design_lowpass(double cutoff_hz, int order, double fs_hz) {
    if (!(fs_hz > 0)) throw parameter_error("design_lowpass: sample rate must be positive");
    if (!(cutoff_hz > 0 && cutoff_hz < fs_hz / 2))
        throw parameter_error("design_lowpass: cutoff must lie in (0, Nyquist)");
    if (order < 1) throw parameter_error("design_lowpass: order must be >= 1");
    const double wc = std::tan(kPi * cutoff_hz / fs_hz);
    std::vector<std::complex<double>> zpoles;
    for (const auto& p : detail::butter_prototype(order))
        zpoles.push_back(detail::bilinear(wc * p));
    BiquadCascade f;
    f.sample_rate_hz = fs_hz;
    const std::size_t n_pair = zpoles.size() / 2;
    auto sections = detail::denominators_from_poles(zpoles);
    for (std::size_t i = 0; i < sections.size(); ++i) {
        Biquad s = sections[i];
        const bool first_order = (i >= n_pair && order % 2 == 1 && i + 1 == sections.size());
        if (first_order) {
            s.b0 = 1.0;
            s.b1 = 1.0;
            s.b2 = 0.0;
        } else {
            s.b0 = 1.0;
            s.b1 = 2.0;
            s.b2 = 1.0;
        }
        const double num_dc = s.b0 + s.b1 + s.b2;
        const double den_dc = 1.0 + s.a1 + s.a2;
        const double g = den_dc / num_dc;
        s.b0 *= g;
        s.b1 *= g;
        s.b2 *= g;
        f.sections.push_back(s);
    }
    detail::assert_stable(f, "design_lowpass");
    return f;
}

// Causal direct-form-II-transposed filtering from zero initial state.
inline std::vector<double> filter_apply(const BiquadCascade& f, const std::vector<double>& x) {
    for (double v : x)
        if (!std::isfinite(v)) throw parameter_error("filter_apply: input must be finite");
    std::vector<double> y = x;
    for (const auto& s : f.sections) {
        double s1 = 0.0, s2 = 0.0;
        for (auto& v : y) {
            const double in = v;
            const double out = s.b0 * in + s1;
            s1 = s.b1 * in - s.a1 * out + s2;
            s2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    return y;
}

// Same filtering, but each section starts at the DC equilibrium for the
// first input sample. A constant input then stays exactly constant, which
// keeps slow-response zero-crossing features free of start-up transients.
inline std::vector<double> filter_apply_steady(const BiquadCascade& f,
                                               const std::vector<double>& x) {
    for (double v : x)
        if (!std::isfinite(v)) throw parameter_error("filter_apply: input must be finite");
    std::vector<double> y = x;
    if (y.empty()) return y;
    for (const auto& s : f.sections) {
        const double x0 = y[0];
        const double den = 1.0 + s.a1 + s.a2;
        const double y0 = den != 0.0 ? x0 * (s.b0 + s.b1 + s.b2) / den : 0.0;
        double s1 = y0 - s.b0 * x0;
        double s2 = s.b2 * x0 - s.a2 * y0;
        for (auto& v : y) {
            const double in = v;
            const double out = s.b0 * in + s1;
            s1 = s.b1 * in - s.a1 * out + s2;
            s2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    return y;
}

struct Spectrum {
    std::vector<double> freqs_hz;
    std::vector<double> psd;
};

namespace detail {

inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// DFT bins 0..n/2 of a real segment; radix-2 when possible, naive otherwise.
inline std::vector<std::complex<double>> real_dft_half(const std::vector<double>& seg) {
    const std::size_t n = seg.size();
    std::vector<std::complex<double>> out(n / 2 + 1);
    if (is_pow2(n)) {
        std::vector<std::complex<double>> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = seg[i];
        fft_radix2(a);
        for (std::size_t k = 0; k <= n / 2; ++k) out[k] = a[k];
        return out;
    }
    for (std::size_t k = 0; k <= n / 2; ++k) {
        std::complex<double> s(0.0, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double ang = -2.0 * kPi * static_cast<double>(k) * static_cast<double>(i) /
                               static_cast<double>(n);
            s += seg[i] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = s;
    }
    return out;
}

}  // namespace detail

// Welch power spectral density (one-sided, density scaling). Each segment
// has its mean removed before tapering, so the estimate is invariant to
// adding a constant at every bin except DC, which it zeroes.
inline Spectrum welch_psd(const std::vector<double>& x, double fs_hz, std::size_t seg_len,
                          double overlap, const std::string& window = "hann") {
    if (!(fs_hz > 0)) throw parameter_error("welch_psd: sample rate must be positive");
    if (seg_len < 8) throw parameter_error("welch_psd: segment length must be >= 8");
    if (seg_len % 2 != 0) throw parameter_error("welch_psd: segment length must be even");
    if (x.size() < seg_len) throw parameter_error("welch_psd: segment longer than signal");
    if (!(overlap >= 0.0 && overlap < 1.0))
        throw parameter_error("welch_psd: overlap must lie in [0,1)");
    std::vector<double> w(seg_len, 1.0);
    if (window == "hann") {
        for (std::size_t i = 0; i < seg_len; ++i)
            w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                        static_cast<double>(seg_len));
    } else if (window != "rect") {
        throw parameter_error("welch_psd: unknown window '" + window + "'");
    }
    double u = 0.0;
    for (double v : w) u += v * v;
    const std::size_t noverlap = static_cast<std::size_t>(
        std::lround(overlap * static_cast<double>(seg_len)));
    const std::size_t step = seg_len - noverlap;
    const std::size_t nseg = 1 + (x.size() - seg_len) / step;
    const std::size_t nbins = seg_len / 2 + 1;
    std::vector<double> acc(nbins, 0.0);
    std::vector<double> seg(seg_len);
    for (std::size_t s = 0; s < nseg; ++s) {
        const std::size_t off = s * step;
        double mean = 0.0;
        for (std::size_t i = 0; i < seg_len; ++i) mean += x[off + i];
        mean /= static_cast<double>(seg_len);
        for (std::size_t i = 0; i < seg_len; ++i) seg[i] = (x[off + i] - mean) * w[i];
        const auto spec = detail::real_dft_half(seg);
        for (std::size_t k = 0; k < nbins; ++k) acc[k] += std::norm(spec[k]);
    }
    Spectrum out;
    out.freqs_hz.resize(nbins);
    out.psd.resize(nbins);
    const double scale = 1.0 / (fs_hz * u * static_cast<double>(nseg));
    for (std::size_t k = 0; k < nbins; ++k) {
        out.freqs_hz[k] = fs_hz * static_cast<double>(k) / static_cast<double>(seg_len);
        const double one_sided = (k == 0 || k == nbins - 1) ? 1.0 : 2.0;
        out.psd[k] = acc[k] * scale * one_sided;
    }
    return out;
}

// Integral of the piecewise-linear PSD over [lo, hi]. Exactly additive
// over adjacent bands.
inline double band_power(const Spectrum& s, double lo_hz, double hi_hz) {
    if (s.freqs_hz.size() < 2) throw parameter_error("band_power: spectrum too short");
    const double nyq = s.freqs_hz.back();
    if (!(lo_hz >= 0.0 && lo_hz < hi_hz && hi_hz <= nyq + 1e-12))
        throw parameter_error("band_power: band must satisfy 0 <= lo < hi <= Nyquist");
    hi_hz = std::min(hi_hz, nyq);
    auto value_at = [&](double f, std::size_t i) {
        // linear interpolation on grid interval i..i+1
        const double f0 = s.freqs_hz[i], f1 = s.freqs_hz[i + 1];
        const double t = (f - f0) / (f1 - f0);
        return s.psd[i] + t * (s.psd[i + 1] - s.psd[i]);
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < s.freqs_hz.size(); ++i) {
        const double f0 = std::max(s.freqs_hz[i], lo_hz);
        const double f1 = std::min(s.freqs_hz[i + 1], hi_hz);
        if (f1 <= f0) continue;
        total += 0.5 * (value_at(f0, i) + value_at(f1, i)) * (f1 - f0);
    }
    return total;
}

// Strict sign changes of (x - mean(x)) per second; duration is the span
// from the first to the last sample.
inline double zero_crossing_rate(const std::vector<double>& x, double fs_hz) {
    if (x.size() < 2) throw parameter_error("zero_crossing_rate: need at least 2 samples");
    if (!(fs_hz > 0)) throw parameter_error("zero_crossing_rate: sample rate must be positive");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    int last_sign = 0;
    std::size_t crossings = 0;
    for (double v : x) {
        const double d = v - mean;
        const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
        if (sign != 0) {
            if (last_sign != 0 && sign != last_sign) ++crossings;
            last_sign = sign;
        }
    }
    const double duration = static_cast<double>(x.size() - 1) / fs_hz;
    return static_cast<double>(crossings) / duration;
}

}  // namespace afb
