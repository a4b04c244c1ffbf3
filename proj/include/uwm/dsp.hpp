// dsp.hpp - FFT, FIR design/filtering, correlation, Goertzel, resampling
#pragma once

#include <cstddef>

#include "uwm/types.hpp"

namespace uwm::dsp {

// Forward FFT, unnormalized: X[k] = sum_t x[t] e^{-j2pi kt/N}. Any length >= 1.
CVec fft(const CVec& x);
CVec fft(const Vec& x);
// Inverse FFT, normalized by 1/N; exact inverse of fft().
CVec ifft(const CVec& x);
// Inverse FFT of a Hermitian-symmetric spectrum, returning the real part.
Vec ifft_real(const CVec& x);

// Build one real OFDM symbol (length fft_size) from complex values on bins
// [first_bin, first_bin+vals.size()): places vals at the positive-frequency
// bins and conjugates at the mirrored bins, then inverse-transforms.
Vec symbol_from_band_bins(const CVec& vals, int first_bin, int fft_size);
// Forward transform of one received symbol segment seg[begin, begin+fft_size),
// sliced to bins [first_bin, first_bin+count).
CVec band_bins_from_segment(const Vec& seg, size_t begin, int fft_size, int first_bin, int count);

// Linear-phase FIR bandpass, windowed-sinc with a Hamming window; order+1 taps.
// The requested edges are treated as stopband targets: the ideal cutoffs are
// pulled inward by a fraction of the window's transition width so that
// attenuation at low-500/high+500 Hz reaches the design floor.
Vec design_bandpass(int order, double low_hz, double high_hz, double rate);
// Frequency response magnitude of an FIR at one frequency, in dB.
double fir_gain_db(const Vec& taps, double freq_hz, double rate);

// Full linear convolution (FFT-based), output length a+b-1.
Vec convolve(const Vec& a, const Vec& b);
// Filter a signal through a linear-phase FIR and remove the group delay, so
// output[i] lines up with input[i]; output length equals input length.
Vec filter_aligned(const Vec& x, const Vec& taps);

// Raw sliding inner products: out[i] = sum_j tmpl[j] * stream[i+j],
// for i in [0, stream.size()-tmpl.size()]. FFT-based.
Vec cross_correlate(const Vec& stream, const Vec& tmpl);
// Same, normalized by ||tmpl|| * ||window_i||; values in [-1, 1].
Vec normalized_cross_correlate(const Vec& stream, const Vec& tmpl);

// Tone power via the Goertzel recursion over x[begin, begin+len).
double goertzel_power(const Vec& x, size_t begin, size_t len, double freq_hz, double rate);

// Fractional resampling: out[n] = x(n * factor) by 4-point cubic interpolation.
// factor slightly != 1 models wideband Doppler as a time-base stretch.
Vec resample(const Vec& x, double factor);

// Prefix sums of x^2 (length x.size()+1) for O(1) window-energy queries.
Vec energy_prefix(const Vec& x);

}  // namespace uwm::dsp
