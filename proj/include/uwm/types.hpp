// types.hpp - shared sample/bit/spectrum containers used across the modem
#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace uwm {

using cplx = std::complex<double>;
using Vec = std::vector<double>;    // real time-domain samples
using CVec = std::vector<cplx>;     // complex spectra
using Bits = std::vector<uint8_t>;  // one bit per element, values 0/1

// Real-valued audio at a fixed sample rate; the universal signal currency.
struct SampleBuffer {
    Vec samples;
    double rate = 48000.0;
};

}  // namespace uwm
