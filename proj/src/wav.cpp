// wav.cpp - minimal mono 16-bit PCM WAV I/O
#include "uwm/wav.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace uwm {

namespace {

void put_u32(std::ofstream& f, uint32_t v) {
    char b[4] = {(char)(v & 0xff), (char)((v >> 8) & 0xff), (char)((v >> 16) & 0xff),
                 (char)((v >> 24) & 0xff)};
    f.write(b, 4);
}

void put_u16(std::ofstream& f, uint16_t v) {
    char b[2] = {(char)(v & 0xff), (char)((v >> 8) & 0xff)};
    f.write(b, 2);
}

uint32_t get_u32(const uint8_t* p) {
    return (uint32_t)p[0] | ((uint32_t)p[1] << 8) | ((uint32_t)p[2] << 16) | ((uint32_t)p[3] << 24);
}

uint16_t get_u16(const uint8_t* p) { return (uint16_t)((uint32_t)p[0] | ((uint32_t)p[1] << 8)); }

}  // namespace

void write_wav(const std::string& path, const SampleBuffer& buf) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_wav: cannot open " + path);
    const uint32_t n = (uint32_t)buf.samples.size();
    const uint32_t data_bytes = n * 2;
    const uint32_t rate = (uint32_t)buf.rate;
    f.write("RIFF", 4);
    put_u32(f, 36 + data_bytes);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    put_u32(f, 16);
    put_u16(f, 1);  // PCM
    put_u16(f, 1);  // mono
    put_u32(f, rate);
    put_u32(f, rate * 2);  // byte rate
    put_u16(f, 2);         // block align
    put_u16(f, 16);        // bits per sample
    f.write("data", 4);
    put_u32(f, data_bytes);
    for (uint32_t i = 0; i < n; ++i) {
        double v = std::clamp(buf.samples[i], -1.0, 32767.0 / 32768.0);
        int16_t s = (int16_t)std::lround(v * 32768.0);
        char b[2] = {(char)(s & 0xff), (char)((s >> 8) & 0xff)};
        f.write(b, 2);
    }
    if (!f) throw std::runtime_error("write_wav: write failed for " + path);
}

SampleBuffer read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_wav: cannot open " + path);
    std::vector<uint8_t> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (raw.size() < 44 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
        std::memcmp(raw.data() + 8, "WAVE", 4) != 0)
        throw std::runtime_error("read_wav: not a RIFF/WAVE file: " + path);

    // walk chunks
    size_t pos = 12;
    uint16_t channels = 0, bits = 0, format = 0;
    uint32_t rate = 0;
    const uint8_t* data = nullptr;
    uint32_t data_len = 0;
    while (pos + 8 <= raw.size()) {
        const uint8_t* ck = raw.data() + pos;
        uint32_t len = get_u32(ck + 4);
        if (std::memcmp(ck, "fmt ", 4) == 0 && len >= 16 && pos + 8 + len <= raw.size()) {
            format = get_u16(ck + 8);
            channels = get_u16(ck + 10);
            rate = get_u32(ck + 12);
            bits = get_u16(ck + 22);
        } else if (std::memcmp(ck, "data", 4) == 0 && pos + 8 + len <= raw.size()) {
            data = ck + 8;
            data_len = len;
        }
        pos += 8 + len + (len & 1);
    }
    if (format != 1 || channels != 1 || bits != 16)
        throw std::runtime_error("read_wav: only mono 16-bit PCM supported: " + path);
    if (!data) throw std::runtime_error("read_wav: missing data chunk: " + path);

    SampleBuffer out;
    out.rate = (double)rate;
    out.samples.resize(data_len / 2);
    for (size_t i = 0; i < out.samples.size(); ++i) {
        int16_t s = (int16_t)get_u16(data + 2 * i);
        out.samples[i] = s / 32768.0;
    }
    return out;
}

}  // namespace uwm
