#include "wstreamlet/gf256.hpp"

#include <cstddef>
#include <stdexcept>

namespace wstreamlet::gf256 {

namespace {

uint8_t g_exp[512];
uint8_t g_log[256];
bool g_init = false;

}  // namespace

void init_tables() {
    if (g_init) return;
    unsigned x = 1;
    for (unsigned i = 0; i < 255; ++i) {
        g_exp[i] = static_cast<uint8_t>(x);
        g_log[x] = static_cast<uint8_t>(i);
        x <<= 1;
        if (x & 0x100) x ^= 0x11d;
    }
    for (unsigned i = 255; i < 512; ++i) g_exp[i] = g_exp[i - 255];
    g_log[0] = 0;  // log(0) is undefined; callers guard
    g_init = true;
}

uint8_t mul(uint8_t a, uint8_t b) {
    if (a == 0 || b == 0) return 0;
    init_tables();
    return g_exp[g_log[a] + g_log[b]];
}

uint8_t inv(uint8_t a) {
    if (a == 0) throw std::invalid_argument("gf256 inverse of zero");
    init_tables();
    return g_exp[255 - g_log[a]];
}

uint8_t div(uint8_t a, uint8_t b) {
    if (b == 0) throw std::invalid_argument("gf256 division by zero");
    if (a == 0) return 0;
    init_tables();
    return g_exp[g_log[a] + 255 - g_log[b]];
}

void mul_add(uint8_t* dst, const uint8_t* src, uint8_t c, size_t len) {
    if (c == 0) return;
    init_tables();
    if (c == 1) {
        for (size_t i = 0; i < len; ++i) dst[i] ^= src[i];
        return;
    }
    unsigned lc = g_log[c];
    for (size_t i = 0; i < len; ++i) {
        uint8_t s = src[i];
        if (s) dst[i] ^= g_exp[lc + g_log[s]];
    }
}

void scale(uint8_t* dst, uint8_t c, size_t len) {
    init_tables();
    if (c == 1) return;
    if (c == 0) {
        for (size_t i = 0; i < len; ++i) dst[i] = 0;
        return;
    }
    unsigned lc = g_log[c];
    for (size_t i = 0; i < len; ++i) {
        uint8_t s = dst[i];
        dst[i] = s ? g_exp[lc + g_log[s]] : 0;
    }
}

}  // namespace wstreamlet::gf256
