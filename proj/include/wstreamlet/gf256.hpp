#pragma once

#include <cstddef>
#include <cstdint>

namespace wstreamlet::gf256 {

// GF(2^8) with the primitive polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11d).
// Addition is XOR; multiplication goes through log/exp tables.

void init_tables();  // idempotent; called lazily by the functions below

uint8_t mul(uint8_t a, uint8_t b);
uint8_t inv(uint8_t a);  // a != 0
uint8_t div(uint8_t a, uint8_t b);

// dst[i] ^= c * src[i] over `len` bytes.
void mul_add(uint8_t* dst, const uint8_t* src, uint8_t c, size_t len);

// dst[i] = c * dst[i].
void scale(uint8_t* dst, uint8_t c, size_t len);

}  // namespace wstreamlet::gf256
