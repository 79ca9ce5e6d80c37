#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "inkwell/refine.hpp"

namespace inkwell {

/// Model file layout, all integers little-endian:
///
///   "INKW"            4 bytes
///   version           u16 (currently 1)
///   mode              u8  (0 = recurrent, 1 = stacked)
///   m                 u32
///   depth             u32
///   widths            depth x u32
///   leaky_slope       f32
///   then for each net (1 for recurrent, m for stacked), for each parameter
///   block in UNetParams order:
///   length            u32 element count
///   values            length x f32
///
/// Weights are narrowed to 32-bit on save.
inline constexpr std::uint16_t kModelVersion = 1;

std::vector<std::uint8_t> save_model(const RefineChain& chain);
RefineChain load_model(std::span<const std::uint8_t> bytes);

void write_model_file(const std::string& path, const RefineChain& chain);
RefineChain read_model_file(const std::string& path);

}  // namespace inkwell
