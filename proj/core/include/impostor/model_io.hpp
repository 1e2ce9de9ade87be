#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "impostor/dataset.hpp"
#include "impostor/model.hpp"

namespace impostor {

inline constexpr char kModelMagic[4] = {'I', 'M', 'P', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

/// Model file, little-endian:
///   "IMPM" | version u32
///   | input_dim u32 | layer_count u32 | passthrough_scale f64
///   | layer_count x (in u32 | out u32 | activation u32 | out*in f32 weights | out f32 bias)
///   | L u32 | head tag u32 (0 raw, 1 pq, 2 softmax)
///     raw: M u32 | d u32 | M x (label u32, d x f32)
///     pq:  M u32 | d u32 | m u32 | k u32 | m*k*(d/m) f64 centroids
///          | M x label u32 | M*m codes (u8 when k <= 256, else u16)
///   | sigma f64 | metadata length u32 | metadata UTF-8 JSON
///   | crc32 u32 of every preceding byte
std::vector<std::uint8_t> serialize_model(const TrainedModel& model);
TrainedModel parse_model(const std::vector<std::uint8_t>& bytes);

void write_model(const std::string& path, const TrainedModel& model);
TrainedModel read_model(const std::string& path);

/// Backbone parameters and raw impostors rounded to f32, i.e. the values a
/// write/read cycle produces.
TrainedModel round_to_storage(const TrainedModel& model);

}  // namespace impostor
