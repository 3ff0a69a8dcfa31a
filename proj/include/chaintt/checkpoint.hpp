#pragma once

// WTTC checkpoint format:
//   "WTTC" | u16 version | u64 N | N x u64 dims | (N+1) x u64 ranks |
//   cores as interleaved (re, im) float64 in (left, phys..., right) order.
// All integers and floats little-endian. Operator files store the row
// dimension in `dims`; cores then carry d*d physical entries per site.

#include <string>
#include <string_view>

#include "chaintt/tensor_train.hpp"

namespace chaintt {

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::string encode_checkpoint(const TTState& x);
std::string encode_checkpoint(const TTOperator& h);
TTState decode_state_checkpoint(std::string_view bytes);
TTOperator decode_operator_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const TTState& x);
TTState load_state_checkpoint(const std::string& path);

}  // namespace chaintt
