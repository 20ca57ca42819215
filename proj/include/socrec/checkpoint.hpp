#pragma once

// Model file: a versioned binary container. All integers are little-endian
// u32 unless noted, floats are little-endian IEEE-754 f64.
//
//   magic        4 bytes  "SOCM"
//   version      u32      1
//   d            u32
//   hidden       u32
//   variant      u8       0 full, 1 co_only, 2 none
//   use_soc      u8       0/1
//   scale_logits u8       0/1
//   literal_self u8       0/1
//   trainable    u8       0/1, item table trainable when saved
//   reserved     3 bytes  zero
//   item_count   u32
//   matrix_count u32
//   item ids     item_count x (u32 length, UTF-8 bytes)
//   matrices     matrix_count x (u32 name length, name bytes,
//                                u32 rows, u32 cols, rows*cols f64 row-major)
//
// Matrix names: the twelve SoC names from soc_matrix_names(), then head.w1,
// head.b1, head.w2, head.b2, items.embeddings, written in that order.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "socrec/model.hpp"

namespace socrec {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ScaaModel model;
  std::vector<std::string> item_ids;  // row i of the item table belongs to item_ids[i]
};

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace socrec
