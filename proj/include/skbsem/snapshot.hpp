#pragma once

#include <string>
#include <utility>
#include <vector>

#include "skbsem/tensor.hpp"

namespace skbsem {

// Parameter snapshot file. Binary layout, all integers little-endian:
//   bytes 0-3   magic "SKBM"
//   bytes 4-5   format version, u16 (currently 1)
//   bytes 6-9   array count, u32
//   per array:
//     u16                 name length in bytes
//     name-length bytes   UTF-8 name
//     u8                  rank
//     rank * u32          dims
//     prod(dims) * f64    payload, little-endian IEEE-754
struct NamedTensors {
    std::vector<std::pair<std::string, Tensor>> items;
};

void save_snapshot(const std::string& path, const std::vector<std::pair<std::string, const Tensor*>>& arrays);
NamedTensors load_snapshot(const std::string& path);

// Looks up `name`, throws std::runtime_error when missing or shaped
// differently than `expect_shape`.
const Tensor& snapshot_get(const NamedTensors& snap, const std::string& name,
                           const std::vector<std::size_t>& expect_shape);

}  // namespace skbsem
