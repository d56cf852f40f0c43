#ifndef MPATH_STORE_CHECKPOINT_HPP_
#define MPATH_STORE_CHECKPOINT_HPP_

// Checkpoint directory layout:
//
//   manifest.json        format tag, version, tasks, modules (with blob path
//                        and SHA-256), paths, published models
//   blobs/<module>.bin   one tensor blob per module
//
// Blob layout (little-endian):
//   "MPTB" | u32 version | u32 tensor count
//   per tensor: u32 name length | name bytes | u8 dtype (1 = f64) |
//               u32 rank | u64 dims[rank] | f64 data[prod(dims)]

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mpath/autodiff/tensor.hpp"
#include "mpath/store/store.hpp"

namespace mpath::store {

inline constexpr int kCheckpointVersion = 1;
inline constexpr std::uint32_t kBlobVersion = 1;

using NamedTensor = std::pair<std::string, ad::Tensor>;

std::vector<std::uint8_t> encode_blob(const std::vector<NamedTensor>& tensors);
/// Throws FormatError on bad magic, unknown dtype or truncation.
std::vector<NamedTensor> decode_blob(const std::vector<std::uint8_t>& bytes, const std::string& context);

std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const SystemStore& store, const std::string& dir);
/// Throws FormatError on version mismatch, hash mismatch (naming the module)
/// or truncated blobs.
SystemStore load_checkpoint(const std::string& dir);

bool checkpoint_exists(const std::string& dir);

}  // namespace mpath::store

#endif  // MPATH_STORE_CHECKPOINT_HPP_
