#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "dfdrnn/dataset.hpp"
#include "dfdrnn/model.hpp"

namespace dfdrnn {

// Identifies the dataset a checkpoint was trained on.
struct DatasetFingerprint {
  std::size_t drugs = 0;
  std::size_t diseases = 0;
  std::uint64_t drug_hash = 0;     // FNV-1a over the ordered drug ids
  std::uint64_t disease_hash = 0;  // FNV-1a over the ordered disease ids

  static DatasetFingerprint of(const Dataset& d);
  friend bool operator==(const DatasetFingerprint&, const DatasetFingerprint&) = default;
};

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  DatasetFingerprint fingerprint;
};

inline constexpr int kCheckpointVersion = 1;

// CBOR-encoded container: version, config, fingerprint, tensors.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Throws DataError on a malformed file, a version it does not know, or (when
// `expected` is given) a fingerprint mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const DatasetFingerprint* expected = nullptr);

}  // namespace dfdrnn
