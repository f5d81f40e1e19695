#pragma once

#include <cstddef>
#include <cstdint>

#include "dfdrnn/dataset.hpp"

namespace dfdrnn {

// Synthetic dataset with a known block structure: drugs and diseases are
// dealt into `blocks` groups; a drug is associated with the diseases of its
// own group, similarities are high within a group and low across groups.
struct PlantedSpec {
  std::size_t drugs = 20;
  std::size_t diseases = 15;
  std::size_t blocks = 3;
  // Fraction of planted associations hidden (set to 0), i.e. missing links.
  double label_noise = 0.1;
};

Dataset make_planted_dataset(const PlantedSpec& spec, std::uint64_t seed);

}  // namespace dfdrnn
