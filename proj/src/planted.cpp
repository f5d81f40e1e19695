#include "dfdrnn/planted.hpp"

#include <algorithm>
#include <cmath>

#include "dfdrnn/error.hpp"
#include "dfdrnn/rng.hpp"

namespace dfdrnn {

namespace {

Tensor block_similarity(std::size_t size, std::size_t blocks, Rng& rng) {
  Tensor s(size, size);
  for (std::size_t i = 0; i < size; ++i) {
    s(i, i) = 1.0;
    for (std::size_t j = i + 1; j < size; ++j) {
      const double u = uniform01(rng);
      const double v = i % blocks == j % blocks ? 0.6 + 0.3 * u : 0.3 * u;
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

std::vector<std::string> make_ids(const std::string& prefix, std::size_t count) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < count; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

}  // namespace

Dataset make_planted_dataset(const PlantedSpec& spec, std::uint64_t seed) {
  if (spec.blocks < 1 || spec.drugs < spec.blocks || spec.diseases < spec.blocks) {
    throw ConfigError("planted dataset needs at least one drug and disease per block");
  }
  if (!(spec.label_noise >= 0.0 && spec.label_noise < 1.0)) {
    throw ConfigError("label_noise must be in [0, 1)");
  }
  Rng rng(seed);
  Dataset d;
  d.name = "planted";
  d.ids.drug_ids = make_ids("drug_", spec.drugs);
  d.ids.disease_ids = make_ids("disease_", spec.diseases);
  d.drug_sim = {block_similarity(spec.drugs, spec.blocks, rng), d.ids.drug_ids};
  d.disease_sim = {block_similarity(spec.diseases, spec.blocks, rng), d.ids.disease_ids};

  Tensor a(spec.drugs, spec.diseases);
  std::vector<std::pair<std::size_t, std::size_t>> planted;
  for (std::size_t i = 0; i < spec.drugs; ++i) {
    for (std::size_t j = 0; j < spec.diseases; ++j) {
      if (i % spec.blocks == j % spec.blocks) {
        a(i, j) = 1.0;
        planted.emplace_back(i, j);
      }
    }
  }
  const auto hidden = static_cast<std::size_t>(
      std::floor(spec.label_noise * static_cast<double>(planted.size())));
  for (std::size_t h = 0; h < hidden; ++h) {
    const std::size_t left = planted.size() - h;
    const auto pick = h + std::min(left - 1, static_cast<std::size_t>(
                                                  uniform01(rng) * static_cast<double>(left)));
    std::swap(planted[h], planted[pick]);
    a(planted[h].first, planted[h].second) = 0.0;
  }
  d.assoc = {std::move(a), d.ids};
  return d;
}

}  // namespace dfdrnn
