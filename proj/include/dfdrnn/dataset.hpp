#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "dfdrnn/tensor.hpp"

namespace dfdrnn {

struct EntityIds {
  std::vector<std::string> drug_ids;
  std::vector<std::string> disease_ids;

  std::size_t drugs() const { return drug_ids.size(); }
  std::size_t diseases() const { return disease_ids.size(); }

  friend bool operator==(const EntityIds&, const EntityIds&) = default;
};

// Square similarity matrix with entries in [0,1] and a unit diagonal.
struct SimilarityMatrix {
  Tensor values;
  std::vector<std::string> ids;

  std::size_t size() const { return values.rows(); }
  friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;
};

// Binary drug x disease association matrix.
struct AssociationMatrix {
  Tensor values;
  EntityIds ids;

  std::size_t drugs() const { return values.rows(); }
  std::size_t diseases() const { return values.cols(); }
  bool has(std::size_t drug, std::size_t disease) const { return values(drug, disease) != 0.0; }
  std::size_t count() const;

  friend bool operator==(const AssociationMatrix&, const AssociationMatrix&) = default;
};

struct Dataset {
  std::string name;
  EntityIds ids;
  SimilarityMatrix drug_sim;
  SimilarityMatrix disease_sim;
  AssociationMatrix assoc;

  std::size_t drugs() const { return ids.drugs(); }
  std::size_t diseases() const { return ids.diseases(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct ValidationCheck {
  std::string name;
  bool passed = true;
  bool warning_only = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::size_t drugs = 0;
  std::size_t diseases = 0;
  std::size_t associations = 0;
  double density = 0.0;
  std::size_t drugs_without_associations = 0;
  std::size_t diseases_without_associations = 0;

  // False if any non-warning check failed.
  bool ok() const;
  const ValidationCheck* find(const std::string& name) const;
};

// Reads the JSON manifest (keys: name, drug_ids, disease_ids, drug_sim,
// disease_sim, associations) and the TSV files it references. Relative paths
// resolve against the manifest's directory. Throws DataError naming the file
// (and row/column for cell errors).
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Checks the invariants of an in-memory dataset and reports density and
// isolated entities. Asymmetric similarity is a warning, not a failure.
ValidationReport validate_dataset(const Dataset& d);

// Writes manifest.json plus TSV files into dir (created if needed) and returns
// the manifest path. Values are written with round-trip precision.
std::filesystem::path write_dataset(const Dataset& d, const std::filesystem::path& dir);

// Throws DataError unless every type invariant holds.
void check_dataset_invariants(const Dataset& d);

}  // namespace dfdrnn
