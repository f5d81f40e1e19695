#include "dfdrnn/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace dfdrnn {
namespace fs = std::filesystem;

namespace {

constexpr double kDiagonalTolerance = 1e-9;

std::string cell_ref(const fs::path& file, std::size_t row, std::size_t col) {
  return file.string() + " row " + std::to_string(row + 1) + " column " + std::to_string(col + 1);
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::vector<std::string> read_ids(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!seen.insert(line).second) {
      throw DataError(path.string() + ": duplicate id '" + line + "' at line " +
                      std::to_string(ids.size() + 1));
    }
    ids.push_back(line);
  }
  if (ids.empty()) throw DataError(path.string() + ": no ids");
  return ids;
}

Tensor read_matrix(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t col = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      const std::size_t end = tab == std::string::npos ? line.size() : tab;
      const char* first = line.data() + start;
      const char* last = line.data() + end;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || first == last || !std::isfinite(v)) {
        throw DataError(cell_ref(path, rows, col) + ": non-numeric cell '" +
                        std::string(first, last) + "'");
      }
      values.push_back(v);
      ++col;
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (rows == 0) {
      cols = col;
    } else if (col != cols) {
      throw DataError(path.string() + ": dimension mismatch, row " + std::to_string(rows + 1) +
                      " has " + std::to_string(col) + " columns, expected " + std::to_string(cols));
    }
    ++rows;
  }
  return Tensor(rows, cols, std::move(values));
}

void expect_shape(const fs::path& path, const Tensor& t, std::size_t rows, std::size_t cols) {
  if (t.rows() != rows || t.cols() != cols) {
    throw DataError(path.string() + ": dimension mismatch, got " + t.shape_string() +
                    ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void check_similarity(const fs::path& path, const Tensor& s) {
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = 0; j < s.cols(); ++j) {
      const double v = s(i, j);
      if (v < 0.0 || v > 1.0) {
        throw DataError(cell_ref(path, i, j) + ": similarity " + std::to_string(v) +
                        " outside [0,1]");
      }
    }
    if (std::abs(s(i, i) - 1.0) > kDiagonalTolerance) {
      throw DataError(cell_ref(path, i, i) + ": diagonal entry " + std::to_string(s(i, i)) +
                      " is not 1");
    }
  }
}

void check_binary(const fs::path& path, const Tensor& a) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0.0 && a(i, j) != 1.0) {
        throw DataError(cell_ref(path, i, j) + ": association entry " + std::to_string(a(i, j)) +
                        " not in {0,1}");
      }
}

fs::path manifest_entry(const nlohmann::json& j, const char* key, const fs::path& base,
                        const fs::path& manifest) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw DataError(manifest.string() + ": missing string key '" + key + "'");
  }
  fs::path p = j[key].get<std::string>();
  return p.is_relative() ? base / p : p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error("write failed: " + path.string());
}

std::string format_matrix(const Tensor& t) {
  std::string s;
  char buf[32];
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      if (j) s.push_back('\t');
      const auto res = std::to_chars(buf, buf + sizeof buf, t(i, j));
      s.append(buf, res.ptr);
    }
    s.push_back('\n');
  }
  return s;
}

std::string format_ids(const std::vector<std::string>& ids) {
  std::string s;
  for (const auto& id : ids) s += id + '\n';
  return s;
}

bool is_symmetric(const Tensor& s, std::size_t* bad_i, std::size_t* bad_j) {
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = i + 1; j < s.cols(); ++j)
      if (std::abs(s(i, j) - s(j, i)) > kDiagonalTolerance) {
        *bad_i = i;
        *bad_j = j;
        return false;
      }
  return true;
}

void similarity_checks(const std::string& label, const Tensor& s, ValidationReport& r) {
  ValidationCheck range{label + ".range", true, false, ""};
  ValidationCheck diag{label + ".diagonal", true, false, ""};
  ValidationCheck sym{label + ".symmetry", true, true, ""};
  for (std::size_t i = 0; i < s.rows() && range.passed; ++i)
    for (std::size_t j = 0; j < s.cols(); ++j)
      if (!(s(i, j) >= 0.0 && s(i, j) <= 1.0)) {
        range.passed = false;
        range.detail = "entry (" + std::to_string(i) + "," + std::to_string(j) +
                       ") = " + std::to_string(s(i, j));
        break;
      }
  if (s.rows() != s.cols()) {
    diag.passed = false;
    diag.detail = "not square: " + s.shape_string();
  } else {
    for (std::size_t i = 0; i < s.rows(); ++i)
      if (std::abs(s(i, i) - 1.0) > kDiagonalTolerance) {
        diag.passed = false;
        diag.detail = "entry (" + std::to_string(i) + "," + std::to_string(i) +
                      ") = " + std::to_string(s(i, i));
        break;
      }
    std::size_t bi = 0, bj = 0;
    if (!is_symmetric(s, &bi, &bj)) {
      sym.passed = false;
      sym.detail = "asymmetric at (" + std::to_string(bi) + "," + std::to_string(bj) + ")";
    }
  }
  r.checks.push_back(range);
  r.checks.push_back(diag);
  r.checks.push_back(sym);
}

}  // namespace

std::size_t AssociationMatrix::count() const {
  std::size_t c = 0;
  for (double v : values.values()) c += v != 0.0;
  return c;
}

bool ValidationReport::ok() const {
  for (const auto& c : checks)
    if (!c.passed && !c.warning_only) return false;
  return true;
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

Dataset load_dataset(const fs::path& manifest_path) {
  std::ifstream in = open_input(manifest_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path.string() + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw DataError(manifest_path.string() + ": manifest must be an object");
  const fs::path base = manifest_path.parent_path();

  Dataset d;
  d.name = j.value("name", manifest_path.stem().string());
  const fs::path drug_ids = manifest_entry(j, "drug_ids", base, manifest_path);
  const fs::path disease_ids = manifest_entry(j, "disease_ids", base, manifest_path);
  const fs::path drug_sim = manifest_entry(j, "drug_sim", base, manifest_path);
  const fs::path disease_sim = manifest_entry(j, "disease_sim", base, manifest_path);
  const fs::path assoc = manifest_entry(j, "associations", base, manifest_path);

  d.ids.drug_ids = read_ids(drug_ids);
  d.ids.disease_ids = read_ids(disease_ids);
  const std::size_t n = d.drugs();
  const std::size_t m = d.diseases();

  d.drug_sim.values = read_matrix(drug_sim);
  expect_shape(drug_sim, d.drug_sim.values, n, n);
  check_similarity(drug_sim, d.drug_sim.values);
  d.drug_sim.ids = d.ids.drug_ids;

  d.disease_sim.values = read_matrix(disease_sim);
  expect_shape(disease_sim, d.disease_sim.values, m, m);
  check_similarity(disease_sim, d.disease_sim.values);
  d.disease_sim.ids = d.ids.disease_ids;

  d.assoc.values = read_matrix(assoc);
  expect_shape(assoc, d.assoc.values, n, m);
  check_binary(assoc, d.assoc.values);
  d.assoc.ids = d.ids;
  return d;
}

void check_dataset_invariants(const Dataset& d) {
  const std::size_t n = d.drugs();
  const std::size_t m = d.diseases();
  if (n == 0 || m == 0) throw DataError(d.name + ": dataset needs at least one drug and disease");
  expect_shape("drug_sim", d.drug_sim.values, n, n);
  expect_shape("disease_sim", d.disease_sim.values, m, m);
  expect_shape("associations", d.assoc.values, n, m);
  check_similarity("drug_sim", d.drug_sim.values);
  check_similarity("disease_sim", d.disease_sim.values);
  check_binary("associations", d.assoc.values);
  for (const auto* ids : {&d.ids.drug_ids, &d.ids.disease_ids}) {
    std::unordered_set<std::string> seen(ids->begin(), ids->end());
    if (seen.size() != ids->size()) throw DataError(d.name + ": duplicate entity ids");
  }
}

ValidationReport validate_dataset(const Dataset& d) {
  ValidationReport r;
  r.drugs = d.drugs();
  r.diseases = d.diseases();
  const Tensor& a = d.assoc.values;

  ValidationCheck shapes{"shapes", true, false, ""};
  if (d.drug_sim.values.rows() != r.drugs || d.drug_sim.values.cols() != r.drugs ||
      d.disease_sim.values.rows() != r.diseases || d.disease_sim.values.cols() != r.diseases ||
      a.rows() != r.drugs || a.cols() != r.diseases) {
    shapes.passed = false;
    shapes.detail = "matrix dimensions disagree with id lists";
  }
  r.checks.push_back(shapes);
  similarity_checks("drug_sim", d.drug_sim.values, r);
  similarity_checks("disease_sim", d.disease_sim.values, r);

  ValidationCheck binary{"associations.binary", true, false, ""};
  for (std::size_t i = 0; i < a.rows() && binary.passed; ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0.0 && a(i, j) != 1.0) {
        binary.passed = false;
        binary.detail = "entry (" + std::to_string(i) + "," + std::to_string(j) +
                        ") = " + std::to_string(a(i, j));
        break;
      }
  r.checks.push_back(binary);

  r.associations = d.assoc.count();
  if (!a.empty()) {
    r.density = static_cast<double>(r.associations) / static_cast<double>(a.rows() * a.cols());
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    bool any = false;
    for (std::size_t j = 0; j < a.cols(); ++j) any |= a(i, j) != 0.0;
    r.drugs_without_associations += !any;
  }
  for (std::size_t j = 0; j < a.cols(); ++j) {
    bool any = false;
    for (std::size_t i = 0; i < a.rows(); ++i) any |= a(i, j) != 0.0;
    r.diseases_without_associations += !any;
  }
  ValidationCheck density{"associations.density", true, true,
                          std::to_string(r.associations) + " associations, density " +
                              std::to_string(r.density)};
  r.checks.push_back(density);
  return r;
}

fs::path write_dataset(const Dataset& d, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error("cannot create directory " + dir.string() + (ec ? ": " + ec.message() : ""));
  }
  write_text(dir / "drug_ids.txt", format_ids(d.ids.drug_ids));
  write_text(dir / "disease_ids.txt", format_ids(d.ids.disease_ids));
  write_text(dir / "drug_sim.tsv", format_matrix(d.drug_sim.values));
  write_text(dir / "disease_sim.tsv", format_matrix(d.disease_sim.values));
  write_text(dir / "associations.tsv", format_matrix(d.assoc.values));
  nlohmann::ordered_json j;
  j["name"] = d.name;
  j["drug_ids"] = "drug_ids.txt";
  j["disease_ids"] = "disease_ids.txt";
  j["drug_sim"] = "drug_sim.tsv";
  j["disease_sim"] = "disease_sim.tsv";
  j["associations"] = "associations.tsv";
  const fs::path manifest = dir / "manifest.json";
  write_text(manifest, j.dump(2) + "\n");
  return manifest;
}

}  // namespace dfdrnn
