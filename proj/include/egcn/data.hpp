#pragma once

#include <string>
#include <utility>
#include <vector>

#include "egcn/matrix.hpp"

namespace egcn {

// Aligned multimodal dataset: every modality shares subject order with the
// subject_ids list; labels are 0/1 (1 = positive class).
struct MultimodalDataset {
  std::vector<std::string> subject_ids;
  std::vector<std::pair<std::string, Matrix>> modalities;  // (name, n x d_m)
  std::vector<std::string> site_labels;
  std::vector<int> labels;

  int n() const { return static_cast<int>(subject_ids.size()); }
  std::vector<int> modality_dims() const;
  void validate() const;  // throws std::invalid_argument
};

struct SynthSpec {
  int n_subjects = 870;
  std::vector<int> modality_dims{4000, 1200, 6};
  int n_sites = 17;
  double class_balance = 0.5;   // fraction of positive labels
  double signal_strength = 0.0; // class-1 mean shift on the shifted features
  unsigned long long seed = 0;
  void validate() const;
};

// Modality CSV: header "subject_id,f0,f1,...", one row per subject.  When a
// binary sidecar "<path>.egcn" exists, the matrix is read from it and the
// CSV supplies subject ids; the CSV stays canonical.  expected_dim < 0
// disables the width check.
std::pair<std::vector<std::string>, Matrix> load_modality_csv(
    const std::string& path, int expected_dim = -1);

// Sites CSV: header "subject_id,site".
std::pair<std::vector<std::string>, std::vector<std::string>> load_sites_csv(
    const std::string& path);

// Labels CSV: header "subject_id,label", label in {0,1}.
std::pair<std::vector<std::string>, std::vector<int>> load_labels_csv(
    const std::string& path);

struct DatasetPaths {
  std::vector<std::pair<std::string, std::string>> modality_files;  // (name, path)
  std::string sites_file;
  std::string labels_file;
};

// Loads all files and re-aligns every row to the subject order of the labels
// file.  Any subject-set mismatch is an error reporting the symmetric
// difference; no imputation.
MultimodalDataset assemble_dataset(const DatasetPaths& paths);

// Standard-normal features with a class-1 mean shift of signal_strength on a
// random 10% feature subset per modality (at least one feature); sites
// round-robin "SITE_<i mod n_sites>"; labels shuffled; fully seeded.
MultimodalDataset synth_dataset(const SynthSpec& spec);

// Writers use shortest-round-trip float formatting so a reload is
// bit-identical.  with_sidecar additionally writes "<path>.egcn".
void write_modality_csv(const std::string& path, const std::vector<std::string>& ids,
                        const Matrix& m, bool with_sidecar = false);
void write_sites_csv(const std::string& path, const std::vector<std::string>& ids,
                     const std::vector<std::string>& sites);
void write_labels_csv(const std::string& path, const std::vector<std::string>& ids,
                      const std::vector<int>& labels);

// Writes <dir>/<modality>.csv per modality plus sites.csv and labels.csv;
// returns the written file paths as (name, path) with "sites"/"labels" names.
std::vector<std::pair<std::string, std::string>> write_dataset(
    const std::string& dir, const MultimodalDataset& data, bool with_sidecar = false);

// Binary sidecar: magic "EGCN", u32 version 1, u64 rows, u64 cols, then
// row-major little-endian 64-bit floats.
void write_matrix_sidecar(const std::string& path, const Matrix& m);
Matrix read_matrix_sidecar(const std::string& path);

// Per-feature z-score fitted on train_indices only, applied to all rows;
// features with near-zero spread are centered but not scaled.
void standardize_columns(Matrix& m, const std::vector<int>& train_indices);
void standardize_features(MultimodalDataset& data, const std::vector<int>& train_indices);

}  // namespace egcn
