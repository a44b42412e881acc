#include "egcn/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "egcn/util.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary sidecar I/O assumes a little-endian host");

namespace egcn {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw std::invalid_argument("empty file: " + path);
  return lines;
}

// row/column are reported 1-based over data rows (header excluded) and CSV
// columns (subject_id is column 1)
double parse_cell(const std::string& cell, const std::string& path, int row, int col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw std::invalid_argument(path + ": non-numeric cell '" + cell + "' at row " +
                                std::to_string(row) + ", column " + std::to_string(col));
  if (!std::isfinite(v))
    throw std::invalid_argument(path + ": non-finite value at row " +
                                std::to_string(row) + ", column " + std::to_string(col));
  return v;
}

void check_unique_ids(const std::vector<std::string>& ids, const std::string& path) {
  std::unordered_set<std::string> seen;
  for (const std::string& id : ids) {
    if (id.empty()) throw std::invalid_argument(path + ": empty subject id");
    if (!seen.insert(id).second)
      throw std::invalid_argument(path + ": duplicate subject id '" + id + "'");
  }
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string list_ids(const std::vector<std::string>& ids) {
  std::string out = "[";
  const std::size_t cap = 10;
  for (std::size_t i = 0; i < ids.size() && i < cap; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > cap) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out + "]";
}

}  // namespace

std::vector<int> MultimodalDataset::modality_dims() const {
  std::vector<int> dims;
  for (const auto& [name, m] : modalities) dims.push_back(m.cols);
  return dims;
}

void MultimodalDataset::validate() const {
  const int nn = n();
  if (nn == 0) throw std::invalid_argument("dataset: no subjects");
  check_unique_ids(subject_ids, "dataset");
  if (static_cast<int>(site_labels.size()) != nn)
    throw std::invalid_argument("dataset: site label count != subjects");
  if (static_cast<int>(labels.size()) != nn)
    throw std::invalid_argument("dataset: label count != subjects");
  for (int l : labels)
    if (l != 0 && l != 1) throw std::invalid_argument("dataset: labels must be 0/1");
  if (modalities.empty()) throw std::invalid_argument("dataset: no modalities");
  for (const auto& [name, m] : modalities)
    if (m.rows != nn)
      throw std::invalid_argument("dataset: modality '" + name + "' has " +
                                  std::to_string(m.rows) + " rows, expected " +
                                  std::to_string(nn));
}

void SynthSpec::validate() const {
  if (n_subjects < 1) throw std::invalid_argument("SynthSpec: n_subjects must be >= 1");
  if (modality_dims.empty()) throw std::invalid_argument("SynthSpec: no modalities");
  for (int d : modality_dims)
    if (d < 1) throw std::invalid_argument("SynthSpec: modality dims must be positive");
  if (n_sites < 1) throw std::invalid_argument("SynthSpec: n_sites must be >= 1");
  if (!(class_balance > 0.0 && class_balance < 1.0))
    throw std::invalid_argument("SynthSpec: class_balance must be in (0, 1)");
  if (!(signal_strength >= 0.0))
    throw std::invalid_argument("SynthSpec: signal_strength must be >= 0");
}

std::pair<std::vector<std::string>, Matrix> load_modality_csv(const std::string& path,
                                                              int expected_dim) {
  const auto lines = read_lines(path);
  const auto header = split_csv_line(lines[0]);
  if (header.empty() || header[0] != "subject_id")
    throw std::invalid_argument(path + ": header must start with subject_id");
  const int width = static_cast<int>(header.size()) - 1;
  if (width < 1) throw std::invalid_argument(path + ": no feature columns");
  if (expected_dim >= 0 && width != expected_dim)
    throw std::invalid_argument("dimension mismatch: " + path + " has " +
                                std::to_string(width) + " features, expected " +
                                std::to_string(expected_dim));
  const int n = static_cast<int>(lines.size()) - 1;
  if (n < 1) throw std::invalid_argument(path + ": no data rows");

  std::vector<std::string> ids;
  ids.reserve(n);

  const std::string sidecar = path + ".egcn";
  if (std::filesystem::exists(sidecar)) {
    // ids come from the canonical CSV; the matrix from the sidecar
    for (int r = 1; r <= n; ++r) {
      const std::size_t comma = lines[r].find(',');
      ids.push_back(comma == std::string::npos ? lines[r] : lines[r].substr(0, comma));
    }
    check_unique_ids(ids, path);
    Matrix m = read_matrix_sidecar(sidecar);
    if (m.rows != n || m.cols != width)
      throw std::invalid_argument(sidecar + ": shape " + m.shape_str() +
                                  " does not match CSV (" + std::to_string(n) + "x" +
                                  std::to_string(width) + ")");
    return {std::move(ids), std::move(m)};
  }

  Matrix m(n, width);
  for (int r = 1; r <= n; ++r) {
    const auto fields = split_csv_line(lines[r]);
    if (static_cast<int>(fields.size()) != width + 1)
      throw std::invalid_argument(path + ": row " + std::to_string(r) + " has " +
                                  std::to_string(fields.size()) + " columns, expected " +
                                  std::to_string(width + 1));
    ids.push_back(fields[0]);
    for (int c = 0; c < width; ++c)
      m(r - 1, c) = parse_cell(fields[c + 1], path, r, c + 2);
  }
  check_unique_ids(ids, path);
  return {std::move(ids), std::move(m)};
}

std::pair<std::vector<std::string>, std::vector<std::string>> load_sites_csv(
    const std::string& path) {
  const auto lines = read_lines(path);
  const auto header = split_csv_line(lines[0]);
  if (header.size() != 2 || header[0] != "subject_id" || header[1] != "site")
    throw std::invalid_argument(path + ": header must be subject_id,site");
  std::vector<std::string> ids, sites;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_csv_line(lines[r]);
    if (fields.size() != 2)
      throw std::invalid_argument(path + ": row " + std::to_string(r) +
                                  " must have 2 columns");
    if (fields[1].empty())
      throw std::invalid_argument(path + ": empty site at row " + std::to_string(r));
    ids.push_back(fields[0]);
    sites.push_back(fields[1]);
  }
  if (ids.empty()) throw std::invalid_argument(path + ": no data rows");
  check_unique_ids(ids, path);
  return {std::move(ids), std::move(sites)};
}

std::pair<std::vector<std::string>, std::vector<int>> load_labels_csv(
    const std::string& path) {
  const auto lines = read_lines(path);
  const auto header = split_csv_line(lines[0]);
  if (header.size() != 2 || header[0] != "subject_id" || header[1] != "label")
    throw std::invalid_argument(path + ": header must be subject_id,label");
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_csv_line(lines[r]);
    if (fields.size() != 2)
      throw std::invalid_argument(path + ": row " + std::to_string(r) +
                                  " must have 2 columns");
    ids.push_back(fields[0]);
    if (fields[1] == "0")
      labels.push_back(0);
    else if (fields[1] == "1")
      labels.push_back(1);
    else
      throw std::invalid_argument(path + ": label must be 0 or 1 at row " +
                                  std::to_string(r) + ", got '" + fields[1] + "'");
  }
  if (ids.empty()) throw std::invalid_argument(path + ": no data rows");
  check_unique_ids(ids, path);
  return {std::move(ids), std::move(labels)};
}

namespace {

// Maps each reference id to its row in `ids`; mismatches raise an error
// naming the symmetric difference.
std::vector<int> align_to(const std::vector<std::string>& reference,
                          const std::vector<std::string>& ids,
                          const std::string& file_desc) {
  std::unordered_map<std::string, int> pos;
  pos.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) pos[ids[i]] = static_cast<int>(i);
  std::vector<std::string> missing;
  std::vector<int> rows;
  rows.reserve(reference.size());
  for (const std::string& id : reference) {
    auto it = pos.find(id);
    if (it == pos.end())
      missing.push_back(id);
    else
      rows.push_back(it->second);
  }
  std::unordered_set<std::string> ref_set(reference.begin(), reference.end());
  std::vector<std::string> extra;
  for (const std::string& id : ids)
    if (!ref_set.count(id)) extra.push_back(id);
  if (!missing.empty() || !extra.empty())
    throw std::invalid_argument(
        "subject-set mismatch for " + file_desc + ": missing " + list_ids(missing) +
        ", unexpected " + list_ids(extra));
  return rows;
}

}  // namespace

MultimodalDataset assemble_dataset(const DatasetPaths& paths) {
  if (paths.modality_files.empty())
    throw std::invalid_argument("assemble_dataset: no modality files");
  auto [label_ids, labels] = load_labels_csv(paths.labels_file);
  auto [site_ids, sites] = load_sites_csv(paths.sites_file);

  MultimodalDataset d;
  d.subject_ids = label_ids;
  d.labels = std::move(labels);

  const auto site_rows = align_to(label_ids, site_ids, paths.sites_file);
  d.site_labels.reserve(label_ids.size());
  for (int r : site_rows) d.site_labels.push_back(sites[r]);

  for (const auto& [name, path] : paths.modality_files) {
    auto [ids, m] = load_modality_csv(path);
    const auto rows = align_to(label_ids, ids, path);
    Matrix aligned(static_cast<int>(label_ids.size()), m.cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
      std::copy(m.row(rows[i]), m.row(rows[i]) + m.cols,
                aligned.row(static_cast<int>(i)));
    d.modalities.emplace_back(name, std::move(aligned));
  }
  d.validate();
  return d;
}

MultimodalDataset synth_dataset(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const int n = spec.n_subjects;

  MultimodalDataset d;
  d.subject_ids.reserve(n);
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "S%06d", i + 1);
    d.subject_ids.emplace_back(buf);
  }

  // label multiset fixed by balance, order shuffled
  const int n_pos = static_cast<int>(std::llround(spec.class_balance * n));
  d.labels.assign(n, 0);
  for (int i = 0; i < n_pos; ++i) d.labels[i] = 1;
  for (int i = n - 1; i > 0; --i) {
    const int j = std::min(i, static_cast<int>(uniform01(rng) * (i + 1)));
    std::swap(d.labels[i], d.labels[j]);
  }

  for (std::size_t mi = 0; mi < spec.modality_dims.size(); ++mi) {
    const int dim = spec.modality_dims[mi];
    Matrix m(n, dim);
    for (double& v : m.data) v = normal01(rng);
    // class-1 mean shift on a random subset of ~10% of features
    const int n_shift = std::max(1, static_cast<int>(std::llround(0.1 * dim)));
    std::vector<int> idx(dim);
    for (int j = 0; j < dim; ++j) idx[j] = j;
    for (int j = 0; j < n_shift; ++j) {
      const int pick =
          std::min(dim - 1, j + static_cast<int>(uniform01(rng) * (dim - j)));
      std::swap(idx[j], idx[pick]);
    }
    if (spec.signal_strength > 0.0)
      for (int i = 0; i < n; ++i)
        if (d.labels[i] == 1)
          for (int j = 0; j < n_shift; ++j) m(i, idx[j]) += spec.signal_strength;
    d.modalities.emplace_back("mod" + std::to_string(mi), std::move(m));
  }

  d.site_labels.reserve(n);
  for (int i = 0; i < n; ++i)
    d.site_labels.push_back("SITE_" + std::to_string(i % spec.n_sites));
  d.validate();
  return d;
}

void write_modality_csv(const std::string& path, const std::vector<std::string>& ids,
                        const Matrix& m, bool with_sidecar) {
  if (static_cast<int>(ids.size()) != m.rows)
    throw std::invalid_argument("write_modality_csv: ids size != rows");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "subject_id";
  for (int j = 0; j < m.cols; ++j) out << ",f" << j;
  out << "\n";
  std::string line;
  for (int i = 0; i < m.rows; ++i) {
    line = ids[i];
    for (int j = 0; j < m.cols; ++j) {
      line += ',';
      line += format_double(m(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
  out.close();
  if (with_sidecar) write_matrix_sidecar(path + ".egcn", m);
}

void write_sites_csv(const std::string& path, const std::vector<std::string>& ids,
                     const std::vector<std::string>& sites) {
  if (ids.size() != sites.size())
    throw std::invalid_argument("write_sites_csv: ids size != sites size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "subject_id,site\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << "," << sites[i] << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_labels_csv(const std::string& path, const std::vector<std::string>& ids,
                      const std::vector<int>& labels) {
  if (ids.size() != labels.size())
    throw std::invalid_argument("write_labels_csv: ids size != labels size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "subject_id,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << "," << labels[i] << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::pair<std::string, std::string>> write_dataset(
    const std::string& dir, const MultimodalDataset& data, bool with_sidecar) {
  data.validate();
  std::filesystem::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& [name, m] : data.modalities) {
    const std::string path = dir + "/" + name + ".csv";
    write_modality_csv(path, data.subject_ids, m, with_sidecar);
    files.emplace_back(name, path);
  }
  const std::string sites_path = dir + "/sites.csv";
  write_sites_csv(sites_path, data.subject_ids, data.site_labels);
  files.emplace_back("sites", sites_path);
  const std::string labels_path = dir + "/labels.csv";
  write_labels_csv(labels_path, data.subject_ids, data.labels);
  files.emplace_back("labels", labels_path);
  return files;
}

void write_matrix_sidecar(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write sidecar: " + path);
  out.write("EGCN", 4);
  const std::uint32_t version = 1;
  const std::uint64_t rows = static_cast<std::uint64_t>(m.rows);
  const std::uint64_t cols = static_cast<std::uint64_t>(m.cols);
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

Matrix read_matrix_sidecar(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open sidecar: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "EGCN")
    throw std::invalid_argument(path + ": bad sidecar magic");
  std::uint32_t version = 0;
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || version != 1)
    throw std::invalid_argument(path + ": unsupported sidecar version");
  if (rows > (1ULL << 32) || cols > (1ULL << 32))
    throw std::invalid_argument(path + ": implausible sidecar dimensions");
  Matrix m(static_cast<int>(rows), static_cast<int>(cols));
  in.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in || in.gcount() != static_cast<std::streamsize>(m.size() * sizeof(double)))
    throw std::invalid_argument(path + ": truncated sidecar payload");
  return m;
}

void standardize_columns(Matrix& m, const std::vector<int>& train_indices) {
  if (train_indices.empty())
    throw std::invalid_argument("standardize_columns: empty training index set");
  for (int i : train_indices)
    if (i < 0 || i >= m.rows)
      throw std::invalid_argument("standardize_columns: index out of range");
  const double inv_n = 1.0 / static_cast<double>(train_indices.size());
  for (int j = 0; j < m.cols; ++j) {
    double mean = 0.0;
    for (int i : train_indices) mean += m(i, j);
    mean *= inv_n;
    double var = 0.0;
    for (int i : train_indices) {
      const double c = m(i, j) - mean;
      var += c * c;
    }
    var *= inv_n;
    const double sd = std::sqrt(var);
    const double scale = sd > 1e-12 ? 1.0 / sd : 1.0;
    for (int i = 0; i < m.rows; ++i) m(i, j) = (m(i, j) - mean) * scale;
  }
}

void standardize_features(MultimodalDataset& data, const std::vector<int>& train_indices) {
  for (int i : train_indices)
    if (i < 0 || i >= data.n())
      throw std::invalid_argument("standardize_features: index out of range");
  for (auto& [name, m] : data.modalities) standardize_columns(m, train_indices);
}

}  // namespace egcn
