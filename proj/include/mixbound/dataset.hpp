#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mixbound {

enum class DatasetKind { sequence, target_iid };

const char* to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& name);

/// Ordered (input, label) pairs. Labels are 1-based class ids.
struct LabeledDataset {
  Eigen::MatrixXd inputs;  // n x d, one point per row
  std::vector<int> labels;
  int num_classes = 2;
  std::uint64_t seed = 0;
  std::string spec_digest;
  DatasetKind kind = DatasetKind::sequence;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
  bool empty() const { return inputs.rows() == 0; }

  /// Throws Error(InvalidSpec) on non-finite inputs, bad labels or a size mismatch.
  void validate() const;

  /// sqrt(sum_i ||x_i||^2).
  double input_norm() const { return inputs.norm(); }
};

/// Text format: header "n d K kind seed", then one line per point with d
/// decimals followed by the integer label. Decimals round-trip exactly.
void write_dataset(std::ostream& out, const LabeledDataset& data);
LabeledDataset read_dataset(std::istream& in);

void save_dataset(const std::filesystem::path& path, const LabeledDataset& data);
LabeledDataset load_dataset(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace mixbound
