#include "mixbound/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mixbound/error.hpp"

namespace mixbound {

const char* to_string(DatasetKind kind) {
  return kind == DatasetKind::sequence ? "sequence" : "target_iid";
}

DatasetKind dataset_kind_from_string(const std::string& name) {
  if (name == "sequence") return DatasetKind::sequence;
  if (name == "target_iid") return DatasetKind::target_iid;
  throw Error(ErrorCode::InvalidSpec, "unknown dataset kind '" + name + "'");
}

void LabeledDataset::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != inputs.rows()) {
    throw Error(ErrorCode::InvalidSpec, "label count does not match input rows");
  }
  if (!inputs.allFinite()) throw Error(ErrorCode::InvalidSpec, "inputs contain NaN or Inf");
  for (int y : labels) {
    if (y < 1 || y > num_classes) throw Error(ErrorCode::InvalidSpec, "label outside 1..K");
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

void write_dataset(std::ostream& out, const LabeledDataset& data) {
  out << data.size() << ' ' << data.dim() << ' ' << data.num_classes << ' ' << to_string(data.kind) << ' '
      << data.seed << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) out << format_double(data.inputs(i, j)) << ' ';
    out << data.labels[static_cast<std::size_t>(i)] << '\n';
  }
}

namespace {

double parse_double(const std::string& token) {
  double value = 0.0;
  const auto result = std::from_chars(token.data(), token.data() + token.size(), value);
  if (result.ec != std::errc() || result.ptr != token.data() + token.size()) {
    throw Error(ErrorCode::Io, "malformed decimal '" + token + "'");
  }
  return value;
}

}  // namespace

LabeledDataset read_dataset(std::istream& in) {
  LabeledDataset data;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  std::string kind;
  if (!(in >> n >> d >> data.num_classes >> kind >> data.seed) || n < 0 || d < 0) {
    throw Error(ErrorCode::Io, "malformed dataset header");
  }
  data.kind = dataset_kind_from_string(kind);
  data.inputs.resize(n, d);
  data.labels.resize(static_cast<std::size_t>(n));
  std::string token;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!(in >> token)) throw Error(ErrorCode::Io, "truncated dataset");
      data.inputs(i, j) = parse_double(token);
    }
    if (!(in >> data.labels[static_cast<std::size_t>(i)])) throw Error(ErrorCode::Io, "truncated dataset");
  }
  data.validate();
  return data;
}

void save_dataset(const std::filesystem::path& path, const LabeledDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
  write_dataset(out, data);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_dataset(in);
}

}  // namespace mixbound
