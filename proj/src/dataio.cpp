#include "anneal/dataio.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "anneal/error.hpp"
#include "anneal/random.hpp"

namespace anneal {

void Dataset::validate() const {
  if (features.rows() < 1) {
    throw Error(Errc::InvalidArgument, fmt::format("dataset '{}' is empty", name));
  }
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw Error(Errc::Dimension, fmt::format("dataset '{}' has {} rows but {} labels", name,
                                             features.rows(), labels.size()));
  }
  for (int label : labels) {
    if (label < 0 || label >= classes) {
      throw Error(Errc::LabelRange,
                  fmt::format("dataset '{}' label {} outside [0, {})", name, label, classes));
    }
  }
  if (!features.allFinite()) {
    throw Error(Errc::InvalidArgument, fmt::format("dataset '{}' has non-finite features", name));
  }
}

void BlobSpec::validate() const {
  if (classes < 2 || per_class < 1 || dim < 1) {
    throw Error(Errc::InvalidArgument,
                fmt::format("blobs need classes >= 2, per_class >= 1, dim >= 1 (got {}, {}, {})",
                            classes, per_class, dim));
  }
  if (!(center_separation > 0.0) || !std::isfinite(center_separation)) {
    throw Error(Errc::InvalidArgument,
                fmt::format("center_separation must be > 0 (got {})", center_separation));
  }
  if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
    throw Error(Errc::InvalidArgument, fmt::format("noise_sigma must be > 0 (got {})", noise_sigma));
  }
}

Matrix blob_centers(const BlobSpec& spec) {
  const int c = spec.classes;
  Matrix centers = Matrix::Zero(c, spec.dim);
  if (c <= spec.dim) {
    // (e_k - centroid) / sqrt(2) puts every pair of vertices at distance 1.
    for (int k = 0; k < c; ++k) {
      for (int j = 0; j < c; ++j) {
        centers(k, j) = ((j == k ? 1.0 : 0.0) - 1.0 / c) / std::numbers::sqrt2;
      }
    }
  } else if (spec.dim == 1) {
    for (int k = 0; k < c; ++k) {
      centers(k, 0) = k - 0.5 * (c - 1);
    }
  } else {
    const double radius = 0.5 / std::sin(std::numbers::pi / c);
    for (int k = 0; k < c; ++k) {
      const double angle = 2.0 * std::numbers::pi * k / c;
      centers(k, 0) = radius * std::cos(angle);
      centers(k, 1) = radius * std::sin(angle);
    }
  }
  return centers * spec.center_separation;
}

Dataset gen_blobs(const BlobSpec& spec) {
  spec.validate();
  const Matrix centers = blob_centers(spec);
  Rng rng(spec.seed);
  Dataset data;
  data.name = "blobs";
  data.classes = spec.classes;
  data.features.resize(static_cast<Eigen::Index>(spec.classes) * spec.per_class, spec.dim);
  data.labels.reserve(static_cast<std::size_t>(data.features.rows()));
  Eigen::Index row = 0;
  for (int k = 0; k < spec.classes; ++k) {
    for (int i = 0; i < spec.per_class; ++i, ++row) {
      for (int j = 0; j < spec.dim; ++j) {
        data.features(row, j) = centers(k, j) + spec.noise_sigma * rng.normal();
      }
      data.labels.push_back(k);
    }
  }
  return data;
}

namespace {

Dataset take_rows(const Dataset& data, std::span<const std::size_t> rows, std::string name) {
  Dataset out;
  out.name = std::move(name);
  out.classes = data.classes;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), data.dim());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(data.labels[rows[i]]);
  }
  return out;
}

}  // namespace

std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(Errc::InvalidArgument,
                fmt::format("test_fraction must be in (0, 1) (got {})", test_fraction));
  }
  const auto n = static_cast<std::size_t>(data.size());
  const auto test_size = static_cast<std::size_t>(std::lround(static_cast<double>(n) * test_fraction));
  if (test_size == 0 || test_size >= n) {
    throw Error(Errc::Split, fmt::format("splitting {} samples at fraction {} leaves an empty side",
                                         n, test_fraction));
  }
  const auto order = epoch_order(n, seed);
  const std::span<const std::size_t> all(order);
  return {take_rows(data, all.subspan(test_size), data.name + "-train"),
          take_rows(data, all.first(test_size), data.name + "-test")};
}

std::vector<Cifar10Record> parse_cifar10(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kCifarRecordBytes != 0) {
    const std::size_t offset = bytes.size() - bytes.size() % kCifarRecordBytes;
    throw ParseError(Errc::TruncatedFile, offset,
                     fmt::format("truncated CIFAR-10 record at byte offset {} ({} of {} bytes)",
                                 offset, bytes.size() - offset, kCifarRecordBytes));
  }
  std::vector<Cifar10Record> records(bytes.size() / kCifarRecordBytes);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t offset = i * kCifarRecordBytes;
    const std::uint8_t label = bytes[offset];
    if (label > 9) {
      throw ParseError(Errc::CorruptLabel, offset,
                       fmt::format("corrupt CIFAR-10 label {} at byte offset {}", label, offset));
    }
    records[i].label = label;
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(offset + 1), kCifarPixels,
                records[i].pixels.begin());
  }
  return records;
}

std::vector<Cifar10Record> read_cifar10_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::Io, fmt::format("cannot open '{}'", path));
  }
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return parse_cifar10(bytes);
}

std::vector<std::uint8_t> serialize_cifar10(const std::vector<Cifar10Record>& records) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(records.size() * kCifarRecordBytes);
  for (const auto& r : records) {
    bytes.push_back(r.label);
    bytes.insert(bytes.end(), r.pixels.begin(), r.pixels.end());
  }
  return bytes;
}

Dataset cifar_to_dataset(const std::vector<Cifar10Record>& records, std::string name) {
  Dataset data;
  data.name = std::move(name);
  data.classes = 10;
  data.features.resize(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(kCifarPixels));
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t p = 0; p < kCifarPixels; ++p) {
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
          records[i].pixels[p] / 255.0;
    }
    data.labels.push_back(records[i].label);
  }
  return data;
}

std::pair<Dataset, Normalization> normalize(const Dataset& data) {
  if (data.size() < 2) {
    throw Error(Errc::InvalidArgument, "normalization needs at least two samples");
  }
  const double n = static_cast<double>(data.size());
  Normalization stats;
  stats.mean = data.features.colwise().mean().transpose();
  Dataset out = data;
  out.features.rowwise() -= stats.mean.transpose();
  stats.std = (out.features.array().square().colwise().sum() / n).sqrt().matrix().transpose();
  for (Eigen::Index j = 0; j < out.dim(); ++j) {
    if (stats.std[j] >= 1e-12) {
      out.features.col(j) /= stats.std[j];
    }
  }
  return {std::move(out), std::move(stats)};
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t epoch_seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(epoch_seed);
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

std::vector<Batch> batch_iter(const Dataset& data, int batch_size, std::uint64_t epoch_seed) {
  const auto n = static_cast<std::size_t>(data.size());
  if (batch_size < 1 || static_cast<std::size_t>(batch_size) > n) {
    throw Error(Errc::InvalidArgument,
                fmt::format("batch_size must be in [1, {}] (got {})", n, batch_size));
  }
  const auto order = epoch_order(n, epoch_seed);
  const auto step = static_cast<std::size_t>(batch_size);
  std::vector<Batch> batches;
  batches.reserve((n + step - 1) / step);
  for (std::size_t start = 0; start < n; start += step) {
    const std::size_t count = std::min(step, n - start);
    Batch batch;
    batch.inputs.resize(static_cast<Eigen::Index>(count), data.dim());
    batch.labels.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t src = order[start + i];
      batch.inputs.row(static_cast<Eigen::Index>(i)) = data.features.row(static_cast<Eigen::Index>(src));
      batch.labels.push_back(data.labels[src]);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "label";
  for (Eigen::Index j = 0; j < data.dim(); ++j) {
    out << ",f" << j;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out << data.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      out << fmt::format(",{:.10g}", data.features(i, j));
    }
    out << '\n';
  }
}

}  // namespace anneal
