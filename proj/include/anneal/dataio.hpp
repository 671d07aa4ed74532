#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anneal/micronet.hpp"
#include "anneal/optim.hpp"

namespace anneal {

struct Dataset {
  Matrix features;  // N x d
  std::vector<int> labels;
  int classes = 0;
  std::string name;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  void validate() const;
};

/// Gaussian blobs around well-separated class centers.
///
/// Centers sit at pairwise distance `center_separation`: regular simplex
/// vertices when classes <= dim, evenly spaced on a line when dim == 1, and a
/// regular polygon in the first two coordinates otherwise (adjacent centers
/// at the separation).
struct BlobSpec {
  int classes = 2;
  int per_class = 500;
  int dim = 2;
  double center_separation = 4.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 7;

  void validate() const;
};

inline constexpr std::size_t kCifarPixels = 3072;
inline constexpr std::size_t kCifarRecordBytes = kCifarPixels + 1;

/// One CIFAR-10 binary record: label byte, then 1024 R, 1024 G, 1024 B bytes,
/// each plane row-major over 32x32.
struct Cifar10Record {
  std::uint8_t label = 0;
  std::array<std::uint8_t, kCifarPixels> pixels{};

  friend bool operator==(const Cifar10Record&, const Cifar10Record&) = default;
};

struct Normalization {
  Vector mean;
  Vector std;  // population std; features with std < 1e-12 are only centered
};

Matrix blob_centers(const BlobSpec& spec);
Dataset gen_blobs(const BlobSpec& spec);

/// Seeded permutation split; |test| = round(N * test_fraction).
/// Throws Errc::Split when either side would be empty.
std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed);

/// Throws ParseError (Errc::TruncatedFile or Errc::CorruptLabel) carrying the
/// byte offset of the offending record.
std::vector<Cifar10Record> parse_cifar10(std::span<const std::uint8_t> bytes);
std::vector<Cifar10Record> read_cifar10_file(const std::string& path);
std::vector<std::uint8_t> serialize_cifar10(const std::vector<Cifar10Record>& records);

/// Pixels scaled by 1/255, 3072 features per record.
Dataset cifar_to_dataset(const std::vector<Cifar10Record>& records, std::string name = "cifar10");

std::pair<Dataset, Normalization> normalize(const Dataset& data);

/// Shuffled order of sample indices for one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t epoch_seed);

/// All batches of one epoch in shuffled order; the last batch may be short.
std::vector<Batch> batch_iter(const Dataset& data, int batch_size, std::uint64_t epoch_seed);

/// Header `label,f0,f1,...`, one row per sample.
void write_dataset_csv(std::ostream& out, const Dataset& data);

}  // namespace anneal
