#pragma once

#include "lossscape/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace lossscape {

enum class SplitTag { train, test };

/// Images (one sample per row, pixels in [0, 1]) with digit labels.
class Dataset {
 public:
  Dataset() = default;
  /// Validates counts, pixel range and label range.
  Dataset(RowMatrix images, std::vector<int> labels, SplitTag split);

  const RowMatrix& images() const { return samples_.inputs; }
  const std::vector<int>& labels() const { return samples_.labels; }
  SplitTag split() const { return split_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  /// The whole set as a loss batch (autoencoder targets default to the inputs).
  const Batch& as_batch() const { return samples_; }

  Dataset head(std::size_t n) const;
  Batch gather(std::span<const std::size_t> indices) const;

 private:
  Batch samples_;
  SplitTag split_ = SplitTag::train;
};

/// IDX image file (magic 0x00000803) -> row-major (count x rows*cols) matrix scaled by 1/255.
RowMatrix parse_idx_images(std::span<const std::uint8_t> bytes);
/// IDX label file (magic 0x00000801).
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes);

/// Reads a file, inflating it when gzip-compressed.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

struct MnistFiles {
  std::filesystem::path train_images, train_labels, test_images, test_labels;

  /// Standard file names inside `dir`; prefers the .gz variant when both exist.
  static MnistFiles in_directory(const std::filesystem::path& dir);
};

/// Training set = first `train_cap` samples in file order (or a seeded random
/// subset when `subset_seed` is given); test set taken whole.
std::pair<Dataset, Dataset> standard_split(RowMatrix train_images, std::vector<int> train_labels,
                                           RowMatrix test_images, std::vector<int> test_labels,
                                           std::size_t train_cap = 50000,
                                           std::optional<std::uint64_t> subset_seed = std::nullopt);

std::pair<Dataset, Dataset> load_mnist(const MnistFiles& files, std::size_t train_cap,
                                       std::optional<std::uint64_t> subset_seed = std::nullopt);

struct BatchPlan {
  std::size_t batch_size = 64;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t epoch = 0;
};

/// Seeded permutation of [0, n) cut into consecutive runs of batch_size; last may be short.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, const BatchPlan& plan);

std::vector<Batch> minibatches(const Dataset& data, const BatchPlan& plan);

}  // namespace lossscape
