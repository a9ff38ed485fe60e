#include "lossscape/mnist.hpp"

#include <zlib.h>

#include <numeric>
#include <random>

namespace lossscape {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (bytes.size() < offset + 4) throw Error("truncated IDX header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void expect_magic(std::span<const std::uint8_t> bytes, std::uint32_t want) {
  const std::uint32_t got = read_be32(bytes, 0);
  if (got != want) throw Error("bad magic: " + std::to_string(got));
}

// Shuffle with a portable mapping from raw engine output to indices.
void shuffle(std::vector<std::size_t>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

Dataset::Dataset(RowMatrix images, std::vector<int> labels, SplitTag split) : split_(split) {
  if (static_cast<std::size_t>(images.rows()) != labels.size()) {
    throw Error("image count (" + std::to_string(images.rows()) + ") does not match label count (" +
                std::to_string(labels.size()) + ")");
  }
  if (images.size() > 0 && (images.minCoeff() < 0.0 || images.maxCoeff() > 1.0)) {
    throw Error("pixel values must lie in [0, 1]");
  }
  for (int y : labels) {
    if (y < 0 || y > 9) throw Error("label out of range: " + std::to_string(y));
  }
  samples_.inputs = std::move(images);
  samples_.labels = std::move(labels);
}

Dataset Dataset::head(std::size_t n) const {
  if (n > size()) throw Error("requested " + std::to_string(n) + " samples from a set of " + std::to_string(size()));
  const auto rows = static_cast<Eigen::Index>(n);
  return Dataset(images().topRows(rows), std::vector<int>(labels().begin(), labels().begin() + rows), split_);
}

Batch Dataset::gather(std::span<const std::size_t> indices) const {
  Batch b;
  b.inputs.resize(static_cast<Eigen::Index>(indices.size()), images().cols());
  b.labels.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    b.inputs.row(static_cast<Eigen::Index>(k)) = images().row(static_cast<Eigen::Index>(indices[k]));
    b.labels.push_back(labels()[indices[k]]);
  }
  return b;
}

RowMatrix parse_idx_images(std::span<const std::uint8_t> bytes) {
  expect_magic(bytes, kImageMagic);
  const std::uint64_t count = read_be32(bytes, 4);
  const std::uint64_t rows = read_be32(bytes, 8);
  const std::uint64_t cols = read_be32(bytes, 12);
  const std::uint64_t pixels = rows * cols;
  if (pixels != 0 && count > (std::uint64_t{1} << 40) / pixels) throw Error("IDX dimension overflow");
  const std::uint64_t need = count * pixels;
  if (bytes.size() - 16 < need) throw Error("truncated IDX image stream");
  RowMatrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  const std::uint8_t* src = bytes.data() + 16;
  double* dst = out.data();
  for (std::uint64_t i = 0; i < need; ++i) dst[i] = static_cast<double>(src[i]) / 255.0;
  return out;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  expect_magic(bytes, kLabelMagic);
  const std::uint64_t count = read_be32(bytes, 4);
  if (bytes.size() - 8 < count) throw Error("truncated IDX label stream");
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  // gzread passes uncompressed files through unchanged.
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> chunk(1 << 20);
  for (;;) {
    const int n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      gzclose(f);
      throw Error("read error in " + path.string());
    }
    if (n == 0) break;
    out.insert(out.end(), chunk.begin(), chunk.begin() + n);
  }
  gzclose(f);
  return out;
}

MnistFiles MnistFiles::in_directory(const std::filesystem::path& dir) {
  auto pick = [&dir](const std::string& stem) {
    const auto gz = dir / (stem + ".gz");
    return std::filesystem::exists(gz) ? gz : dir / stem;
  };
  return {pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"), pick("t10k-images-idx3-ubyte"),
          pick("t10k-labels-idx1-ubyte")};
}

std::pair<Dataset, Dataset> standard_split(RowMatrix train_images, std::vector<int> train_labels,
                                           RowMatrix test_images, std::vector<int> test_labels,
                                           std::size_t train_cap, std::optional<std::uint64_t> subset_seed) {
  const auto available = static_cast<std::size_t>(train_images.rows());
  if (train_cap > available) {
    throw Error("train_cap " + std::to_string(train_cap) + " exceeds the " + std::to_string(available) +
                " available training samples");
  }
  Dataset full(std::move(train_images), std::move(train_labels), SplitTag::train);
  Dataset train;
  if (subset_seed) {
    std::vector<std::size_t> idx(available);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    shuffle(idx, *subset_seed);
    idx.resize(train_cap);
    Batch b = full.gather(idx);
    train = Dataset(std::move(b.inputs), std::move(b.labels), SplitTag::train);
  } else {
    train = full.head(train_cap);
  }
  return {std::move(train), Dataset(std::move(test_images), std::move(test_labels), SplitTag::test)};
}

std::pair<Dataset, Dataset> load_mnist(const MnistFiles& files, std::size_t train_cap,
                                       std::optional<std::uint64_t> subset_seed) {
  return standard_split(parse_idx_images(read_file_bytes(files.train_images)),
                        parse_idx_labels(read_file_bytes(files.train_labels)),
                        parse_idx_images(read_file_bytes(files.test_images)),
                        parse_idx_labels(read_file_bytes(files.test_labels)), train_cap, subset_seed);
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, const BatchPlan& plan) {
  if (plan.batch_size == 0) throw Error("batch_size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, mix_seed(plan.shuffle_seed, plan.epoch));
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += plan.batch_size) {
    const std::size_t stop = std::min(n, start + plan.batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return out;
}

std::vector<Batch> minibatches(const Dataset& data, const BatchPlan& plan) {
  std::vector<Batch> out;
  for (const auto& idx : batch_indices(data.size(), plan)) out.push_back(data.gather(idx));
  return out;
}

}  // namespace lossscape
