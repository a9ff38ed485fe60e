#pragma once

#include "lossscape/analysis.hpp"
#include "lossscape/nn.hpp"
#include "lossscape/optim.hpp"
#include "lossscape/pathfinder.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lossscape {

// Solution files hold one or more parameter vectors of the same network:
//
//   offset  size  field
//   0       8     magic "LSCPSOL\0"
//   8       4     layout version (u32, currently 1)
//   12      4     length of the network's canonical text (u32)
//   16      8     FNV-1a hash of that text (u64)
//   24      8     parameters per vector (u64)
//   32      8     vector count (u64)
//   40      L     canonical network text (see NetworkSpec::canonical)
//   40+L    8*N*C parameters, little-endian IEEE-754 binary64
//
// All integers are little-endian.
inline constexpr std::uint32_t kSolutionLayoutVersion = 1;

struct SolutionFile {
  std::string spec_text;
  std::uint64_t spec_hash = 0;
  std::size_t num_params = 0;
  std::vector<Vector> vectors;
};

void write_solution_file(const std::filesystem::path& path, const NetworkSpec& spec, const std::vector<Vector>& vectors);
SolutionFile read_solution_file(const std::filesystem::path& path);

/// Parses a canonical network text back into a spec.
NetworkSpec spec_from_canonical(const std::string& text);

nlohmann::json to_json(const TrainingTrace& trace);
nlohmann::json to_json(const PathReport& report);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<std::size_t> counts;
};

/// Equal-width bins over [lo, hi]; values outside are clamped into the end bins.
Histogram histogram(const std::vector<double>& values, std::size_t bins, double lo, double hi);

/// "bin_lo,bin_hi,count" rows after a header.
void write_histogram_csv(const std::filesystem::path& path, const Histogram& h);

/// One row per vector: label, PC1..PCk.
void write_kpca_csv(const std::filesystem::path& path, const std::vector<std::string>& labels, const Matrix& scores);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Fixed 17-significant-digit text for a double.
std::string format_double(double v);

}  // namespace lossscape
