#include "lossscape/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace lossscape {

namespace {

constexpr std::array<char, 8> kMagic{'L', 'S', 'C', 'P', 'S', 'O', 'L', '\0'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::vector<char>& out, T v) {
  std::array<char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  out.insert(out.end(), b.begin(), b.end());
}

template <class T>
T get_le(const std::vector<char>& in, std::size_t& pos) {
  if (in.size() < pos + sizeof(T)) throw Error("truncated solution file");
  std::array<char, sizeof(T)> b;
  std::memcpy(b.data(), in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  pos += sizeof(T);
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

std::vector<char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

double json_number(double v) { return std::isfinite(v) ? v : std::nan(""); }

}  // namespace

void write_solution_file(const std::filesystem::path& path, const NetworkSpec& spec, const std::vector<Vector>& vectors) {
  const std::string text = spec.canonical();
  const std::size_t n = spec.num_params();
  std::vector<char> out(kMagic.begin(), kMagic.end());
  put_le<std::uint32_t>(out, kSolutionLayoutVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  put_le<std::uint64_t>(out, spec.hash());
  put_le<std::uint64_t>(out, n);
  put_le<std::uint64_t>(out, vectors.size());
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + 8 * n * vectors.size());
  for (const auto& v : vectors) {
    if (static_cast<std::size_t>(v.size()) != n) throw Error("solution vector length does not match network");
    for (Eigen::Index i = 0; i < v.size(); ++i) put_le<double>(out, v[i]);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write to a sibling temp file first so a crash never leaves a half-written set.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

SolutionFile read_solution_file(const std::filesystem::path& path) {
  const std::vector<char> in = read_bytes(path);
  if (in.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), in.begin())) {
    throw Error(path.string() + ": not a solution file (bad magic)");
  }
  std::size_t pos = kMagic.size();
  const auto version = get_le<std::uint32_t>(in, pos);
  if (version != kSolutionLayoutVersion) throw Error(path.string() + ": unsupported layout version " + std::to_string(version));
  const auto text_len = get_le<std::uint32_t>(in, pos);
  SolutionFile sf;
  sf.spec_hash = get_le<std::uint64_t>(in, pos);
  sf.num_params = get_le<std::uint64_t>(in, pos);
  const auto count = get_le<std::uint64_t>(in, pos);
  if (in.size() < pos + text_len) throw Error("truncated solution file");
  sf.spec_text.assign(in.data() + pos, text_len);
  pos += text_len;
  if (fnv1a(sf.spec_text) != sf.spec_hash) throw Error(path.string() + ": network hash does not match its text");
  if (sf.num_params != 0 && count > (in.size() - pos) / (8 * sf.num_params)) throw Error("truncated solution file");
  for (std::uint64_t k = 0; k < count; ++k) {
    Vector v(static_cast<Eigen::Index>(sf.num_params));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = get_le<double>(in, pos);
    sf.vectors.push_back(std::move(v));
  }
  if (pos != in.size()) throw Error(path.string() + ": trailing bytes after the last vector");
  return sf;
}

NetworkSpec spec_from_canonical(const std::string& text) {
  const auto parts = split(text, '|');
  if (parts.size() != 4) throw Error("malformed network text: " + text);
  NetworkSpec spec;
  for (const auto& s : split(parts[0], '-')) spec.layer_sizes.push_back(std::stoi(s));
  for (const auto& s : split(parts[1], ',')) spec.activations.push_back(activation_from_string(s));
  for (const auto& s : split(parts[2], ',')) spec.use_bias.push_back(s == "1");
  if (parts[3] == "cross_entropy") {
    spec.loss_kind = LossKind::cross_entropy_softmax;
  } else if (parts[3] == "mse") {
    spec.loss_kind = LossKind::mean_squared_error;
  } else {
    throw Error("unknown loss kind: " + parts[3]);
  }
  spec.validate();
  return spec;
}

nlohmann::json to_json(const TrainingTrace& trace) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : trace.records) {
    records.push_back({{"step", r.step},
                       {"train_loss", json_number(r.train_loss)},
                       {"test_loss", std::isfinite(r.test_loss) ? nlohmann::json(r.test_loss) : nlohmann::json()},
                       {"sample_gradients", r.sample_gradients},
                       {"sample_losses", r.sample_losses}});
  }
  return {{"optimizer", trace.optimizer},
          {"records", records},
          {"best_train_step", trace.records.empty() ? 0 : trace.best_train().step},
          {"best_test_step", trace.records.empty() ? 0 : trace.best_test().step},
          {"aborted", trace.aborted},
          {"abort_reason", trace.abort_reason},
          {"line_search_fallbacks", trace.line_search_fallbacks}};
}

nlohmann::json to_json(const PathReport& report) {
  return {{"height", report.height},
          {"losses", report.losses},
          {"total_loss", report.total_loss},
          {"length_penalty", report.length_penalty},
          {"coefficient_norms", report.coefficient_norms},
          {"lambda", report.lambda},
          {"iterations", report.iterations},
          {"best_iteration", report.best_iteration}};
}

Histogram histogram(const std::vector<double>& values, std::size_t bins, double lo, double hi) {
  if (bins == 0) throw Error("histogram needs at least one bin");
  if (!(hi > lo)) hi = lo + 1.0;
  Histogram h;
  h.counts.assign(bins, 0);
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins));
  for (double v : values) {
    auto b = static_cast<std::ptrdiff_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(bins)));
    b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

std::string format_double(double v) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return {buf.data(), res.ptr};
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& h) {
  std::ostringstream os;
  os << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    os << format_double(h.edges[b]) << ',' << format_double(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
  }
  write_text(path, os.str());
}

void write_kpca_csv(const std::filesystem::path& path, const std::vector<std::string>& labels, const Matrix& scores) {
  if (labels.size() != static_cast<std::size_t>(scores.rows())) throw Error("one label per score row required");
  std::ostringstream os;
  os << "label";
  for (Eigen::Index k = 0; k < scores.cols(); ++k) os << ",PC" << (k + 1);
  os << '\n';
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    os << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < scores.cols(); ++k) os << ',' << format_double(scores(i, k));
    os << '\n';
  }
  write_text(path, os.str());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::string sha256_file(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr)) throw Error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

}  // namespace lossscape
