#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "bandframe/eigensolver.hpp"
#include "bandframe/errors.hpp"

namespace bandframe {

namespace {

constexpr char kMagic[4] = {'E', 'I', 'G', 'B'};

template <typename T> void put_le(std::ostream& out, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.write(reinterpret_cast<const char*>(bits.data()), sizeof(T));
}

template <typename T> T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bits{};
  in.read(reinterpret_cast<char*>(bits.data()), sizeof(T));
  if (!in) throw CacheError("eigenbasis cache is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

} // namespace

void save_basis(const EigenBasis& basis, const GridDomain& dom, const std::filesystem::path& path) {
  nlohmann::json header = {
      {"dimension", dom.dimension()},
      {"h", dom.h()},
      {"node_count", basis.node_count()},
      {"m", basis.size()},
      {"tol", basis.tol},
      {"fingerprint", basis.fingerprint},
      {"lambda_reliable", basis.lambda_reliable},
      {"complete_to", basis.complete_to},
      {"weight", basis.weight},
      {"method", basis.method},
  };
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CacheError("cannot write eigenbasis cache " + tmp.string());
    out.write(kMagic, 4);
    put_le<std::uint32_t>(out, kCacheVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (Eigen::Index m = 0; m < basis.values.size(); ++m) put_le<double>(out, basis.values[m]);
    for (Eigen::Index m = 0; m < basis.vectors.cols(); ++m) {
      for (Eigen::Index i = 0; i < basis.vectors.rows(); ++i) {
        put_le<double>(out, basis.vectors(i, m));
      }
    }
    if (!out) throw CacheError("failed while writing eigenbasis cache " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

EigenBasis load_basis(const std::filesystem::path& path, const std::string& expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheError("cannot open eigenbasis cache " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw CacheError(path.string() + " is not an EIGB eigenbasis cache");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCacheVersion) {
    throw CacheError("unsupported EIGB version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint32_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), header_len);
  if (!in) throw CacheError("eigenbasis cache header is truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CacheError(std::string("eigenbasis cache header is not valid JSON: ") + e.what());
  }
  const auto fingerprint = header.value("fingerprint", std::string{});
  if (fingerprint != expected_fingerprint) {
    throw CacheError("eigenbasis cache fingerprint " + fingerprint +
                     " does not match operator " + expected_fingerprint);
  }

  EigenBasis basis;
  const auto m = header.at("m").get<std::size_t>();
  const auto n = header.at("node_count").get<std::size_t>();
  basis.tol = header.at("tol").get<double>();
  basis.fingerprint = fingerprint;
  basis.lambda_reliable = header.value("lambda_reliable", 0.0);
  basis.complete_to = header.value("complete_to", 0.0);
  const double h = header.at("h").get<double>();
  basis.weight = header.value("weight", std::pow(h, header.at("dimension").get<int>()));
  basis.method = "cache";
  basis.values.resize(static_cast<Eigen::Index>(m));
  basis.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) basis.values[static_cast<Eigen::Index>(i)] = get_le<double>(in);
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      basis.vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = get_le<double>(in);
    }
  }
  return basis;
}

} // namespace bandframe
