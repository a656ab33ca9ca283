#include "hyslam/io/feature_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "hyslam/io/errors.hpp"

namespace hyslam {
namespace {

constexpr char kMagic[4] = {'H', 'Y', 'F', 'T'};
constexpr std::uint32_t kVersion = 1;

void readExact(std::ifstream& in, char* dst, std::size_t bytes,
               const std::string& path) {
  const std::streamoff start = in.tellg();
  in.read(dst, static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes)
    throw ParseError("truncated feature file " + path + " at byte offset " +
                     std::to_string(start + in.gcount()));
}

}  // namespace

std::vector<Feature> loadFeatures(const std::string& path,
                                  int* renormalized_warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open feature file: " + path);

  char magic[4];
  readExact(in, magic, 4, path);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("bad magic in feature file: " + path);

  std::uint32_t version = 0, count = 0, dim = 0;
  readExact(in, reinterpret_cast<char*>(&version), 4, path);
  readExact(in, reinterpret_cast<char*>(&count), 4, path);
  readExact(in, reinterpret_cast<char*>(&dim), 4, path);
  if (version != kVersion)
    throw ParseError("unsupported feature file version " +
                     std::to_string(version));
  if (dim != kDescriptorDim)
    throw DimensionMismatch("feature file " + path + " has descriptor dim " +
                            std::to_string(dim) + ", expected 128");

  int warnings = 0;
  std::vector<Feature> features;
  features.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Feature f;
    double scalars[5];
    readExact(in, reinterpret_cast<char*>(scalars), sizeof(scalars), path);
    f.u = scalars[0];
    f.v = scalars[1];
    f.scale_sigma = scalars[2];
    f.orientation = scalars[3];
    f.right_u = scalars[4];
    readExact(in, reinterpret_cast<char*>(f.descriptor.data()),
              sizeof(float) * kDescriptorDim, path);
    const float norm = f.descriptor.norm();
    if (norm <= 0.0f)
      throw ParseError("zero descriptor in feature file " + path);
    if (std::abs(norm - 1.0f) > 1e-3f) ++warnings;
    // Leave already-unit descriptors bitwise intact.
    if (std::abs(norm - 1.0f) > 1e-6f) f.descriptor /= norm;
    features.push_back(std::move(f));
  }
  if (renormalized_warnings) *renormalized_warnings = warnings;
  return features;
}

void saveFeatures(const std::vector<Feature>& features,
                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write feature file: " + path);
  out.write(kMagic, 4);
  const std::uint32_t version = kVersion;
  const std::uint32_t count = static_cast<std::uint32_t>(features.size());
  const std::uint32_t dim = kDescriptorDim;
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&count), 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  for (const auto& f : features) {
    const double scalars[5] = {f.u, f.v, f.scale_sigma, f.orientation,
                               f.right_u};
    out.write(reinterpret_cast<const char*>(scalars), sizeof(scalars));
    out.write(reinterpret_cast<const char*>(f.descriptor.data()),
              sizeof(float) * kDescriptorDim);
  }
}

}  // namespace hyslam
