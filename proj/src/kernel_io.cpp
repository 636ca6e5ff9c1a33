#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "motjvie/common.hpp"
#include "motjvie/kernel.hpp"

namespace motjvie {

namespace {

static_assert(std::endian::native == std::endian::little, "cache format assumes little-endian hosts");

constexpr char kMagic[8] = {'M', 'O', 'T', 'J', 'V', 'K', 'R', 'N'};
constexpr std::uint32_t kVersion = 1;

#pragma pack(push, 1)
struct Header {
  char magic[8];
  std::uint32_t version;
  std::int32_t U, V, W;
  double dx, dy, dz, dt;
  std::int32_t ell;
  double tolerance;
};
#pragma pack(pop)

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

void save_kernel(const std::string& path, const InteractionKernel& K) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write kernel cache " + path);
  Header h{};
  std::memcpy(h.magic, kMagic, 8);
  h.version = kVersion;
  h.U = K.U;
  h.V = K.V;
  h.W = K.W;
  h.dx = K.dx;
  h.dy = K.dy;
  h.dz = K.dz;
  h.dt = K.dt;
  h.ell = K.ell;
  h.tolerance = K.tolerance;
  out.write(reinterpret_cast<const char*>(&h), sizeof h);
  // all nine component pairs, offset-major, lag-innermost
  for (int b = 0; b < 3; ++b)
    for (int a = 0; a < 3; ++a) {
      const int p = pair_index(b, a);
      out.write(reinterpret_cast<const char*>(K.lag_row(p, 0)),
                static_cast<std::streamsize>(sizeof(double) * K.noff() * K.lags()));
    }
  if (!out) throw ConfigError("failed writing kernel cache " + path);
}

bool load_kernel(const std::string& path, const VoxelGrid& g, double dt, double tolerance,
                 InteractionKernel& K) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  Header h{};
  in.read(reinterpret_cast<char*>(&h), sizeof h);
  if (!in || std::memcmp(h.magic, kMagic, 8) != 0 || h.version != kVersion) return false;
  if (h.U != g.U || h.V != g.V || h.W != g.W || !same(h.dx, g.dx) || !same(h.dy, g.dy) ||
      !same(h.dz, g.dz) || !same(h.dt, dt) || h.tolerance > tolerance)
    return false;
  InteractionKernel k;
  k.U = h.U;
  k.V = h.V;
  k.W = h.W;
  k.dx = h.dx;
  k.dy = h.dy;
  k.dz = h.dz;
  k.dt = h.dt;
  k.ell = h.ell;
  k.tolerance = h.tolerance;
  if (k.ell != lag_count(g, dt)) return false;
  const std::size_t block = static_cast<std::size_t>(k.noff()) * k.lags();
  k.values.assign(kPairs * block, 0.0);
  std::vector<double> buf(block);
  for (int b = 0; b < 3; ++b)
    for (int a = 0; a < 3; ++a) {
      in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(sizeof(double) * block));
      if (!in) return false;
      if (a >= b) std::memcpy(k.lag_row(pair_index(b, a), 0), buf.data(), sizeof(double) * block);
    }
  attach_grid(k, g);
  K = std::move(k);
  return true;
}

InteractionKernel load_or_assemble(const std::string& path, const VoxelGrid& g, double dt,
                                   const QuadratureSpec& spec) {
  InteractionKernel K;
  if (!path.empty() && load_kernel(path, g, dt, spec.tolerance, K)) return K;
  K = assemble_kernel(g, dt, spec);
  if (!path.empty()) save_kernel(path, K);
  return K;
}

}  // namespace motjvie
