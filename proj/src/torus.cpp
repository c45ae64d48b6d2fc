#include "coherence/torus.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace coherence {

TorusShape::TorusShape(int dim, int side) : dim_(dim), side_(side), sites_(1) {
  if (dim < 1) throw std::invalid_argument("torus dimension must be >= 1");
  if (side < 2) throw std::invalid_argument("torus side length must be >= 2");
  constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
  for (int i = 0; i < dim; ++i) {
    if (sites_ > kMax / side) {
      throw std::invalid_argument("site count " + std::to_string(side) + "^" +
                                  std::to_string(dim) + " overflows int64");
    }
    sites_ *= side;
  }
}

namespace {

int reduce(std::int64_t v, int side) {
  auto r = v % side;
  if (r < 0) r += side;
  return static_cast<int>(r);
}

void check_dim(const TorusShape& shape, std::size_t size) {
  if (size != static_cast<std::size_t>(shape.dim())) {
    throw std::invalid_argument("multi-index has " + std::to_string(size) +
                                " coordinates, torus has dimension " +
                                std::to_string(shape.dim()));
  }
}

}  // namespace

MultiIndex::MultiIndex(const TorusShape& shape, std::span<const std::int64_t> raw) {
  check_dim(shape, raw.size());
  coords_.reserve(raw.size());
  for (auto v : raw) coords_.push_back(reduce(v, shape.side()));
}

MultiIndex::MultiIndex(const TorusShape& shape, std::initializer_list<std::int64_t> raw)
    : MultiIndex(shape, std::span<const std::int64_t>(raw.begin(), raw.size())) {}

MultiIndex MultiIndex::zero(const TorusShape& shape) {
  return MultiIndex(std::vector<int>(static_cast<std::size_t>(shape.dim()), 0));
}

bool MultiIndex::is_zero() const {
  for (int c : coords_)
    if (c != 0) return false;
  return true;
}

MultiIndex wrap_add(const TorusShape& shape, const MultiIndex& a, const MultiIndex& b) {
  check_dim(shape, a.size());
  check_dim(shape, b.size());
  std::vector<int> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] + b[i]) % shape.side();
  return MultiIndex(std::move(out));
}

MultiIndex wrap_negate(const TorusShape& shape, const MultiIndex& a) {
  check_dim(shape, a.size());
  std::vector<int> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (shape.side() - a[i]) % shape.side();
  return MultiIndex(std::move(out));
}

std::vector<MultiIndex> enumerate_sites(const TorusShape& shape) {
  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>(shape.sites()));
  for_each_site(shape, [&](const int* c, std::int64_t) {
    out.push_back(MultiIndex(shape, std::vector<std::int64_t>(c, c + shape.dim())));
  });
  return out;
}

Parity coordinate_sum_parity(const MultiIndex& n) {
  long sum = 0;
  for (int c : n.coords()) sum += c;
  return sum % 2 == 0 ? Parity::even : Parity::odd;
}

std::int64_t linear_index(const TorusShape& shape, const MultiIndex& idx) {
  check_dim(shape, idx.size());
  std::int64_t lin = 0;
  for (int c : idx.coords()) lin = lin * shape.side() + c;
  return lin;
}

MultiIndex site_at(const TorusShape& shape, std::int64_t linear) {
  if (linear < 0 || linear >= shape.sites()) throw std::out_of_range("site index out of range");
  std::vector<int> c(static_cast<std::size_t>(shape.dim()));
  for (int r = shape.dim() - 1; r >= 0; --r) {
    c[static_cast<std::size_t>(r)] = static_cast<int>(linear % shape.side());
    linear /= shape.side();
  }
  return MultiIndex(std::move(c));
}

}  // namespace coherence
