#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

namespace coherence {

/// The discrete torus Z_N^d: `dim` copies of the integers modulo `side`.
class TorusShape {
 public:
  /// Throws std::invalid_argument unless dim >= 1, side >= 2 and side^dim
  /// fits in a signed 64-bit integer.
  TorusShape(int dim, int side);

  int dim() const { return dim_; }
  int side() const { return side_; }
  std::int64_t sites() const { return sites_; }

  friend bool operator==(const TorusShape&, const TorusShape&) = default;

 private:
  int dim_;
  int side_;
  std::int64_t sites_;
};

/// A site or wavenumber on the torus. Coordinates are stored reduced to
/// [0, N-1]; negative inputs wrap, so an offset of -1 becomes N-1.
class MultiIndex {
 public:
  MultiIndex(const TorusShape& shape, std::span<const std::int64_t> raw);
  MultiIndex(const TorusShape& shape, std::initializer_list<std::int64_t> raw);

  static MultiIndex zero(const TorusShape& shape);

  std::size_t size() const { return coords_.size(); }
  int operator[](std::size_t i) const { return coords_[i]; }
  std::span<const int> coords() const { return coords_; }
  bool is_zero() const;

  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

 private:
  explicit MultiIndex(std::vector<int> reduced) : coords_(std::move(reduced)) {}
  friend MultiIndex site_at(const TorusShape&, std::int64_t);
  friend MultiIndex wrap_add(const TorusShape&, const MultiIndex&, const MultiIndex&);
  friend MultiIndex wrap_negate(const TorusShape&, const MultiIndex&);

  std::vector<int> coords_;
};

enum class Parity { even, odd };

/// Componentwise (a + b) mod N. Throws std::invalid_argument when either
/// index has the wrong number of coordinates.
MultiIndex wrap_add(const TorusShape& shape, const MultiIndex& a, const MultiIndex& b);
MultiIndex wrap_negate(const TorusShape& shape, const MultiIndex& a);

/// All N^d sites in row-major order (last coordinate fastest).
std::vector<MultiIndex> enumerate_sites(const TorusShape& shape);

/// Parity of the plain integer sum of the stored coordinates.
Parity coordinate_sum_parity(const MultiIndex& n);

/// Row-major position of `idx` in enumerate_sites order.
std::int64_t linear_index(const TorusShape& shape, const MultiIndex& idx);
MultiIndex site_at(const TorusShape& shape, std::int64_t linear);

/// Representative of c in (-N/2, N/2].
inline int signed_coord(int c, int side) { return 2 * c > side ? c - side : c; }

/// Distance of c from 0 on the cycle Z_N.
inline int folded_coord(int c, int side) { return c <= side - c ? c : side - c; }

/// Calls fn(coords, linear) for every site in row-major order without
/// allocating a MultiIndex per site. `coords` points at dim() ints.
template <typename Fn>
void for_each_site(const TorusShape& shape, Fn&& fn) {
  const int d = shape.dim();
  const int n = shape.side();
  std::vector<int> c(static_cast<std::size_t>(d), 0);
  for (std::int64_t lin = 0; lin < shape.sites(); ++lin) {
    fn(static_cast<const int*>(c.data()), lin);
    for (int r = d - 1; r >= 0; --r) {
      if (++c[static_cast<std::size_t>(r)] < n) break;
      c[static_cast<std::size_t>(r)] = 0;
    }
  }
}

}  // namespace coherence
