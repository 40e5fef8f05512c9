#include "flexbc/stencil.hpp"

#include <cstring>

namespace flexbc {

const Mat2* Stencil::find(LatticeCoord rho) const {
  for (const auto& e : entries)
    if (e.rho == rho) return &e.K;
  return nullptr;
}

double Stencil::reach(const BravaisBasis& basis) const {
  double r = 0.0;
  for (const auto& e : entries) r = std::max(r, basis.position(e.rho).norm());
  return r;
}

std::uint64_t Stencil::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < n; ++k) {
      h ^= b[k];
      h *= 1099511628211ull;
    }
  };
  mix(&dim, sizeof dim);
  for (const auto& e : entries) {
    mix(&e.rho.i, sizeof(int));
    mix(&e.rho.j, sizeof(int));
    for (int k = 0; k < 4; ++k) {
      const double v = e.K.data()[k];
      mix(&v, sizeof v);
    }
  }
  return h;
}

double Stencil::row_sum_defect() const {
  Mat2 s = Mat2::Zero();
  for (const auto& e : entries) s += e.K;
  return s.topLeftCorner(dim, dim).cwiseAbs().maxCoeff();
}

SpMat stencil_block(const Stencil& K, const DomainDecomposition& d, const IndexSet& x_set,
                    const IndexSet& y_set) {
  const int dm = K.dim;
  std::vector<int> col_of(d.size(), -1);
  for (std::size_t k = 0; k < y_set.size(); ++k) col_of[y_set[k]] = static_cast<int>(k);
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t r = 0; r < x_set.size(); ++r) {
    const LatticeCoord xn = d.sites[x_set[r]].n;
    for (const auto& e : K.entries) {
      const int nb = d.find(xn - e.rho);
      if (nb < 0 || col_of[nb] < 0) continue;
      for (int a = 0; a < dm; ++a)
        for (int b = 0; b < dm; ++b)
          if (e.K(a, b) != 0.0)
            trips.emplace_back(static_cast<int>(r) * dm + a, col_of[nb] * dm + b, e.K(a, b));
    }
  }
  SpMat m(static_cast<int>(x_set.size()) * dm, static_cast<int>(y_set.size()) * dm);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Mat stencil_block_dense(const Stencil& K, const DomainDecomposition& d, const IndexSet& x_set,
                        const IndexSet& y_set) {
  return Mat(stencil_block(K, d, x_set, y_set));
}

Vec gather(const Vec& global, const IndexSet& set, int dim) {
  Vec out(static_cast<Eigen::Index>(set.size()) * dim);
  for (std::size_t k = 0; k < set.size(); ++k)
    out.segment(static_cast<Eigen::Index>(k) * dim, dim) =
        global.segment(static_cast<Eigen::Index>(set[k]) * dim, dim);
  return out;
}

void scatter(Vec& global, const IndexSet& set, const Vec& vals, int dim) {
  for (std::size_t k = 0; k < set.size(); ++k)
    global.segment(static_cast<Eigen::Index>(set[k]) * dim, dim) =
        vals.segment(static_cast<Eigen::Index>(k) * dim, dim);
}

void scatter_add(Vec& global, const IndexSet& set, const Vec& vals, int dim) {
  for (std::size_t k = 0; k < set.size(); ++k)
    global.segment(static_cast<Eigen::Index>(set[k]) * dim, dim) +=
        vals.segment(static_cast<Eigen::Index>(k) * dim, dim);
}

}  // namespace flexbc
