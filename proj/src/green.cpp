#include "flexbc/green.hpp"

#include <fftw3.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace flexbc {

namespace fs = std::filesystem;

double gf_1d(long rho, double kbar) {
  if (!(kbar > 0.0)) throw std::invalid_argument("unstable continuum");
  return -std::abs(static_cast<double>(rho)) / (2.0 * kbar);
}

GreenTable GreenTable::exact_1d(double kbar) {
  if (!(kbar > 0.0)) throw std::invalid_argument("unstable continuum");
  GreenTable g;
  g.dim_ = 1;
  g.kbar_ = kbar;
  g.m_ = std::numeric_limits<int>::max() / 4;
  g.r_max_ = std::numeric_limits<double>::infinity();
  g.normalization_ = "exact";
  return g;
}

bool GreenTable::covers(LatticeCoord rho) const {
  if (dim_ == 1) return true;
  return std::abs(rho.i) <= m_ && std::abs(rho.j) <= m_;
}

Mat2 GreenTable::at(LatticeCoord rho) const {
  Mat2 out = Mat2::Zero();
  if (dim_ == 1) {
    out(0, 0) = gf_1d(rho.i, kbar_);
    return out;
  }
  if (!covers(rho)) throw std::out_of_range("green table: separation beyond table, extend r_max");
  const std::size_t w = 2 * static_cast<std::size_t>(m_) + 1;
  const std::size_t k = ((rho.i + m_) * w + (rho.j + m_)) * 3;
  out << data_[k], data_[k + 1], data_[k + 1], data_[k + 2];
  return out;
}

namespace {

int required_extent(const BravaisBasis& basis, double r_max) {
  Eigen::Matrix2d B;
  B.col(0) = basis.v1;
  B.col(1) = basis.v2;
  const Eigen::Matrix2d Binv = B.inverse();
  const double s = std::max(Binv.row(0).norm(), Binv.row(1).norm());
  return static_cast<int>(std::ceil(r_max * s)) + 2;
}

std::string header_line(const GreenTable& g) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "flexbc-green v1 hash=%016llx d=%d r_max=%.17g grid=%d extent=%d normalization=%s",
                static_cast<unsigned long long>(g.stencil_hash()), g.dim(), g.r_max(), g.grid(),
                g.extent(), g.normalization().c_str());
  return buf;
}

std::string cache_file(const std::string& dir, std::uint64_t hash, int m, int grid) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "green2d_%016llx_m%d_n%d.bin", static_cast<unsigned long long>(hash),
                m, grid);
  return (fs::path(dir) / buf).string();
}

}  // namespace

GreenTable build_green_2d(const HarmonicStencil& h, const BravaisBasis& basis, double r_max,
                          int grid) {
  GreenTable g;
  g.dim_ = 2;
  g.m_ = required_extent(basis, r_max);
  g.grid_ = grid;
  g.r_max_ = r_max;
  g.hash_ = h.K.hash();
  const int n = grid;
  const std::size_t N = static_cast<std::size_t>(n) * n;

  // Inverse dynamical matrix on the grid (q = 0 removed).
  std::vector<double> dxx(N), dxy(N), dyy(N);
  for (int k1 = 0; k1 < n; ++k1)
    for (int k2 = 0; k2 < n; ++k2) {
      const std::size_t idx = static_cast<std::size_t>(k1) * n + k2;
      if (k1 == 0 && k2 == 0) {
        dxx[idx] = dxy[idx] = dyy[idx] = 0.0;
        continue;
      }
      Mat2 D = Mat2::Zero();
      for (const auto& e : h.K.entries) {
        const double ph = 2.0 * std::numbers::pi * (static_cast<double>(k1) * e.rho.i +
                                                    static_cast<double>(k2) * e.rho.j) / n;
        D += e.K * std::cos(ph);
      }
      const Mat2 Di = D.inverse();
      dxx[idx] = Di(0, 0);
      dxy[idx] = 0.5 * (Di(0, 1) + Di(1, 0));
      dyy[idx] = Di(1, 1);
    }

  fftw_complex* buf = fftw_alloc_complex(N);
  fftw_plan plan = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  const int m = g.m_;
  const std::size_t w = 2 * static_cast<std::size_t>(m) + 1;
  g.data_.assign(w * w * 3, 0.0);
  const std::vector<double>* comps[3] = {&dxx, &dxy, &dyy};
  for (int c = 0; c < 3; ++c) {
    for (std::size_t k = 0; k < N; ++k) {
      buf[k][0] = (*comps[c])[k];
      buf[k][1] = 0.0;
    }
    fftw_execute(plan);
    auto val = [&](int i, int j) {
      const std::size_t ii = static_cast<std::size_t>((i % n + n) % n);
      const std::size_t jj = static_cast<std::size_t>((j % n + n) % n);
      return buf[ii * n + jj][0] / static_cast<double>(N);
    };
    const double g0 = val(0, 0);
    for (int i = -m; i <= m; ++i)
      for (int j = -m; j <= m; ++j)
        g.data_[((i + m) * w + (j + m)) * 3 + c] = val(i, j) - g0;
  }
  fftw_destroy_plan(plan);
  fftw_free(buf);

  // Quadratic background: L_h[|x|^2 B] = sum_rho K(rho)|rho|^2 B = I / N.
  Mat2 M = Mat2::Zero();
  for (const auto& e : h.K.entries) M += e.K * basis.position(e.rho).squaredNorm();
  const Mat2 B = M.inverse() / static_cast<double>(N);
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j) {
      const double r2 = basis.position({i, j}).squaredNorm();
      double* p = &g.data_[((i + m) * w + (j + m)) * 3];
      p[0] += r2 * B(0, 0);
      p[1] += r2 * 0.5 * (B(0, 1) + B(1, 0));
      p[2] += r2 * B(1, 1);
    }
  g.normalization_ = "G0_zero";
  return g;
}

bool load_green_cache(const std::string& path, GreenTable& g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::string header;
  std::getline(in, header);
  if (header != header_line(g)) return false;
  const std::size_t w = 2 * static_cast<std::size_t>(g.m_) + 1;
  g.data_.resize(w * w * 3);
  in.read(reinterpret_cast<char*>(g.data_.data()),
          static_cast<std::streamsize>(g.data_.size() * sizeof(double)));
  return static_cast<bool>(in);
}

void save_green_cache(const std::string& path, const GreenTable& g) {
  const fs::path tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) {
      spdlog::warn("green cache not writable: {}", path);
      return;
    }
    out << header_line(g) << '\n';
    out.write(reinterpret_cast<const char*>(g.data_.data()),
              static_cast<std::streamsize>(g.data_.size() * sizeof(double)));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
}

std::string green_cache_dir(const GreenBuildOptions& opts) {
  if (!opts.cache_dir.empty()) return opts.cache_dir;
  if (const char* env = std::getenv("FLEXBC_GREEN_CACHE"); env && *env) return env;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg)
    return (fs::path(xdg) / "flexbc").string();
  if (const char* home = std::getenv("HOME"); home && *home)
    return (fs::path(home) / ".cache" / "flexbc").string();
  return ".flexbc-cache";
}

GreenTable gf_2d_table(const HarmonicStencil& h, const BravaisBasis& basis, double r_max,
                       const GreenBuildOptions& opts) {
  if (h.dim() != 2) throw std::invalid_argument("gf_2d_table needs a 2D stencil");
  const int m = required_extent(basis, r_max);
  int grid = opts.grid;
  while (grid < 2 * (m + 4)) grid *= 2;
  if (grid != opts.grid) spdlog::info("green: grid raised to {} for r_max={}", grid, r_max);

  const std::string dir = green_cache_dir(opts);
  const std::string path = cache_file(dir, h.K.hash(), m, grid);
  GreenTable g;
  g.dim_ = 2;
  g.m_ = m;
  g.grid_ = grid;
  g.r_max_ = r_max;
  g.hash_ = h.K.hash();
  if (opts.use_cache && load_green_cache(path, g)) {
    spdlog::debug("green: loaded {}", path);
    return g;
  }
  g = build_green_2d(h, basis, r_max, grid);
  if (opts.verify) {
    const double res = green_identity_residual(g, h, basis, 3, 12345u);
    if (!(res < 1e-8)) {
      std::ostringstream msg;
      msg << "green: quadrature not converged, identity residual " << res;
      throw std::runtime_error(msg.str());
    }
  }
  if (opts.use_cache) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    save_green_cache(path, g);
  }
  return g;
}

double green_identity_residual(const GreenTable& g, const HarmonicStencil& h,
                               const BravaisBasis& basis, int samples, unsigned seed) {
  const int d = basis.dim;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double patch = 3.0 * basis.ell;
  std::vector<LatticeCoord> support{{0, 0}};
  for (const auto& o : basis.offsets_within(patch)) support.push_back(o);
  // Force support: the patch grown by the stencil reach.
  std::vector<LatticeCoord> fsupp{{0, 0}};
  for (const auto& o : basis.offsets_within(patch + h.K.reach(basis))) fsupp.push_back(o);
  // Evaluation points: the patch plus a few distant sites.
  std::vector<LatticeCoord> eval = support;
  const int far = d == 1 ? 40 : std::max(1, g.extent() / 2);
  eval.push_back({far, 0});
  if (d == 2) {
    eval.push_back({0, far});
    eval.push_back({-far / 2, far / 3});
  }
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    std::vector<Vec2> v(support.size(), Vec2::Zero());
    for (auto& x : v)
      for (int c = 0; c < d; ++c) x(c) = uni(rng);
    auto v_at = [&](LatticeCoord n) -> Vec2 {
      for (std::size_t k = 0; k < support.size(); ++k)
        if (support[k] == n) return v[k];
      return Vec2::Zero();
    };
    std::vector<Vec2> f(fsupp.size(), Vec2::Zero());
    for (std::size_t k = 0; k < fsupp.size(); ++k)
      for (const auto& e : h.K.entries) f[k] += e.K * v_at(fsupp[k] - e.rho);
    double num = 0.0, den = 0.0;
    for (const auto& x : eval) {
      Vec2 acc = Vec2::Zero();
      for (std::size_t k = 0; k < fsupp.size(); ++k) acc += g.at(x - fsupp[k]) * f[k];
      const Vec2 ref = v_at(x);
      num += (acc - ref).topRows(d).squaredNorm();
      den += ref.topRows(d).squaredNorm();
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  return worst;
}

Mat green_block(const GreenTable& g, const DomainDecomposition& d, const IndexSet& x_set,
                const IndexSet& y_set) {
  const int dm = d.dim();
  Mat out(static_cast<Eigen::Index>(x_set.size()) * dm, static_cast<Eigen::Index>(y_set.size()) * dm);
  for (std::size_t r = 0; r < x_set.size(); ++r) {
    const LatticeCoord xn = d.sites[x_set[r]].n;
    for (std::size_t c = 0; c < y_set.size(); ++c) {
      const Mat2 G = g.at(xn - d.sites[y_set[c]].n);
      out.block(static_cast<Eigen::Index>(r) * dm, static_cast<Eigen::Index>(c) * dm, dm, dm) =
          G.topLeftCorner(dm, dm);
    }
  }
  return out;
}

Vec green_apply(const GreenTable& g, const DomainDecomposition& d, const IndexSet& x_set,
                const IndexSet& y_set, const Vec& f) {
  const int dm = d.dim();
  Vec out = Vec::Zero(static_cast<Eigen::Index>(x_set.size()) * dm);
  for (std::size_t c = 0; c < y_set.size(); ++c) {
    const Vec2 fc = dm == 1 ? Vec2(f(c), 0.0) : Vec2(f.segment<2>(2 * c));
    if (fc.isZero(0.0)) continue;
    const LatticeCoord yn = d.sites[y_set[c]].n;
    for (std::size_t r = 0; r < x_set.size(); ++r) {
      const Vec2 val = g.at(d.sites[x_set[r]].n - yn) * fc;
      out.segment(static_cast<Eigen::Index>(r) * dm, dm) += val.topRows(dm);
    }
  }
  return out;
}

Vec force_operator_apply(const GreenTable& g, const HarmonicStencil& h, const DomainDecomposition& d,
                         const IndexSet& x_set, const Vec& v_o) {
  const Vec f_op = stencil_block(h.K, d, d.op, d.o) * v_o;
  return green_apply(g, d, x_set, d.op, f_op);
}

Mat force_operator_block(const GreenTable& g, const HarmonicStencil& h, const DomainDecomposition& d,
                         const IndexSet& x_set) {
  const SpMat L = stencil_block(h.K, d, d.op, d.o);
  return green_block(g, d, x_set, d.op) * L;
}

double max_separation(const DomainDecomposition& d) {
  double r = 0.0;
  for (const auto& s : d.sites) r = std::max(r, s.x.norm());
  return 2.0 * r + d.basis.ell;
}

}  // namespace flexbc
