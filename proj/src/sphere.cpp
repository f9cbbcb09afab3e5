#include "dmk/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/FFT>

namespace dmk {

namespace {

constexpr double kPi = std::numbers::pi;

// Below this sin θ the spherical-coordinate jet loses accuracy.
constexpr double kPoleGuard = 1e-3;

using Complex = std::complex<double>;

Eigen::FFT<double>& thread_fft() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

std::size_t tri(int l, int m) { return static_cast<std::size_t>(l) * (l + 1) / 2 + m; }

// Gauss-Legendre nodes (descending) and weights on [-1, 1], mirrored so that
// x[n-1-j] == -x[j] bitwise.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p1 = z, p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

Mat3 outer_frame(const Vec3& a, const Vec3& b, const Mat2& w, int dim) {
  if (dim == 1) return w(0, 0) * a * a.transpose();
  return w(0, 0) * a * a.transpose() + w(0, 1) * (a * b.transpose() + b * a.transpose()) +
         w(1, 1) * b * b.transpose();
}

}  // namespace

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw std::invalid_argument("ScalarField: null grid");
  if (values_.size() != grid_->size())
    throw std::invalid_argument("ScalarField: value count " + std::to_string(values_.size()) +
                                " does not match node count " + std::to_string(grid_->size()));
  for (double v : values_)
    if (!std::isfinite(v)) throw std::invalid_argument("ScalarField: non-finite value");
}

ScalarField ScalarField::constant(GridPtr grid, double c) {
  const std::size_t n = grid->size();
  return ScalarField(std::move(grid), std::vector<double>(n, c));
}

ScalarField ScalarField::sample(GridPtr grid, const std::function<double(const Vec3&)>& f) {
  std::vector<double> v(grid->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid->node(i));
  return ScalarField(std::move(grid), std::move(v));
}

double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::sup_norm() const {
  double s = 0.0;
  for (double v : values_) s = std::max(s, std::abs(v));
  return s;
}

ScalarField ScalarField::map(const std::function<double(double)>& op) const {
  std::vector<double> v(values_.size());
  std::transform(values_.begin(), values_.end(), v.begin(), op);
  return ScalarField(grid_, std::move(v));
}

// ---------------------------------------------------------------------------
// JetField

Mat2 JetField::shifted_hessian(std::size_t i) const {
  Mat2 w = hessian[i];
  const int dim = grid->dimension() - 1;
  w(0, 0) += value[i];
  if (dim == 2) w(1, 1) += value[i];
  return w;
}

double JetField::shifted_hessian_det(std::size_t i) const {
  const Mat2 w = shifted_hessian(i);
  if (grid->dimension() == 2) return w(0, 0);
  return w(0, 0) * w(1, 1) - w(0, 1) * w(1, 0);
}

double JetField::shifted_hessian_min_eig(std::size_t i) const {
  const Mat2 w = shifted_hessian(i);
  if (grid->dimension() == 2) return w(0, 0);
  const double mean = 0.5 * (w(0, 0) + w(1, 1));
  const double diff = 0.5 * (w(0, 0) - w(1, 1));
  const double off = 0.5 * (w(0, 1) + w(1, 0));
  return mean - std::hypot(diff, off);
}

double JetField::gradient_norm2(std::size_t i) const { return gradient[i].squaredNorm(); }

// ---------------------------------------------------------------------------
// Legendre functions

namespace {

// Recurrence coefficients of the normalized associated Legendre functions.
struct LegendreCoeffs {
  std::vector<double> a, b, c, diag, sub;
  explicit LegendreCoeffs(int band) {
    const std::size_t count = tri(band, band) + 1;
    a.assign(count, 0.0);
    b.assign(count, 0.0);
    c.assign(count, 0.0);
    diag.assign(band + 1, 0.0);
    sub.assign(band + 1, 0.0);
    for (int m = 0; m <= band; ++m) {
      diag[m] = m > 0 ? std::sqrt((2.0 * m + 1.0) / (2.0 * m)) : 1.0;
      sub[m] = std::sqrt(2.0 * m + 3.0);
      for (int l = m; l <= band; ++l) {
        const double ll = l, mm = m;
        if (l >= m + 2) {
          a[tri(l, m)] = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll - mm * mm));
          b[tri(l, m)] = std::sqrt(((ll - 1.0) * (ll - 1.0) - mm * mm) / (4.0 * (ll - 1.0) * (ll - 1.0) - 1.0));
        }
        c[tri(l, m)] = std::sqrt((2.0 * ll + 1.0) * (ll * ll - mm * mm) / (2.0 * ll - 1.0));
      }
    }
  }
};

const LegendreCoeffs& legendre_coeffs(int band) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<LegendreCoeffs>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[band];
  if (!slot) slot = std::make_unique<LegendreCoeffs>(band);
  return *slot;
}

void legendre_values(const LegendreCoeffs& k, int band, double x, double s, std::vector<double>& p) {
  p.resize(tri(band, band) + 1);
  double pmm = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 0; m <= band; ++m) {
    if (m > 0) pmm *= k.diag[m] * s;
    p[tri(m, m)] = pmm;
    if (m + 1 <= band) p[tri(m + 1, m)] = k.sub[m] * x * pmm;
    for (int l = m + 2; l <= band; ++l) {
      const std::size_t t = tri(l, m);
      p[t] = k.a[t] * (x * p[tri(l - 1, m)] - k.b[t] * p[tri(l - 2, m)]);
    }
  }
}

}  // namespace

void legendre_jet(int band, double x, double s, std::vector<double>& p, std::vector<double>& dp,
                  std::vector<double>& ddp) {
  const LegendreCoeffs& k = legendre_coeffs(band);
  legendre_values(k, band, x, s, p);
  const std::size_t count = p.size();
  dp.assign(count, 0.0);
  ddp.assign(count, 0.0);
  if (s <= 0.0) return;
  const double cot = x / s;
  const double inv_s2 = 1.0 / (s * s);
  for (int m = 0; m <= band; ++m) {
    const double mm = m;
    for (int l = m; l <= band; ++l) {
      const std::size_t t = tri(l, m);
      const double ll = l;
      const double d = (ll * x * p[t] - (l > m ? k.c[t] * p[tri(l - 1, m)] : 0.0)) / s;
      dp[t] = d;
      ddp[t] = -cot * d - (ll * (ll + 1.0) - mm * mm * inv_s2) * p[t];
    }
  }
}

// ---------------------------------------------------------------------------
// Construction

GridPtr SphereGrid::build(int n, int resolution) {
  // Grids are shared per (n, resolution) so that bodies built independently
  // on equal grids can be combined.
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::weak_ptr<const SphereGrid>> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({n, resolution});
    if (it != cache.end())
      if (auto g = it->second.lock()) return g;
  }
  GridPtr g = build_uncached(n, resolution);
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n, resolution}];
  if (auto existing = slot.lock()) return existing;
  slot = g;
  return g;
}

GridPtr SphereGrid::build_uncached(int n, int resolution) {
  if (n != 2 && n != 3)
    throw std::invalid_argument("unsupported dimension n=" + std::to_string(n) + " (need 2 or 3)");
  std::shared_ptr<SphereGrid> g(new SphereGrid());
  g->n_ = n;
  g->resolution_ = resolution;
  if (n == 2) {
    if (resolution < 16)
      throw std::invalid_argument("resolution " + std::to_string(resolution) + " below minimum 16 for n=2");
    if (resolution % 2 != 0)
      throw std::invalid_argument("resolution must be even for an antipodally closed circle grid");
    g->build_circle(resolution);
  } else {
    if (resolution < 8)
      throw std::invalid_argument("band limit " + std::to_string(resolution) + " below minimum 8 for n=3");
    g->build_sphere(resolution);
  }
  return g;
}

GridPtr build_grid(int n, int resolution) { return SphereGrid::build(n, resolution); }

void SphereGrid::build_circle(int count) {
  nodes_.resize(count);
  frames_.resize(count);
  antipode_.resize(count);
  weights_.assign(count, 2.0 * kPi / count);
  const int half = count / 2;
  for (int j = 0; j < half; ++j) {
    const double t = 2.0 * kPi * j / count;
    nodes_[j] = Vec3(std::cos(t), std::sin(t), 0.0);
    nodes_[j + half] = -nodes_[j];
  }
  // Exact axis points keep polygon vertices such as those of the square exact.
  for (int j = 0; j < count; ++j) {
    if ((4 * j) % count == 0) {
      const int quarter = 4 * j / count;
      const double c[4] = {1.0, 0.0, -1.0, 0.0};
      const double s[4] = {0.0, 1.0, 0.0, -1.0};
      nodes_[j] = Vec3(c[quarter], s[quarter], 0.0);
    }
  }
  for (int j = 0; j < count; ++j) {
    antipode_[j] = (j + half) % count;
    frames_[j][0] = Vec3(-nodes_[j].y(), nodes_[j].x(), 0.0);
    frames_[j][1] = Vec3::Zero();
  }
}

void SphereGrid::build_sphere(int band) {
  nlat_ = band + 1;
  nlon_ = 2 * band + 2;
  gauss_legendre(nlat_, lat_cos_, lat_weight_);
  lat_sin_.resize(nlat_);
  for (int j = 0; j < nlat_; ++j) lat_sin_[j] = std::sqrt((1.0 - lat_cos_[j]) * (1.0 + lat_cos_[j]));
  for (int j = 0; j < nlat_; ++j) lat_sin_[nlat_ - 1 - j] = lat_sin_[j];

  const std::size_t count = static_cast<std::size_t>(nlat_) * nlon_;
  nodes_.resize(count);
  frames_.resize(count);
  antipode_.resize(count);
  weights_.resize(count);
  std::vector<double> phi(nlon_), cphi(nlon_), sphi(nlon_);
  for (int k = 0; k < nlon_; ++k) {
    phi[k] = 2.0 * kPi * k / nlon_;
    cphi[k] = std::cos(phi[k]);
    sphi[k] = std::sin(phi[k]);
  }
  const int half_lon = nlon_ / 2;
  for (int j = 0; j < nlat_; ++j) {
    for (int k = 0; k < nlon_; ++k) {
      const std::size_t i = static_cast<std::size_t>(j) * nlon_ + k;
      const int ja = nlat_ - 1 - j;
      const int ka = (k + half_lon) % nlon_;
      antipode_[i] = static_cast<std::size_t>(ja) * nlon_ + ka;
      weights_[i] = lat_weight_[j] * 2.0 * kPi / nlon_;
      const double x = lat_cos_[j], s = lat_sin_[j];
      frames_[i][0] = Vec3(x * cphi[k], x * sphi[k], -s);
      frames_[i][1] = Vec3(-sphi[k], cphi[k], 0.0);
    }
  }
  // Nodes on the "first" half are computed, their antipodes negated.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t a = antipode_[i];
    if (i < a || (i == a)) {
      const int j = static_cast<int>(i / nlon_), k = static_cast<int>(i % nlon_);
      nodes_[i] = Vec3(lat_sin_[j] * cphi[k], lat_sin_[j] * sphi[k], lat_cos_[j]);
      nodes_[a] = -nodes_[i];
    }
  }

  lon_basis_.resize(nlon_, 2 * band + 1);
  for (int k = 0; k < nlon_; ++k) {
    lon_basis_(k, 0) = 1.0;
    for (int m = 1; m <= band; ++m) {
      lon_basis_(k, 2 * m - 1) = std::cos(m * phi[k]);
      lon_basis_(k, 2 * m) = std::sin(m * phi[k]);
    }
  }

  legendre_.resize(band + 1);
  legendre_d_.resize(band + 1);
  legendre_dd_.resize(band + 1);
  for (int m = 0; m <= band; ++m) {
    legendre_[m].resize(nlat_, band + 1 - m);
    legendre_d_[m].resize(nlat_, band + 1 - m);
    legendre_dd_[m].resize(nlat_, band + 1 - m);
  }
  std::vector<double> p, dp, ddp;
  for (int j = 0; j < nlat_; ++j) {
    legendre_jet(band, lat_cos_[j], lat_sin_[j], p, dp, ddp);
    for (int m = 0; m <= band; ++m) {
      const double f = (m > 0) ? std::sqrt(2.0) : 1.0;
      for (int l = m; l <= band; ++l) {
        legendre_[m](j, l - m) = f * p[tri(l, m)];
        legendre_d_[m](j, l - m) = f * dp[tri(l, m)];
        legendre_dd_[m](j, l - m) = f * ddp[tri(l, m)];
      }
    }
  }
}

double SphereGrid::measure() const { return n_ == 2 ? 2.0 * kPi : 4.0 * kPi; }

// ---------------------------------------------------------------------------
// Spectral transforms

std::size_t SphereGrid::spectral_size() const {
  if (n_ == 2) return static_cast<std::size_t>(resolution_) + 1;
  return static_cast<std::size_t>(resolution_ + 1) * (resolution_ + 1);
}

int SphereGrid::degree_of(std::size_t index) const {
  if (n_ == 2) return static_cast<int>((index + 1) / 2);
  int l = static_cast<int>(std::sqrt(static_cast<double>(index)));
  while (static_cast<std::size_t>(l) * l > index) --l;
  while (static_cast<std::size_t>(l + 1) * (l + 1) <= index) ++l;
  return l;
}

double SphereGrid::laplacian_eigenvalue(int k) const { return -static_cast<double>(k) * (k + n_ - 2); }

std::vector<double> SphereGrid::analyze(std::span<const double> values) const {
  std::vector<double> c(spectral_size(), 0.0);
  if (n_ == 2) {
    const int N = resolution_;
    const int K = N / 2;
    std::vector<double> in(values.begin(), values.end());
    std::vector<Complex> out;
    thread_fft().fwd(out, in);
    out.resize(N);
    c[0] = out[0].real() / N;
    for (int k = 1; k < K; ++k) {
      c[2 * k - 1] = 2.0 * out[k].real() / N;
      c[2 * k] = -2.0 * out[k].imag() / N;
    }
    c[2 * K - 1] = out[K].real() / N;
    c[2 * K] = 0.0;
    return c;
  }
  const int L = resolution_;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> V(
      values.data(), nlat_, nlon_);
  Eigen::MatrixXd A = V * lon_basis_ * (2.0 * kPi / nlon_);
  for (int j = 0; j < nlat_; ++j) A.row(j) *= lat_weight_[j];
  for (int m = 0; m <= L; ++m) {
    if (m == 0) {
      const Eigen::VectorXd a = legendre_[0].transpose() * A.col(0);
      for (int l = 0; l <= L; ++l) c[l * l + l] = a(l);
    } else {
      const Eigen::VectorXd ac = legendre_[m].transpose() * A.col(2 * m - 1);
      const Eigen::VectorXd as = legendre_[m].transpose() * A.col(2 * m);
      for (int l = m; l <= L; ++l) {
        c[l * l + l + m] = ac(l - m);
        c[l * l + l - m] = as(l - m);
      }
    }
  }
  return c;
}

namespace {

// G holds, per latitude, the coefficient of each longitude basis column.
void legendre_synthesis(int L, const std::vector<Eigen::MatrixXd>& table, std::span<const double> c,
                        Eigen::MatrixXd& G, int phi_order) {
  const int nlat = static_cast<int>(table[0].rows());
  G.setZero(nlat, 2 * L + 1);
  for (int m = 0; m <= L; ++m) {
    Eigen::VectorXd ac(L + 1 - m), as(L + 1 - m);
    for (int l = m; l <= L; ++l) {
      ac(l - m) = c[l * l + l + m];
      as(l - m) = (m > 0) ? c[l * l + l - m] : 0.0;
    }
    const Eigen::VectorXd gc = table[m] * ac;
    if (m == 0) {
      if (phi_order == 0) G.col(0) = gc;
      continue;
    }
    const Eigen::VectorXd gs = table[m] * as;
    const double mm = m;
    switch (phi_order) {
      case 0:
        G.col(2 * m - 1) = gc;
        G.col(2 * m) = gs;
        break;
      case 1:  // ∂φ: cos -> -m sin, sin -> m cos
        G.col(2 * m - 1) = mm * gs;
        G.col(2 * m) = -mm * gc;
        break;
      case 2:
        G.col(2 * m - 1) = -mm * mm * gc;
        G.col(2 * m) = -mm * mm * gs;
        break;
    }
  }
}

}  // namespace

std::vector<double> SphereGrid::synthesize(std::span<const double> coeffs) const {
  std::vector<double> v(size());
  if (n_ == 2) {
    const int N = resolution_;
    const int K = N / 2;
    std::vector<Complex> spec(N, Complex(0.0, 0.0));
    spec[0] = Complex(coeffs[0] * N, 0.0);
    for (int k = 1; k < K; ++k) {
      spec[k] = 0.5 * N * Complex(coeffs[2 * k - 1], -coeffs[2 * k]);
      spec[N - k] = std::conj(spec[k]);
    }
    spec[K] = Complex(coeffs[2 * K - 1] * N, 0.0);
    std::vector<Complex> out;
    thread_fft().inv(out, spec);
    for (int j = 0; j < N; ++j) v[j] = out[j].real();
    return v;
  }
  Eigen::MatrixXd G;
  legendre_synthesis(resolution_, legendre_, coeffs, G, 0);
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> V(v.data(), nlat_, nlon_);
  V = G * lon_basis_.transpose();
  return v;
}

JetField SphereGrid::jet(std::span<const double> values) const {
  for (double x : values)
    if (!std::isfinite(x)) throw std::invalid_argument("jet: non-finite input");
  JetField out;
  out.grid = shared_from_this();
  out.value.assign(values.begin(), values.end());
  out.gradient.assign(size(), Vec2::Zero());
  out.hessian.assign(size(), Mat2::Zero());
  if (n_ == 2) {
    const int N = resolution_;
    const int K = N / 2;
    std::vector<double> in(values.begin(), values.end());
    std::vector<Complex> spec;
    thread_fft().fwd(spec, in);
    spec.resize(N);
    std::vector<Complex> d1(N), d2(N);
    for (int j = 0; j < N; ++j) {
      const double k = (j <= K) ? j : j - N;
      d1[j] = (j == K) ? Complex(0.0, 0.0) : Complex(0.0, k) * spec[j];
      d2[j] = -k * k * spec[j];
    }
    std::vector<Complex> r1, r2;
    thread_fft().inv(r1, d1);
    thread_fft().inv(r2, d2);
    for (int j = 0; j < N; ++j) {
      out.gradient[j](0) = r1[j].real();
      out.hessian[j](0, 0) = r2[j].real();
    }
    return out;
  }
  const std::vector<double> c = analyze(values);
  const int L = resolution_;
  Eigen::MatrixXd G;
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  auto synth = [&](const std::vector<Eigen::MatrixXd>& table, int phi_order) {
    legendre_synthesis(L, table, c, G, phi_order);
    RowMat V = G * lon_basis_.transpose();
    return V;
  };
  const RowMat ht = synth(legendre_d_, 0);
  const RowMat htt = synth(legendre_dd_, 0);
  const RowMat hp = synth(legendre_, 1);
  const RowMat htp = synth(legendre_d_, 1);
  const RowMat hpp = synth(legendre_, 2);
  for (int j = 0; j < nlat_; ++j) {
    const double s = lat_sin_[j];
    const double cot = lat_cos_[j] / s;
    for (int k = 0; k < nlon_; ++k) {
      const std::size_t i = static_cast<std::size_t>(j) * nlon_ + k;
      out.gradient[i] = Vec2(ht(j, k), hp(j, k) / s);
      const double h12 = (htp(j, k) - cot * hp(j, k)) / s;
      out.hessian[i] << htt(j, k), h12, h12, hpp(j, k) / (s * s) + cot * ht(j, k);
    }
  }
  return out;
}

std::vector<double> SphereGrid::laplacian(std::span<const double> values) const {
  std::vector<double> c = analyze(values);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= laplacian_eigenvalue(degree_of(i));
  return synthesize(c);
}

// ---------------------------------------------------------------------------
// Point evaluation

double SphereGrid::point_value(std::span<const double> c, const Vec3& x) const {
  if (n_ == 2) {
    const int K = resolution_ / 2;
    const double t = std::atan2(x.y(), x.x());
    const Complex step(std::cos(t), std::sin(t));
    Complex z(1.0, 0.0);
    double v = c[0];
    for (int k = 1; k <= K; ++k) {
      z *= step;
      if (k % 64 == 0) z = Complex(std::cos(k * t), std::sin(k * t));
      v += c[2 * k - 1] * z.real() + c[2 * k] * z.imag();
    }
    return v;
  }
  const int L = resolution_;
  const double ct = std::clamp(x.z(), -1.0, 1.0);
  const double st = std::hypot(x.x(), x.y());
  const double phi = std::atan2(x.y(), x.x());
  thread_local std::vector<double> p;
  legendre_values(legendre_coeffs(L), L, ct, st > 0.0 ? st : 0.0, p);
  double v = 0.0;
  const Complex step(std::cos(phi), std::sin(phi));
  Complex z(1.0, 0.0);
  for (int m = 0; m <= L; ++m) {
    if (m > 0) z *= step;
    const double f = (m > 0) ? std::sqrt(2.0) : 1.0;
    double sc = 0.0, ss = 0.0;
    for (int l = m; l <= L; ++l) {
      const double pl = p[tri(l, m)];
      sc += c[l * l + l + m] * pl;
      if (m > 0) ss += c[l * l + l - m] * pl;
    }
    v += f * (sc * z.real() + ss * z.imag());
  }
  return v;
}

PointJet SphereGrid::point_jet(std::span<const double> c, const Vec3& x) const {
  if (n_ == 2) return point_jet_circle(c, x);
  if (std::hypot(x.x(), x.y()) < kPoleGuard) return point_jet_fd(c, x);
  return point_jet_sphere(c, x);
}

PointJet SphereGrid::point_jet_circle(std::span<const double> c, const Vec3& x) const {
  const int K = resolution_ / 2;
  const double t = std::atan2(x.y(), x.x());
  const Complex step(std::cos(t), std::sin(t));
  Complex z(1.0, 0.0);
  double h = c[0], h1 = 0.0, h2 = 0.0;
  for (int k = 1; k <= K; ++k) {
    z *= step;
    if (k % 64 == 0) z = Complex(std::cos(k * t), std::sin(k * t));
    const double a = c[2 * k - 1], b = c[2 * k];
    const double kk = k;
    h += a * z.real() + b * z.imag();
    h1 += kk * (-a * z.imag() + b * z.real());
    h2 += -kk * kk * (a * z.real() + b * z.imag());
  }
  const Vec3 u(std::cos(t), std::sin(t), 0.0);
  const Vec3 e(-u.y(), u.x(), 0.0);
  PointJet j;
  j.value = h;
  j.gradient = h * u + h1 * e;
  j.hessian = (h2 + h) * e * e.transpose();
  return j;
}

PointJet SphereGrid::point_jet_sphere(std::span<const double> c, const Vec3& x) const {
  const int L = resolution_;
  const double ct = std::clamp(x.z(), -1.0, 1.0);
  const double st = std::hypot(x.x(), x.y());
  const double phi = std::atan2(x.y(), x.x());
  thread_local std::vector<double> p, dp, ddp;
  legendre_jet(L, ct, st, p, dp, ddp);
  double h = 0, ht = 0, htt = 0, hp = 0, htp = 0, hpp = 0;
  const Complex step(std::cos(phi), std::sin(phi));
  Complex z(1.0, 0.0);
  for (int m = 0; m <= L; ++m) {
    if (m > 0) z *= step;
    const double f = (m > 0) ? std::sqrt(2.0) : 1.0;
    double c0 = 0, c1 = 0, c2 = 0, s0 = 0, s1 = 0, s2 = 0;
    for (int l = m; l <= L; ++l) {
      const std::size_t t = tri(l, m);
      const double a = c[l * l + l + m];
      c0 += a * p[t];
      c1 += a * dp[t];
      c2 += a * ddp[t];
      if (m > 0) {
        const double b = c[l * l + l - m];
        s0 += b * p[t];
        s1 += b * dp[t];
        s2 += b * ddp[t];
      }
    }
    const double cm = z.real(), sm = z.imag(), mm = m;
    h += f * (c0 * cm + s0 * sm);
    ht += f * (c1 * cm + s1 * sm);
    htt += f * (c2 * cm + s2 * sm);
    hp += f * mm * (-c0 * sm + s0 * cm);
    htp += f * mm * (-c1 * sm + s1 * cm);
    hpp += -f * mm * mm * (c0 * cm + s0 * sm);
  }
  const double cot = ct / st;
  Vec3 u(st * std::cos(phi), st * std::sin(phi), ct);
  Vec3 et(ct * std::cos(phi), ct * std::sin(phi), -st);
  Vec3 ep(-std::sin(phi), std::cos(phi), 0.0);
  Mat2 w;
  const double w12 = (htp - cot * hp) / st;
  w << htt + h, w12, w12, hpp / (st * st) + cot * ht + h;
  PointJet j;
  j.value = h;
  j.gradient = h * u + ht * et + (hp / st) * ep;
  j.hessian = outer_frame(et, ep, w, 2);
  return j;
}

PointJet SphereGrid::point_jet_fd(std::span<const double> c, const Vec3& x) const {
  // Tangent frame at x independent of spherical coordinates.
  Vec3 u = x.normalized();
  Vec3 a = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 t1 = (a - a.dot(u) * u).normalized();
  Vec3 t2 = u.cross(t1);
  auto H = [&](double s1, double s2) {
    const Vec3 y = u + s1 * t1 + s2 * t2;
    const double r = y.norm();
    return r * point_value(c, y / r);
  };
  const double d = 1e-3;
  const double h0 = H(0, 0);
  // Fourth-order central differences.
  auto d1 = [&](int axis) {
    auto f = [&](double s) { return axis == 0 ? H(s, 0) : H(0, s); };
    return (8.0 * (f(d) - f(-d)) - (f(2 * d) - f(-2 * d))) / (12.0 * d);
  };
  auto d2 = [&](int axis) {
    auto f = [&](double s) { return axis == 0 ? H(s, 0) : H(0, s); };
    return (-f(2 * d) + 16.0 * f(d) - 30.0 * h0 + 16.0 * f(-d) - f(-2 * d)) / (12.0 * d * d);
  };
  const double g1 = d1(0), g2 = d1(1);
  const double h11 = d2(0), h22 = d2(1);
  const double h12 = (H(d, d) - H(d, -d) - H(-d, d) + H(-d, -d)) / (4.0 * d * d);
  Mat2 w;
  w << h11, h12, h12, h22;
  PointJet j;
  j.value = h0;
  j.gradient = h0 * u + g1 * t1 + g2 * t2;
  j.hessian = outer_frame(t1, t2, w, 2);
  return j;
}

PointJet SphereGrid::node_point_jet(const JetField& jet, std::size_t i) const {
  PointJet j;
  j.value = jet.value[i];
  const int dim = n_ - 1;
  j.gradient = jet.value[i] * nodes_[i] + jet.gradient[i](0) * frames_[i][0];
  if (dim == 2) j.gradient += jet.gradient[i](1) * frames_[i][1];
  j.hessian = outer_frame(frames_[i][0], frames_[i][1], jet.shifted_hessian(i), dim);
  return j;
}

void SphereGrid::frame_at(const Vec3& x, Vec3& t1, Vec3& t2) const {
  if (n_ == 2) {
    t1 = Vec3(-x.y(), x.x(), 0.0).normalized();
    t2 = Vec3::Zero();
    return;
  }
  const double st = std::hypot(x.x(), x.y());
  if (st < kPoleGuard) {
    Vec3 a = Vec3::UnitX();
    t1 = (a - a.dot(x) * x).normalized();
    t2 = x.cross(t1);
    return;
  }
  const double phi = std::atan2(x.y(), x.x());
  const double ct = x.z();
  t1 = Vec3(ct * std::cos(phi), ct * std::sin(phi), -st).normalized();
  t2 = Vec3(-std::sin(phi), std::cos(phi), 0.0);
}

// ---------------------------------------------------------------------------
// Misc

std::vector<double> SphereGrid::harmonic(int k, int index) const {
  if (k < 0 || index < 0 || index > 2 * k) throw std::invalid_argument("harmonic: bad (k, index)");
  std::vector<double> c(spectral_size(), 0.0);
  if (n_ == 2) {
    if (k > resolution_ / 2) throw std::invalid_argument("harmonic: degree above resolution");
    if (k == 0)
      c[0] = 1.0;
    else if (index % 2 == 0)
      c[2 * k - 1] = 1.0;
    else
      c[2 * k] = 1.0;
    return synthesize(c);
  }
  if (k > resolution_) throw std::invalid_argument("harmonic: degree above band limit");
  // index 0 -> m = 0, then m = 1 cos, m = 1 sin, ...
  int m = 0;
  if (index > 0) m = (index % 2 == 1) ? (index + 1) / 2 : -(index / 2);
  c[k * k + k + m] = 1.0;
  return synthesize(c);
}

double SphereGrid::spectral_tail(std::span<const double> values) const {
  const std::vector<double> c = analyze(values);
  double total = 0.0, tail = 0.0;
  const int cutoff = (n_ == 2) ? (3 * (resolution_ / 2)) / 4 : (3 * resolution_) / 4;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double e = c[i] * c[i];
    total += e;
    if (degree_of(i) > cutoff) tail += e;
  }
  double ratio = total > 0.0 ? std::sqrt(tail / total) : 0.0;
  if (n_ == 3) {
    const std::vector<double> back = synthesize(c);
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < back.size(); ++i) {
      diff = std::max(diff, std::abs(back[i] - values[i]));
      scale = std::max(scale, std::abs(values[i]));
    }
    if (scale > 0.0) ratio += diff / scale;
  }
  return ratio;
}

std::vector<double> SphereGrid::symmetrize(std::span<const double> values) const {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t a = antipode_[i];
    const double lo = std::min(i, a) == i ? values[i] : values[a];
    const double hi = std::min(i, a) == i ? values[a] : values[i];
    out[i] = 0.5 * (lo + hi);
  }
  return out;
}

bool SphereGrid::is_even(std::span<const double> values) const {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] != values[antipode_[i]]) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Free functions

JetField jet(const ScalarField& h) {
  JetField j = h.grid()->jet(h.values());
  j.grid = h.grid();
  return j;
}

double integrate(const SphereGrid& grid, std::span<const double> f) {
  const auto& w = grid.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
  return s;
}

double integrate(const ScalarField& f) { return integrate(*f.grid(), f.values()); }

ScalarField laplace_beltrami(const ScalarField& f) {
  return ScalarField(f.grid(), f.grid()->laplacian(f.values()));
}

}  // namespace dmk
