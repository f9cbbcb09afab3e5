#include "dmk/support_model.hpp"

#include <cmath>
#include <stdexcept>

namespace dmk {

std::vector<double> SupportModel::node_values(const SphereGrid& grid) const {
  std::vector<double> v(grid.size());
  const bool sym = even();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t a = grid.antipode(i);
    if (sym && a < i) {
      v[i] = v[a];
    } else {
      v[i] = value(grid.node(i));
    }
  }
  return v;
}

namespace {

// Projector onto the tangent space of S^{n-1} at x (in the plane z = 0 for n = 2).
Mat3 tangent_projector(const Vec3& x, int n) {
  Mat3 P = Mat3::Identity() - x * x.transpose();
  if (n == 2) P(2, 2) = 0.0, P(0, 2) = P(2, 0) = P(1, 2) = P(2, 1) = 0.0;
  return P;
}

class SpectralModel final : public SupportModel {
 public:
  SpectralModel(GridPtr grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    coeffs_ = grid_->analyze(values_);
    even_ = grid_->is_even(values_);
  }
  double value(const Vec3& x) const override { return grid_->point_value(coeffs_, x); }
  PointJet jet(const Vec3& x) const override { return grid_->point_jet(coeffs_, x); }
  bool even() const override { return even_; }
  std::vector<double> node_values(const SphereGrid& grid) const override {
    if (&grid == grid_.get()) return values_;
    return SupportModel::node_values(grid);
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
  std::vector<double> coeffs_;
  bool even_ = false;
};

class EllipsoidModel final : public SupportModel {
 public:
  explicit EllipsoidModel(const Vec3& a) : a2_(a.cwiseProduct(a)) {}
  double value(const Vec3& x) const override { return std::sqrt(x.dot(a2_.cwiseProduct(x))); }
  PointJet jet(const Vec3& x) const override {
    const Vec3 ax = a2_.cwiseProduct(x);
    const double H = std::sqrt(x.dot(ax));
    PointJet j;
    j.value = H;
    j.gradient = ax / H;
    j.hessian = Mat3(a2_.asDiagonal()) / H - ax * ax.transpose() / (H * H * H);
    return j;
  }
  bool even() const override { return true; }

 private:
  Vec3 a2_;
};

class BallModel final : public SupportModel {
 public:
  BallModel(double r, int n) : r_(r), n_(n) {}
  double value(const Vec3&) const override { return r_; }
  PointJet jet(const Vec3& x) const override {
    PointJet j;
    j.value = r_;
    j.gradient = r_ * x;
    j.hessian = r_ * tangent_projector(x, n_);
    return j;
  }
  bool even() const override { return true; }

 private:
  double r_;
  int n_;
};

class PowerMeanModel final : public SupportModel {
 public:
  PowerMeanModel(std::vector<std::pair<double, ModelPtr>> terms, double p) : terms_(std::move(terms)), p_(p) {
    even_ = true;
    for (const auto& t : terms_) even_ = even_ && t.second->even();
  }
  double value(const Vec3& x) const override {
    if (p_ == 0.0) {
      double s = 0.0;
      for (const auto& [w, m] : terms_) s += w * std::log(m->value(x));
      return std::exp(s);
    }
    double s = 0.0;
    for (const auto& [w, m] : terms_) s += w * std::pow(m->value(x), p_);
    return std::pow(s, 1.0 / p_);
  }
  PointJet jet(const Vec3& x) const override {
    PointJet out;
    if (p_ == 0.0) {
      double logh = 0.0;
      Vec3 g = Vec3::Zero();
      Mat3 hs = Mat3::Zero();
      for (const auto& [w, m] : terms_) {
        const PointJet j = m->jet(x);
        logh += w * std::log(j.value);
        const Vec3 gi = j.gradient / j.value;
        g += w * gi;
        hs += w * (j.hessian / j.value - gi * gi.transpose());
      }
      const double H = std::exp(logh);
      out.value = H;
      out.gradient = H * g;
      out.hessian = H * (g * g.transpose() + hs);
      return out;
    }
    double S = 0.0;
    Vec3 dS = Vec3::Zero();
    Mat3 d2S = Mat3::Zero();
    for (const auto& [w, m] : terms_) {
      const PointJet j = m->jet(x);
      const double hp1 = std::pow(j.value, p_ - 1.0);
      S += w * hp1 * j.value;
      dS += w * p_ * hp1 * j.gradient;
      d2S += w * p_ * (hp1 * j.hessian + (p_ - 1.0) * hp1 / j.value * j.gradient * j.gradient.transpose());
    }
    const double H = std::pow(S, 1.0 / p_);
    const double a = H / (p_ * S);  // (1/p) S^{1/p - 1}
    out.value = H;
    out.gradient = a * dS;
    out.hessian = a * d2S + a * (1.0 / p_ - 1.0) / S * dS * dS.transpose();
    return out;
  }
  bool even() const override { return even_; }
  std::vector<double> node_values(const SphereGrid& grid) const override {
    std::vector<double> acc(grid.size(), 0.0);
    for (const auto& [w, m] : terms_) {
      const std::vector<double> v = m->node_values(grid);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += (p_ == 0.0) ? w * std::log(v[i]) : w * std::pow(v[i], p_);
    }
    for (double& a : acc) a = (p_ == 0.0) ? std::exp(a) : std::pow(a, 1.0 / p_);
    return acc;
  }

 private:
  std::vector<std::pair<double, ModelPtr>> terms_;
  double p_;
  bool even_ = true;
};

class ScaledModel final : public SupportModel {
 public:
  ScaledModel(ModelPtr base, double c) : base_(std::move(base)), c_(c) {}
  double value(const Vec3& x) const override { return c_ * base_->value(x); }
  PointJet jet(const Vec3& x) const override {
    PointJet j = base_->jet(x);
    j.value *= c_;
    j.gradient *= c_;
    j.hessian *= c_;
    return j;
  }
  bool even() const override { return base_->even(); }
  std::vector<double> node_values(const SphereGrid& grid) const override {
    std::vector<double> v = base_->node_values(grid);
    for (double& x : v) x *= c_;
    return v;
  }

 private:
  ModelPtr base_;
  double c_;
};

class ExpPerturbedModel final : public SupportModel {
 public:
  ExpPerturbedModel(ModelPtr base, GridPtr grid, std::span<const double> g, double t)
      : base_(std::move(base)), grid_(std::move(grid)), g_values_(g.begin(), g.end()), t_(t) {
    g_coeffs_ = grid_->analyze(g_values_);
    even_ = base_->even() && grid_->is_even(g_values_);
  }
  double value(const Vec3& x) const override {
    return base_->value(x) * std::exp(t_ * grid_->point_value(g_coeffs_, x));
  }
  PointJet jet(const Vec3& x) const override {
    const PointJet b = base_->jet(x);
    const PointJet gj = grid_->point_jet(g_coeffs_, x);
    // Degree-0 extension G of g: ∇G = ∇_S g, D²G = P∇²gP − x∇gᵀ − ∇g xᵀ.
    const double g = gj.value;
    const Vec3 dg = gj.gradient - g * x;
    const Mat3 P = tangent_projector(x, grid_->dimension());
    const Mat3 d2g = gj.hessian - g * P - x * dg.transpose() - dg * x.transpose();
    const double E = std::exp(t_ * g);
    const Vec3 dE = t_ * E * dg;
    const Mat3 d2E = t_ * E * d2g + t_ * t_ * E * dg * dg.transpose();
    PointJet j;
    j.value = b.value * E;
    j.gradient = E * b.gradient + b.value * dE;
    j.hessian = E * b.hessian + b.gradient * dE.transpose() + dE * b.gradient.transpose() + b.value * d2E;
    return j;
  }
  std::vector<double> node_values(const SphereGrid& grid) const override {
    if (&grid != grid_.get()) return SupportModel::node_values(grid);
    std::vector<double> v = base_->node_values(grid);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= std::exp(t_ * g_values_[i]);
    return v;
  }
  bool even() const override { return even_; }

 private:
  ModelPtr base_;
  GridPtr grid_;
  std::vector<double> g_values_;
  std::vector<double> g_coeffs_;
  double t_;
  bool even_ = false;
};

}  // namespace

ModelPtr spectral_model(GridPtr grid, std::vector<double> values) {
  return std::make_shared<SpectralModel>(std::move(grid), std::move(values));
}

ModelPtr ellipsoid_model(const Vec3& semiaxes) { return std::make_shared<EllipsoidModel>(semiaxes); }

ModelPtr ball_model(double r, int n) { return std::make_shared<BallModel>(r, n); }

ModelPtr power_mean_model(std::vector<std::pair<double, ModelPtr>> terms, double p) {
  if (p < 0.0) throw std::invalid_argument("power_mean_model: p < 0");
  return std::make_shared<PowerMeanModel>(std::move(terms), p);
}

ModelPtr scaled_model(ModelPtr base, double c) { return std::make_shared<ScaledModel>(std::move(base), c); }

ModelPtr exp_perturbed_model(ModelPtr base, GridPtr grid, std::span<const double> g_values, double t) {
  return std::make_shared<ExpPerturbedModel>(std::move(base), std::move(grid), g_values, t);
}

}  // namespace dmk
