#pragma once
// Pointwise semi-Riemannian machinery on a single R^4 chart with neutral
// signature (+,+,-,-).
//
// Conventions, fixed project-wide:
//   curvature    R(X,Y) = D_X D_Y - D_Y D_X - D_[X,Y]
//   Ricci(X,Y)   = trace of Z -> R(Z,X)Y
//   tau          = g-trace of Ricci
// The contraction sign is calibrated so that the conformal space form with
// kappa = 1 has tau = +12 (asserted in tests).
//
// All first and second partials of the metric, and first partials of the
// orthonormal frame, are exact symbolic derivatives from the expression DSL;
// finite differences appear only in test oracles.

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <stdexcept>
#include <string>

#include "hyptwist/expr.hpp"

namespace hyptwist::geom {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point4 {
  std::array<double, 4> x{0, 0, 0, 0};
  Vec4 vec() const { return Vec4(x[0], x[1], x[2], x[3]); }
};

struct ChartBounds {
  std::array<double, 4> lo{-1, -1, -1, -1};
  std::array<double, 4> hi{1, 1, 1, 1};
  bool contains(const Point4& p, double slack = 1e-12) const;
  Point4 center() const;
};

// frame signs of the neutral signature, in frame order
inline constexpr std::array<double, 4> kFrameSign = {1, 1, -1, -1};

struct MetricEval {
  Mat4 g;
  Mat4 ginv;
};

struct Christoffels {
  // G[k][i][j] = Gamma^k_{ij}
  double G[4][4][4];
};

struct RiemannTensor {
  // up[l][k][i][j]:  R(d_i, d_j) d_k = up[l][k][i][j] d_l
  // low[i][j][k][l] = g( R(d_i,d_j) d_k , d_l )
  double up[4][4][4][4];
  double low[4][4][4][4];
};

struct CurvatureSummary {
  Mat4 ricci;
  double tau = 0;
  double einstein_residual = 0;  // Frobenius norm of Ric - (tau/4) g
  double ricci_asymmetry = 0;
};

struct FrameEval {
  // E.col(a) = coordinate components of frame vector e_a
  Mat4 E;
};

struct FrameConnection {
  // A[i](d,c):  D_{d_i} e_c = sum_d A[i](d,c) e_d
  // c[i](a,b) = g_biv(D_{d_i} s_a, s_b)   (Lambda^- connection coefficients)
  std::array<Mat4, 4> A;
  std::array<Eigen::Matrix3d, 4> c;
};

// Everything the downstream modules need at one point, evaluated once.
struct PointCtx {
  Point4 p;
  Mat4 g, ginv;
  double dg[4][4][4];        // dg[i][j][k] = d_k g_ij
  double ddg[4][4][4][4];    // ddg[i][j][k][l] = d_l d_k g_ij
  Christoffels Gamma;
  double dGamma[4][4][4][4];  // [k][i][j][l] = d_l Gamma^k_{ij}
  RiemannTensor R;
  FrameEval frame;
  double dE[4][4][4];  // dE[a][i][k] = d_k (e_a)^i
  FrameConnection conn;
};

class MetricSpec {
 public:
  // gij must be symmetric (entries are shared, (i,j) and (j,i) alias).
  MetricSpec(std::array<std::array<expr::ScalarField, 4>, 4> gij, ChartBounds chart,
             std::string name);

  const ChartBounds& chart() const { return chart_; }
  const std::string& name() const { return name_; }
  const std::string& descriptor() const { return descriptor_; }

  const expr::ScalarField& g_field(int i, int j) const { return *gf_[i][j]; }

  MetricEval metric_at(const Point4& p) const;
  Christoffels christoffel_at(const Point4& p) const;
  RiemannTensor riemann_at(const Point4& p) const;
  CurvatureSummary curvature_summary(const Point4& p) const;
  FrameEval orthonormal_frame(const Point4& p) const;

  PointCtx context_at(const Point4& p) const;

  // (D_X J)(Y) = D_X(JY) - J(D_X Y) for an endomorphism field given as
  // coordinate-basis component fields J[i][j] = J^i_j.
  Mat4 endo_covariant_derivative(const std::array<std::array<expr::ScalarField, 4>, 4>& J,
                                 const Vec4& X, const Point4& p) const;
  Mat4 endo_covariant_derivative(const std::array<std::array<expr::ScalarField, 4>, 4>& J,
                                 const Vec4& X, const PointCtx& ctx) const;

  // Coordinate-component fields of the endomorphism K_{s_a} attached to the
  // orthonormal frame (a = 0,1,2); built symbolically on first use.
  const std::array<std::array<expr::ScalarField, 4>, 4>& ks_field(int a) const;

  // symbolic frame components (e_a)^i and their use by the petean module
  const expr::ScalarField& frame_field(int a, int i) const { return *Ef_[a][i]; }

 private:
  void build_frame_symbolic();
  void check_point(const Point4& p) const;

  std::shared_ptr<const expr::ScalarField> gf_[4][4];
  std::shared_ptr<const expr::ScalarField> Ef_[4][4];  // [a][i]
  mutable std::array<std::shared_ptr<const std::array<std::array<expr::ScalarField, 4>, 4>>, 3>
      ksf_{};
  mutable std::mutex ks_mu_;
  ChartBounds chart_;
  std::string name_;
  std::string descriptor_;
};

// Signature check helper: eigenvalue signs of a symmetric 4x4 must be
// (+,+,-,-); throws GeometryError otherwise.
void check_neutral_signature(const Mat4& g, const Point4& p);

// frame components of a coordinate vector: Xf_a = eps_a g(X, e_a)
Vec4 to_frame(const PointCtx& ctx, const Vec4& Xcoord);
Vec4 from_frame(const PointCtx& ctx, const Vec4& Xframe);

}  // namespace hyptwist::geom
