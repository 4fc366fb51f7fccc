#pragma once
// Lambda^2 TM machinery over an oriented orthonormal frame e1..e4 with
// signs (+,+,-,-):
//   bivector metric   g(ei^ej, ek^el) = (1/2) det [[g_ik, g_il],[g_jk, g_jl]]
//   Hodge star        *(e1^e2)=e3^e4, *(e1^e3)=e2^e4, *(e1^e4)=-e2^e3
//   ASD frame         s1=e12-e34, s2=e13-e24, s3=e14+e23   (signature +--)
//   SD  frame         sbar_a with the opposite interior signs
//   correspondence    g(K_sigma X, Y) = 2 g(sigma, X^Y)
//   curvature op      g(Rop(X^Y), Z^T) = -g(R(X,Y)Z, T)
//   action            g(R(a)b, c) = -g(Rop(b x c), a),  b,c in Lambda^-
//
// Bivectors are stored as 6-vectors over the frame-pair basis
// (e12, e13, e14, e23, e24, e34); fiber vectors are Lambda^- components in
// the (s1,s2,s3) frame.  The fiber Lorentz metric is <,> = -g_biv, i.e.
// diag(-1,+1,+1) on (s1,s2,s3).

#include <Eigen/Dense>

#include "hyptwist/geometry.hpp"

namespace hyptwist::biv {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using geom::Mat4;
using geom::Vec4;

// frame-pair index table
inline constexpr int kPairI[6] = {0, 0, 0, 1, 1, 2};
inline constexpr int kPairJ[6] = {1, 2, 3, 2, 3, 3};

// interior signs of the ASD/SD frames:  g_biv(s_a,s_a) = eta_a = (+1,-1,-1)
inline constexpr std::array<double, 3> kEta = {1, -1, -1};
// fiber Lorentz metric signs: <s_a, s_a> = eps_a = (-1,+1,+1)
inline constexpr std::array<double, 3> kEpsFiber = {-1, 1, 1};

// s_a and sbar_a as antisymmetric coefficient matrices over the frame
extern const std::array<Mat4, 3> kSMat;     // s1, s2, s3
extern const std::array<Mat4, 3> kSBarMat;  // sbar1, sbar2, sbar3
// K_{s_a} in the frame basis
extern const std::array<Mat4, 3> kKMat;
// change of basis: column c of kSBasis = c-th element of (sbar1..3, s1..3)
// written in the frame-pair basis; kSBasisInv is its inverse
extern const Mat6 kSBasis;
extern const Mat6 kSBasisInv;
// bivector Gram matrix in the frame-pair basis (diagonal)
extern const Vec6 kPairGram;

Vec6 wedge(const Vec4& aframe, const Vec4& bframe);
double inner(const Vec6& a, const Vec6& b);
Vec6 hodge(const Vec6& a);
Vec6 from_fiber(const Vec3& v);   // sum v^a s_a
Vec3 fiber_part(const Vec6& a);   // Lambda^- components of a
Vec6 sd_project(const Vec6& a);   // Lambda^+ part as a bivector

// K_sigma in the frame basis for any bivector sigma
Mat4 endo_from_bivector(const Vec6& sigma);

// Lorentzian fiber cross product; matches the component display
// (y3 V2 - y2 V3, y3 V1 - y1 V3, y1 V2 - y2 V1).
Vec3 cross(const Vec3& s, const Vec3& v);

struct CurvatureOperator {
  Mat6 M;          // operator matrix in the ordered basis (sbar, s)
  double tau = 0;  // trace of M (block traces agree by the first Bianchi identity)
  Mat3 Wplus, Wminus;   // traceless diagonal blocks
  Mat3 Bpm, Bmp;        // off-diagonal blocks (traceless Ricci part)
  double selfadjoint_residual = 0;

  double tau_over_6() const { return tau / 6.0; }
  double wminus_norm() const { return Wminus.norm(); }
  double wplus_norm() const { return Wplus.norm(); }
  double b_norm() const { return std::sqrt(Bpm.squaredNorm() + Bmp.squaredNorm()); }
  Mat6 reassemble() const;
  // apply to a bivector given in the frame-pair basis
  Vec6 apply(const Vec6& a) const;
};

CurvatureOperator curvature_operator(const geom::PointCtx& ctx);

// R(a)b via the duality  g(R(a)b, c) = -g(Rop(b x c), a)
Vec3 curvature_action(const CurvatureOperator& op, const Vec6& a, const Vec3& b);

}  // namespace hyptwist::biv
