#include "hyptwist/geometry.hpp"

#include <cmath>
#include <sstream>

#include "hyptwist/bivector.hpp"

namespace hyptwist::geom {

namespace {

using expr::NodeRef;
using expr::ScalarField;

std::string fmt_point(const Point4& p) {
  std::ostringstream os;
  os << "(" << p.x[0] << "," << p.x[1] << "," << p.x[2] << "," << p.x[3] << ")";
  return os.str();
}

}  // namespace

bool ChartBounds::contains(const Point4& p, double slack) const {
  for (int i = 0; i < 4; ++i)
    if (!(p.x[i] >= lo[i] - slack && p.x[i] <= hi[i] + slack)) return false;
  return true;
}

Point4 ChartBounds::center() const {
  Point4 c;
  for (int i = 0; i < 4; ++i) c.x[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

void check_neutral_signature(const Mat4& g, const Point4& p) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (g + g.transpose()));
  const auto& ev = es.eigenvalues();  // ascending
  double scale = std::max(1.0, std::abs(ev[3]));
  for (int i = 0; i < 4; ++i)
    if (std::abs(ev[i]) < 1e-12 * scale)
      throw GeometryError("singular metric at " + fmt_point(p));
  if (!(ev[0] < 0 && ev[1] < 0 && ev[2] > 0 && ev[3] > 0))
    throw GeometryError("metric signature is not (+,+,-,-) at " + fmt_point(p));
}

MetricSpec::MetricSpec(std::array<std::array<expr::ScalarField, 4>, 4> gij, ChartBounds chart,
                       std::string name)
    : chart_(chart), name_(std::move(name)) {
  // share (i,j) and (j,i); the caller supplies a symmetric array
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      auto f = std::make_shared<const ScalarField>(gij[i][j].ast(), 4);
      gf_[i][j] = f;
      gf_[j][i] = f;
    }
  std::ostringstream os;
  os << name_ << "|chart";
  for (int i = 0; i < 4; ++i) os << " " << chart_.lo[i] << " " << chart_.hi[i];
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) os << "|g" << i + 1 << j + 1 << "=" << gf_[i][j]->text(expr::chart_vars());
  descriptor_ = os.str();
  build_frame_symbolic();
}

void MetricSpec::check_point(const Point4& p) const {
  for (int i = 0; i < 4; ++i)
    if (!std::isfinite(p.x[i])) throw GeometryError("non-finite point");
  if (!chart_.contains(p)) throw GeometryError("point outside chart bounds " + fmt_point(p));
}

// Signature-aware Gram-Schmidt over the coordinate basis, performed on
// expression trees.  The sign/order classification is pinned at the chart
// centre; the pointwise frame invariants are re-verified on every query.
void MetricSpec::build_frame_symbolic() {
  using namespace expr;
  const Point4 c0 = chart_.center();

  std::array<std::array<NodeRef, 4>, 4> V;  // accepted frame vectors, comps
  std::array<double, 4> sign{};
  auto dot_g = [&](const std::array<NodeRef, 4>& u, const std::array<NodeRef, 4>& w) {
    NodeRef acc = constant(0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) acc = add(acc, mul(mul(u[i], w[j]), gf_[i][j]->ast()));
    return acc;
  };

  for (int step = 0; step < 4; ++step) {
    std::array<NodeRef, 4> v;
    for (int i = 0; i < 4; ++i) v[i] = constant(i == step ? 1 : 0);
    for (int a = 0; a < step; ++a) {
      NodeRef coef = dot_g(v, V[a]);  // g(e_a,e_a) = sign[a], so divide by it
      for (int i = 0; i < 4; ++i)
        v[i] = sub(v[i], mul(mul(constant(sign[a]), coef), V[a][i]));
    }
    NodeRef norm = dot_g(v, v);
    double nv = eval(norm.get(), c0.x.data(), 4);
    if (std::abs(nv) < 1e-10)
      throw GeometryError("degenerate frame: Gram-Schmidt breakdown at chart centre");
    double s = nv > 0 ? 1.0 : -1.0;
    NodeRef denom = call(Fn::Sqrt, mul(constant(s), norm));
    for (int i = 0; i < 4; ++i) v[i] = expr::div(v[i], denom);
    V[step] = v;
    sign[step] = s;
  }

  // stable reorder: the two positive-norm vectors first
  std::array<int, 4> order{};
  int k = 0;
  for (int a = 0; a < 4; ++a)
    if (sign[a] > 0) order[k++] = a;
  int npos = k;
  for (int a = 0; a < 4; ++a)
    if (sign[a] < 0) order[k++] = a;
  if (npos != 2)
    throw GeometryError("metric signature is not (+,+,-,-) at chart centre");

  std::array<std::array<NodeRef, 4>, 4> E;
  for (int a = 0; a < 4; ++a) E[a] = V[order[a]];

  // orientation: flip e4 if det of the component matrix is negative
  Mat4 Ec;
  for (int a = 0; a < 4; ++a)
    for (int i = 0; i < 4; ++i) Ec(i, a) = eval(E[a][i].get(), c0.x.data(), 4);
  if (Ec.determinant() < 0)
    for (int i = 0; i < 4; ++i) E[3][i] = neg(E[3][i]);

  for (int a = 0; a < 4; ++a)
    for (int i = 0; i < 4; ++i)
      Ef_[a][i] = std::make_shared<const ScalarField>(E[a][i], 4);
}

MetricEval MetricSpec::metric_at(const Point4& p) const {
  check_point(p);
  MetricEval m;
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      double v = gf_[i][j]->at(p.x);
      m.g(i, j) = v;
      m.g(j, i) = v;
    }
  check_neutral_signature(m.g, p);
  m.ginv = m.g.inverse();
  double resid = (m.g * m.ginv - Mat4::Identity()).norm();
  if (!(resid <= 1e-12 * (1.0 + m.g.norm() * m.ginv.norm())))
    throw GeometryError("singular metric at " + fmt_point(p));
  return m;
}

Christoffels MetricSpec::christoffel_at(const Point4& p) const {
  PointCtx ctx = context_at(p);
  return ctx.Gamma;
}

RiemannTensor MetricSpec::riemann_at(const Point4& p) const {
  PointCtx ctx = context_at(p);
  return ctx.R;
}

PointCtx MetricSpec::context_at(const Point4& p) const {
  PointCtx c;
  c.p = p;
  MetricEval m = metric_at(p);
  c.g = m.g;
  c.ginv = m.ginv;

  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      for (int k = 0; k < 4; ++k) {
        const ScalarField& dk = gf_[i][j]->partial(k);
        double v = dk.at(p.x);
        c.dg[i][j][k] = v;
        c.dg[j][i][k] = v;
        for (int l = 0; l < 4; ++l) {
          double w = dk.partial(l).at(p.x);
          c.ddg[i][j][k][l] = w;
          c.ddg[j][i][k][l] = w;
        }
      }
    }

  // S[m][i][j] = d_i g_mj + d_j g_mi - d_m g_ij ;  Gamma = (1/2) ginv S
  double S[4][4][4];
  for (int m = 0; m < 4; ++m)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        S[m][i][j] = c.dg[m][j][i] + c.dg[m][i][j] - c.dg[i][j][m];
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double acc = 0;
        for (int m = 0; m < 4; ++m) acc += c.ginv(k, m) * S[m][i][j];
        c.Gamma.G[k][i][j] = 0.5 * acc;
      }

  // d_l ginv = -ginv (d_l g) ginv
  Mat4 dginv[4];
  for (int l = 0; l < 4; ++l) {
    Mat4 dgl;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) dgl(i, j) = c.dg[i][j][l];
    dginv[l] = -c.ginv * dgl * c.ginv;
  }
  for (int l = 0; l < 4; ++l)
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          double acc = 0;
          for (int m = 0; m < 4; ++m) {
            double dS = c.ddg[m][j][i][l] + c.ddg[m][i][j][l] - c.ddg[i][j][m][l];
            acc += dginv[l](k, m) * S[m][i][j] + c.ginv(k, m) * dS;
          }
          c.dGamma[k][i][j][l] = 0.5 * acc;
        }

  // R(d_i,d_j) d_k = [ d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik ] d_l
  for (int l = 0; l < 4; ++l)
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          double acc = c.dGamma[l][j][k][i] - c.dGamma[l][i][k][j];
          for (int m = 0; m < 4; ++m)
            acc += c.Gamma.G[l][i][m] * c.Gamma.G[m][j][k] -
                   c.Gamma.G[l][j][m] * c.Gamma.G[m][i][k];
          c.R.up[l][k][i][j] = acc;
        }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) {
          double acc = 0;
          for (int m = 0; m < 4; ++m) acc += c.g(m, l) * c.R.up[m][k][i][j];
          c.R.low[i][j][k][l] = acc;
        }

  for (int a = 0; a < 4; ++a)
    for (int i = 0; i < 4; ++i) {
      c.frame.E(i, a) = Ef_[a][i]->at(p.x);
      for (int k = 0; k < 4; ++k) c.dE[a][i][k] = Ef_[a][i]->partial(k).at(p.x);
    }
  if (!c.frame.E.allFinite())
    throw GeometryError("degenerate frame at " + fmt_point(p));

  // frame connection via lowered Christoffels (no inverse needed):
  //   g(D_i e_c, d_l) = g_lj d_i E_c^j + (1/2) S[l][i][m] E_c^m
  for (int i = 0; i < 4; ++i) {
    Mat4 lowered;  // lowered(l,c) = g(D_i e_c, d_l)
    for (int l = 0; l < 4; ++l)
      for (int cc = 0; cc < 4; ++cc) {
        double acc = 0;
        for (int j = 0; j < 4; ++j) acc += c.g(l, j) * c.dE[cc][j][i];
        for (int m = 0; m < 4; ++m) acc += 0.5 * S[l][i][m] * c.frame.E(m, cc);
        lowered(l, cc) = acc;
      }
    for (int d = 0; d < 4; ++d)
      for (int cc = 0; cc < 4; ++cc) {
        double acc = 0;
        for (int l = 0; l < 4; ++l) acc += c.frame.E(l, d) * lowered(l, cc);
        c.conn.A[i](d, cc) = kFrameSign[d] * acc;
      }
    // Lambda^- connection coefficients from the frame connection
    for (int a = 0; a < 3; ++a) {
      Mat4 T = c.conn.A[i] * biv::kSMat[a] + biv::kSMat[a] * c.conn.A[i].transpose();
      for (int b = 0; b < 3; ++b) {
        double acc = 0;
        for (int k = 0; k < 4; ++k)
          for (int l = 0; l < 4; ++l)
            acc += kFrameSign[k] * kFrameSign[l] * T(k, l) * biv::kSMat[b](k, l);
        c.conn.c[i](a, b) = 0.25 * acc;
      }
    }
  }
  return c;
}

CurvatureSummary MetricSpec::curvature_summary(const Point4& p) const {
  PointCtx c = context_at(p);
  CurvatureSummary s;
  // Ric(d_j, d_k) = trace of Z -> R(Z, d_j) d_k
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 4; ++k) {
      double acc = 0;
      for (int i = 0; i < 4; ++i) acc += c.R.up[i][k][i][j];
      s.ricci(j, k) = acc;
    }
  s.ricci_asymmetry = (s.ricci - s.ricci.transpose()).norm();
  s.tau = (c.ginv * s.ricci).trace();
  s.einstein_residual = (s.ricci - 0.25 * s.tau * c.g).norm();
  return s;
}

FrameEval MetricSpec::orthonormal_frame(const Point4& p) const {
  check_point(p);
  FrameEval f;
  for (int a = 0; a < 4; ++a)
    for (int i = 0; i < 4; ++i) f.E(i, a) = Ef_[a][i]->at(p.x);
  if (!f.E.allFinite()) throw GeometryError("degenerate frame at " + fmt_point(p));
  MetricEval m = metric_at(p);
  Mat4 gram = f.E.transpose() * m.g * f.E;
  Mat4 want = Mat4::Zero();
  for (int a = 0; a < 4; ++a) want(a, a) = kFrameSign[a];
  if ((gram - want).cwiseAbs().maxCoeff() > 1e-10)
    throw GeometryError("degenerate frame: orthonormality lost at " + fmt_point(p));
  if (f.E.determinant() <= 0)
    throw GeometryError("frame orientation flipped at " + fmt_point(p));
  return f;
}

Mat4 MetricSpec::endo_covariant_derivative(
    const std::array<std::array<expr::ScalarField, 4>, 4>& J, const Vec4& X,
    const Point4& p) const {
  return endo_covariant_derivative(J, X, context_at(p));
}

Mat4 MetricSpec::endo_covariant_derivative(
    const std::array<std::array<expr::ScalarField, 4>, 4>& J, const Vec4& X,
    const PointCtx& ctx) const {
  Mat4 Jv, DJ = Mat4::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) Jv(i, j) = J[i][j].at(ctx.p.x);
  for (int k = 0; k < 4; ++k) {
    if (X[k] == 0.0) continue;
    Mat4 term;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) term(i, j) = J[i][j].partial(k).at(ctx.p.x);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double acc = 0;
        for (int m = 0; m < 4; ++m)
          acc += ctx.Gamma.G[i][k][m] * Jv(m, j) - ctx.Gamma.G[m][k][j] * Jv(i, m);
        term(i, j) += acc;
      }
    DJ += X[k] * term;
  }
  return DJ;
}

const std::array<std::array<expr::ScalarField, 4>, 4>& MetricSpec::ks_field(int a) const {
  std::lock_guard<std::mutex> lock(ks_mu_);
  if (!ksf_[a]) {
    using namespace expr;
    // K_coord = E K_a E^{-1} with E^{-1} = diag(eps) E^T g
    auto out = std::make_shared<std::array<std::array<ScalarField, 4>, 4>>();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        NodeRef acc = constant(0);
        for (int cc = 0; cc < 4; ++cc)
          for (int d = 0; d < 4; ++d) {
            double k = biv::kKMat[a](cc, d);
            if (k == 0.0) continue;
            NodeRef einv_dj = constant(0);  // (E^{-1})^d_j
            for (int l = 0; l < 4; ++l)
              einv_dj = add(einv_dj, mul(gf_[j][l]->ast(), Ef_[d][l]->ast()));
            einv_dj = mul(constant(kFrameSign[d]), einv_dj);
            acc = add(acc, mul(constant(k), mul(Ef_[cc][i]->ast(), einv_dj)));
          }
        (*out)[i][j] = ScalarField(acc, 4);
      }
    ksf_[a] = out;
  }
  return *ksf_[a];
}

Vec4 to_frame(const PointCtx& ctx, const Vec4& Xcoord) {
  Vec4 t = ctx.frame.E.transpose() * ctx.g * Xcoord;
  for (int a = 0; a < 4; ++a) t[a] *= kFrameSign[a];
  return t;
}

Vec4 from_frame(const PointCtx& ctx, const Vec4& Xframe) { return ctx.frame.E * Xframe; }

}  // namespace hyptwist::geom
