#include "polyflow/pwl.hpp"

#include <stdexcept>
#include <unordered_map>

namespace polyflow::pwl {

std::string ActivationPattern::key() const {
  std::string k;
  for (size_t l = 0; l < signs.size(); ++l) {
    if (l) k.push_back('|');
    for (int s : signs[l]) k.push_back(s >= 0 ? '+' : '-');
  }
  return k;
}

int Polytope::non_domain_rows() const {
  int n = 0;
  for (const auto& o : origins)
    if (o.kind != RowKind::Domain) ++n;
  return n;
}

bool Polytope::contains(const Vec& x, double tol) const {
  return max_violation(x) <= tol;
}

double Polytope::max_violation(const Vec& x) const {
  if (rows() == 0) return 0.0;
  return (a * x - beta).maxCoeff();
}

ActivationPattern activation_pattern(const nn::MlpParams& p, const Vec& x) {
  const nn::ForwardTrace t = nn::forward_trace(p, x);
  ActivationPattern pat;
  pat.signs.resize(t.z.size());
  for (size_t l = 0; l < t.z.size(); ++l) {
    pat.signs[l].resize(static_cast<size_t>(t.z[l].size()));
    for (int k = 0; k < t.z[l].size(); ++k)
      pat.signs[l][static_cast<size_t>(k)] = t.z[l](k) >= 0.0 ? 1 : -1;
  }
  return pat;
}

RegionAffine region_affine(const nn::MlpParams& p, const ActivationPattern& pat) {
  const int L = p.hidden_layers();
  if (static_cast<int>(pat.signs.size()) != L)
    throw std::invalid_argument("region_affine: pattern layer count mismatch");
  for (int l = 0; l < L; ++l)
    if (static_cast<int>(pat.signs[static_cast<size_t>(l)].size()) != p.layer_width(l))
      throw std::invalid_argument("region_affine: pattern width mismatch");

  RegionAffine r;
  r.w_eff.reserve(static_cast<size_t>(L));
  r.b_eff.reserve(static_cast<size_t>(L));
  Mat w_prev;  // masked effective map feeding the next layer
  Vec b_prev;
  for (int l = 0; l < L; ++l) {
    const Mat& w = p.w[static_cast<size_t>(l)];
    const Vec& b = p.b[static_cast<size_t>(l)];
    if (l == 0) {
      r.w_eff.push_back(w);
      r.b_eff.push_back(b);
    } else {
      r.w_eff.push_back(w * w_prev);
      r.b_eff.push_back(w * b_prev + b);
    }
    // Rectifier masking: inactive neurons contribute nothing downstream.
    w_prev = r.w_eff.back();
    b_prev = r.b_eff.back();
    const auto& signs = pat.signs[static_cast<size_t>(l)];
    for (int k = 0; k < w_prev.rows(); ++k) {
      if (signs[static_cast<size_t>(k)] < 0) {
        w_prev.row(k).setZero();
        b_prev(k) = 0.0;
      }
    }
  }
  if (L == 0) {
    r.w_out = p.w_out;
    r.b_out = p.b_out;
  } else {
    r.w_out = w_prev.transpose() * p.w_out;
    r.b_out = p.w_out.dot(b_prev) + p.b_out;
  }
  return r;
}

Polytope feasible_polytope(const nn::MlpParams& p, const ActivationPattern& pat,
                           const data::DomainBox& box) {
  const RegionAffine aff = region_affine(p, pat);
  const int d = p.input_dim();
  const int n_neurons = p.total_neurons();
  const int n_box = box.dim() == d ? 2 * d : 0;
  Polytope poly;
  poly.a = Mat::Zero(n_neurons + 1 + n_box, d);
  poly.beta = Vec::Zero(n_neurons + 1 + n_box);
  poly.origins.resize(static_cast<size_t>(n_neurons + 1 + n_box));

  int row = 0;
  for (int l = 0; l < p.hidden_layers(); ++l) {
    for (int k = 0; k < p.layer_width(l); ++k) {
      const double o = pat.signs[static_cast<size_t>(l)][static_cast<size_t>(k)] >= 0 ? 1.0 : -1.0;
      // o * (w_eff x + b_eff) >= 0, written as -o * w_eff x <= o * b_eff.
      poly.a.row(row) = -o * aff.w_eff[static_cast<size_t>(l)].row(k);
      poly.beta(row) = o * aff.b_eff[static_cast<size_t>(l)](k);
      poly.origins[static_cast<size_t>(row)] = {RowKind::Neuron, l, k};
      ++row;
    }
  }
  poly.a.row(row) = aff.w_out.transpose();
  poly.beta(row) = -aff.b_out;
  poly.origins[static_cast<size_t>(row)] = {RowKind::Output, -1, -1};
  ++row;
  for (int j = 0; j < d && n_box > 0; ++j) {
    poly.a(row, j) = 1.0;
    poly.beta(row) = box.hi(j);
    poly.origins[static_cast<size_t>(row)] = {RowKind::Domain, -1, j};
    ++row;
    poly.a(row, j) = -1.0;
    poly.beta(row) = -box.lo(j);
    poly.origins[static_cast<size_t>(row)] = {RowKind::Domain, -1, j};
    ++row;
  }
  return poly;
}

data::DomainBox scale_box(const data::DomainBox& raw, const nn::InputScaler& s) {
  data::DomainBox out;
  if (s.shift.size() == 0) return raw;
  out.lo = (raw.lo - s.shift).cwiseQuotient(s.scale);
  out.hi = (raw.hi - s.shift).cwiseQuotient(s.scale);
  return out;  // scale is positive, so the orientation is preserved
}

Polytope to_raw_frame(const Polytope& poly, const nn::InputScaler& s) {
  if (s.shift.size() == 0) return poly;
  // Rows a x_std <= beta with x_std = D^-1 (x - m) become (a D^-1) x <= beta + a D^-1 m.
  Polytope out = poly;
  const Vec inv_scale = s.scale.cwiseInverse();
  out.a = poly.a * inv_scale.asDiagonal();
  out.beta = poly.beta + out.a * s.shift;
  return out;
}

Polytope to_scaled_frame(const Polytope& raw, const nn::InputScaler& s) {
  if (s.shift.size() == 0) return raw;
  // Rows a x <= beta with x = m + D x_std become (a D) x_std <= beta - a m.
  Polytope out = raw;
  out.a = raw.a * s.scale.asDiagonal();
  out.beta = raw.beta - raw.a * s.shift;
  return out;
}

RegionAffine to_raw_frame(const RegionAffine& aff, const nn::InputScaler& s) {
  if (s.shift.size() == 0) return aff;
  RegionAffine out;
  const Vec inv_scale = s.scale.cwiseInverse();
  out.w_eff.reserve(aff.w_eff.size());
  out.b_eff.reserve(aff.b_eff.size());
  for (size_t l = 0; l < aff.w_eff.size(); ++l) {
    out.w_eff.push_back(aff.w_eff[l] * inv_scale.asDiagonal());
    out.b_eff.push_back(aff.b_eff[l] - out.w_eff.back() * s.shift);
  }
  out.w_out = inv_scale.asDiagonal() * aff.w_out;
  out.b_out = aff.b_out - out.w_out.dot(s.shift);
  return out;
}

std::vector<RegionInfo> collect_sample_regions(const nn::MlpParams& p,
                                               const std::vector<Vec>& xs,
                                               const data::DomainBox& box_scaled) {
  if (xs.empty()) throw std::invalid_argument("collect_sample_regions: no inputs");
  std::vector<RegionInfo> regions;
  std::unordered_map<std::string, size_t> index;
  for (const Vec& x : xs) {
    ActivationPattern pat = activation_pattern(p, x);
    const std::string k = pat.key();
    auto it = index.find(k);
    if (it == index.end()) {
      RegionInfo info;
      info.pattern = std::move(pat);
      info.affine = region_affine(p, info.pattern);
      info.poly = feasible_polytope(p, info.pattern, box_scaled);
      info.sample_count = 1;
      index.emplace(k, regions.size());
      regions.push_back(std::move(info));
    } else {
      ++regions[it->second].sample_count;
    }
  }
  return regions;
}

}  // namespace polyflow::pwl
