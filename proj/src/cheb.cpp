#include "mgsagc/cheb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mgsagc/error.hpp"

namespace mgsagc {

namespace {

double clamp_domain(double x) {
  if (!(std::abs(x) <= 1.0 + kChebDomainSlack))
    throw Error(ErrorCode::Domain, "Chebyshev input " + std::to_string(x) + " outside [-1, 1]");
  return std::clamp(x, -1.0, 1.0);
}

}  // namespace

void cheb_basis_into(double x, std::span<double> out) {
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "cheb_basis: order must be >= 0");
  x = clamp_domain(x);
  out[0] = 1.0;
  if (out.size() > 1) out[1] = x;
  const double two_x = 2.0 * x;
  for (std::size_t n = 2; n < out.size(); ++n) out[n] = two_x * out[n - 1] - out[n - 2];
}

std::vector<double> cheb_basis(double x, int order) {
  if (order < 0) throw Error(ErrorCode::InvalidArgument, "cheb_basis: order must be >= 0");
  std::vector<double> t(static_cast<std::size_t>(order) + 1);
  cheb_basis_into(x, t);
  return t;
}

std::pair<double, double> normalize_edge_inputs(double d, double theta, double radius) {
  if (!(radius > 0) || !std::isfinite(radius))
    throw Error(ErrorCode::Domain, "normalize_edge_inputs: radius must be positive");
  if (!(d >= 0 && d <= radius))
    throw Error(ErrorCode::Domain, "normalize_edge_inputs: distance outside [0, radius]");
  if (!(theta >= 0 && theta < 2.0 * std::numbers::pi))
    throw Error(ErrorCode::Domain, "normalize_edge_inputs: azimuth outside [0, 2pi)");
  return {2.0 * (d / radius) - 1.0, theta / std::numbers::pi - 1.0};
}

double g_w(double x, std::span<const double> weights) {
  std::vector<double> t(weights.size());
  cheb_basis_into(x, t);
  double s = 0;
  for (std::size_t n = 0; n < t.size(); ++n) s += weights[n] * t[n];
  return s;
}

double f_w(double d, double theta, double radius, const ChebKernelParams& params) {
  const auto [xd, xt] = normalize_edge_inputs(d, theta, radius);
  return g_w(xd, params.w_d) * g_w(xt, params.w_theta);
}

ChebKernelGrad f_w_grad(double d, double theta, double radius, const ChebKernelParams& params) {
  const auto [xd, xt] = normalize_edge_inputs(d, theta, radius);
  ChebKernelGrad g;
  g.w_d.resize(params.w_d.size());
  g.w_theta.resize(params.w_theta.size());
  cheb_basis_into(xd, g.w_d);
  cheb_basis_into(xt, g.w_theta);
  double gd = 0, gt = 0;
  for (std::size_t n = 0; n < g.w_d.size(); ++n) gd += params.w_d[n] * g.w_d[n];
  for (std::size_t n = 0; n < g.w_theta.size(); ++n) gt += params.w_theta[n] * g.w_theta[n];
  for (auto& v : g.w_d) v *= gt;
  for (auto& v : g.w_theta) v *= gd;
  return g;
}

ChebWeights init_cheb_weights(int order, double fan, std::mt19937_64& rng) {
  if (order < 0) throw Error(ErrorCode::InvalidArgument, "init_cheb_weights: order must be >= 0");
  ChebWeights w(static_cast<std::size_t>(order) + 1);
  std::uniform_real_distribution<double> u(0.9, 1.1);
  w[0] = u(rng) / std::sqrt(fan);
  for (int n = 1; n <= order; ++n) {
    std::normal_distribution<double> nd(0.0, 0.1 / (n + 1));
    w[n] = nd(rng);
  }
  return w;
}

}  // namespace mgsagc
