#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace mgsagc {

/// Slack allowed outside [-1, 1] before a basis evaluation is rejected;
/// inputs inside the slack are clamped.
inline constexpr double kChebDomainSlack = 1e-9;

using ChebWeights = std::vector<double>;

/// Separable edge kernel f(d, theta) = g(x_d; w_d) * g(x_theta; w_theta).
struct ChebKernelParams {
  ChebWeights w_d;
  ChebWeights w_theta;

  int order() const { return static_cast<int>(w_d.size()) - 1; }
};

/// T_0(x) .. T_order(x) by the three-term recurrence.
std::vector<double> cheb_basis(double x, int order);

/// Same, written into `out` (size order+1). Used by the batched kernels.
void cheb_basis_into(double x, std::span<double> out);

/// Maps an edge (d, theta) of a graph with radius L into [-1, 1]^2:
/// x_d = 2 d / L - 1, x_theta = theta / pi - 1.
std::pair<double, double> normalize_edge_inputs(double d, double theta, double radius);

double g_w(double x, std::span<const double> weights);

double f_w(double d, double theta, double radius, const ChebKernelParams& params);

struct ChebKernelGrad {
  std::vector<double> w_d;
  std::vector<double> w_theta;
};

/// Product-rule gradient of f_w with respect to both coefficient vectors.
ChebKernelGrad f_w_grad(double d, double theta, double radius, const ChebKernelParams& params);

/// w_0 ~ U(0.9, 1.1) / sqrt(fan); w_n ~ N(0, 0.1 / (n + 1)) for n >= 1.
ChebWeights init_cheb_weights(int order, double fan, std::mt19937_64& rng);

}  // namespace mgsagc
