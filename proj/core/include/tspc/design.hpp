#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tspc::engine {

using Vector = Eigen::VectorXd;

/// Continuous variables of one sequence node.
struct NodeDesign {
  std::optional<double> tof;  // days; absent for static problems or fixed-ToF runs
  Vector mu;
  Vector sigma;               // standard deviations, one per mu component
  Vector rho;                 // correlation factors, empty unless the problem uses them
  double kappa = 0.0;
};

/// Shape and box bounds of a design vector.
///
/// Flattened order is node-major. Within a node: tof (if present), mu[0..m),
/// sigma[0..m), rho[0..r), kappa.
struct DesignLayout {
  std::size_t nodes = 0;
  bool has_tof = false;
  Eigen::Index n_mu = 0;
  Eigen::Index n_rho = 0;
  NodeDesign lower;
  NodeDesign upper;
  NodeDesign initial;
  std::vector<std::string> mu_names;  // optional labels for reports

  std::size_t per_node() const;
  std::size_t size() const { return nodes * per_node(); }

  /// Throws InputError when the per-node templates disagree with the shape or
  /// lower > upper anywhere.
  void validate() const;

  Vector lower_bounds() const;
  Vector upper_bounds() const;
  Vector initial_vector() const;
  /// Per-scalar labels in flattened order, e.g. "n3.sigma_x".
  std::vector<std::string> scalar_names() const;
};

struct DesignVector {
  std::vector<NodeDesign> nodes;
  Vector lower;
  Vector upper;
};

Vector flatten(const DesignVector& design, const DesignLayout& layout);
Vector flatten_node(const NodeDesign& node, const DesignLayout& layout);

/// Throws InputError on a length mismatch.
DesignVector unflatten(const Vector& x, const DesignLayout& layout);
NodeDesign node_at(const Vector& x, const DesignLayout& layout, std::size_t k);

/// True when every scalar of x is within [lower, upper].
bool within_bounds(const Vector& x, const DesignLayout& layout);

}  // namespace tspc::engine
