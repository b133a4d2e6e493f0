#include "tspc/design.hpp"

#include "tspc/error.hpp"

namespace tspc::engine {
namespace {

void check_node(const NodeDesign& n, const DesignLayout& l, const char* which) {
  const bool shape_ok = n.mu.size() == l.n_mu && n.sigma.size() == l.n_mu &&
                        n.rho.size() == l.n_rho && n.tof.has_value() == l.has_tof;
  if (!shape_ok) {
    throw InputError(std::string("design layout: ") + which + " template does not match the shape");
  }
}

}  // namespace

std::size_t DesignLayout::per_node() const {
  return (has_tof ? 1 : 0) + static_cast<std::size_t>(2 * n_mu + n_rho) + 1;
}

void DesignLayout::validate() const {
  check_node(lower, *this, "lower");
  check_node(upper, *this, "upper");
  check_node(initial, *this, "initial");
  const Vector lo = flatten_node(lower, *this);
  const Vector hi = flatten_node(upper, *this);
  for (Eigen::Index j = 0; j < lo.size(); ++j) {
    if (!(lo[j] <= hi[j])) throw InputError("design layout: lower bound exceeds upper bound");
  }
}

Vector flatten_node(const NodeDesign& node, const DesignLayout& layout) {
  Vector out(static_cast<Eigen::Index>(layout.per_node()));
  Eigen::Index j = 0;
  if (layout.has_tof) {
    if (!node.tof) throw InputError("design: node is missing its time of flight");
    out[j++] = *node.tof;
  }
  if (node.mu.size() != layout.n_mu || node.sigma.size() != layout.n_mu ||
      node.rho.size() != layout.n_rho) {
    throw InputError("design: node dimensions do not match the layout");
  }
  out.segment(j, layout.n_mu) = node.mu;
  j += layout.n_mu;
  out.segment(j, layout.n_mu) = node.sigma;
  j += layout.n_mu;
  out.segment(j, layout.n_rho) = node.rho;
  j += layout.n_rho;
  out[j] = node.kappa;
  return out;
}

namespace {

Vector repeat(const NodeDesign& node, const DesignLayout& layout) {
  const Vector one = flatten_node(node, layout);
  Vector out(static_cast<Eigen::Index>(layout.size()));
  for (std::size_t k = 0; k < layout.nodes; ++k) {
    out.segment(static_cast<Eigen::Index>(k * layout.per_node()), one.size()) = one;
  }
  return out;
}

}  // namespace

Vector DesignLayout::lower_bounds() const { return repeat(lower, *this); }
Vector DesignLayout::upper_bounds() const { return repeat(upper, *this); }
Vector DesignLayout::initial_vector() const { return repeat(initial, *this); }

std::vector<std::string> DesignLayout::scalar_names() const {
  std::vector<std::string> fields;
  if (has_tof) fields.emplace_back("tof");
  for (Eigen::Index m = 0; m < n_mu; ++m) {
    const auto idx = static_cast<std::size_t>(m);
    fields.push_back("mu_" + (idx < mu_names.size() ? mu_names[idx] : std::to_string(m)));
  }
  for (Eigen::Index m = 0; m < n_mu; ++m) {
    const auto idx = static_cast<std::size_t>(m);
    fields.push_back("sigma_" + (idx < mu_names.size() ? mu_names[idx] : std::to_string(m)));
  }
  for (Eigen::Index m = 0; m < n_rho; ++m) {
    const auto idx = static_cast<std::size_t>(m);
    fields.push_back("rho_" + (idx < mu_names.size() ? mu_names[idx] : std::to_string(m)));
  }
  fields.emplace_back("kappa");
  std::vector<std::string> out;
  out.reserve(size());
  for (std::size_t k = 0; k < nodes; ++k) {
    for (const auto& f : fields) out.push_back("n" + std::to_string(k + 1) + "." + f);
  }
  return out;
}

Vector flatten(const DesignVector& design, const DesignLayout& layout) {
  if (design.nodes.size() != layout.nodes) {
    throw InputError("design: expected " + std::to_string(layout.nodes) + " nodes, got " +
                     std::to_string(design.nodes.size()));
  }
  Vector out(static_cast<Eigen::Index>(layout.size()));
  const auto stride = static_cast<Eigen::Index>(layout.per_node());
  for (std::size_t k = 0; k < layout.nodes; ++k) {
    out.segment(static_cast<Eigen::Index>(k) * stride, stride) = flatten_node(design.nodes[k], layout);
  }
  return out;
}

NodeDesign node_at(const Vector& x, const DesignLayout& layout, std::size_t k) {
  const auto stride = static_cast<Eigen::Index>(layout.per_node());
  Eigen::Index j = static_cast<Eigen::Index>(k) * stride;
  NodeDesign n;
  if (layout.has_tof) n.tof = x[j++];
  n.mu = x.segment(j, layout.n_mu);
  j += layout.n_mu;
  n.sigma = x.segment(j, layout.n_mu);
  j += layout.n_mu;
  n.rho = x.segment(j, layout.n_rho);
  j += layout.n_rho;
  n.kappa = x[j];
  return n;
}

DesignVector unflatten(const Vector& x, const DesignLayout& layout) {
  if (static_cast<std::size_t>(x.size()) != layout.size()) {
    throw InputError("design: expected " + std::to_string(layout.size()) + " scalars, got " +
                     std::to_string(x.size()));
  }
  DesignVector d;
  d.nodes.reserve(layout.nodes);
  for (std::size_t k = 0; k < layout.nodes; ++k) d.nodes.push_back(node_at(x, layout, k));
  d.lower = layout.lower_bounds();
  d.upper = layout.upper_bounds();
  return d;
}

bool within_bounds(const Vector& x, const DesignLayout& layout) {
  if (static_cast<std::size_t>(x.size()) != layout.size()) return false;
  const Vector lo = layout.lower_bounds();
  const Vector hi = layout.upper_bounds();
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!(x[j] >= lo[j] && x[j] <= hi[j])) return false;
  }
  return true;
}

}  // namespace tspc::engine
