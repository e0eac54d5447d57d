#include "dmbpp/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dmbpp {

DomainSpec::DomainSpec(std::vector<int> simplex_dims, int cube_dim)
    : simplex_dims_(std::move(simplex_dims)), cube_dim_(cube_dim) {
  if (cube_dim_ < 0) throw InvalidArgument("cube dimension must be non-negative");
  for (int d : simplex_dims_) {
    if (d < 1) throw InvalidArgument("simplex block dimensions must be positive");
  }
  if (simplex_dims_.empty() && cube_dim_ == 0) throw InvalidArgument("empty domain");
}

int DomainSpec::block_dim(int block) const {
  if (is_simplex(block)) return simplex_dims_[block - 1];
  if (is_cube(block)) return cube_dim_;
  throw InvalidArgument("block index " + std::to_string(block) + " out of range");
}

int DomainSpec::total_dim() const {
  int d = cube_dim_;
  for (int dm : simplex_dims_) d += dm;
  return d;
}

double DomainSpec::volume() const {
  double v = 1.0;
  for (int dm : simplex_dims_) v /= std::tgamma(dm + 1.0);
  return v;
}

void check_block(const DomainSpec& spec, BlockIndex block) {
  if (block.value < 1 || block.value > spec.num_blocks()) {
    throw InvalidArgument("block index " + std::to_string(block.value) + " outside 1.." +
                          std::to_string(spec.num_blocks()));
  }
}

namespace {

void check_block_values(const Eigen::VectorXd& x, int block, bool simplex) {
  for (Eigen::Index l = 0; l < x.size(); ++l) {
    // written so that NaN fails the test
    if (!(x[l] >= 0.0 && x[l] <= 1.0)) {
      std::ostringstream os;
      os << "block " << block << " coordinate " << l + 1 << " = " << x[l] << " outside [0,1]";
      throw OutOfRange(os.str());
    }
  }
  if (simplex && x.sum() > 1.0 + kSimplexTolerance) {
    std::ostringstream os;
    os << "block " << block << " sums to " << x.sum() << " > 1";
    throw SimplexViolation(os.str());
  }
}

}  // namespace

void validate_blocks(const MixedPoint& point, const DomainSpec& spec,
                     const std::vector<bool>& present) {
  const int M = spec.num_simplex_blocks();
  if (static_cast<int>(point.simplex.size()) != M) {
    throw DimensionMismatch("expected " + std::to_string(M) + " simplex blocks, got " +
                            std::to_string(point.simplex.size()));
  }
  for (int b = 1; b <= spec.num_blocks(); ++b) {
    if (!present[b - 1]) continue;
    const auto& x = point.block(b);
    if (x.size() != spec.block_dim(b)) {
      throw DimensionMismatch("block " + std::to_string(b) + " has " + std::to_string(x.size()) +
                              " coordinates, expected " + std::to_string(spec.block_dim(b)));
    }
    check_block_values(x, b, spec.is_simplex(b));
  }
}

const MixedPoint& validate(const MixedPoint& point, const DomainSpec& spec) {
  validate_blocks(point, spec, std::vector<bool>(spec.num_blocks(), true));
  return point;
}

namespace {

bool simplex_block_interior(const Eigen::VectorXd& x, double eps) {
  return (x.array() >= eps).all() && x.sum() <= 1.0 - eps;
}

bool cube_block_interior(const Eigen::VectorXd& x, double eps) {
  return (x.array() >= eps).all() && (x.array() <= 1.0 - eps).all();
}

Eigen::VectorXd clamp_simplex_block(const Eigen::VectorXd& in, double eps) {
  if (simplex_block_interior(in, eps)) return in;
  const Eigen::Index d = in.size();
  // d+1 parts including the implicit last one
  Eigen::VectorXd parts(d + 1);
  for (Eigen::Index l = 0; l < d; ++l) {
    double v = in[l];
    parts[l] = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
  }
  parts[d] = 1.0 - parts.head(d).sum();

  int n_low = 0;
  double high_total = 0.0;
  for (Eigen::Index l = 0; l <= d; ++l) {
    if (parts[l] < eps) {
      ++n_low;
    } else {
      high_total += parts[l];
    }
  }
  const int n_high = static_cast<int>(d + 1) - n_low;
  Eigen::VectorXd out(d);
  if (n_high == 0) {
    out.setConstant(1.0 / static_cast<double>(d + 1));
  } else {
    // parts above eps keep their excess over eps, shrunk proportionally
    const double scale = (1.0 - (d + 1) * eps) / (high_total - n_high * eps);
    for (Eigen::Index l = 0; l < d; ++l) {
      out[l] = parts[l] < eps ? eps : eps + (parts[l] - eps) * scale;
    }
  }
  // floating-point cleanup so that the interior test holds exactly
  for (Eigen::Index l = 0; l < d; ++l) out[l] = std::max(out[l], eps);
  for (int guard = 0; guard < 8 && out.sum() > 1.0 - eps; ++guard) {
    Eigen::Index arg;
    out.maxCoeff(&arg);
    const double excess = out.sum() - (1.0 - eps);
    out[arg] = std::nextafter(out[arg] - excess, 0.0);
  }
  return out;
}

}  // namespace

bool is_interior(const MixedPoint& point, double epsilon) {
  for (const auto& s : point.simplex) {
    if (!simplex_block_interior(s, epsilon)) return false;
  }
  return cube_block_interior(point.cube, epsilon);
}

MixedPoint clamp_interior(const MixedPoint& point, const DomainSpec& spec, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-3)) throw InvalidArgument("interior epsilon must lie in (0, 1e-3]");
  if (static_cast<int>(point.simplex.size()) != spec.num_simplex_blocks()) {
    throw DimensionMismatch("simplex block count does not match domain");
  }
  MixedPoint out = point;
  for (auto& s : out.simplex) s = clamp_simplex_block(s, epsilon);
  for (Eigen::Index l = 0; l < out.cube.size(); ++l) {
    double v = out.cube[l];
    if (!std::isfinite(v)) v = 0.0;
    out.cube[l] = std::clamp(v, epsilon, 1.0 - epsilon);
  }
  return out;
}

Eigen::VectorXd flatten(const MixedPoint& point) {
  Eigen::Index n = point.cube.size();
  for (const auto& s : point.simplex) n += s.size();
  Eigen::VectorXd flat(n);
  Eigen::Index at = 0;
  for (const auto& s : point.simplex) {
    flat.segment(at, s.size()) = s;
    at += s.size();
  }
  flat.tail(point.cube.size()) = point.cube;
  return flat;
}

MixedPoint unflatten(const DomainSpec& spec, const Eigen::VectorXd& flat) {
  if (flat.size() != spec.total_dim()) throw DimensionMismatch("flat vector length does not match domain");
  MixedPoint p;
  Eigen::Index at = 0;
  for (int d : spec.simplex_dims()) {
    p.simplex.push_back(flat.segment(at, d));
    at += d;
  }
  p.cube = flat.tail(spec.cube_dim());
  return p;
}

MixedPoint zero_point(const DomainSpec& spec) {
  MixedPoint p;
  for (int d : spec.simplex_dims()) p.simplex.push_back(Eigen::VectorXd::Zero(d));
  p.cube = Eigen::VectorXd::Zero(spec.cube_dim());
  return p;
}

std::vector<std::string> coordinate_names(const DomainSpec& spec) {
  std::vector<std::string> names;
  const int M = spec.num_simplex_blocks();
  for (int m = 1; m <= M; ++m) {
    for (int l = 1; l <= spec.block_dim(m); ++l) {
      names.push_back("x" + std::to_string(m) + "_" + std::to_string(l));
    }
  }
  for (int l = 1; l <= spec.cube_dim(); ++l) names.push_back("x" + std::to_string(M + l));
  return names;
}

}  // namespace dmbpp
