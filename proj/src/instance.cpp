#include "pdesign/instance.hpp"

#include <cmath>
#include <sstream>

#include "pdesign/errors.hpp"

namespace pdesign {

PNormExponent PNormExponent::finite(double p, bool allow_below_one) {
  if (!std::isfinite(p) || p <= 0.0) {
    throw Error(ErrorKind::InvalidArgument, "exponent p must be a positive finite number");
  }
  if (p < 1.0 && !allow_below_one) {
    throw Error(ErrorKind::InvalidArgument, "exponent p must be >= 1");
  }
  return PNormExponent(Kind::Finite, p);
}

bool PNormExponent::integer_mode() const noexcept {
  return kind_ == Kind::Finite && p_ == std::floor(p_);
}

std::string PNormExponent::to_string() const {
  switch (kind_) {
    case Kind::Zero: return "zero";
    case Kind::Infinity: return "infinity";
    case Kind::Finite: break;
  }
  std::ostringstream out;
  out << p_;
  return out.str();
}

void DesignInstance::validate() const {
  if (d() < 1) throw Error(ErrorKind::InvalidArgument, "dimension d must be >= 1");
  if (k < d()) throw Error(ErrorKind::InvalidArgument, "budget k must be >= d");
  if (n() < k) throw Error(ErrorKind::InvalidArgument, "need n >= k vectors");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "epsilon must lie in (0, 1)");
  }
  if (!vectors.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "vectors contain non-finite entries");
  }
}

SymMatrix weighted_gram(const Eigen::MatrixXd& vectors, const Eigen::VectorXd& weights) {
  // U^T diag(w) U; symmetrized by the SymMatrix constructor.
  return SymMatrix(vectors.transpose() * weights.asDiagonal() * vectors);
}

SymMatrix subset_gram(const Eigen::MatrixXd& vectors, const std::vector<int>& subset) {
  SymMatrix gram = SymMatrix::zero(static_cast<int>(vectors.cols()));
  for (int i : subset) gram.add_outer(vectors.row(i).transpose());
  return gram;
}

}  // namespace pdesign
