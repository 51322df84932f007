// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <stdexcept>

#include "codedmm/apps.hpp"
#include "codedmm/errors.hpp"
#include "codedmm/rng.hpp"
#include "eigen_bridge.hpp"

namespace codedmm {

namespace {

// Solves (G + ridge I) X^T = rhs^T for X, i.e. X = rhs (G + ridge I)^-1 with G symmetric.
DenseMatrix ridge_solve(const Eigen::MatrixXd& gram, double ridge, const DenseMatrix& rhs) {
  Eigen::MatrixXd m = gram;
  m.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError("als: factor system is not positive definite");
  const Eigen::MatrixXd x_t = llt.solve(detail::as_eigen(rhs).transpose());
  return detail::from_eigen(x_t.transpose());
}

}  // namespace

double als_loss(const DenseMatrix& ratings, const DenseMatrix& users, const DenseMatrix& items, double ridge) {
  const auto r = detail::as_eigen(ratings);
  const auto h = detail::as_eigen(users);
  const auto w = detail::as_eigen(items);
  return (r - h * w).squaredNorm() + ridge * (h.squaredNorm() + w.squaredNorm());
}

AlsResult als(const DenseMatrix& ratings, const AlsOptions& options, Executor& exec) {
  if (options.factors == 0) throw std::invalid_argument("als: factors must be >= 1");
  if (!(options.ridge > 0.0)) throw std::invalid_argument("als: ridge must be > 0");
  const std::size_t u = ratings.rows();
  const std::size_t i = ratings.cols();
  const std::size_t f = options.factors;

  auto rng = make_stream(options.seed, Stream::kData, 2);
  std::uniform_real_distribution<double> init(0.0, 1.0 / static_cast<double>(f));
  AlsResult out;
  out.users = DenseMatrix(u, f);
  out.items = DenseMatrix(f, i);
  for (double& v : out.users.data()) v = init(rng);
  for (double& v : out.items.data()) v = init(rng);

  const OperandId r_id = exec.add_operand(ratings);
  const OperandId rt_id = exec.add_operand(ratings.transpose());

  for (std::size_t k = 1; k <= options.max_iters; ++k) {
    exec.begin_iteration(static_cast<int>(k));
    // H = R W^T (W W^T + ridge I)^-1
    {
      const auto w = detail::as_eigen(out.items);
      const DenseMatrix rwt = exec.multiply_abt(r_id, out.items);
      out.users = ridge_solve(w * w.transpose(), options.ridge, rwt);
    }
    // W^T = R^T H (H^T H + ridge I)^-1
    {
      const auto h = detail::as_eigen(out.users);
      const DenseMatrix rth = exec.multiply_abt(rt_id, out.users.transpose());
      out.items = ridge_solve(h.transpose() * h, options.ridge, rth).transpose();
    }
    out.loss_trace.push_back(als_loss(ratings, out.users, out.items, options.ridge));
    out.iterations = k;
    const double fit =
        (detail::as_eigen(ratings) - detail::as_eigen(out.users) * detail::as_eigen(out.items)).squaredNorm();
    if (fit <= options.tolerance) break;
  }
  exec.begin_iteration(-1);
  return out;
}

DenseMatrix synth_ratings(std::size_t users, std::size_t items, std::uint64_t seed, double noise_std) {
  if (users == 0 || items == 0) throw std::invalid_argument("synth_ratings: dimensions must be >= 1");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("synth_ratings: noise_std must be >= 0");
  auto rng = make_stream(seed, Stream::kData, 3);
  std::uniform_int_distribution<int> base(1, 5);
  std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
  DenseMatrix r(users, items);
  for (double& v : r.data()) {
    const int b = base(rng);
    const double e = noise(rng);
    v = std::round(static_cast<double>(b) + (noise_std > 0.0 ? e : 0.0));
  }
  return r;
}

}  // namespace codedmm
