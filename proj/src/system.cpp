#include "alqr/system.hpp"

#include <cmath>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "alqr/errors.hpp"
#include "alqr/linalg.hpp"

namespace alqr {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Matrix standardGaussian(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix g(rows, cols);
  // Row-major fill so the draw order does not depend on storage order.
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      g(i, j) = normal(rng);
    }
  }
  return g;
}

NoiseStream::NoiseStream(const NoiseModel& model)
    : kind_(model.kind), rng_(model.seed), uniform_(-std::sqrt(3.0), std::sqrt(3.0)) {
  if (!isSymmetricPositiveDefinite(model.covariance)) {
    throw Error(ErrorCode::BadCovariance, "noise covariance must be symmetric positive definite");
  }
  Eigen::LLT<Matrix> llt(symmetrized(model.covariance));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::BadCovariance, "Cholesky factorization of the covariance failed");
  }
  factor_ = llt.matrixL();
}

Vector NoiseStream::next() {
  const Index p = factor_.rows();
  Vector z(p);
  for (Index i = 0; i < p; ++i) {
    z(i) = kind_ == NoiseKind::Gaussian ? normal_(rng_) : uniform_(rng_);
  }
  return factor_ * z;
}

Vector NoiseStream::uniformBound() const {
  return std::sqrt(3.0) * factor_.cwiseAbs().rowwise().sum();
}

std::vector<Vector> drawNoise(const NoiseModel& model, Index horizon) {
  if (horizon < 1) {
    throw Error(ErrorCode::InvalidConfig, "noise horizon must be >= 1");
  }
  NoiseStream stream(model);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (Index t = 0; t < horizon; ++t) {
    out.push_back(stream.next());
  }
  return out;
}

std::uint64_t noiseFingerprint(std::span<const Vector> noises) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Vector& w : noises) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(w.data());
    for (std::size_t i = 0; i < static_cast<std::size_t>(w.size()) * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

Trajectory simulate(const DynamicsParameter& theta0, const CostSpec& cost, Policy& policy,
                    std::span<const Vector> noises, const Vector& x0) {
  validateDimensions(theta0);
  const Index p = theta0.stateDim();
  const Index r = theta0.inputDim();
  if (x0.size() != p) {
    throw Error(ErrorCode::DimensionMismatch, "x0 must have p entries");
  }

  Trajectory traj;
  const std::size_t n = noises.size();
  traj.states.reserve(n + 1);
  traj.inputs.reserve(n);
  traj.noises.reserve(n);
  traj.costs.reserve(n);
  traj.gains.reserve(n);
  traj.states.push_back(x0);
  bool linear = true;

  for (std::size_t t = 0; t < n; ++t) {
    const History history{traj.states, traj.inputs};
    Action action = policy.act(history);
    if (action.input.size() != r) {
      throw Error(ErrorCode::DimensionMismatch, "policy returned an input of the wrong size");
    }
    if (noises[t].size() != p) {
      throw Error(ErrorCode::DimensionMismatch, "noise vector must have p entries");
    }
    const Vector& x = traj.states.back();
    Vector next = theta0.a * x + theta0.b * action.input + noises[t];
    if (!next.allFinite() || !action.input.allFinite()) {
      traj.diverged = true;
      break;
    }
    const double c = x.dot(cost.q * x) + action.input.dot(cost.r * action.input);
    const bool blewUp = next.norm() > kDivergenceThreshold;

    traj.costs.push_back(c);
    traj.noises.push_back(noises[t]);
    if (linear && action.gain) {
      traj.gains.push_back(std::move(*action.gain));
    } else {
      linear = false;
    }
    traj.inputs.push_back(std::move(action.input));
    traj.states.push_back(std::move(next));
    if (blewUp) {
      traj.diverged = true;
      break;
    }
  }
  if (!linear) {
    traj.gains.clear();
  }
  traj.noiseTag = noiseFingerprint(traj.noises);
  return traj;
}

std::pair<Trajectory, Trajectory> simulateCoupled(const DynamicsParameter& theta0,
                                                  const CostSpec& cost, Policy& policy,
                                                  Policy& optimal, std::span<const Vector> noises,
                                                  const Vector& x0) {
  Trajectory first = simulate(theta0, cost, policy, noises, x0);
  Trajectory second = simulate(theta0, cost, optimal, noises, x0);
  return {std::move(first), std::move(second)};
}

namespace {

void writeNumber(std::ostream& out, double v) { out << std::setprecision(17) << v; }

std::vector<std::string> splitCsv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back();
  }
  return cells;
}

}  // namespace

void writeTrajectoryCsv(std::ostream& out, const Trajectory& traj, bool includeGains) {
  if (traj.states.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "empty trajectory");
  }
  if (includeGains && !traj.hasGains()) {
    throw Error(ErrorCode::MissingGains, "trajectory has no per-step gain record");
  }
  const Index p = traj.states.front().size();
  const Index r = traj.inputs.empty() ? (traj.gains.empty() ? 0 : traj.gains.front().rows())
                                      : traj.inputs.front().size();
  out << "t";
  for (Index i = 1; i <= p; ++i) out << ",x_" << i;
  for (Index i = 1; i <= r; ++i) out << ",u_" << i;
  out << ",cost";
  if (includeGains) {
    for (Index i = 1; i <= r; ++i)
      for (Index j = 1; j <= p; ++j) out << ",L_" << i << "_" << j;
  }
  out << "\n";

  const Index n = traj.horizon();
  for (Index t = 0; t <= n; ++t) {
    out << t;
    const Vector& x = traj.states[static_cast<std::size_t>(t)];
    for (Index i = 0; i < p; ++i) {
      out << ",";
      writeNumber(out, x(i));
    }
    const bool last = t == n;
    for (Index i = 0; i < r; ++i) {
      out << ",";
      if (!last) writeNumber(out, traj.inputs[static_cast<std::size_t>(t)](i));
    }
    out << ",";
    if (!last) writeNumber(out, traj.costs[static_cast<std::size_t>(t)]);
    if (includeGains) {
      for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < p; ++j) {
          out << ",";
          if (!last) writeNumber(out, traj.gains[static_cast<std::size_t>(t)](i, j));
        }
    }
    out << "\n";
  }
}

Trajectory readTrajectoryCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::Io, "trajectory CSV is empty");
  }
  const auto header = splitCsv(line);
  if (header.empty() || header.front() != "t") {
    throw Error(ErrorCode::Io, "trajectory CSV must start with a 't' column");
  }
  Index p = 0, r = 0, gainCols = 0;
  bool sawCost = false;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h.rfind("x_", 0) == 0) ++p;
    else if (h.rfind("u_", 0) == 0) ++r;
    else if (h == "cost") sawCost = true;
    else if (h.rfind("L_", 0) == 0) ++gainCols;
    else throw Error(ErrorCode::Io, "unknown trajectory column '" + h + "'");
  }
  if (p == 0 || r == 0 || !sawCost || (gainCols != 0 && gainCols != p * r)) {
    throw Error(ErrorCode::Io, "trajectory CSV header is malformed");
  }

  Trajectory traj;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = splitCsv(line);
    if (static_cast<Index>(cells.size()) != 1 + p + r + 1 + gainCols) {
      throw Error(ErrorCode::Io, "trajectory row has the wrong number of fields");
    }
    Vector x(p);
    for (Index i = 0; i < p; ++i) x(i) = std::stod(cells[static_cast<std::size_t>(1 + i)]);
    traj.states.push_back(x);
    if (cells[static_cast<std::size_t>(1 + p)].empty()) {
      break;  // terminal row: x(n) only
    }
    Vector u(r);
    for (Index i = 0; i < r; ++i) u(i) = std::stod(cells[static_cast<std::size_t>(1 + p + i)]);
    traj.inputs.push_back(u);
    traj.costs.push_back(std::stod(cells[static_cast<std::size_t>(1 + p + r)]));
    if (gainCols > 0) {
      Matrix g(r, p);
      std::size_t c = static_cast<std::size_t>(2 + p + r);
      for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < p; ++j) g(i, j) = std::stod(cells[c++]);
      traj.gains.push_back(g);
    }
  }
  if (traj.states.size() != traj.inputs.size() + 1) {
    throw Error(ErrorCode::Io, "trajectory CSV must end with a terminal x(n) row");
  }
  return traj;
}

void reconstructNoise(Trajectory& traj, const DynamicsParameter& theta0) {
  traj.noises.clear();
  for (std::size_t t = 0; t < traj.inputs.size(); ++t) {
    traj.noises.push_back(traj.states[t + 1] - theta0.a * traj.states[t] -
                          theta0.b * traj.inputs[t]);
  }
  traj.noiseTag = noiseFingerprint(traj.noises);
}

}  // namespace alqr
