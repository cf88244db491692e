#include "qident/system.hpp"

#include <cmath>

namespace qid {

std::vector<std::pair<int, int>> transition_pairs(int dim) {
  std::vector<std::pair<int, int>> out;
  out.reserve(num_pairs(dim));
  for (int l = 1; l < dim; ++l)
    for (int k = l + 1; k <= dim; ++k) out.emplace_back(l, k);
  return out;
}

int pair_index(int l, int k, int dim) {
  if (l < 1 || k <= l || k > dim)
    throw std::invalid_argument("pair_index: need 1 <= l < k <= dim");
  // pairs with first element < l come first
  int idx = 0;
  for (int a = 1; a < l; ++a) idx += dim - a;
  return idx + (k - l - 1);
}

int num_pairs(int dim) { return dim * (dim - 1) / 2; }

CMat dipole_from_theta(const std::vector<double>& theta, int dim) {
  if (static_cast<int>(theta.size()) != num_pairs(dim))
    throw std::invalid_argument("dipole_from_theta: theta size mismatch");
  CMat mu = CMat::Zero(dim, dim);
  const auto pairs = transition_pairs(dim);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    mu(pairs[i].first - 1, pairs[i].second - 1) += theta[i];
    mu(pairs[i].second - 1, pairs[i].first - 1) += theta[i];
  }
  return mu;
}

CMat QuantumSystem::hamiltonian() const {
  if (omega.size() != dim)
    throw std::invalid_argument("QuantumSystem: omega size != dim");
  CMat d = CMat::Zero(dim, dim);
  for (int j = 0; j < dim; ++j) d(j, j) = omega[j];
  if (!basis_change) return d;
  return basis_change->adjoint() * d * (*basis_change);
}

CMat QuantumSystem::projector(int j) const {
  if (j < 1 || j > dim) throw std::invalid_argument("projector: index");
  CMat p = CMat::Zero(dim, dim);
  p(j - 1, j - 1) = 1.0;
  return p;
}

std::vector<double> QuantumSystem::transition_frequencies() const {
  std::vector<double> out;
  for (const auto& [l, k] : transition_pairs(dim))
    out.push_back(std::abs(omega[l - 1] - omega[k - 1]));
  return out;
}

DelayLine::DelayLine(int delay_steps, const RVec& y0)
    : capacity_(static_cast<std::size_t>(delay_steps) + 1) {
  if (delay_steps < 0) throw std::invalid_argument("DelayLine: negative delay");
  for (std::size_t i = 0; i < capacity_; ++i) buf_.push_back(y0);
}

void DelayLine::push(const RVec& y) {
  buf_.push_back(y);
  if (buf_.size() > capacity_) buf_.pop_front();
}

const RVec& DelayLine::delayed() const {
  if (buf_.size() < capacity_)
    throw std::runtime_error("insufficient-history");
  return buf_.front();
}

CMat true_rhs(const CMat& rho, double u, const QuantumSystem& sys) {
  if (rho.rows() != sys.dim || rho.cols() != sys.dim)
    throw std::invalid_argument("true_rhs: dimension mismatch");
  const CMat G = sys.hamiltonian() + u * sys.dipole();
  return cplx(0.0, -1.0) * commutator(G, rho);
}

RVec populations(const CMat& rho) {
  RVec y(rho.rows());
  for (int j = 0; j < rho.rows(); ++j) y[j] = rho(j, j).real();
  return y;
}

double field_value(const ControlField& field, double t, double noise_draw) {
  double u = 0.0;
  for (const auto& tone : field.tones) {
    const double arg = tone.frequency * t;
    const double w =
        tone.waveform == Waveform::Cos ? std::cos(arg) : std::sin(arg);
    u += (tone.amplitude + field.amplitude_bias) * w;
  }
  return u + field.noise_sigma * noise_draw;
}

RVec measured_output(const DelayLine& line, const MeasurementModel& model,
                     const RVec& draws) {
  RVec y = line.delayed();
  if (draws.size() != y.size())
    throw std::invalid_argument("measured_output: draw count mismatch");
  for (int j = 0; j < y.size(); ++j)
    y[j] += model.bias + model.noise_sigma * draws[j];
  return y;
}

void rehermitize_renormalize(CMat& rho) {
  rho = ((rho + rho.adjoint()) / 2.0).eval();
  const double tr = rho.trace().real();
  if (tr != 0.0) rho /= tr;
}

double purity(const CMat& rho) { return (rho * rho).trace().real(); }

}  // namespace qid
