// Copyright 2026 The rspcert Authors
// SPDX-License-Identifier: Apache-2.0

// Ideal two-qubit Bell scenarios: density matrices, projective settings, exact outcome
// tables and seeded event sampling.
//
// Conventions:
//  * computational basis is the z eigenbasis, |0> = |up>_z; the two-qubit index is 2a + b
//    with Alice's qubit first;
//  * outcome 0 of a setting with Bloch vector n is the projector (I + n.sigma)/2.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rspcert/chsh.hpp"
#include "rspcert/events.hpp"
#include "rspcert/witness.hpp"

namespace rspcert {

using Complex = std::complex<double>;
using Qubit = Eigen::Matrix2cd;
using TwoQubit = Eigen::Matrix4cd;

namespace pauli {
inline Qubit x() { return (Qubit() << 0, 1, 1, 0).finished(); }
inline Qubit y() { return (Qubit() << 0, Complex(0, -1), Complex(0, 1), 0).finished(); }
inline Qubit z() { return (Qubit() << 1, 0, 0, -1).finished(); }
}  // namespace pauli

inline TwoQubit kron(const Qubit& lhs, const Qubit& rhs) {
  TwoQubit out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = lhs(i, j) * rhs;
  return out;
}

inline Qubit bloch_operator(const Eigen::Vector3d& n) {
  return n.x() * pauli::x() + n.y() * pauli::y() + n.z() * pauli::z();
}

class TwoQubitState {
 public:
  static constexpr double kTolerance = 1e-12;
  static constexpr double kEigenTolerance = 1e-10;

  /// Throws std::invalid_argument unless rho is Hermitian, unit-trace and PSD.
  explicit TwoQubitState(const TwoQubit& rho) : rho_(rho) {
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kTolerance)
      throw std::invalid_argument("density matrix is not Hermitian");
    if (std::abs(rho_.trace() - Complex(1.0)) > kTolerance)
      throw std::invalid_argument("density matrix does not have unit trace");
    Eigen::SelfAdjointEigenSolver<TwoQubit> solver(rho_);
    if (solver.eigenvalues().minCoeff() < -kEigenTolerance)
      throw std::invalid_argument("density matrix is not positive semidefinite");
  }

  const TwoQubit& rho() const { return rho_; }
  double purity() const { return (rho_ * rho_).trace().real(); }
  Eigen::Vector4d eigenvalues() const {
    return Eigen::SelfAdjointEigenSolver<TwoQubit>(rho_).eigenvalues();
  }

 private:
  TwoQubit rho_;
};

/// Rank-1 projective measurement along a unit Bloch vector.
class MeasurementSetting {
 public:
  explicit MeasurementSetting(const Eigen::Vector3d& bloch) : bloch_(bloch) {
    if (std::abs(bloch_.norm() - 1.0) > 1e-12)
      throw std::invalid_argument("measurement Bloch vector must have unit norm");
  }

  const Eigen::Vector3d& bloch() const { return bloch_; }

  Qubit projector(int outcome) const {
    const double sign = outcome == 0 ? 1.0 : -1.0;
    return 0.5 * (Qubit::Identity() + sign * bloch_operator(bloch_));
  }

 private:
  Eigen::Vector3d bloch_;
};

struct Scenario {
  TwoQubitState state;
  std::array<MeasurementSetting, 2> alice;
  std::array<MeasurementSetting, 2> bob;
  std::string name;
  StateLabel label = StateLabel::unlabeled;
};

enum class BellState { psi_plus, psi_minus };

/// |psi+-> = (|up>_x|down>_x +- |down>_x|up>_x)/sqrt2 with |up>_x = (|0>+|1>)/sqrt2 and
/// |down>_x = i(|0>-|1>)/sqrt2, expressed in the z basis.
inline Eigen::Vector4cd bell_vector(BellState which) {
  const double r = 1.0 / std::numbers::sqrt2;
  const Eigen::Vector2cd up_x(r, r);
  const Eigen::Vector2cd down_x(Complex(0, r), Complex(0, -r));
  const auto product = [](const Eigen::Vector2cd& a, const Eigen::Vector2cd& b) {
    Eigen::Vector4cd v;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) v(2 * i + j) = a(i) * b(j);
    return v;
  };
  const double sign = which == BellState::psi_plus ? 1.0 : -1.0;
  return r * (product(up_x, down_x) + sign * product(down_x, up_x));
}

inline TwoQubitState bell_state(BellState which) {
  const auto v = bell_vector(which);
  return TwoQubitState(v * v.adjoint());
}

/// z |psi+><psi+| + (1-z)/4 I
inline TwoQubitState werner_state(double z) {
  if (!(z >= 0.0 && z <= 1.0)) throw std::invalid_argument("Werner parameter must lie in [0,1]");
  const auto v = bell_vector(BellState::psi_plus);
  return TwoQubitState(z * v * v.adjoint() + (1.0 - z) / 4.0 * TwoQubit::Identity());
}

inline TwoQubitState maximally_mixed_state() { return werner_state(0.0); }

/// p(ab|xy) = Tr(rho (P_a|x (x) P_b|y)), indexed [a][b].
inline std::array<std::array<double, 2>, 2> outcome_probabilities(const Scenario& sc, int x, int y) {
  std::array<std::array<double, 2>, 2> table{};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      table[a][b] =
          (sc.state.rho() * kron(sc.alice[x].projector(a), sc.bob[y].projector(b))).trace().real();
  return table;
}

inline JointProbabilities exact_distribution(const Scenario& sc) {
  JointProbabilities p;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const auto table = outcome_probabilities(sc, x, y);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) p.p[a][b][x][y] = table[a][b];
    }
  return p;
}

/// Post-measurement state of the remote qubit after the preparing party measures `setting`
/// and obtains `outcome`. Throws AnalysisError on a zero-probability branch.
inline Qubit conditional_state(const Scenario& sc, PreparingSide side, int setting, int outcome) {
  const bool alice = side == PreparingSide::alice_prepares;
  const Qubit proj = (alice ? sc.alice : sc.bob)[setting].projector(outcome);
  const TwoQubit lift = alice ? kron(proj, Qubit::Identity()) : kron(Qubit::Identity(), proj);
  const TwoQubit post = lift * sc.state.rho() * lift;
  Qubit reduced = Qubit::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        reduced(i, j) += alice ? post(2 * k + i, 2 * k + j) : post(2 * i + k, 2 * j + k);
  const double weight = reduced.trace().real();
  if (!(weight > 1e-15)) throw AnalysisError("zero-probability preparation branch");
  return reduced / weight;
}

/// rho_{a|x} on Bob's qubit.
inline Qubit conditional_state(const Scenario& sc, int x, int a) {
  return conditional_state(sc, PreparingSide::alice_prepares, x, a);
}

/// p(b|x',y) = Tr(rho_{a|x} M_{b|y}) for x' = 2x + a.
inline double rsp_probability(const Scenario& sc, int x, int a, int y, int b) {
  return (conditional_state(sc, x, a) * sc.bob[y].projector(b)).trace().real();
}

/// Exact RSP table through the conditional-state route, without sampling.
inline RspTable exact_rsp_table(const Scenario& sc, PreparingSide side) {
  const bool alice = side == PreparingSide::alice_prepares;
  RspTable table;
  table.side = side;
  for (int s = 0; s < 2; ++s)
    for (int o = 0; o < 2; ++o) {
      const Qubit state = conditional_state(sc, side, s, o);
      for (int t = 0; t < 2; ++t)
        table.p1[2 * s + o][t] =
            (state * (alice ? sc.bob : sc.alice)[t].projector(1)).trace().real();
      // marginal of the preparing party; no-signaling makes it independent of the remote setting
      const auto joint = alice ? outcome_probabilities(sc, s, 0) : outcome_probabilities(sc, 0, s);
      table.preparation_weights[s][o] = alice ? joint[o][0] + joint[o][1] : joint[0][o] + joint[1][o];
    }
  return table;
}

inline double analytic_s(const Scenario& sc) { return chsh_s(exact_distribution(sc)).S; }

inline double analytic_w(const Scenario& sc, PreparingSide side) {
  return witness_value(exact_rsp_table(sc, side));
}

inline double analytic_w_rsp(const Scenario& sc) {
  return std::min(analytic_w(sc, PreparingSide::alice_prepares),
                  analytic_w(sc, PreparingSide::bob_prepares));
}

/// SU(2) element exp(-i angle/2 axis.sigma), which rotates Bloch vectors by `angle` about `axis`.
inline Qubit su2_rotation(const Eigen::Vector3d& axis, double angle) {
  const Eigen::Vector3d n = axis.normalized();
  return std::cos(angle / 2.0) * Qubit::Identity() -
         Complex(0, std::sin(angle / 2.0)) * bloch_operator(n);
}

/// Applies the same local rotation to both qubits and to every measurement direction.
inline Scenario rotate(const Scenario& sc, const Eigen::Vector3d& axis, double angle) {
  const Qubit u = su2_rotation(axis, angle);
  const TwoQubit uu = kron(u, u);
  TwoQubit rho = uu * sc.state.rho() * uu.adjoint();
  rho = 0.5 * (rho + rho.adjoint());
  const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  const auto turn = [&](const MeasurementSetting& m) {
    return MeasurementSetting((r * m.bloch()).normalized());
  };
  return Scenario{TwoQubitState(rho),
                  {turn(sc.alice[0]), turn(sc.alice[1])},
                  {turn(sc.bob[0]), turn(sc.bob[1])},
                  sc.name,
                  sc.label};
}

/// Alice {z, x}; Bob {(z + s x)/sqrt2, (z - s x)/sqrt2} with the sign s that maximizes S for
/// the given state (s = +1 for the singlet, s = -1 for psi+ and the Werner family).
inline Scenario chsh_optimal(const TwoQubitState& state, StateLabel label = StateLabel::unlabeled) {
  const Eigen::Vector3d x_axis = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d z_axis = Eigen::Vector3d::UnitZ();
  const auto build = [&](double s) {
    return Scenario{state,
                    {MeasurementSetting(z_axis), MeasurementSetting(x_axis)},
                    {MeasurementSetting((z_axis + s * x_axis).normalized()),
                     MeasurementSetting((z_axis - s * x_axis).normalized())},
                    "chsh_optimal",
                    label};
  };
  Scenario plus = build(1.0);
  Scenario minus = build(-1.0);
  return analytic_s(minus) > analytic_s(plus) + 1e-12 ? minus : plus;
}

/// Both parties measure {x, z}.
inline Scenario bbm92(const TwoQubitState& state, StateLabel label = StateLabel::unlabeled) {
  const Eigen::Vector3d x_axis = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d z_axis = Eigen::Vector3d::UnitZ();
  return Scenario{state,
                  {MeasurementSetting(x_axis), MeasurementSetting(z_axis)},
                  {MeasurementSetting(x_axis), MeasurementSetting(z_axis)},
                  "bbm92",
                  label};
}

inline std::optional<Scenario> make_preset(std::string_view name, const TwoQubitState& state,
                                           StateLabel label = StateLabel::unlabeled) {
  if (name == "chsh_optimal") return chsh_optimal(state, label);
  if (name == "bbm92") return bbm92(state, label);
  return std::nullopt;
}

/// Scenario description:
///   {"state": {"werner": 0.8} | {"bell": "psi_plus"|"psi_minus"},
///    "preset": "chsh_optimal"|"bbm92"}                       or
///   {"state": ..., "alice": [[x,y,z],[x,y,z]], "bob": [[x,y,z],[x,y,z]], "name": "..."}
inline Scenario scenario_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("state")) throw std::invalid_argument("scenario needs a 'state'");
  const auto& st = doc.at("state");
  std::optional<TwoQubitState> state;
  StateLabel label = StateLabel::unlabeled;
  if (st.contains("werner")) {
    state = werner_state(st.at("werner").get<double>());
  } else if (st.contains("bell")) {
    const auto which = st.at("bell").get<std::string>();
    if (which == "psi_plus") {
      state = bell_state(BellState::psi_plus);
      label = StateLabel::psi_plus;
    } else if (which == "psi_minus") {
      state = bell_state(BellState::psi_minus);
      label = StateLabel::psi_minus;
    } else {
      throw std::invalid_argument("unknown Bell state '" + which + "'");
    }
  } else {
    throw std::invalid_argument("state must be {\"werner\": z} or {\"bell\": name}");
  }
  if (doc.contains("preset")) {
    const auto name = doc.at("preset").get<std::string>();
    auto sc = make_preset(name, *state, label);
    if (!sc) throw std::invalid_argument("unknown preset '" + name + "'");
    return *sc;
  }
  const auto setting = [](const nlohmann::json& v) {
    if (!v.is_array() || v.size() != 3) throw std::invalid_argument("setting must be a 3-vector");
    return MeasurementSetting(Eigen::Vector3d(v[0].get<double>(), v[1].get<double>(), v[2].get<double>()));
  };
  const auto& alice = doc.at("alice");
  const auto& bob = doc.at("bob");
  if (alice.size() != 2 || bob.size() != 2)
    throw std::invalid_argument("each party needs exactly two settings");
  return Scenario{*state,
                  {setting(alice[0]), setting(alice[1])},
                  {setting(bob[0]), setting(bob[1])},
                  doc.value("name", std::string("custom")),
                  label};
}

/// I.i.d. trials with uniform settings; deterministic for a given seed.
inline std::vector<EventRecord> sample_events(const Scenario& sc, std::uint64_t n,
                                              std::uint64_t seed) {
  std::array<std::array<std::array<double, 3>, 2>, 2> cumulative{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const auto t = outcome_probabilities(sc, x, y);
      cumulative[x][y] = {t[0][0], t[0][0] + t[0][1], t[0][0] + t[0][1] + t[1][0]};
    }
  std::mt19937_64 rng(seed);
  std::vector<EventRecord> events;
  events.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t word = rng();
    const int x = int(word >> 63);
    const int y = int((word >> 62) & 1);
    const double u = double(rng() >> 11) * 0x1.0p-53;
    const auto& c = cumulative[x][y];
    const int cell = u < c[0] ? 0 : u < c[1] ? 1 : u < c[2] ? 2 : 3;
    events.push_back(EventRecord{i, std::uint8_t(x), std::uint8_t(y), std::uint8_t(cell >> 1),
                                 std::uint8_t(cell & 1), sc.label});
  }
  return events;
}

/// Exact probabilities scaled to n_per_setting events per setting pair and rounded.
inline CountsTable expected_counts(const JointProbabilities& p, std::uint64_t n_per_setting) {
  CountsTable counts;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          counts.n(a, b, x, y) =
              static_cast<std::uint64_t>(std::llround(p(a, b, x, y) * double(n_per_setting)));
  return counts;
}

}  // namespace rspcert
