#include <gtest/gtest.h>

#include <cmath>

#include "tdiff/kinematics.hpp"

namespace tdiff {
namespace {

const ConstantsTable kConstants;

// v = sqrt(2 g z0), k = M v / hbar and v_1 from energy conservation, evaluated
// at 40 significant digits for z0 = 3.6 mm, Omega / 2pi = 500 kHz.
constexpr double kSpeed36 = 0.26576681508420121036;
constexpr double kWavenumber36 = 363696460.18798909239;
constexpr double kFirstSidebandSpeed36 = 0.27426877713707694154;
constexpr double kSidebandSpacing36 = 11820861.278690728981;  // Omega M / (hbar k)

TEST(ImpactState, DeBroglieWavelengths) {
  EXPECT_NEAR(impact_state(3.6e-3, kConstants).de_broglie, 17e-9, 0.5e-9);
  EXPECT_NEAR(impact_state(2.05e-3, kConstants).de_broglie, 23e-9, 0.5e-9);
}

TEST(ImpactState, SpeedAndWavenumber) {
  const ImpactState s = impact_state(3.6e-3, kConstants);
  EXPECT_NEAR(s.speed, kSpeed36, 1e-14);
  EXPECT_NEAR(s.wavenumber / kWavenumber36, 1.0, 1e-13);
}

TEST(ImpactState, FieldsMutuallyConsistent) {
  for (double z0 : {1e-4, 2.05e-3, 3.6e-3, 0.1}) {
    const ImpactState s = impact_state(z0, kConstants);
    EXPECT_NEAR(s.wavenumber / (kConstants.atom_mass * s.speed / kConstants.hbar), 1.0, 1e-12);
    EXPECT_NEAR(s.de_broglie * s.wavenumber / kTwoPi, 1.0, 1e-12);
    EXPECT_NEAR(s.kinetic_energy / (0.5 * kConstants.atom_mass * s.speed * s.speed), 1.0, 1e-12);
  }
}

TEST(ImpactState, RejectsNonPositiveHeight) {
  EXPECT_THROW(impact_state(0.0, kConstants), DomainError);
  EXPECT_THROW(impact_state(-1e-3, kConstants), DomainError);
}

TEST(SidebandVelocity, CarrierUnchanged) {
  const ImpactState s = impact_state(3.6e-3, kConstants);
  EXPECT_EQ(sideband_velocity(s, 0, kTwoPi * 500e3, kConstants), s.speed);
}

TEST(SidebandVelocity, FirstSidebandAt500kHz) {
  const ImpactState s = impact_state(3.6e-3, kConstants);
  const double omega = kTwoPi * 500e3;
  const double v1 = sideband_velocity(s, 1, omega, kConstants);
  EXPECT_NEAR(v1, kFirstSidebandSpeed36, 1e-14);
  const double ratio = (v1 - s.speed) / recoil_velocity(kConstants);
  EXPECT_GE(ratio, 1.4);
  EXPECT_LE(ratio, 1.55);
}

TEST(SidebandVelocity, ForbiddenOrderNamesTheOrder) {
  const ImpactState s = impact_state(3.6e-3, kConstants);
  try {
    sideband_velocity(s, -20, kTwoPi * 500e3, kConstants);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("-20"), std::string::npos);
  }
}

TEST(SidebandWavenumber, LinearizedSpacing) {
  const ImpactState s = impact_state(3.6e-3, kConstants);
  const double omega = kTwoPi * 500e3;
  EXPECT_EQ(sideband_wavenumber_linearized(s, 0, omega, kConstants), s.wavenumber);
  const double dk = sideband_wavenumber_linearized(s, 1, omega, kConstants) - s.wavenumber;
  EXPECT_NEAR(dk / kSidebandSpacing36, 1.0, 1e-10);
  EXPECT_NEAR(dk, 1.18e7, 0.01e7);
}

TEST(SidebandWavenumber, TaylorRemainderBound) {
  // k_n = sqrt(k^2 + 2 n k dk) = k + n dk - (n dk)^2 / (2k) + O(dk^3)
  const ImpactState s = impact_state(3.6e-3, kConstants);
  const double omega = kTwoPi * 500e3;
  const double dk = omega * kConstants.atom_mass / (kConstants.hbar * s.wavenumber);
  for (int n : {-3, -2, -1, 1, 2, 3}) {
    const double linear = sideband_wavenumber_linearized(s, n, omega, kConstants);
    const double exact = kConstants.atom_mass * sideband_velocity(s, n, omega, kConstants) / kConstants.hbar;
    const double bound = (n * dk) * (n * dk) / (2.0 * s.wavenumber);
    EXPECT_LT(std::abs(linear - exact), 1.25 * bound) << n;
    EXPECT_GT(std::abs(linear - exact), 0.75 * bound) << n;
  }
}

TEST(SidebandWavenumber, RejectsLargeTransfer) {
  const ImpactState s = impact_state(3.6e-3, kConstants);
  EXPECT_THROW(sideband_wavenumber_linearized(s, 8, kTwoPi * 500e3, kConstants), DomainError);
}

TEST(DetectionPositions, ExpectedRowsAB) {
  const auto rows = detection_positions(experiment_preset('a'), -2, 2, kConstants);
  const auto expected = published_expected_positions('a');
  ASSERT_EQ(rows.size(), expected.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].order, expected[i].first);
    EXPECT_NEAR(rows[i].rel_position * 1e6, expected[i].second, 4.0) << rows[i].order;
  }
}

TEST(DetectionPositions, ExpectedRowC) {
  const auto rows = detection_positions(experiment_preset('c'), -1, 1, kConstants);
  const auto expected = published_expected_positions('c');
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_NEAR(rows[i].rel_position * 1e6, expected[i].second, 4.0) << rows[i].order;
  }
}

TEST(DetectionPositions, ZeroModulationFrequency) {
  ExperimentParams p = experiment_preset('a');
  p.modulation.mod_frequency_hz = 0.0;
  for (const auto& row : detection_positions(p, -3, 3, kConstants)) {
    EXPECT_EQ(row.rel_position, 0.0);
    EXPECT_EQ(row.energy_shift, 0.0);
  }
}

TEST(DetectionPositions, ForbiddenOrderIsAnError) {
  EXPECT_THROW(detection_positions(experiment_preset('a'), -30, 0, kConstants), DomainError);
}

TEST(DetectionPositions, MonotoneAndAsymmetric) {
  for (char id : {'a', 'c'}) {
    const auto rows = detection_positions(experiment_preset(id), -5, 5, kConstants);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      EXPECT_GT(rows[i].velocity, rows[i - 1].velocity);
      EXPECT_GT(rows[i].rel_position, rows[i - 1].rel_position);
    }
    for (int n = 1; n <= 5; ++n) {
      EXPECT_GT(std::abs(rows[static_cast<std::size_t>(5 - n)].rel_position),
                std::abs(rows[static_cast<std::size_t>(5 + n)].rel_position));
      EXPECT_DOUBLE_EQ(rows[static_cast<std::size_t>(5 + n)].energy_shift,
                       n * kConstants.hbar * kTwoPi * 500e3);
    }
  }
}

TEST(DetectionPositions, LinearInTimeOfFlight) {
  ExperimentParams p = experiment_preset('a');
  const auto base = detection_positions(p, -2, 2, kConstants);
  p.bounce_time *= 3.0;
  const auto longer = detection_positions(p, -2, 2, kConstants);
  for (std::size_t i = 0; i < base.size(); ++i) {
    EXPECT_NEAR(longer[i].rel_position, 3.0 * base[i].rel_position, 1e-15);
  }
}

TEST(DetectionPositions, SmallTransferLimit) {
  ExperimentParams p = experiment_preset('a');
  p.modulation.mod_frequency_hz = 50e3;
  const ImpactState s = impact_state(p.drop_height, kConstants);
  const double omega = p.modulation.omega();
  for (const auto& row : detection_positions(p, -3, 3, kConstants)) {
    if (row.order == 0) continue;
    ASSERT_LT(std::abs(row.order) * kConstants.hbar * omega / s.kinetic_energy, 0.02);
    const double approx = row.order * kConstants.hbar * omega / (kConstants.atom_mass * s.speed) * p.bounce_time;
    EXPECT_NEAR(row.rel_position / approx, 1.0, 0.01) << row.order;
  }
}

}  // namespace
}  // namespace tdiff
