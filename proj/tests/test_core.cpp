#include <gtest/gtest.h>

#include <random>

#include "tdiff/core.hpp"

namespace tdiff {
namespace {

TEST(ModulationDepth, PresetARowIsSixPointTwoPercent) {
  ModulationSettings s;
  s.base_detuning_hz = 2.1e9;
  s.detuning_swing_hz = 130e6;
  const double eps = modulation_depth(s);
  EXPECT_NEAR(eps, 130.0 / 2100.0, 1e-15);
  EXPECT_NEAR(eps, 0.062, 5e-4);
}

TEST(ModulationDepth, NoModulationGivesZero) {
  ModulationSettings s;
  s.power_swing = 0.0;
  s.detuning_swing_hz = 0.0;
  EXPECT_EQ(modulation_depth(s), 0.0);
}

TEST(ModulationDepth, PowerTermOneTwentyFifthOfDetuningTerm) {
  // eps_delta = -0.0776, eps_P = +0.0031 -> |0.0031 - 0.0776| = 0.0745
  ModulationSettings s;
  s.base_power = 50e-3;
  s.power_swing = 0.0031 * 50e-3;
  s.base_detuning_hz = 2.1e9;
  s.detuning_swing_hz = 0.0776 * 2.1e9;
  EXPECT_NEAR(s.power_depth(), 0.0031, 1e-15);
  EXPECT_NEAR(s.detuning_depth(), -0.0776, 1e-15);
  EXPECT_NEAR(modulation_depth(s), 0.0745, 1e-12);
}

TEST(ModulationDepth, SignFlipIsNotASymmetryInGeneral) {
  ModulationSettings s;
  s.power_swing = 0.0031 * s.base_power;
  s.detuning_swing_hz = 0.0776 * s.base_detuning_hz;
  const double forward = modulation_depth(s);
  ModulationSettings flipped = s;
  flipped.power_swing = -s.power_swing;
  EXPECT_NEAR(modulation_depth(flipped), 0.0807, 1e-12);
  EXPECT_GT(std::abs(modulation_depth(flipped) - forward), 1e-3);

  // Flipping both swings preserves |eps_P + eps_delta|.
  ModulationSettings both = s;
  both.power_swing = -s.power_swing;
  both.detuning_swing_hz = -s.detuning_swing_hz;
  EXPECT_NEAR(modulation_depth(both), forward, 1e-15);

  // With eps_P = 0 the sign of the detuning swing is irrelevant.
  ModulationSettings only_detuning = s;
  only_detuning.power_swing = 0.0;
  ModulationSettings only_detuning_flipped = only_detuning;
  only_detuning_flipped.detuning_swing_hz = -only_detuning.detuning_swing_hz;
  EXPECT_EQ(modulation_depth(only_detuning), modulation_depth(only_detuning_flipped));
}

TEST(ModulationDepth, RejectsZeroBases) {
  ModulationSettings s;
  s.base_detuning_hz = 0.0;
  EXPECT_THROW(modulation_depth(s), DomainError);
  ModulationSettings p;
  p.base_power = 0.0;
  EXPECT_THROW(modulation_depth(p), DomainError);
}

TEST(ModulationDepth, RejectsStrongModulation) {
  ModulationSettings s;
  s.detuning_swing_hz = 1.5 * s.base_detuning_hz;
  EXPECT_THROW(modulation_depth(s), DomainError);
}

TEST(MirrorAmplitude, PublishedAmplitudes) {
  const double kappa = 1.0 / 93e-9;
  EXPECT_NEAR(mirror_amplitude(0.062, kappa), 2.9e-9, 0.05e-9);
  EXPECT_NEAR(mirror_amplitude(0.078, kappa), 3.6e-9, 0.05e-9);
  EXPECT_NEAR(mirror_amplitude(0.086, kappa), 4.0e-9, 0.05e-9);
  EXPECT_EQ(mirror_amplitude(0.0, kappa), 0.0);
}

TEST(MirrorAmplitude, RejectsNonPositiveKappa) {
  EXPECT_THROW(mirror_amplitude(0.05, 0.0), DomainError);
  EXPECT_THROW(mirror_amplitude(0.05, -1.0), DomainError);
  EXPECT_THROW(mirror_amplitude(1.0, 1.0), DomainError);
}

TEST(MirrorAmplitude, LinearInDepthAndDecayLength) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> eps_dist(0.0, 0.45);
  std::uniform_real_distribution<double> len_dist(10e-9, 500e-9);
  for (int i = 0; i < 200; ++i) {
    const double eps = eps_dist(rng);
    const double len = len_dist(rng);
    const double base = mirror_amplitude(eps, 1.0 / len);
    EXPECT_NEAR(mirror_amplitude(2.0 * eps, 1.0 / len), 2.0 * base, 1e-15 * base + 1e-30);
    EXPECT_NEAR(mirror_amplitude(eps, 1.0 / (3.0 * len)), 3.0 * base, 1e-15 * base + 1e-30);
  }
}

TEST(RecoilVelocity, RubidiumD2Line) {
  const ConstantsTable c;
  // hbar (2 pi / 780.24 nm) / M evaluated at 40 digits
  EXPECT_NEAR(recoil_velocity(c), 0.005884551051301624, 1e-15);
  ConstantsTable heavy = c;
  heavy.atom_mass *= 2.0;
  EXPECT_NEAR(recoil_velocity(heavy), 0.5 * recoil_velocity(c), 1e-18);
}

TEST(Constants, ValidateRejectsNonPositive) {
  ConstantsTable c;
  EXPECT_TRUE(c.validate().empty());
  c.g = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  ConstantsTable other;
  other.atom_mass = 1.0e-25;
  EXPECT_EQ(other.validate().size(), 1u);
}

TEST(MirrorModel, AmplitudeIsDerivedFromDepth) {
  const ConstantsTable c;
  const MirrorModel m = experiment_preset('a').mirror(c);
  EXPECT_DOUBLE_EQ(m.vib_amplitude(), m.mod_depth / (2.0 * m.kappa));
  EXPECT_NEAR(m.barrier_height, 4.0 * c.atom_mass * c.g * 3.6e-3, 1e-40);
  EXPECT_NEAR(m.omega, kTwoPi * 500e3, 1e-9);
}

TEST(ExperimentParams, PresetsAreConsistentWithFreeFall) {
  const ConstantsTable c;
  for (char id : {'a', 'b', 'c'}) {
    const ExperimentParams p = experiment_preset(id);
    EXPECT_TRUE(p.validate(c).empty()) << id;
    EXPECT_NEAR(p.mirror(c).mod_depth, published_mod_depth(id), 5e-4) << id;
  }
  EXPECT_THROW(experiment_preset('d'), ConfigError);
}

TEST(ExperimentParams, FallTimeMismatchIsAWarning) {
  const ConstantsTable c;
  ExperimentParams p = experiment_preset('a');
  p.fall_time = 30e-3;
  const auto warnings = p.validate(c);
  ASSERT_EQ(warnings.size(), 1u);
  p.drop_height = -1.0;
  EXPECT_THROW(p.validate(c), DomainError);
}

}  // namespace
}  // namespace tdiff
