#include <gtest/gtest.h>

#include "tdiff/config.hpp"

namespace tdiff {
namespace {

TEST(Config, PresetExpandsToParameterRow) {
  RunConfig cfg;
  apply_config_text(cfg, "[experiment]\npreset = c\n");
  ASSERT_TRUE(cfg.preset.has_value());
  EXPECT_EQ(*cfg.preset, 'c');
  EXPECT_EQ(cfg.experiment.drop_height, 2.05e-3);
  EXPECT_EQ(cfg.experiment.bounce_time, 19.5e-3);
  EXPECT_EQ(cfg.experiment.modulation.base_detuning_hz, 1.9e9);
  EXPECT_EQ(cfg.experiment.modulation.detuning_swing_hz, 163e6);
}

TEST(Config, ExplicitKeysOverridePresetRegardlessOfOrder) {
  RunConfig cfg;
  apply_config_text(cfg, "[experiment]\ndrop_height = 3e-3\npreset = a\n");
  EXPECT_EQ(cfg.experiment.drop_height, 3e-3);
  EXPECT_EQ(cfg.experiment.modulation.detuning_swing_hz, 130e6);
}

TEST(Config, CommandLinePresetWinsOverFilePreset) {
  RunConfig cfg;
  apply_config_text(cfg, "[experiment]\npreset = a\n", 'c');
  EXPECT_EQ(*cfg.preset, 'c');
  EXPECT_EQ(cfg.experiment.drop_height, 2.05e-3);
}

TEST(Config, AllSectionsParse) {
  RunConfig cfg;
  apply_config_text(cfg,
                    "[constants]\ng = 9.80665\n"
                    "[experiment]\nkappa_inv = 1e-7\nmod_frequency_hz = 4e5\nbarrier_height = 1e-27\n"
                    "[oracle]\nk_over_kappa = 15\nsteps = 100\ncheck_convergence = false\nfrom_experiment = yes\n"
                    "[imaging]\nseed = 99\natoms = 500\nshot_noise = true\npgm_format = text\n");
  EXPECT_EQ(cfg.constants.g, 9.80665);
  EXPECT_EQ(cfg.experiment.kappa_inv, 1e-7);
  EXPECT_EQ(cfg.experiment.modulation.mod_frequency_hz, 4e5);
  EXPECT_EQ(cfg.experiment.barrier_height.value(), 1e-27);
  EXPECT_EQ(cfg.oracle.k_over_kappa, 15.0);
  EXPECT_EQ(cfg.oracle.steps, 100u);
  EXPECT_FALSE(cfg.oracle.check_convergence);
  EXPECT_TRUE(cfg.oracle_from_experiment);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.imaging.atoms, 500u);
  EXPECT_TRUE(cfg.imaging.shot_noise);
  EXPECT_FALSE(cfg.binary_pgm);
}

TEST(Config, RejectsUnknownKeysAndSections) {
  RunConfig cfg;
  EXPECT_THROW(apply_config_text(cfg, "[experiment]\ndrop_hieght = 1\n"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "[camera]\npitch = 1\n"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "seed = 1\n"), ConfigError);
}

TEST(Config, RejectsMalformedValues) {
  RunConfig cfg;
  EXPECT_THROW(apply_config_text(cfg, "[experiment]\ndrop_height = 3.6mm\n"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "[experiment]\ndrop_height = nan\n"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "[experiment]\npreset = d\n"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "[imaging]\natoms = -5\n"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "[oracle]\ncheck_convergence = maybe\n"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "[imaging\nseed = 1\n"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "[imaging]\nseed = 1\nseed = 2\n"), ConfigError);
}

TEST(Config, ModulationDepthOverride) {
  RunConfig cfg;
  apply_preset(cfg, 'a');
  set_modulation_depth(cfg.experiment.modulation, 0.1);
  EXPECT_NEAR(modulation_depth(cfg.experiment.modulation), 0.1, 1e-15);
  EXPECT_THROW(set_modulation_depth(cfg.experiment.modulation, 1.0), ConfigError);
}

TEST(Config, ValidationSurfacesWarningsAndErrors) {
  RunConfig cfg;
  apply_config_text(cfg, "[experiment]\npreset = a\nfall_time = 0.05\n");
  const auto warnings = validate_config(cfg);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("free fall"), std::string::npos);
  apply_config_text(cfg, "[experiment]\ndrop_height = -1\n");
  EXPECT_THROW(validate_config(cfg), DomainError);
}

}  // namespace
}  // namespace tdiff
