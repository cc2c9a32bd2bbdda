#include <gtest/gtest.h>

#include <map>

#include "bohmstab/config.hpp"

using namespace bohmstab;

namespace {

ExperimentConfig expect_config_error(std::string_view text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config) << e.what();
    return {};
  }
  ADD_FAILURE() << "accepted: " << text;
  return {};
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const ExperimentConfig d;
  const std::string text = serialize_config(d);
  const ExperimentConfig back = parse_config(text);
  EXPECT_TRUE(same_config(d, back));
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_TRUE(same_config(parse_config(serialize_config(d, true)), d));
}

TEST(Config, EditedValuesRoundTrip) {
  ExperimentConfig c;
  c.seed = 18446744073709551615ull;
  c.mu = 0.1 + 0.2;  // not exactly representable in short decimal
  c.alpha = -1.0 / 3.0;
  c.kernel = "lorentzian";
  c.model = "grid";
  c.model_file = "/tmp/psi 0.csv";
  c.stab_v0 = {0.25, -0.25, 1e-300};
  c.relax_times = "0:5:5";
  c.solver_points = 1024;
  const ExperimentConfig back = parse_config(serialize_config(c));
  EXPECT_TRUE(same_config(c, back));
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.mu, c.mu);
  EXPECT_EQ(back.alpha, c.alpha);
  EXPECT_EQ(back.stab_v0, c.stab_v0);
  EXPECT_EQ(back.model_file, c.model_file);
  EXPECT_FALSE(same_config(c, ExperimentConfig{}));
}

TEST(Config, ParsesSectionsAndComments) {
  const ExperimentConfig c = parse_config(R"(
# comment
[kernel]
kind = lorentzian
  mu=0.5
; other comment
[stability]
v0 = 0.1, -0.1 , 0.3
[run]
seed = 42
)");
  EXPECT_EQ(c.kernel, "lorentzian");
  EXPECT_EQ(c.mu, 0.5);
  EXPECT_EQ(c.stab_v0, (std::vector<double>{0.1, -0.1, 0.3}));
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.alpha, 1.0);
}

TEST(Config, RejectsMalformedInput) {
  expect_config_error("[kernel]\nwidth = 1\n");
  expect_config_error("[kernels]\nmu = 1\n");
  expect_config_error("mu = 1\n");
  expect_config_error("[kernel]\nmu = 1\nmu = 2\n");
  expect_config_error("[kernel]\nmu = one\n");
  expect_config_error("[kernel]\nmu\n");
  expect_config_error("[kernel\nmu = 1\n");
  expect_config_error("[run]\nseed = -3\n");
  expect_config_error("[ensemble]\nn = 12abc\n");
}

TEST(Config, ValidationCatchesBadValues) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  const auto rejects = [](auto mutate) {
    ExperimentConfig bad;
    mutate(bad);
    try {
      bad.validate();
      ADD_FAILURE() << "validated";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Config) << e.what();
    }
  };
  rejects([](ExperimentConfig& x) { x.mu = -1.0; });
  rejects([](ExperimentConfig& x) { x.kernel = "cauchy"; });
  rejects([](ExperimentConfig& x) { x.law = "newton"; });
  rejects([](ExperimentConfig& x) { x.model = "box"; });
  rejects([](ExperimentConfig& x) { x.relax_grid = "-6,6,2,-6,6,30"; });
  rejects([](ExperimentConfig& x) { x.relax_times = "3:1:4"; });
  rejects([](ExperimentConfig& x) { x.ens_neq = "offset:"; });
  rejects([](ExperimentConfig& x) { x.method = "euler"; });
  rejects([](ExperimentConfig& x) { x.relax_quadrature_order = 12; });
  rejects([](ExperimentConfig& x) {
    x.model = "coherent";
    x.stiffness = 0.0;
  });
}

TEST(Config, EnvironmentOverrides) {
  const std::map<std::string, std::string> env{{"BOHMSTAB_KERNEL_MU", " 0.25 "}, {"BOHMSTAB_RUN_SEED", "9"},
                                               {"BOHMSTAB_STABILITY_X0", "1,2"}};
  ExperimentConfig c;
  apply_environment(c, [&](const std::string& name) -> std::optional<std::string> {
    const auto it = env.find(name);
    return it == env.end() ? std::nullopt : std::optional<std::string>(it->second);
  });
  EXPECT_EQ(c.mu, 0.25);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.stab_x0, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(find_config_key("relax", "quadrature_order")->env_name(), "BOHMSTAB_RELAX_QUADRATURE_ORDER");
}

TEST(Config, KeysAreUniqueAndDocumented) {
  std::set<std::string> names;
  for (const auto& k : config_keys()) {
    EXPECT_TRUE(names.insert(k.section + "." + k.name).second) << k.section << "." << k.name;
    EXPECT_FALSE(k.doc.empty());
  }
  EXPECT_GE(names.size(), 40u);
}

TEST(Config, BuildsDomainObjects) {
  ExperimentConfig c;
  c.kernel = "lorentzian";
  c.mu = 0.4;
  EXPECT_EQ(c.kernel_spec().kind, KernelSpec::Kind::Lorentzian);
  EXPECT_EQ(c.kernel_spec().mu, 0.4);
  c.model = "superposition";
  c.modes = 3;
  const auto model = c.build_model(1.0);
  EXPECT_EQ(model.kind(), WaveFunctionModel::Kind::EigenSuperposition);
  EXPECT_EQ(model.amplitudes().size(), 3u);
  c.law = "debroglie";
  EXPECT_EQ(c.build_law(model).kind(), ForceLaw::Kind::DeBroglie);
  c.model = "grid";
  c.solver_points = 256;
  c.solver_t_end = 0.5;
  const auto grid = c.build_model(0.2);
  ASSERT_NE(grid.grid(), nullptr);
  EXPECT_GE(grid.time_range().hi, 0.5);
}
