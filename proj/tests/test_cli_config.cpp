#include <gtest/gtest.h>

#include <sstream>

#include "istab/config.hpp"

using namespace istab;
using nlohmann::json;

namespace {

json minimal_elliptic() {
  return json{{"preset", "elliptic_sine"}, {"k_list", {1, 2}}, {"n_list", {2, 4}}};
}

json minimal_custom() {
  return json{{"preset", "custom"},
              {"k_list", {1}},
              {"n_list", {2}},
              {"mu", 1.0},
              {"kappa", 0.0},
              {"alpha_rule", {{"type", "const"}, {"value", 0.0}}},
              {"advection", {0.8, 0.6}},
              {"exact_poly", {{0.5, -0.2}, {0.3}}},
              {"boundary", "neumann"}};
}

std::string error_of(const json& j) {
  try {
    parse_run_config(j);
  } catch (const ConfigError& ex) {
    return ex.what();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalValid) {
  const RunConfig cfg = parse_run_config(minimal_elliptic());
  EXPECT_EQ(cfg.preset, "elliptic_sine");
  EXPECT_EQ(cfg.k_list, (std::vector<int>{1, 2}));
  EXPECT_EQ(cfg.n_list, (std::vector<int>{2, 4}));
  EXPECT_EQ(cfg.l, 1);
  EXPECT_EQ(cfg.alpha_rule, AlphaRule::FourKSquared);
  EXPECT_EQ(cfg.diagonal, Diagonal::Right);
  EXPECT_EQ(cfg.threads, 0);
  EXPECT_TRUE(cfg.out.empty());
}

TEST(Config, FullValidWithOverrides) {
  json j = minimal_elliptic();
  j["l"] = 0;
  j["alpha_rule"] = {{"type", "const"}, {"value", 5.0}};
  j["diagonal"] = "LEFT";
  j["threads"] = 2;
  j["out"] = "table.csv";
  const RunConfig cfg = parse_run_config(j);
  EXPECT_EQ(cfg.l, 0);
  EXPECT_EQ(cfg.alpha_rule, AlphaRule::Const);
  EXPECT_EQ(cfg.alpha_value, 5.0);
  EXPECT_EQ(cfg.diagonal, Diagonal::Left);
  EXPECT_EQ(cfg.threads, 2);
  EXPECT_EQ(cfg.out, "table.csv");
  EXPECT_EQ(alpha_for(cfg, 3), 5.0);
  const RunConfig fks = parse_run_config(minimal_elliptic());
  EXPECT_EQ(alpha_for(fks, 3), 36.0);
}

TEST(Config, CustomValid) {
  const RunConfig cfg = parse_run_config(minimal_custom());
  EXPECT_EQ(cfg.preset, "custom");
  ASSERT_EQ(cfg.exact_poly.c.size(), 2u);
  EXPECT_EQ(cfg.exact_poly.c[0], (std::vector<double>{0.5, -0.2}));
  const ProblemSpec spec = make_problem(cfg, 1);
  EXPECT_NO_THROW(spec.validate());
  EXPECT_NEAR(spec.exact({0.25, -0.5}), 0.5 - 0.2 * (-0.5) + 0.3 * 0.25, 1e-15);
}

TEST(Config, UnknownKeysRejectedWithName) {
  json j = minimal_elliptic();
  j["extra"] = 1;
  EXPECT_NE(error_of(j).find("unknown config key 'extra'"), std::string::npos);

  json j2 = minimal_elliptic();
  j2["alpha_rule"] = {{"type", "const"}, {"value", 1.0}, {"bogus", 3}};
  EXPECT_NE(error_of(j2).find("alpha_rule.bogus"), std::string::npos);
}

TEST(Config, TypeAndRangeErrorsNameField) {
  json j = minimal_elliptic();
  j["k_list"] = {1, 12};
  EXPECT_NE(error_of(j).find("k_list"), std::string::npos);

  json j2 = minimal_elliptic();
  j2["n_list"] = {0};
  EXPECT_NE(error_of(j2).find("n_list"), std::string::npos);

  json j3 = minimal_elliptic();
  j3["n_list"] = "4";
  EXPECT_NE(error_of(j3).find("n_list"), std::string::npos);

  json j4 = minimal_elliptic();
  j4["l"] = 2;
  EXPECT_NE(error_of(j4).find("'l'"), std::string::npos);

  json j5 = minimal_elliptic();
  j5["kappa"] = -1.0;
  EXPECT_NE(error_of(j5).find("kappa"), std::string::npos);

  json j6 = minimal_elliptic();
  j6.erase("preset");
  EXPECT_NE(error_of(j6).find("preset"), std::string::npos);

  json j7 = minimal_elliptic();
  j7["preset"] = "nope";
  EXPECT_NE(error_of(j7).find("nope"), std::string::npos);

  EXPECT_THROW(parse_run_config(json::array()), ConfigError);
}

TEST(Config, AlphaRuleValidation) {
  json j = minimal_elliptic();
  j["alpha_rule"] = {{"type", "four_k_squared"}, {"value", 1.0}};
  EXPECT_NE(error_of(j).find("alpha_rule.value"), std::string::npos);

  json j2 = minimal_elliptic();
  j2["alpha_rule"] = {{"type", "const"}};
  EXPECT_NE(error_of(j2).find("alpha_rule.value"), std::string::npos);

  json j3 = minimal_elliptic();
  j3["alpha_rule"] = {{"type", "const"}, {"value", -2.0}};
  EXPECT_NE(error_of(j3).find("alpha_rule.value"), std::string::npos);

  json j4 = minimal_elliptic();
  j4["alpha_rule"] = {{"type", "weird"}};
  EXPECT_NE(error_of(j4).find("weird"), std::string::npos);
}

TEST(Config, CustomRequiredFields) {
  for (const char* key : {"mu", "kappa", "alpha_rule", "advection", "exact_poly", "boundary"}) {
    json j = minimal_custom();
    j.erase(key);
    EXPECT_NE(error_of(j).find(key), std::string::npos) << key;
  }
  json j = minimal_custom();
  j["exact_poly"] = json::array();
  EXPECT_NE(error_of(j).find("exact_poly"), std::string::npos);
}

TEST(Config, CrossFieldConsistencyRejected) {
  // Dirichlet boundary needs diffusion: kappa = 0 is invalid.
  json j = minimal_custom();
  j["boundary"] = "dirichlet";
  const std::string msg = error_of(j);
  EXPECT_NE(msg.find("invalid configuration"), std::string::npos) << msg;
  // And the fixed version passes.
  j["kappa"] = 1.0;
  j["alpha_rule"] = {{"type", "four_k_squared"}};
  EXPECT_NO_THROW(parse_run_config(j));
}

TEST(Config, LoadFromFileAndBadFile) {
  const std::string path = "/tmp/istab_cfg_test.json";
  {
    std::ofstream out(path);
    out << minimal_elliptic().dump();
  }
  EXPECT_EQ(load_run_config(path).preset, "elliptic_sine");
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  EXPECT_THROW(load_run_config(path), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/cfg.json"), ConfigError);
}

TEST(Csv, HeaderAndFormatting) {
  RunConfig cfg = parse_run_config(minimal_custom());
  cfg.n_list = {2, 4};
  const ConvergenceTable table = run_preset(cfg);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_TRUE(table.ok);
  std::ostringstream os;
  write_csv(table, os);
  const std::string csv = os.str();
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header,
            "preset,k,l,alpha,n,h_max,dofs_facet_global,err_L2,err_A,err_D,err_combined,"
            "rate_L2,rate_A,rate_combined,conservation_defect");
  // UNIX newlines only.
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  std::string row1, row2;
  std::getline(in, row1);
  std::getline(in, row2);
  // Rates blank on the coarsest row: ",," for rate_L2/rate_A.
  auto count_fields = [](const std::string& s) {
    return std::count(s.begin(), s.end(), ',') + 1;
  };
  EXPECT_EQ(count_fields(row1), 15);
  EXPECT_EQ(count_fields(row2), 15);
  EXPECT_NE(row1.find(",,,"), std::string::npos);  // three blank rate fields
  // A degree-1 polynomial is solved exactly: rates on the fine row are
  // blank too (zero errors), and err_L2 is tiny.
  EXPECT_LE(table.rows[0].nr.err_L2, 1e-10);
}

TEST(Csv, DeterministicOutput) {
  RunConfig cfg = parse_run_config(minimal_elliptic());
  cfg.k_list = {1};
  cfg.n_list = {2, 4};
  std::ostringstream a, b;
  write_csv(run_preset(cfg), a);
  write_csv(run_preset(cfg), b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str().find("elliptic_sine,1,1,4,"), std::string::npos);
}
