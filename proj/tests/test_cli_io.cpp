#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <sstream>

#include "nematic/cli.hpp"

using namespace nematic;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nematic_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) m[fs::relative(e.path(), dir).string()] = read_file(e.path());
  return m;
}

const char* kSmall = "grid.nx = 12\ngrid.dt = 5e-4\ngrid.t_final = 3e-3\n";

int run_quiet(const std::string& name, const RunConfig& c, std::string* err_text = nullptr) {
  std::ostringstream log, err;
  const int code = run_subcommand(name, c, log, err);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST(Format, SeventeenDigitsRoundTripBitwise) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 2000; ++i) {
    std::uint64_t bits = gen();
    double x;
    std::memcpy(&x, &bits, sizeof x);
    if (!std::isfinite(x)) continue;
    const double y = parse_double(format_double(x), "t");
    EXPECT_EQ(std::memcmp(&x, &y, sizeof x), 0) << format_double(x);
  }
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_THROW(parse_double("1.5x", "t"), ConfigError);
}

TEST(Csv, WriteParseRoundTrip) {
  CsvTable t{{"a", "b"}, {}};
  t.add({1.0 / 3, -2e-300});
  t.add({0, 7});
  EXPECT_THROW(t.add({1}), Error);
  const CsvTable r = parse_csv(t.str(), "mem");
  EXPECT_EQ(r.header, t.header);
  EXPECT_EQ(r.rows, t.rows);
  EXPECT_EQ(r.column("b"), 1u);
  EXPECT_THROW(parse_csv("a,b\n1\n", "mem"), ConfigError);
}

TEST(AtomicWrite, LeavesNoTemporary) {
  const fs::path d = scratch("atomic");
  atomic_write(d / "sub" / "x.txt", "hello\n");
  EXPECT_EQ(read_file(d / "sub" / "x.txt"), "hello\n");
  EXPECT_FALSE(fs::exists(d / "sub" / "x.txt.tmp"));
  atomic_write(d / "sub" / "x.txt", "bye\n");
  EXPECT_EQ(read_file(d / "sub" / "x.txt"), "bye\n");
}

TEST(Vtk, StructuredPointsLayout) {
  const GridSpec g = square_grid(4, 1, 1e-3);
  const std::string s = vtk_scalar(g, "pressure", Vec::LinSpaced(16, 0, 15));
  EXPECT_EQ(s.rfind("# vtk DataFile Version 3.0\n", 0), 0u);
  EXPECT_NE(s.find("DIMENSIONS 4 4 1"), std::string::npos);
  EXPECT_NE(s.find("POINT_DATA 16"), std::string::npos);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 10 + 16);
  const std::string v = vtk_vectors(g, "director", Mat::Ones(16, 2));
  EXPECT_NE(v.find("\n1 1 0\n"), std::string::npos);
}

TEST(Vtk, SnapshotFileNames) {
  const fs::path d = scratch("vtk");
  const Scenario s = stationary_scenario(square_grid(4, 1, 1e-3));
  write_snapshot_vtk(d, 7, solve_state(s.v0, s.d0, s.control, s.params, s.grid).at(0));
  for (const char* f : {"velocity_000007.vtk", "director_000007.vtk", "pressure_000007.vtk"}) EXPECT_TRUE(fs::exists(d / f)) << f;
}

TEST(ControlCsv, RoundTrip) {
  const fs::path d = scratch("control");
  const Scenario s = rotating_scenario(square_grid(8, 5, 2e-4));
  write_control_csv(d / "h.csv", s.control);
  const BoundaryControl r = read_control_csv(d / "h.csv", s.grid);
  for (int k = 0; k < s.grid.num_levels(); ++k) EXPECT_LE((r.at(k).values - s.control.at(k).values).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(r.u[0].cwiseAbs().maxCoeff(), 0.0);
  write_control_csv(d / "h2.csv", r);
  write_control_csv(d / "h3.csv", read_control_csv(d / "h2.csv", s.grid));
  EXPECT_EQ(read_file(d / "h2.csv"), read_file(d / "h3.csv"));
}

TEST(ControlCsv, RejectsIncompleteFiles) {
  const fs::path d = scratch("control_bad");
  const GridSpec g = square_grid(4, 1, 1e-3);
  atomic_write(d / "h.csv", "t,node_index,component,value\n0,0,0,1\n");
  EXPECT_THROW(read_control_csv(d / "h.csv", g), ConfigError);
  atomic_write(d / "bad.csv", "t,node_index,component,value\n0,99,0,1\n");
  EXPECT_THROW(read_control_csv(d / "bad.csv", g), ConfigError);
}

TEST(Config, MinimalConfigAppliesDefaults) {
  const RunConfig c = parse_config_text("grid.nx = 16\nphysics.nu = 1\n");
  EXPECT_EQ(c.grid.nx, 16);
  EXPECT_EQ(c.grid.ny, 16);
  EXPECT_EQ(c.grid.dt, 2e-4);
  EXPECT_EQ(c.grid.num_steps(), 20);
  EXPECT_EQ(c.scenario, "random");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.optimize.max_iters, 50);
  EXPECT_EQ(c.optimize.tol_opt, 1e-3);
  EXPECT_TRUE(std::isinf(c.m_space));
  EXPECT_TRUE(c.emit_vtk);
}

TEST(Config, CommentsAndWhitespace) {
  const RunConfig c = parse_config_text("# header\n\n  seed =  7   # trailing\noutput.emit_vtk = false\n");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_FALSE(c.emit_vtk);
}

TEST(Config, ErrorsCarryLineNumbers) {
  auto message = [](const std::string& text) {
    try {
      parse_config_text(text, "cfg");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("seed = 1\ngrid.bogus = 3\n").find("cfg:2: unknown key 'grid.bogus'"), std::string::npos);
  EXPECT_NE(message("\n\ngrid.nx = ten\n").find("cfg:3: expected an integer"), std::string::npos);
  EXPECT_NE(message("physics.nu = abc\n").find("cfg:1: expected a number"), std::string::npos);
  EXPECT_NE(message("output.emit_vtk = maybe\n").find("cfg:1: expected true or false"), std::string::npos);
  EXPECT_NE(message("seed = 1\nphysics.nu = -1\n").find("cfg:2: physics.nu must be positive"), std::string::npos);
  EXPECT_NE(message("seed = 1\nseed = 2\n").find("cfg:2: duplicate key"), std::string::npos);
  EXPECT_NE(message("no equals sign\n").find("cfg:1: expected"), std::string::npos);
  EXPECT_NE(message("scenario.name = swirl\n").find("cfg:1: scenario.name must be one of"), std::string::npos);
  EXPECT_NE(message("grid.t_final = 3.3e-4\n").find("cfg:1:"), std::string::npos);
}

TEST(Config, CflGuardRefusesWithBound) {
  try {
    parse_config_text("grid.nx = 32\ngrid.dt = 1e-3\ngrid.t_final = 2e-3\n", "cfg");
    FAIL() << "expected refusal";
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("cfg:2:"), std::string::npos) << m;
    EXPECT_NE(m.find(format_double(0.25 / (32.0 * 32.0))), std::string::npos) << m;
  }
}

TEST(Config, MissingControlFileIsReported) {
  EXPECT_THROW(parse_config_text("control.initial = /nonexistent/h.csv\n"), ConfigError);
}

TEST(Config, ResolvedTextReparsesToItself) {
  const RunConfig c = parse_config_text("grid.nx = 16\ncost.gamma = 0.3\ncontrol.M_space = 5\nseed = 9\n");
  const std::string text = resolved_config_text(c);
  EXPECT_NE(text.find("cost.gamma = 0.29999999999999999\n"), std::string::npos);
  EXPECT_NE(text.find("control.M_time = inf\n"), std::string::npos);
  EXPECT_EQ(resolved_config_text(parse_config_text(text)), text);
}

TEST(Config, OptimizeNeedsANonZeroWeight) {
  const RunConfig c =
      parse_config_text("cost.beta1 = 0\ncost.beta2 = 0\ncost.beta3 = 0\ncost.beta4 = 0\ncost.gamma = 0\n", "cfg");
  EXPECT_NO_THROW(require_valid_for(c, "simulate"));
  try {
    require_valid_for(c, "optimize", "cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("do not vanish simultaneously"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("cfg:5:"), std::string::npos);
  }
}

TEST(Subcommand, UnknownNameIsUsageError) {
  RunConfig c = parse_config_text(kSmall);
  c.output_dir = scratch("unknown").string();
  std::string err;
  EXPECT_EQ(run_quiet("explode", c, &err), kUsageError);
  EXPECT_NE(err.find("unknown subcommand"), std::string::npos);
  EXPECT_FALSE(fs::exists(fs::path(c.output_dir) / "resolved_config.txt"));
}

TEST(Subcommand, OptimizeWithZeroWeightsExitsTwo) {
  RunConfig c = parse_config_text(std::string(kSmall) + "cost.beta1 = 0\ncost.beta2 = 0\ncost.gamma = 0\n");
  c.output_dir = scratch("zero_weights").string();
  std::string err;
  EXPECT_EQ(run_quiet("optimize", c, &err), kUsageError);
  EXPECT_NE(err.find("do not vanish simultaneously"), std::string::npos);
}

TEST(Subcommand, SimulateStationaryGivesConstantEnergyRows) {
  RunConfig c = parse_config_text(std::string(kSmall) + "scenario.name = stationary\noutput.snapshot_stride = 2\n");
  c.output_dir = scratch("sim_stationary").string();
  ASSERT_EQ(run_quiet("simulate", c), kSuccess);
  const CsvTable t = parse_csv(read_file(fs::path(c.output_dir) / "energy.csv"), "energy.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"step", "t", "E", "E_hat", "kinetic", "elastic", "potential", "max_div", "max_dnorm"}));
  ASSERT_EQ(t.rows.size(), 7u);
  for (const auto& row : t.rows) {
    EXPECT_NEAR(row[2], t.rows[0][2], 1e-12);
    EXPECT_NEAR(row[3], t.rows[0][3], 1e-12);
    EXPECT_NEAR(row[8], 1.0, 1e-12);
  }
  for (const char* f : {"director_000000.vtk", "director_000002.vtk", "director_000006.vtk", "resolved_config.txt"})
    EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / f)) << f;
}

TEST(Subcommand, ArtifactsAreBitReproducible) {
  for (const std::string name : {"simulate", "linearize", "adjoint", "optimize"}) {
    RunConfig c = parse_config_text(std::string(kSmall) + "optimize.max_iters = 5\n");
    c.output_dir = scratch("repro_" + name).string();
    ASSERT_EQ(run_quiet(name, c), kSuccess) << name;
    const auto a = directory_bytes(c.output_dir);
    scratch("repro_" + name);
    ASSERT_EQ(run_quiet(name, c), kSuccess) << name;
    const auto b = directory_bytes(c.output_dir);
    EXPECT_FALSE(a.empty());
    EXPECT_TRUE(a == b) << name;
  }
}

TEST(Subcommand, OptimizeWritesControlThatReloads) {
  RunConfig c = parse_config_text(std::string(kSmall) + "optimize.max_iters = 3\n");
  c.output_dir = scratch("opt_reload").string();
  ASSERT_EQ(run_quiet("optimize", c), kSuccess);
  const fs::path out = c.output_dir;
  const CsvTable t = parse_csv(read_file(out / "optimize.csv"), "optimize.csv");
  EXPECT_EQ(t.header.size(), 7u);
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_LE(t.rows[i][1], t.rows[i - 1][1]);
  const RunConfig again = parse_config_text(std::string(kSmall) + "control.initial = " + (out / "h_opt.csv").string() + "\n");
  ASSERT_TRUE(again.initial_file.has_value());
  EXPECT_TRUE(fs::exists(out / "optimize_summary.json"));
}

TEST(Subcommand, AdjointWritesNormsAndGradient) {
  RunConfig c = parse_config_text(kSmall);
  c.output_dir = scratch("adjoint").string();
  ASSERT_EQ(run_quiet("adjoint", c), kSuccess);
  const CsvTable n = parse_csv(read_file(fs::path(c.output_dir) / "adjoint_norms.csv"), "n");
  EXPECT_EQ(n.rows.size(), 7u);
  EXPECT_EQ(n.header, (std::vector<std::string>{"t", "p_tilde_L2", "q_tilde_L2", "q1_L2_Gamma"}));
  for (const auto& row : n.rows) EXPECT_TRUE(row[1] >= 0 && row[2] >= 0 && row[3] >= 0);
  const BoundaryControl grad = read_control_csv(fs::path(c.output_dir) / "gradient.csv", c.grid);
  EXPECT_EQ(grad.h_ref.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Subcommand, VerifyEmitsOneJsonLinePerCheck) {
  RunConfig c = parse_config_text("grid.nx = 16\ngrid.dt = 5e-4\ngrid.t_final = 5e-3\n");
  c.output_dir = scratch("verify").string();
  EXPECT_EQ(run_quiet("verify", c), kSuccess);
  std::istringstream in(read_file(fs::path(c.output_dir) / "verify.jsonl"));
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("name") && j.contains("status") && j.contains("measured") && j.contains("tolerance") &&
                j.contains("fingerprint"));
    EXPECT_NE(j["status"], "fail") << line;
    ++count;
  }
  EXPECT_EQ(count, 11);
}

TEST(Tool, ExitCodes) {
  const fs::path d = scratch("tool");
  atomic_write(d / "c.txt", kSmall);
  atomic_write(d / "bad.txt", "grid.nx = 2\n");
  const std::string tool = NEMATIC_TOOL_PATH;
  auto run = [&](const std::string& args) {
    const int s = std::system((tool + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(run("frobnicate --config " + (d / "c.txt").string()), 2);
  EXPECT_EQ(run("simulate"), 2);
  EXPECT_EQ(run("simulate --config " + (d / "bad.txt").string()), 2);
  EXPECT_EQ(run("simulate --config " + (d / "missing.txt").string()), 2);
  EXPECT_EQ(run("simulate --config " + (d / "c.txt").string() + " --output " + (d / "out").string()), 0);
  EXPECT_TRUE(fs::exists(d / "out" / "energy.csv"));
  EXPECT_EQ(run("simulate --config " + (d / "c.txt").string() + " --seed 5 --output " + (d / "out5").string()), 0);
  EXPECT_NE(read_file(d / "out5" / "resolved_config.txt").find("seed = 5\n"), std::string::npos);
}
