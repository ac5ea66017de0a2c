// cadg: run the ADER-DG solver in one of three scheduler modes and emit metrics.

#include <algorithm>
#include <fstream>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cadg/driver.hpp"
#include "cadg/errors.hpp"

namespace {

struct Flags {
  std::string config;
  std::string mode;
  long steps = -1;
  std::string out;
  double forceDt = 0.0;
  bool parallel = false;
  bool limiter = false;
  bool trace = false;
  std::vector<std::string> settings;
};

void addRunFlags(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "key = value configuration file");
  app.add_option("--mode", f.mode, "straightforward | shifted | fused");
  app.add_option("--steps", f.steps, "realisation steps");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--force-dt", f.forceDt, "pin every time step to this value");
  app.add_flag("--parallel", f.parallel, "parallel cell traversal");
  app.add_flag("--limiter", f.limiter, "enable the subcell finite-volume limiter");
  app.add_flag("--trace", f.trace, "write trace.csv");
  app.add_option("--set", f.settings, "extra key=value settings (repeatable)");
}

cadg::RunConfig resolve(const Flags& f, cadg::RunConfig base = {}) {
  cadg::RunConfig c = f.config.empty() ? base : cadg::loadConfig(f.config, base);
  for (const std::string& kv : f.settings) c = cadg::parseConfig(kv, c);
  if (!f.mode.empty()) c.mode = cadg::parseMode(f.mode);
  if (f.steps >= 0) c.steps = f.steps;
  if (!f.out.empty()) c.outDir = f.out;
  if (f.forceDt != 0.0) c.forcedDt = f.forceDt;
  if (f.parallel) c.parallel = true;
  if (f.limiter) c.limiter = true;
  if (f.trace) c.trace = true;
  return c;
}

int runCommand(const cadg::RunConfig& c) {
  const cadg::RunSummary s = cadg::runSimulation(c);
  std::printf("mode=%s steps=%ld T=%.10g reruns=%ld sweeps=%llu troubled=%d q_reads_per_cell_per_step=%.6g\n",
              cadg::toString(c.mode).c_str(), s.steps, s.T, s.reruns, static_cast<unsigned long long>(s.sweeps),
              s.troubled, s.audit.readsPerCellPerStep);
  std::printf("outputs written to %s\n", c.outDir.c_str());
  return 0;
}

int convergenceCommand(cadg::RunConfig c, const std::vector<int>& levels) {
  const auto rows = cadg::convergenceStudy(c, levels);
  std::filesystem::create_directories(c.outDir);
  cadg::writeConvergenceCsv(rows, std::filesystem::path(c.outDir) / "convergence.csv");
  std::printf("level        h     steps       L2 error   order\n");
  for (const auto& r : rows) {
    std::printf("%5d %8.5f %9ld %14.6e", r.level, r.h, r.steps, r.error);
    if (r.order) std::printf(" %7.3f", *r.order);
    std::printf("\n");
  }
  return 0;
}

int footprintCommand(const std::string& outDir) {
  std::printf("fused / straightforward persistent footprint\n   p     d=2     d=3\n");
  std::string csv = "p,d,ratio_exact,ratio\n";
  for (int p = 2; p <= 9; ++p) {
    std::printf("%4d", p);
    for (int d = 2; d <= 3; ++d) {
      const cadg::Rational r = cadg::footprintRatio(d, p);
      std::printf("  %6s", r.rounded(2).c_str());
      csv += std::to_string(p) + "," + std::to_string(d) + "," + r.str() + "," + r.rounded(4) + "\n";
    }
    std::printf("\n");
  }
  if (!outDir.empty()) {
    std::filesystem::create_directories(outDir);
    std::ofstream(std::filesystem::path(outDir) / "footprint.csv") << csv;
  }
  return 0;
}

double medianStepTime(cadg::RunConfig c, int warm, int measured) {
  auto solver = cadg::makeSolver(c);
  for (int i = 0; i < warm; ++i) solver->step();
  std::vector<double> t;
  for (int i = 0; i < measured; ++i) t.push_back(solver->step().wallSeconds);
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

int benchCommand(cadg::RunConfig c) {
  c.trace = false;
  c.mode = cadg::SchedulerMode::straightforward;
  const double t3 = medianStepTime(c, 2, 5);
  c.mode = cadg::SchedulerMode::fused;
  const double tf = medianStepTime(c, 2, 5);
  c.injectRerun = true;
  const double tr = medianStepTime(c, 2, 5);
  c.injectRerun = false;
  const double tstp = std::max(tr - tf, 1e-12);
  std::printf("T_3steps=%.6g s  T_fused=%.6g s  T_STP=%.6g s\n", t3, tf, tstp);
  if (tstp < t3) {
    std::printf("rerun upper bound C_rerun <= %.4f (C_dT=%.3g)\n", cadg::rerunUpperBound(t3, tstp, tf, c.safety),
                c.safety);
  } else {
    std::printf("rerun upper bound undefined (T_STP >= T_3steps)\n");
  }
  c.outDir = c.outDir + "/bench";
  const cadg::RunSummary s = cadg::runSimulation(c);
  std::printf("measured C_rerun = %.4f over %ld steps\n",
              1.0 + static_cast<double>(s.reruns) / static_cast<double>(std::max(1L, s.steps)), s.steps);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ADER-DG solver with straightforward, shifted and fused single-touch schedulers"};
  app.require_subcommand(0, 1);
  Flags runFlags;
  addRunFlags(app, runFlags);

  auto* conv = app.add_subcommand("convergence", "L2 error and observed order over grid levels");
  Flags convFlags;
  std::vector<int> levels{1, 2, 3};
  conv->add_option("--config", convFlags.config, "key = value configuration file");
  conv->add_option("--out", convFlags.out, "output directory");
  conv->add_option("--set", convFlags.settings, "extra key=value settings (repeatable)");
  conv->add_option("--levels", levels, "grid depths")->delimiter(',');

  auto* foot = app.add_subcommand("footprint", "persistent footprint ratio table");
  std::string footOut;
  foot->add_option("--out", footOut, "directory for footprint.csv");

  auto* bench = app.add_subcommand("bench", "timing surrogates and rerun upper bound");
  Flags benchFlags;
  bench->add_option("--config", benchFlags.config, "key = value configuration file");
  bench->add_option("--out", benchFlags.out, "output directory");
  bench->add_option("--set", benchFlags.settings, "extra key=value settings (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*conv) {
      return convergenceCommand(resolve(convFlags, cadg::convergenceTemplate()), levels);
    }
    if (*foot) return footprintCommand(footOut);
    if (*bench) return benchCommand(resolve(benchFlags));
    return runCommand(resolve(runFlags));
  } catch (const cadg::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const cadg::ResourceError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const cadg::NumericalFailure& e) {
    std::cerr << "numerical failure at step " << e.step() << ": " << e.what() << '\n';
    return 3;
  } catch (const cadg::PredictorFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const cadg::DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
