#include "cadg/driver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cadg/errors.hpp"
#include "json.hpp"

namespace cadg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parseNumber(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw ConfigError("invalid value '" + value + "' for " + key);
  return out;
}

bool parseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw ConfigError("invalid boolean '" + value + "' for " + key);
}

const std::vector<std::string> kScenarios{"uniform", "zero", "smooth-density-wave", "gaussian-advect", "sod",
                                          "speed-spike"};

StateVector eulerState(double rho, std::span<const double> u, double p) {
  const std::size_t d = u.size();
  StateVector q(d + 2);
  q[0] = rho;
  double kinetic = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    q[a + 1] = rho * u[a];
    kinetic += u[a] * u[a];
  }
  q[d + 1] = p / (kGamma - 1.0) + 0.5 * rho * kinetic;
  return q;
}

/// Nearest periodic image of x - shift in the unit cube.
std::vector<double> wrap(std::span<const double> x, std::span<const double> shift) {
  std::vector<double> y(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double v = x[a] - shift[a];
    y[a] = v - std::floor(v);
  }
  return y;
}

double densityWave(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return 1.0 + 0.2 * std::sin(2.0 * std::numbers::pi * s);
}

double gaussian(std::span<const double> x) {
  double r2 = 0.0;
  for (double v : x) r2 += (v - 0.5) * (v - 0.5);
  return 1.0 + 0.5 * std::exp(-r2 / (2.0 * 0.1 * 0.1));
}

/// Evaluates the nodal polynomial of a cell at reference point xi.
void evaluateCell(const Basis1D& basis, int dims, int m, std::span<const double> Q, std::span<const double> xi,
                  std::span<double> out) {
  std::array<std::vector<double>, 3> phi;
  for (int a = 0; a < dims; ++a) phi[static_cast<std::size_t>(a)] = basis.evaluate(xi[static_cast<std::size_t>(a)]);
  const auto n = static_cast<std::size_t>(basis.size());
  const auto mm = static_cast<std::size_t>(m);
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t nodes = Q.size() / mm;
  for (std::size_t s = 0; s < nodes; ++s) {
    double w = 1.0;
    std::size_t rest = s;
    for (int a = 0; a < dims; ++a) {
      w *= phi[static_cast<std::size_t>(a)][rest % n];
      rest /= n;
    }
    for (std::size_t v = 0; v < mm; ++v) out[v] += w * Q[s * mm + v];
  }
}

std::vector<double> nodePosition(const Grid& grid, const Basis1D& basis, int cell, std::size_t node) {
  const auto n = static_cast<std::size_t>(basis.size());
  std::vector<double> x(static_cast<std::size_t>(grid.dims()));
  std::size_t rest = node;
  for (int a = 0; a < grid.dims(); ++a) {
    x[static_cast<std::size_t>(a)] = grid.position(cell, a, basis.nodes[rest % n]);
    rest /= n;
  }
  return x;
}

}  // namespace

std::string toString(SchedulerMode mode) {
  switch (mode) {
    case SchedulerMode::straightforward: return "straightforward";
    case SchedulerMode::shifted: return "shifted";
    case SchedulerMode::fused: return "fused";
  }
  return "unknown";
}

std::string toString(SystemKind system) { return system == SystemKind::euler ? "euler" : "advection"; }

SchedulerMode parseMode(const std::string& text) {
  if (text == "straightforward") return SchedulerMode::straightforward;
  if (text == "shifted") return SchedulerMode::shifted;
  if (text == "fused") return SchedulerMode::fused;
  throw ConfigError("unknown mode '" + text + "' (straightforward|shifted|fused)");
}

void applyConfigValue(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "system") {
    if (value == "euler") c.system = SystemKind::euler;
    else if (value == "advection") c.system = SystemKind::advection;
    else throw ConfigError("unknown system '" + value + "' (euler|advection)");
  } else if (key == "dims" || key == "d") {
    c.dims = parseNumber<int>(key, value);
  } else if (key == "depth" || key == "L") {
    c.depth = parseNumber<int>(key, value);
  } else if (key == "order" || key == "p") {
    c.order = parseNumber<int>(key, value);
  } else if (key == "mode") {
    c.mode = parseMode(value);
  } else if (key == "traversal") {
    if (value == "lexicographic") c.traversal = TraversalKind::lexicographic;
    else if (value == "peano") c.traversal = TraversalKind::peano;
    else throw ConfigError("unknown traversal '" + value + "' (lexicographic|peano)");
  } else if (key == "boundary") {
    if (value == "periodic") c.boundary = BoundaryKind::periodic;
    else if (value == "outflow") c.boundary = BoundaryKind::outflow;
    else throw ConfigError("unknown boundary '" + value + "' (periodic|outflow)");
  } else if (key == "safety") {
    c.safety = parseNumber<double>(key, value);
  } else if (key == "cfl") {
    c.cfl = parseNumber<double>(key, value);
  } else if (key == "averaging") {
    if (value == "strict") c.averaging = Averaging::strict;
    else if (value == "creeping") c.averaging = Averaging::creeping;
    else throw ConfigError("unknown averaging '" + value + "' (strict|creeping)");
  } else if (key == "steps") {
    c.steps = parseNumber<long>(key, value);
  } else if (key == "final_time") {
    c.finalTime = parseNumber<double>(key, value);
  } else if (key == "limiter") {
    c.limiter = parseBool(key, value);
  } else if (key == "parallel") {
    c.parallel = parseBool(key, value);
  } else if (key == "threads") {
    c.threads = parseNumber<int>(key, value);
  } else if (key == "scenario") {
    c.scenario = value;
  } else if (key == "spike_step") {
    c.spikeStep = parseNumber<long>(key, value);
  } else if (key == "out") {
    c.outDir = value;
  } else if (key == "force_dt") {
    c.forcedDt = parseNumber<double>(key, value);
  } else if (key == "trace") {
    c.trace = parseBool(key, value);
  } else if (key == "inject_rerun") {
    c.injectRerun = parseBool(key, value);
  } else if (key == "memory_budget_mb") {
    c.memoryBudgetBytes = parseNumber<std::size_t>(key, value) << 20;
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

RunConfig parseConfig(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineNo) + ": expected 'key = value'");
    applyConfigValue(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

RunConfig loadConfig(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parseConfig(buf.str(), std::move(base));
}

void validateConfig(const RunConfig& c) {
  if (c.dims != 2 && c.dims != 3) throw ConfigError("dims must be 2 or 3");
  if (c.depth < 1 || c.depth > 4) throw ConfigError("depth L must lie in [1, 4]");
  if (c.order < 0 || c.order > kMaxOrder) throw ConfigError("polynomial order p must lie in [0, 9]");
  if (!(c.safety > 0.0 && c.safety <= 1.0)) throw ConfigError("safety factor must lie in (0, 1]");
  if (!(c.cfl > 0.0)) throw ConfigError("cfl must be positive");
  if (c.steps < 0) throw ConfigError("steps must be non-negative");
  if (c.finalTime && !(*c.finalTime > 0.0)) throw ConfigError("final_time must be positive");
  if (c.forcedDt && !(*c.forcedDt > 0.0)) throw ConfigError("force_dt must be positive");
  if (c.threads < 0) throw ConfigError("threads must be non-negative");
  if (c.spikeStep < 1) throw ConfigError("spike_step must be at least 1");
  if (std::find(kScenarios.begin(), kScenarios.end(), c.scenario) == kScenarios.end()) {
    throw ConfigError("unknown scenario '" + c.scenario +
                      "' (uniform|zero|smooth-density-wave|gaussian-advect|sod|speed-spike)");
  }
  if (c.scenario == "speed-spike" && c.system != SystemKind::euler) {
    throw ConfigError("speed-spike needs the euler system");
  }
  if (c.scenario == "zero" && c.system != SystemKind::advection) {
    throw ConfigError("the zero scenario needs the advection system");
  }
  if (c.parallel && c.mode == SchedulerMode::shifted) {
    throw ConfigError("parallel traversal is available for the fused and straightforward modes only");
  }
  const Scenario s = makeScenario(c.scenario, c.system, c.dims, c.spikeStep);
  const std::size_t bytes = estimateGridBytes(gridSpecFor(c, c.boundary.value_or(s.boundary)));
  if (bytes > c.memoryBudgetBytes) {
    throw ResourceError("grid needs " + std::to_string(bytes) + " bytes, budget is " +
                            std::to_string(c.memoryBudgetBytes),
                        bytes);
  }
}

std::vector<double> advectionVelocity(int dims) { return std::vector<double>(static_cast<std::size_t>(dims), 0.5); }

Scenario makeScenario(const std::string& id, SystemKind system, int dims, long spikeStep) {
  Scenario s;
  s.id = id;
  const bool euler = system == SystemKind::euler;
  const std::vector<double> u(static_cast<std::size_t>(dims), 0.5);
  const std::vector<double> rest(static_cast<std::size_t>(dims), 0.0);

  // Scalar profile advected with u; the Euler variants carry it as density at p = 1.
  auto profileScenario = [&](std::function<double(std::span<const double>)> profile) {
    if (euler) {
      s.initial = [profile, u](std::span<const double> x) { return eulerState(profile(x), u, 1.0); };
      s.exact = [profile, u](std::span<const double> x, double t) -> std::optional<StateVector> {
        std::vector<double> shift(u.size());
        for (std::size_t a = 0; a < u.size(); ++a) shift[a] = u[a] * t;
        return eulerState(profile(wrap(x, shift)), u, 1.0);
      };
    } else {
      s.initial = [profile](std::span<const double> x) { return StateVector{profile(x)}; };
      const std::vector<double> a = advectionVelocity(dims);
      s.exact = [profile, a](std::span<const double> x, double t) -> std::optional<StateVector> {
        std::vector<double> shift(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) shift[k] = a[k] * t;
        return StateVector{profile(wrap(x, shift))};
      };
    }
  };

  if (id == "uniform") {
    if (euler) {
      const StateVector q = eulerState(1.0, rest, 1.0);
      s.initial = [q](std::span<const double>) { return q; };
      s.exact = [q](std::span<const double>, double) -> std::optional<StateVector> { return q; };
    } else {
      profileScenario([](std::span<const double>) { return 1.0; });
    }
  } else if (id == "zero") {
    if (euler) throw ConfigError("the zero scenario needs the advection system");
    profileScenario([](std::span<const double>) { return 0.0; });
  } else if (id == "smooth-density-wave") {
    profileScenario(densityWave);
  } else if (id == "gaussian-advect") {
    profileScenario(gaussian);
  } else if (id == "sod") {
    s.boundary = BoundaryKind::outflow;
    if (euler) {
      s.initial = [rest](std::span<const double> x) {
        return x[0] < 0.5 ? eulerState(1.0, rest, 1.0) : eulerState(0.125, rest, 0.1);
      };
    } else {
      s.initial = [](std::span<const double> x) { return StateVector{x[0] < 0.5 ? 1.0 : 0.125}; };
    }
  } else if (id == "speed-spike") {
    if (!euler) throw ConfigError("speed-spike needs the euler system");
    profileScenario(densityWave);
    s.exact = {};
    // Right after the update of step k, a smooth bump raises u_x while rho and p are kept.
    s.hook = [spikeStep](long step, int cell, Grid& grid, const Operators& ops) {
      if (step != spikeStep) return;
      Cell& c = grid.cell(cell);
      const auto m = static_cast<std::size_t>(ops.m);
      const int d = ops.dims;
      for (std::size_t node = 0; node < ops.spatialNodes; ++node) {
        const std::vector<double> x = nodePosition(grid, ops.basis, cell, node);
        double r2 = 0.0;
        for (double v : x) r2 += (v - 0.5) * (v - 0.5);
        const double bump = 0.6 * std::exp(-r2 / (2.0 * 0.2 * 0.2));
        double* q = c.Q.data() + node * m;
        const double p = eulerPressure(std::span<const double>(q, m));
        q[1] += q[0] * bump;
        double j2 = 0.0;
        for (int a = 0; a < d; ++a) j2 += q[1 + a] * q[1 + a];
        q[m - 1] = p / (kGamma - 1.0) + 0.5 * j2 / q[0];
      }
    };
  } else {
    throw ConfigError("unknown scenario '" + id + "'");
  }
  return s;
}

std::shared_ptr<PdeSystem> makeSystem(SystemKind system, int dims, const Scenario& scenario) {
  if (system == SystemKind::euler) return std::make_shared<EulerSystem>(dims);
  AdvectionSystem::Profile profile;
  if (scenario.initial) {
    auto init = scenario.initial;
    profile = [init](std::span<const double> x) { return init(x)[0]; };
  }
  return std::make_shared<AdvectionSystem>(advectionVelocity(dims), profile);
}

void initialiseGrid(Grid& grid, const Basis1D& basis, const InitialCondition& initial) {
  const auto m = static_cast<std::size_t>(grid.components());
  for (int c = 0; c < static_cast<int>(grid.cells().size()); ++c) {
    Cell& cell = grid.cell(c);
    const std::size_t nodes = cell.Q.size() / m;
    for (std::size_t node = 0; node < nodes; ++node) {
      const StateVector q = initial(nodePosition(grid, basis, c, node));
      if (q.size() != m) throw ConfigError("initial condition has the wrong component count");
      std::copy(q.begin(), q.end(), cell.Q.begin() + static_cast<std::ptrdiff_t>(node * m));
    }
    if (!cell.previousQ.empty()) cell.previousQ = cell.Q;
  }
}

GridSpec gridSpecFor(const RunConfig& c, BoundaryKind boundary) {
  GridSpec spec;
  spec.dims = c.dims;
  spec.depth = c.depth;
  spec.order = c.order;
  spec.components = c.system == SystemKind::euler ? c.dims + 2 : 1;
  spec.boundary = boundary;
  spec.layout = layoutFor(c.mode);
  spec.keepRollbackCopy = c.limiter;
  spec.memoryBudgetBytes = c.memoryBudgetBytes;
  return spec;
}

std::unique_ptr<Solver> makeSolver(const RunConfig& c) {
  validateConfig(c);
  const Scenario scenario = makeScenario(c.scenario, c.system, c.dims, c.spikeStep);
  auto grid = buildGrid(gridSpecFor(c, c.boundary.value_or(scenario.boundary)));
  initialiseGrid(*grid, makeBasis(c.order), scenario.initial);
  SchedulerOptions options;
  options.mode = c.mode;
  options.traversal = c.traversal;
  options.parallel = c.parallel;
  options.threads = c.threads;
  options.limiter = c.limiter;
  options.trace = c.trace;
  options.injectRerunEveryStep = c.injectRerun;
  TimeControl tc;
  tc.safety = c.safety;
  tc.cfl = c.cfl;
  tc.averaging = c.averaging;
  tc.forcedDt = c.forcedDt;
  tc.finalTime = c.finalTime;
  auto solver = std::make_unique<Solver>(std::move(grid), makeSystem(c.system, c.dims, scenario), options, tc);
  if (scenario.hook) solver->setUpdateHook(scenario.hook);
  return solver;
}

double l2Error(const Solver& solver, const ExactSolution& exact) {
  const Grid& grid = solver.grid();
  const int d = grid.dims();
  const int m = grid.components();
  const QuadratureRule rule = gaussLegendre(std::min(grid.order() + 2, kMaxOrder));
  const Basis1D& basis = solver.operators().basis;
  const auto q = rule.nodes.size();
  std::size_t points = 1;
  for (int a = 0; a < d; ++a) points *= q;
  const double volume = std::pow(grid.meshWidth(), d);
  std::vector<double> value(static_cast<std::size_t>(m));
  double sum = 0.0;
  for (int c = 0; c < static_cast<int>(grid.cells().size()); ++c) {
    for (std::size_t k = 0; k < points; ++k) {
      std::array<double, 3> xi{};
      std::vector<double> x(static_cast<std::size_t>(d));
      double w = volume;
      std::size_t rest = k;
      for (int a = 0; a < d; ++a) {
        const auto ia = rest % q;
        rest /= q;
        xi[static_cast<std::size_t>(a)] = rule.nodes[ia];
        w *= rule.weights[ia];
        x[static_cast<std::size_t>(a)] = grid.position(c, a, rule.nodes[ia]);
      }
      evaluateCell(basis, d, m, grid.cell(c).Q, std::span<const double>(xi.data(), static_cast<std::size_t>(d)), value);
      const auto ref = exact(x, solver.timeControl().T);
      if (!ref) throw ConfigError("scenario has no exact solution");
      for (int v = 0; v < m; ++v) {
        const double e = value[static_cast<std::size_t>(v)] - (*ref)[static_cast<std::size_t>(v)];
        sum += w * e * e;
      }
    }
  }
  return std::sqrt(sum);
}

long countInadmissible(const Solver& solver) {
  const auto m = static_cast<std::size_t>(solver.grid().components());
  long bad = 0;
  for (const Cell& c : solver.grid().cells()) {
    const std::vector<double>& states = c.troubled && c.patch ? c.patch->states : c.Q;
    for (std::size_t k = 0; k < states.size(); k += m) {
      if (!solver.pde().isAdmissible(std::span<const double>(states.data() + k, m))) ++bad;
    }
  }
  return bad;
}

void writeMetricsCsv(const Solver& solver, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "step,T,dt_old,dt_new,dt_adm,reruns,sweeps";
  for (Task t : kAllTasks) out << ',' << taskName(t) << "_reads," << taskName(t) << "_writes";
  out << ",mem_reads,mem_writes,q_reads_per_cell,troubled,wall_time_s\n";
  const auto& records = solver.ledger().steps();
  const double cells = static_cast<double>(solver.grid().cells().size());
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const StepReport& r : solver.history()) {
    const auto it = std::find_if(records.begin(), records.end(), [&](const StepRecord& s) { return s.step == r.step; });
    const LedgerSnapshot traffic = it != records.end() ? it->traffic : LedgerSnapshot{};
    out << r.step << ',' << num(r.T) << ',' << num(r.dtOld) << ',' << num(r.dtNew) << ',' << num(r.dtAdm) << ','
        << r.reruns << ',' << r.sweeps;
    for (Task t : kAllTasks) out << ',' << traffic[t].reads << ',' << traffic[t].writes;
    out << ',' << traffic.memoryReads << ',' << traffic.memoryWrites << ','
        << num(static_cast<double>(traffic.solutionReads) / cells) << ',' << r.troubled << ',' << num(r.wallSeconds)
        << '\n';
  }
}

void writeSolutionCsv(const Solver& solver, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  const Grid& grid = solver.grid();
  const int d = grid.dims();
  const int m = grid.components();
  out << "cell,node";
  const char* axes[] = {"x", "y", "z"};
  for (int a = 0; a < d; ++a) out << ',' << axes[a];
  for (int v = 0; v < m; ++v) out << ",q" << v;
  out << '\n';
  char buf[64];
  const auto mm = static_cast<std::size_t>(m);
  for (int c = 0; c < static_cast<int>(grid.cells().size()); ++c) {
    const Cell& cell = grid.cell(c);
    for (std::size_t node = 0; node < cell.Q.size() / mm; ++node) {
      out << c << ',' << node;
      for (double x : nodePosition(grid, solver.operators().basis, c, node)) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << ',' << buf;
      }
      for (std::size_t v = 0; v < mm; ++v) {
        std::snprintf(buf, sizeof buf, "%.17g", cell.Q[node * mm + v]);
        out << ',' << buf;
      }
      out << '\n';
    }
  }
}

void writeTraceCsv(const TaskTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "sweep,step,task,phase,entity\n";
  for (const TraceRecord& r : trace.records()) {
    out << r.sweep << ',' << r.step << ',' << taskName(r.task) << ',' << phaseName(r.phase) << ',' << r.entity << '\n';
  }
}

void writeRunJson(const RunConfig& c, const Solver& solver, const RunSummary& summary,
                  const std::filesystem::path& path) {
  using nlohmann::json;
  const Grid& grid = solver.grid();
  const LedgerSnapshot totals = stepTotals(solver.ledger());
  json tasks = json::object();
  for (Task t : kAllTasks) {
    tasks[std::string(taskName(t))] = {{"invocations", totals[t].invocations},
                                       {"reads", totals[t].reads},
                                       {"writes", totals[t].writes}};
  }
  const auto cells = grid.cells().size();
  json j = {
      {"config",
       {{"system", toString(c.system)},
        {"dims", c.dims},
        {"depth", c.depth},
        {"order", c.order},
        {"mode", toString(c.mode)},
        {"traversal", c.traversal == TraversalKind::peano ? "peano" : "lexicographic"},
        {"boundary", grid.spec().boundary == BoundaryKind::periodic ? "periodic" : "outflow"},
        {"safety", c.safety},
        {"cfl", c.cfl},
        {"averaging", c.averaging == Averaging::strict ? "strict" : "creeping"},
        {"scenario", c.scenario},
        {"limiter", c.limiter},
        {"parallel", c.parallel},
        {"force_dt", c.forcedDt ? json(*c.forcedDt) : json(nullptr)},
        {"final_time", c.finalTime ? json(*c.finalTime) : json(nullptr)}}},
      {"cells", cells},
      {"faces", grid.faces().size()},
      {"steps", summary.steps},
      {"T", summary.T},
      {"reruns", summary.reruns},
      {"sweeps", summary.sweeps},
      {"troubled", summary.troubled},
      {"inadmissible_states", summary.inadmissibleStates},
      {"q_reads_per_cell_per_step", summary.audit.readsPerCellPerStep},
      {"persistent_doubles_per_cell",
       {{"measured", static_cast<double>(grid.persistentDoubles()) / static_cast<double>(cells)},
        {"model", persistentFootprint(c.mode, c.dims, c.order, grid.components())}}},
      {"memory_traffic",
       {{"measured", totals.memoryTotal()},
        {"model", trafficModelTotal(c.mode, c.dims, c.order, grid.components(), cells,
                                    static_cast<std::uint64_t>(summary.audit.steps), summary.audit.reruns)}}},
      {"tasks", tasks},
      {"outputs", {"metrics.csv", "solution_final.csv"}},
  };
  if (c.trace) j["outputs"].push_back("trace.csv");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

RunSummary runSimulation(const RunConfig& c) {
  auto solver = makeSolver(c);
  if (c.finalTime) {
    while (!solver->finished()) solver->step();
  } else {
    solver->run(c.steps);
  }
  RunSummary summary;
  summary.steps = solver->stepsCompleted();
  summary.T = solver->timeControl().T;
  summary.reruns = solver->totalReruns();
  summary.sweeps = solver->sweeps();
  summary.troubled = solver->troubledCount();
  summary.inadmissibleStates = countInadmissible(*solver);
  summary.audit = singleTouchAudit(solver->ledger(), solver->grid().cells().size());

  const std::filesystem::path dir(c.outDir);
  std::filesystem::create_directories(dir);
  writeMetricsCsv(*solver, dir / "metrics.csv");
  writeSolutionCsv(*solver, dir / "solution_final.csv");
  if (c.trace) writeTraceCsv(solver->trace(), dir / "trace.csv");
  writeRunJson(c, *solver, summary, dir / "run.json");
  return summary;
}

RunConfig convergenceTemplate() {
  RunConfig c;
  c.system = SystemKind::advection;
  c.mode = SchedulerMode::fused;
  c.finalTime = 0.25;
  c.cfl = 0.5;
  c.outDir = "out";
  return c;
}

std::vector<ConvergenceRow> convergenceStudy(RunConfig c, const std::vector<int>& levels) {
  if (levels.empty()) throw ConfigError("convergence study needs at least one level");
  if (!c.finalTime) c.finalTime = 0.25;
  c.trace = false;
  std::vector<ConvergenceRow> rows;
  const Scenario scenario = makeScenario(c.scenario, c.system, c.dims, c.spikeStep);
  if (!scenario.exact) throw ConfigError("scenario '" + c.scenario + "' has no exact solution");
  for (int level : levels) {
    c.depth = level;
    auto solver = makeSolver(c);
    while (!solver->finished()) solver->step();
    ConvergenceRow row;
    row.level = level;
    row.h = solver->grid().meshWidth();
    row.error = l2Error(*solver, scenario.exact);
    row.steps = solver->stepsCompleted();
    if (!rows.empty() && rows.back().error > 0.0 && row.error > 0.0) {
      row.order = std::log(rows.back().error / row.error) / std::log(rows.back().h / row.h);
    }
    rows.push_back(row);
  }
  return rows;
}

void writeConvergenceCsv(const std::vector<ConvergenceRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "level,h,steps,l2_error,order\n";
  char buf[64];
  for (const ConvergenceRow& r : rows) {
    out << r.level << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.h);
    out << buf << ',' << r.steps << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.error);
    out << buf << ',';
    if (r.order) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.order);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace cadg
