#include "mvfj/error.hpp"
#include "mvfj/scenario.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitInternal = 4;

void report_complex(const mvfj::ComplexRootsError &e) {
  std::cerr << "  T1=" << e.t1() << " T2=" << e.t2() << " T3=" << e.t3()
            << " discriminant=" << e.discriminant() << "\n";
}

// Unwraps the nested cause of a policy failure; returns true for numerical
// causes.
bool describe_cause(const std::exception_ptr &cause) {
  try {
    if (cause)
      std::rethrow_exception(cause);
  } catch (const mvfj::AgentControlError &e) {
    std::cerr << "  agent " << e.agent() << "\n";
    return describe_cause(e.cause());
  } catch (const mvfj::ComplexRootsError &e) {
    report_complex(e);
    return true;
  } catch (const mvfj::DomainError &e) {
    std::cerr << "  " << e.what() << "\n";
    return true;
  } catch (const std::exception &e) {
    std::cerr << "  " << e.what() << "\n";
    return false;
  }
  return false;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Stochastic opinion dynamics with mean-field interaction and "
               "stubborn agents"};
  std::string scenario_path;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool print_config = false;
  bool quiet = false;

  app.add_option("--scenario", scenario_path, "Scenario JSON file")
      ->check(CLI::ExistingFile);
  app.add_option("--output-dir", output_dir, "Directory for artifacts");
  app.add_option("--seed", seed, "Override the scenario seed");
  app.add_option("--workers", workers, "Worker threads (results do not "
                                       "depend on this)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--print-config", print_config,
               "Print the fully defaulted scenario and exit");
  app.add_flag("--quiet", quiet, "Suppress per-artifact summaries");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    mvfj::Scenario s = scenario_path.empty()
                           ? mvfj::default_scenario()
                           : mvfj::load_scenario(scenario_path);
    if (seed) {
      s.seed = *seed;
      s.resolve();
    }
    if (workers)
      s.sim.workers = *workers;

    if (print_config) {
      std::cout << mvfj::to_json(s).dump(2) << "\n";
      return kExitOk;
    }

    mvfj::RunOptions opts;
    opts.output_dir = output_dir;
    opts.workers = workers;
    opts.quiet = quiet;
    mvfj::run_scenario(s, opts, &std::cout);
    return kExitOk;
  } catch (const mvfj::PolicyError &e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << "  step " << e.step() << "\n";
    if (e.agent())
      std::cerr << "  agent " << *e.agent() << "\n";
    return describe_cause(e.cause()) ? kExitNumerical : kExitInternal;
  } catch (const mvfj::ComplexRootsError &e) {
    std::cerr << "error: " << e.what() << "\n";
    report_complex(e);
    return kExitNumerical;
  } catch (const mvfj::DomainError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const mvfj::ParameterError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mvfj::PreconditionError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}
