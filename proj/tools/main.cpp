#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>

#include <CLI11.hpp>

#include "tasks.hpp"

namespace {

enum Exit { kOk = 0, kClaimFailed = 1, kSchema = 2, kIo = 3 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format = "json";
};

int run(const std::string& task, const Options& opt) {
  using namespace xferlab::cli;
  const json config = read_json_file(opt.config);
  Output out = run_task(task, config, opt.seed);
  const json report = out.report.to_json();
  if (!opt.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    if (ec) throw io_error("cannot create " + opt.out_dir + ": " + ec.message());
    const json output = config.value("output", json::object());
    const std::filesystem::path dir(opt.out_dir);
    write_file((dir / output.value("report", task + ".json")).string(), report.dump(2) + "\n");
    if (!out.table.empty()) write_file((dir / output.value("data", task + ".csv")).string(), out.table.csv());
  }
  if (opt.format == "csv") {
    std::cout << out.report.claims_csv();
  } else {
    std::cout << report.dump(2) << '\n';
  }
  return out.report.pass() ? kOk : kClaimFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xferlab: transfer operators, path measures and wavelet filters"};
  app.require_subcommand(1);
  Options opt;
  for (const auto& name : xferlab::cli::task_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " task");
    sub->add_option("--config", opt.config, "JSON config file")->required();
    sub->add_option("--seed", opt.seed, "RNG seed, overrides the config");
    sub->add_option("--out-dir", opt.out_dir, "directory for the report and data files");
    sub->add_option("--format", opt.format, "stdout format")->check(CLI::IsMember({"json", "csv"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kSchema;
  }
  const std::string task = app.get_subcommands().front()->get_name();
  try {
    return run(task, opt);
  } catch (const xferlab::cli::io_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const xferlab::divergence_error& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kClaimFailed;
  } catch (const xferlab::cli::schema_error& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kSchema;
  } catch (const xferlab::cli::json::exception& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kSchema;
  } catch (const std::logic_error& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kClaimFailed;
  }
}
