// Command-line front end of the experiment harness.
//
//   detour [options] discover | learn | run [--network f] | eval --pre d --post d | replay d
//
// Exit codes: 0 success, 2 configuration or input error, 3 replay divergence,
// 1 anything else.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "detour/errors.hpp"
#include "detour/format.hpp"
#include "detour/harness.hpp"

namespace fs = std::filesystem;
using namespace detour;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> epochs;
  std::optional<double> alpha;
  bool no_barrier = false;
  bool quiet = false;
};

harness::ExperimentConfig resolve(const Overrides& o, bool epochs_are_budget) {
  harness::ExperimentConfig c;
  if (!o.config_path.empty()) c = harness::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (o.epochs) {
    if (epochs_are_budget) c.agent.epoch_budget = *o.epochs;
    else c.run_epochs = *o.epochs;
  }
  if (o.alpha) c.agent.alpha = *o.alpha;
  if (o.no_barrier) c.world.barrier_exists = false;
  c.validate();
  return c;
}

void print_metrics(const char* label, const harness::RunMetrics& m) {
  std::cout << label << ": epochs " << m.epochs << ", barrier events/epoch "
            << format_double(m.barrier_events_per_epoch) << ", mean C_S(BT) "
            << format_double(m.mean_cs_bt) << ", mean C_S(D) " << format_double(m.mean_cs_depth)
            << ", mean |C_U| " << format_double(m.mean_cs_utility) << ", success rate "
            << format_double(m.success_rate) << "\n";
}

void summarize_run(const harness::Bundle& b) {
  print_metrics("run", harness::metrics_of(b));
}

void summarize_learn(const harness::Bundle& b) {
  const auto epochs = nlohmann::json::parse(b.file("epochs.json"));
  const auto& learning = epochs.at("learning");
  std::cout << "epochs played: " << epochs.at("epochs").size() << "\n";
  if (learning.at("insertion_epoch").is_null()) {
    std::cout << "no hidden variable inserted\n";
    return;
  }
  std::cout << "hidden variable inserted after epoch " << learning.at("insertion_epoch")
            << " linked to";
  for (const auto& v : learning.at("selected_variables")) std::cout << ' ' << v.get<std::string>();
  std::cout << "\nconverged across epochs: " << (learning.at("converged").get<bool>() ? "yes" : "no")
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surprise-driven hidden-variable learning for a detour task"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config_path, "experiment configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "64-bit run seed");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--epochs", o.epochs, "epoch budget for learn, epochs played for run")
      ->check(CLI::PositiveNumber);
  app.add_option("--alpha", o.alpha, "significance level of the surprise tests");
  app.add_flag("--no-barrier", o.no_barrier, "remove the barrier from the world");
  app.add_flag("--quiet", o.quiet, "print nothing on success");

  auto* discover = app.add_subcommand("discover", "random-policy sampling and causal discovery");
  auto* learn = app.add_subcommand("learn", "full learning process");
  auto* run = app.add_subcommand("run", "play epochs with a fixed network");
  std::string network_path;
  run->add_option("--network", network_path, "network JSON (default: the initial network)")
      ->check(CLI::ExistingFile);
  auto* eval = app.add_subcommand("eval", "compare a pre- and a post-learning run bundle");
  std::string pre_dir;
  std::string post_dir;
  eval->add_option("--pre", pre_dir, "pre-learning run bundle")->required();
  eval->add_option("--post", post_dir, "post-learning run bundle")->required();
  auto* replay = app.add_subcommand("replay", "re-run a bundle and check byte equality");
  std::string bundle_dir;
  replay->add_option("bundle", bundle_dir, "bundle directory")->required();
  for (auto* sub : {discover, learn, run, eval, replay}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (discover->parsed()) {
      const auto c = resolve(o, false);
      const auto b = harness::cmd_discover(c);
      harness::write_bundle(b, c.output_dir);
      if (!o.quiet) std::cout << b.file("edges.csv");
    } else if (learn->parsed()) {
      const auto c = resolve(o, true);
      const auto b = harness::cmd_learn(c);
      harness::write_bundle(b, c.output_dir);
      if (!o.quiet) summarize_learn(b);
    } else if (run->parsed()) {
      const auto c = resolve(o, false);
      std::optional<network::TwoSliceNetwork> net;
      if (!network_path.empty()) {
        std::ifstream in(network_path);
        try {
          net = network::network_from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
          throw ConfigInvalid(network_path + ": " + e.what());
        }
      }
      const auto b = harness::cmd_run(c, net);
      harness::write_bundle(b, c.output_dir);
      if (!o.quiet) summarize_run(b);
    } else if (eval->parsed()) {
      const auto c = resolve(o, false);
      const auto cmp = harness::cmd_eval(harness::read_bundle(pre_dir), harness::read_bundle(post_dir));
      harness::write_bundle(cmp.report, c.output_dir);
      if (!o.quiet) {
        print_metrics("pre", cmp.pre);
        print_metrics("post", cmp.post);
      }
    } else if (replay->parsed()) {
      const auto report = harness::cmd_replay(harness::read_bundle(bundle_dir));
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
      if (!o.quiet) std::cout << "replay matches " << bundle_dir << "\n";
    }
  } catch (const ReplayDivergence& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const ConfigInvalid& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const BundleMismatch& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
