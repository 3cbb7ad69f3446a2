#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nmx/error.hpp"
#include "nmx/generator.hpp"
#include "nmx/io.hpp"
#include "nmx/service.hpp"
#include "nmx/subnet.hpp"
#include "nmx/versioning.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw nmx::InputError("cannot read '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nmx::InputError("cannot write '" + path + "'");
  out << text;
}

std::map<std::string, std::string> parse_assignments(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw nmx::InputError("evidence must be node=state, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

struct ViewArgs {
  std::vector<std::string> seeds;
  std::string relation = "ancestors";
  std::vector<std::string> labels;
  bool exclude_seeds = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seeds, "Seed node (repeatable)")->required();
    cmd->add_option("--relation", relation, "ancestors, descendants, predecessors_and_successors, immediate_predecessors, immediate_successors or markov_blanket");
    cmd->add_option("--labels", labels, "Keep only nodes carrying one of these labels");
    cmd->add_flag("--exclude-seeds", exclude_seeds, "Drop the seeds from the view");
  }

  nmx::ViewSpec spec() const {
    nmx::ViewSpec view;
    for (const auto& s : seeds) view.seeds.insert(nmx::NodeId(s));
    view.relation = nmx::parse_relation(relation);
    if (!labels.empty()) view.label_filter = std::set<std::string>(labels.begin(), labels.end());
    view.include_seeds = !exclude_seeds;
    return view;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy-MAX belief network workbench"};
  app.require_subcommand(1);
  std::string out_path;
  int status = 0;

  std::string net_path;
  auto* validate = app.add_subcommand("validate", "Check a network and print the report");
  validate->add_option("network", net_path)->required();
  validate->callback([&] {
    const auto doc = nmx::parse_json(read_file(net_path));
    nmx::ValidationReport report;
    try {
      report = nmx::validate_network(nmx::network_from_json(doc));
    } catch (const nmx::ValidationError& e) {
      report = e.report();
    }
    std::cout << nmx::canonical_dump(nmx::report_to_json(report));
    status = report.valid() ? 0 : 1;
  });

  std::size_t cap = nmx::kDefaultExpansionCap;
  auto* expand = app.add_subcommand("expand", "Export full conditional tables");
  expand->add_option("network", net_path)->required();
  expand->add_option("-o,--output", out_path);
  expand->add_option("--cap", cap, "Maximum entries per table");
  expand->callback([&] { emit(nmx::export_expanded(nmx::load_network(read_file(net_path)), cap), out_path); });

  std::vector<std::string> evidence_items;
  std::vector<std::string> query_items;
  std::size_t factor_cap = nmx::kFactorCap;
  auto* infer = app.add_subcommand("infer", "Posterior marginals by variable elimination");
  infer->add_option("network", net_path)->required();
  infer->add_option("--evidence", evidence_items, "node=state (repeatable)");
  infer->add_option("--query", query_items, "Query node (repeatable; default all)");
  infer->add_option("--factor-cap", factor_cap);
  infer->callback([&] {
    const nmx::Network net = nmx::load_network(read_file(net_path));
    const nmx::Evidence evidence = nmx::parse_evidence(net, parse_assignments(evidence_items));
    std::set<nmx::NodeId> query(query_items.begin(), query_items.end());
    std::cout << nmx::canonical_dump(nmx::inference_report(net, evidence, query, factor_cap));
  });

  ViewArgs view_args;
  std::string policy = "root-prior";
  auto* extract = app.add_subcommand("extract", "Extract a subnetwork with folded leaks");
  extract->add_option("network", net_path)->required();
  view_args.attach(extract);
  extract->add_option("--policy", policy, "root-prior|exact");
  extract->add_option("-o,--output", out_path);
  extract->callback([&] {
    const nmx::Network net = nmx::load_network(read_file(net_path));
    const nmx::ViewSpec view = view_args.spec();
    nmx::ExtractionOptions options;
    options.policy = nmx::parse_policy(policy);
    const auto sub = nmx::extract_subnetwork(net, nmx::select_view(net, view), options, view);
    emit(nmx::save_network(sub.network), out_path);
  });

  double tolerance = 1e-9;
  auto* audit = app.add_subcommand("audit", "Compare retained marginals before and after extraction");
  audit->add_option("network", net_path)->required();
  ViewArgs audit_view;
  audit_view.attach(audit);
  audit->add_option("--policy", policy, "root-prior|exact");
  audit->add_option("--tolerance", tolerance);
  audit->callback([&] {
    const nmx::Network net = nmx::load_network(read_file(net_path));
    nmx::ExtractionOptions options;
    options.policy = nmx::parse_policy(policy);
    const double deviation = nmx::soundness_audit(net, audit_view.spec(), options);
    const auto hierarchy = nmx::check_hierarchical(net);
    nmx::Json report{{"max_deviation", deviation},
                     {"tolerance", tolerance},
                     {"hierarchical", hierarchy.is_hierarchical},
                     {"sound", deviation <= tolerance}};
    std::cout << nmx::canonical_dump(report);
    status = deviation <= tolerance ? 0 : 1;
  });

  std::string other_path;
  auto* diff = app.add_subcommand("diff", "Difference between two versions");
  diff->add_option("base", net_path)->required();
  diff->add_option("target", other_path)->required();
  diff->add_option("-o,--output", out_path);
  diff->callback([&] {
    const auto a = nmx::load_network(read_file(net_path));
    const auto b = nmx::load_network(read_file(other_path));
    emit(nmx::save_diff(nmx::diff(a, b)), out_path);
  });

  bool reverse = false;
  auto* apply = app.add_subcommand("apply", "Apply a diff to its base version");
  apply->add_option("network", net_path)->required();
  apply->add_option("diff", other_path)->required();
  apply->add_flag("--reverse", reverse, "Apply the inverse diff");
  apply->add_option("-o,--output", out_path);
  apply->callback([&] {
    const auto net = nmx::load_network(read_file(net_path));
    auto d = nmx::load_diff(read_file(other_path));
    if (reverse) d = nmx::invert(d);
    emit(nmx::save_network(nmx::apply_diff(net, d)), out_path);
  });

  std::string preset = "cpcs-scale";
  std::uint64_t seed = 1;
  auto* gen = app.add_subcommand("gen", "Generate a random layered network");
  gen->add_option("--preset", preset, "cpcs-scale|tiny");
  gen->add_option("--seed", seed);
  gen->add_option("-o,--output", out_path);
  gen->callback([&] { emit(nmx::save_network(nmx::gen_random(nmx::GeneratorParams::preset(preset, seed))), out_path); });

  std::string fmap_path;
  auto* import = app.add_subcommand("import", "Build a network from frequency-weighted structure");
  import->add_option("structure", net_path)->required();
  import->add_option("--frequencies", fmap_path, "Weight-to-probability map (JSON)");
  import->add_option("-o,--output", out_path);
  import->callback([&] {
    const auto fmap = fmap_path.empty() ? nmx::FrequencyMap::defaults() : nmx::load_frequency_map(read_file(fmap_path));
    emit(nmx::save_network(nmx::import_frequencies(read_file(net_path), fmap)), out_path);
  });

  nmx::ServiceOptions service_options;
  auto* serve = app.add_subcommand("serve", "Run the HTTP workbench");
  serve->add_option("--host", service_options.host);
  serve->add_option("--port", service_options.port);
  std::vector<std::string> preload;
  serve->add_option("--load", preload, "Network file to register at startup (repeatable)");
  serve->callback([&] {
    nmx::WorkbenchService service(service_options);
    for (const auto& path : preload) {
      const auto r = service.handle("POST", "/networks", {}, read_file(path));
      if (r.status != 201) throw nmx::InputError(path + ": " + r.body);
      std::cerr << path << " -> " << r.body << "\n";
    }
    const int port = service.bind();
    std::cerr << "listening on " << service_options.host << ":" << port << "\n";
    service.run();
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const nmx::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
