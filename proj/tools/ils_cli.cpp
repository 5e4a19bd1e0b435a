// Batch front end: ingest group/section/experiment configs (JSON), run
// verification tasks, emit machine-readable reports.
//
//   ils run <config.json> [--out report.json] [--seed N] [--csv dir]
//   ils list-builtins
//
// Exit codes: 0 all tasks pass, 1 any task fails or errors, 2 usage or
// config schema violation. With no --out, the report goes to
// $ILS_OUT_DIR/report.json when set, else to stdout.

#include "ils/builtins.hpp"
#include "ils/heisenberg.hpp"
#include "ils/metric_core.hpp"
#include "ils/polynomial.hpp"
#include "ils/quasi_linear.hpp"
#include "ils/sections_carnot.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

using nlohmann::json;
using namespace ils;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Schema helpers with field-path diagnostics.
const json& need(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key))
    throw ConfigError("missing field '" + path + key + "'");
  return j.at(key);
}

double need_num(const json& j, const std::string& key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_number()) throw ConfigError("field '" + path + key + "' must be a number");
  return v.get<double>();
}

int need_int(const json& j, const std::string& key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_number_integer())
    throw ConfigError("field '" + path + key + "' must be an integer");
  return v.get<int>();
}

std::string need_str(const json& j, const std::string& key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_string()) throw ConfigError("field '" + path + key + "' must be a string");
  return v.get<std::string>();
}

Vec to_vec(const json& arr, const std::string& path) {
  if (!arr.is_array()) throw ConfigError("field '" + path + "' must be an array");
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// The experiment instance: either a step-2 group with its splitting, or one
// of the metric built-ins.
struct Instance {
  std::string type;  // "heisenberg" | "step2" | "reciprocal" | "linear"
  std::optional<HeisenbergInstance> heis;
  std::shared_ptr<const Splitting> split;          // group instances
  std::shared_ptr<const Quotient> quotient;        // all instances
  std::map<std::string, Section> sections;
  std::map<std::string, GraphSection> graph_sections;
};

std::function<double(const Vec&)> parse_scalar_function(const json& spec, int arity,
                                                        const std::string& path) {
  std::string type = need_str(spec, "type", path);
  if (type == "polynomial") {
    Polynomial poly;
    poly.n_vars = arity;
    const json& terms = need(spec, "terms", path);
    for (const auto& t : terms) {
      Polynomial::Term term;
      const json& exps = need(t, "exponents", path + "terms.");
      if (static_cast<int>(exps.size()) != arity)
        throw ConfigError("field '" + path + "terms.exponents' must have " +
                          std::to_string(arity) + " entries");
      for (const auto& e : exps) term.exponents.push_back(e.get<int>());
      term.coeff = need_num(t, "coeff", path + "terms.");
      poly.terms.push_back(std::move(term));
    }
    return poly;
  }
  if (type == "grid") {
    Vec lo = to_vec(need(spec, "lo", path), path + "lo");
    Vec hi = to_vec(need(spec, "hi", path), path + "hi");
    std::vector<int> shape;
    for (const auto& s : need(spec, "shape", path)) shape.push_back(s.get<int>());
    std::vector<double> values;
    for (const auto& v : need(spec, "values", path)) values.push_back(v.get<double>());
    return GridFunction(lo, hi, shape, values);
  }
  throw ConfigError("field '" + path + "type' must be 'polynomial' or 'grid'");
}

Instance build_instance(const json& cfg) {
  Instance inst;
  const json& group = need(cfg, "group", "");
  inst.type = need_str(group, "type", "group.");

  if (inst.type == "heisenberg") {
    int n = need_int(group, "n", "group.");
    int k = group.value("k", 1);
    inst.heis = make_heisenberg(n, k);
    inst.split = std::make_shared<Splitting>(*inst.heis->group);
    inst.quotient = std::make_shared<Quotient>(make_quotient(inst.split));
  } else if (inst.type == "step2") {
    int m = need_int(group, "m", "group.");
    int n = need_int(group, "n", "group.");
    const json& bs = need(group, "B", "group.");
    if (static_cast<int>(bs.size()) != n)
      throw ConfigError("field 'group.B' must contain n matrices");
    std::vector<Eigen::MatrixXd> mats;
    for (const auto& b : bs) {
      if (static_cast<int>(b.size()) != m * m)
        throw ConfigError("field 'group.B' entries must be row-major m*m arrays");
      Eigen::MatrixXd M(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) M(i, j) = b[i * m + j].get<double>();
      mats.push_back(M);
    }
    inst.split = std::make_shared<Splitting>(Step2Group(m, n, mats));
    inst.quotient = std::make_shared<Quotient>(make_quotient(inst.split));
  } else if (inst.type == "reciprocal") {
    inst.quotient = make_reciprocal_quotient();
  } else if (inst.type == "linear") {
    inst.quotient = make_linear_quotient();
  } else {
    throw ConfigError("field 'group.type' must be one of heisenberg, step2, "
                      "reciprocal, linear");
  }

  if (cfg.contains("sections")) {
    for (const auto& [name, spec] : cfg.at("sections").items()) {
      std::string path = "sections." + name + ".";
      if (inst.type == "reciprocal") {
        inst.sections[name] = make_reciprocal_section();
      } else if (inst.type == "linear") {
        auto g = parse_scalar_function(spec, 1, path);
        inst.sections[name] = make_graph_section(
            inst.quotient, [g](double y) { return g(Vec::Constant(1, y)); });
      } else {
        int arity = inst.split->group().dim() - 1;
        GraphSection gs;
        gs.split = inst.split;
        gs.f = parse_scalar_function(spec, arity, path);
        gs.lo = Vec::Constant(arity, -1.5);
        gs.hi = Vec::Constant(arity, 1.5);
        if (spec.contains("box")) {
          gs.lo = to_vec(need(spec.at("box"), "lo", path + "box."), path + "box.lo");
          gs.hi = to_vec(need(spec.at("box"), "hi", path + "box."), path + "box.hi");
          if (gs.lo.size() != arity || gs.hi.size() != arity)
            throw ConfigError("field '" + path + "box' must have " +
                              std::to_string(arity) + " entries per bound");
        }
        inst.graph_sections[name] = gs;
        inst.sections[name] = make_section(gs);
      }
    }
  }
  return inst;
}

const Section& find_section(const Instance& inst, const json& task,
                            const std::string& key, const std::string& path) {
  std::string name = need_str(task, key, path);
  auto it = inst.sections.find(name);
  if (it == inst.sections.end())
    throw ConfigError("field '" + path + key + "' references unknown section '" +
                      name + "'");
  return it->second;
}

const GraphSection& find_graph(const Instance& inst, const json& task,
                               const std::string& key, const std::string& path) {
  std::string name = need_str(task, key, path);
  auto it = inst.graph_sections.find(name);
  if (it == inst.graph_sections.end())
    throw ConfigError("field '" + path + key +
                      "' requires a graph section on a group instance ('" + name +
                      "' not found)");
  return it->second;
}

json lip_to_json(const LipschitzReport& rep) {
  return {{"estimate", rep.estimate},
          {"witness_y1", vec_to_json(rep.witness_y1)},
          {"witness_y2", vec_to_json(rep.witness_y2)},
          {"n_pairs", rep.n_pairs},
          {"degenerate_pairs", rep.degenerate_pairs},
          {"tolerance", rep.tolerance},
          {"note", rep.note}};
}

json run_task(const Instance& inst, const json& task, std::uint64_t seed,
              int workers, const std::string& path) {
  std::string name = need_str(task, "task", path);
  json out{{"task", name}};
  double tol = task.value("tol", 1e-9);
  int samples = task.value("samples", 500);

  if (name == "verify-section") {
    const Section& s = find_section(inst, task, "section", path);
    auto check = verify_section(s, samples, task.value("tol", 1e-12), seed);
    out["status"] = check.pass ? "pass" : "fail";
    out["max_defect"] = check.max_defect;
    out["n_samples"] = check.n_samples;
    out["tolerance"] = check.tolerance;
    if (check.witness) out["witness"] = vec_to_json(*check.witness);
  } else if (name == "lip-estimate") {
    const Section& s = find_section(inst, task, "section", path);
    auto rep = lipschitz_estimate(s, samples, seed, kDegenerateTol, workers);
    out["status"] = "pass";
    out["report"] = lip_to_json(rep);
  } else if (name == "slope") {
    const Section& s = find_section(inst, task, "section", path);
    Vec y = to_vec(need(task, "base_point", path), path + "base_point");
    auto est = intrinsic_slope(s, y, task.value("r0", 0.5), task.value("levels", 6),
                               task.value("samples_per_level", 200), seed);
    out["status"] = "pass";
    out["radii"] = est.radii;
    out["sup_ratios"] = est.sup_ratios;
    out["extrapolated"] = est.extrapolated;
    out["note"] = est.note;
  } else if (name == "metric-audit") {
    auto audit = metric_axiom_audit(*inst.quotient, samples, seed);
    out["status"] = "pass";
    out["max_triangle_defect"] = audit.max_triangle_defect;
    out["max_asymmetry"] = audit.max_asymmetry;
    out["n_triples"] = audit.n_triples;
  } else if (name == "quasi-linear-check") {
    QuasiLinearQuotient q{inst.quotient, task.value("lambda", 1.0),
                          task.value("nonnegative_scalars", true),
                          task.value("signed_power", false)};
    double defect = check_quasi_linearity(q, samples, seed);
    out["status"] = defect <= tol ? "pass" : "fail";
    out["max_defect"] = defect;
    out["tolerance"] = tol;
  } else if (name == "leibniz-check") {
    QuasiLinearQuotient q{inst.quotient, task.value("lambda", 1.0), false, false};
    const Section& phi = find_section(inst, task, "phi", path);
    const Section& psi = find_section(inst, task, "psi", path);
    Vec y = to_vec(need(task, "base_point", path), path + "base_point");
    std::optional<double> c;
    if (task.contains("c")) c = task.at("c").get<double>();
    SlopeParams sp;
    sp.seed = seed;
    auto r = leibniz_bound_check(q, phi, psi, y, c, sp, tol);
    out["status"] = r.satisfied ? "pass" : "fail";
    out["lhs"] = r.lhs;
    out["rhs"] = r.rhs;
    out["c_used"] = r.c_used;
    out["c_source"] = r.c_source;
  } else if (name == "dilate-check") {
    const GraphSection& gs = find_graph(inst, task, "section", path);
    double lambda = need_num(task, "lambda", path);
    auto rep = dilate_section(gs, lambda, samples, seed);
    double own_tol = task.value("own_tol", 1e-6);
    bool ok = rep.section_check.pass && rep.max_scaling_defect <= tol &&
              rep.max_own_defect <= own_tol;
    out["status"] = ok ? "pass" : "fail";
    out["lambda"] = lambda;
    out["lip_parent"] = rep.lip_parent;
    out["lip_dilated_own_quotient"] = rep.lip_own;
    out["lip_dilated_parent_normalized"] = rep.lip_scaled;
    out["max_ratio_scaling_defect"] = rep.max_scaling_defect;
    out["max_own_ratio_defect"] = rep.max_own_defect;
    out["commutation_defect"] = rep.commutation_defect;
    out["tolerance"] = tol;
  } else if (name == "sum-check") {
    if (inst.split) {
      const GraphSection& phi = find_graph(inst, task, "phi", path);
      const GraphSection& psi = find_graph(inst, task, "psi", path);
      auto r = sum_sections_step2(phi, psi, samples, seed);
      out["compatible"] = r.compatible;
      out["max_compat_defect"] = r.max_compat_defect;
      out["max_homomorphism_residual"] = r.max_homomorphism_residual;
      if (!r.compatible) {
        out["status"] = "fail";
        out["witness_a"] = vec_to_json(r.witness_a);
        out["witness_b"] = vec_to_json(r.witness_b);
        out["defect_per_layer"] = vec_to_json(r.defect_per_layer);
      } else {
        out["status"] = r.section_valid ? "pass" : "fail";
        out["section_valid"] = r.section_valid;
        if (r.report) out["report"] = lip_to_json(*r.report);
      }
    } else {
      QuasiLinearQuotient q{inst.quotient, task.value("lambda", 1.0), true, false};
      const Section& phi = find_section(inst, task, "phi", path);
      const Section& psi = find_section(inst, task, "psi", path);
      auto r = sum_sections(q, phi, psi, samples, seed, tol);
      out["status"] = "pass";
      out["quasi_linearity_defect"] = r.quasi_linearity_defect;
      out["report"] = lip_to_json(r.report);
    }
  } else if (name == "compat-classify") {
    if (!inst.heis)
      throw ConfigError("task 'compat-classify' requires a heisenberg instance");
    const GraphSection& phi = find_graph(inst, task, "phi", path);
    const GraphSection& psi = find_graph(inst, task, "psi", path);
    auto c = heisenberg_compatibility_classify(*inst.heis, phi, psi, samples, seed);
    out["status"] = "pass";  // a reported finding, not an assertion
    out["branch"] = c.branch;
    out["max_phi1"] = c.max_phi1;
    out["max_psi_np1"] = c.max_psi_np1;
    out["max_defect"] = c.max_defect;
    out["branch_claim_confirmed"] = c.branch_claim_confirmed;
    out["witness_a"] = vec_to_json(c.witness_a);
    out["witness_b"] = vec_to_json(c.witness_b);
    out["note"] = c.note;
  } else {
    throw ConfigError("field '" + path + "task' names unknown task '" + name + "'");
  }
  return out;
}

void write_csv(const json& results, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const json& r = results[i];
    std::string file = dir + "/task" + std::to_string(i) + "_" +
                       r.at("task").get<std::string>() + ".csv";
    std::ofstream out(file);
    out << "key,value\n";
    for (const auto& [k, v] : r.items()) {
      if (v.is_primitive()) out << k << "," << v.dump() << "\n";
    }
  }
}

int cmd_run(const std::string& config_path, std::optional<std::string> out_path,
            std::optional<std::uint64_t> seed_override,
            std::optional<std::string> csv_dir) {
  json cfg;
  {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config '" << config_path << "'\n";
      return 2;
    }
    try {
      cfg = json::parse(in);
    } catch (const json::parse_error& e) {
      std::cerr << "error: config parse failure: " << e.what() << "\n";
      return 2;
    }
  }

  json report;
  auto t0 = std::chrono::steady_clock::now();
  int exit_code = 0;
  try {
    Instance inst = build_instance(cfg);
    std::uint64_t seed = 1;
    int workers = 1;
    if (cfg.contains("sampling")) {
      seed = cfg.at("sampling").value("seed", 1);
      workers = cfg.at("sampling").value("workers", 1);
    }
    if (seed_override) seed = *seed_override;

    const json& tasks = need(cfg, "tasks", "");
    if (!tasks.is_array()) throw ConfigError("field 'tasks' must be an array");
    json results = json::array();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      std::string path = "tasks[" + std::to_string(i) + "].";
      json r;
      try {
        r = run_task(inst, tasks[i], seed + i, workers, path);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        r = {{"task", tasks[i].value("task", "?")},
             {"status", "error"},
             {"message", e.what()}};
      }
      if (r.at("status") != "pass") exit_code = 1;
      results.push_back(std::move(r));
    }
    report["results"] = std::move(results);
    report["config"] = cfg;
    report["seed"] = seed;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  auto t1 = std::chrono::steady_clock::now();
  report["meta"] = {
      {"tool", "ils"},
      {"version", kVersion},
      {"wall_time_ms",
       std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()}};

  std::string dump = report.dump(2) + "\n";
  if (!out_path) {
    if (const char* dir = std::getenv("ILS_OUT_DIR"))
      out_path = std::string(dir) + "/report.json";
  }
  if (out_path) {
    std::filesystem::path p(*out_path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(*out_path);
    out << dump;
  } else {
    std::cout << dump;
  }
  if (csv_dir) write_csv(report["results"], *csv_dir);
  return exit_code;
}

int cmd_list_builtins() {
  json catalog = {
      {"groups",
       {{{"name", "heisenberg"},
         {"params", {"n", "k"}},
         {"description", "n-th Heisenberg group on R^{2n+1}, H spanned by the "
                         "first k coordinates"}},
        {{"name", "step2"},
         {"params", {"m", "n", "B"}},
         {"description", "step-2 group from n skew-symmetric m x m matrices "
                         "(row-major)"}}}},
      {"instances",
       {{{"name", "reciprocal"},
         {"description",
          "pi(x) = 1/x from (0,1) onto (1,inf) with its 1-Lipschitz section"}},
        {{"name", "linear"},
         {"description", "pi(x1,x2) = x1 on Euclidean R^2 with polynomial "
                         "graph sections"}}}},
      {"tasks",
       {"verify-section", "lip-estimate", "slope", "dilate-check", "sum-check",
        "compat-classify", "quasi-linear-check", "leibniz-check",
        "metric-audit"}}};
  std::cout << catalog.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"intrinsically Lipschitz section toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path, csv_dir;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "execute the tasks in a config file");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  auto* out_opt = run->add_option("--out", out_path, "report output path");
  auto* seed_opt = run->add_option("--seed", seed, "override the sampling seed");
  auto* csv_opt = run->add_option("--csv", csv_dir, "also write per-task CSV files");

  auto* list = app.add_subcommand("list-builtins", "print the builtin catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) return cmd_list_builtins();
  return cmd_run(config_path,
                 out_opt->count() ? std::optional(out_path) : std::nullopt,
                 seed_opt->count() ? std::optional(seed) : std::nullopt,
                 csv_opt->count() ? std::optional(csv_dir) : std::nullopt);
}
