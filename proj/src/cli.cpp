#include "enrollsim/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "enrollsim/cart.hpp"
#include "enrollsim/epidemic.hpp"
#include "enrollsim/errors.hpp"
#include "enrollsim/kvconfig.hpp"
#include "enrollsim/manifest.hpp"
#include "enrollsim/network.hpp"
#include "enrollsim/rng.hpp"
#include "enrollsim/sweep.hpp"
#include "enrollsim/synthgen.hpp"
#include "enrollsim/textio.hpp"

namespace enrollsim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ===== shared plumbing =====

network::EnrollmentNetwork load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open network file: " + path);
  return network::parse_enrollments(in);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("failed writing: " + path);
}

json stats_json(const network::NetworkStats& st) {
  json hist = json::object();
  for (const auto& [size, count] : st.class_size_histogram)
    hist[std::to_string(size)] = count;
  return json{{"n_students", st.n_students},
              {"n_classes", st.n_classes},
              {"n_enrollments", st.n_enrollments},
              {"n_students_lcc", st.n_students_lcc},
              {"max_class_size", st.max_class_size},
              {"class_size_histogram", hist}};
}

json params_json(const epidemic::EpidemicParams& p) {
  return json{{"theta_I2", p.theta_I2}, {"rho_A", p.rho_A},   {"rho_I1", p.rho_I1},
              {"q_E", p.q_E},           {"q_A", p.q_A},       {"q_I1", p.q_I1},
              {"q_I2", p.q_I2},         {"q_EA", p.q_EA}};
}

std::string sidecar_manifest_path(const std::string& output) {
  return output + ".manifest.json";
}

// Output stem for auxiliary files: "runs/sweep.csv" -> "runs/sweep".
std::string out_stem(const std::string& output) {
  fs::path p(output);
  fs::path stem = p.parent_path() / p.stem();
  return stem.string();
}

std::vector<double> parse_double_list(std::string_view s, const std::string& what) {
  std::vector<double> out;
  for (std::string_view item : text::split(s, ',')) {
    auto v = text::parse_double(text::trim(item));
    if (!v) throw ConfigError(what + ": cannot parse '" + std::string(item) + "'");
    out.push_back(*v);
  }
  return out;
}

sweep::ParameterGrid grid_from_kv(const kv::Map& m) {
  sweep::ParameterGrid grid = sweep::ParameterGrid::defaults();
  for (const auto& [key, value] : m) {
    if (key == "theta_I2") grid.theta_I2 = parse_double_list(value, key);
    else if (key == "rho_A") grid.rho_A = parse_double_list(value, key);
    else if (key == "rho_I1") grid.rho_I1 = parse_double_list(value, key);
    else if (key == "q_E") grid.q_E = parse_double_list(value, key);
    else if (key == "q_A") grid.q_A = parse_double_list(value, key);
    else if (key == "q_I1") grid.q_I1 = parse_double_list(value, key);
    else if (key == "q_I2") grid.q_I2 = parse_double_list(value, key);
    else if (key == "q_EA") grid.q_EA = parse_double_list(value, key);
    else if (key == "phi") {
      grid.phi.clear();
      for (std::string_view item : text::split(value, ',')) {
        auto phi = network::Threshold::parse(text::trim(item));
        if (!phi) throw ConfigError("phi: cannot parse '" + std::string(item) + "'");
        grid.phi.push_back(*phi);
      }
      if (grid.phi.empty()) throw ConfigError("phi: empty list");
    } else {
      throw ConfigError("unknown grid key '" + key + "'");
    }
  }
  return grid;
}

json grid_json(const sweep::ParameterGrid& grid) {
  json j;
  j["theta_I2"] = grid.theta_I2;
  j["rho_A"] = grid.rho_A;
  j["rho_I1"] = grid.rho_I1;
  j["q_E"] = grid.q_E;
  j["q_A"] = grid.q_A;
  j["q_I1"] = grid.q_I1;
  j["q_I2"] = grid.q_I2;
  j["q_EA"] = grid.q_EA;
  std::vector<std::string> phis;
  for (auto phi : grid.phi) phis.push_back(phi.to_string());
  j["phi"] = phis;
  return j;
}

// ===== generate =====

struct GenerateArgs {
  std::string preset = "sfu-like";
  std::string config_path;
  std::string output;
  std::optional<std::int64_t> n_students, n_classes;
  std::optional<std::string> class_size_law, pattern_pool;
  std::optional<double> mean_load;
  std::optional<std::uint64_t> seed;
};

int cmd_generate(const GenerateArgs& a) {
  synthgen::SynthConfig cfg = synthgen::SynthConfig::preset(a.preset);
  if (!a.config_path.empty())
    cfg = synthgen::SynthConfig::from_kv(kv::parse_file(a.config_path), cfg);
  if (a.n_students) cfg.n_students = *a.n_students;
  if (a.n_classes) cfg.n_classes = *a.n_classes;
  if (a.class_size_law) {
    auto law = synthgen::ClassSizeLaw::parse(*a.class_size_law);
    if (!law) throw ConfigError("class_size_law: cannot parse '" + *a.class_size_law + "'");
    cfg.class_size_law = *law;
  }
  if (a.pattern_pool) {
    auto pool = synthgen::PatternPool::parse(*a.pattern_pool);
    if (!pool) throw ConfigError("pattern_pool: cannot parse '" + *a.pattern_pool + "'");
    cfg.pattern_pool = *pool;
  }
  if (a.mean_load) cfg.classes_per_student_mean = *a.mean_load;
  if (a.seed) cfg.seed = *a.seed;

  network::EnrollmentNetwork net = synthgen::generate(cfg);

  std::ostringstream body;
  network::write_enrollments(net, body);
  write_file(a.output, body.str());

  manifest::RunManifest mf;
  mf.subcommand = "generate";
  mf.seed = cfg.seed;
  mf.config = json{{"preset", a.preset},
                   {"n_students", cfg.n_students},
                   {"n_classes", cfg.n_classes},
                   {"class_size_law", cfg.class_size_law.to_string()},
                   {"classes_per_student_mean", cfg.classes_per_student_mean},
                   {"pattern_pool", cfg.pattern_pool.to_string()},
                   {"seed", cfg.seed}};
  if (!a.config_path.empty())
    mf.inputs.emplace_back(a.config_path, manifest::file_digest(a.config_path));
  mf.outputs = {a.output};
  mf.write(sidecar_manifest_path(a.output));
  return 0;
}

// ===== stats =====

struct StatsArgs {
  std::string input;
  std::string output;  // empty: stdout
};

int cmd_stats(const StatsArgs& a) {
  const network::NetworkStats st = network::network_stats(load_network(a.input));
  const std::string body = stats_json(st).dump(2) + "\n";
  if (a.output.empty()) {
    std::cout << body;
    return 0;
  }
  write_file(a.output, body);
  manifest::RunManifest mf;
  mf.subcommand = "stats";
  mf.config = json::object();
  mf.inputs = {{a.input, manifest::file_digest(a.input)}};
  mf.outputs = {a.output};
  mf.write(sidecar_manifest_path(a.output));
  return 0;
}

// ===== reduce =====

struct ReduceArgs {
  std::string input;
  std::string output;
  std::string phi = "inf";
  std::string mode = "threshold";
  std::uint64_t seed = 0;
  std::string stats_out;
};

int cmd_reduce(const ReduceArgs& a) {
  auto phi = network::Threshold::parse(a.phi);
  if (!phi) throw ConfigError("phi: expected an integer > 1 or 'inf', got '" + a.phi + "'");
  auto mode = sweep::parse_mode(a.mode);
  if (!mode) throw ConfigError("mode: expected 'threshold' or 'thin', got '" + a.mode + "'");
  if (*mode == sweep::Mode::Thin && phi->is_infinite())
    throw ConfigError("thinning needs a finite phi");

  network::EnrollmentNetwork net = network::drop_degenerate(load_network(a.input));
  network::EnrollmentNetwork reduced;
  if (*mode == sweep::Mode::Threshold) {
    reduced = network::apply_threshold(net, *phi);
  } else {
    rng::Engine eng(rng::derive_seed(
        a.seed, {rng::fnv1a64("thin-network"), static_cast<std::uint64_t>(phi->encoded())}));
    reduced = network::thin_uniform(net, network::thinning_target(net, *phi), eng);
  }
  // Stats describe the reduction itself; the component cut happens after.
  const network::NetworkStats st = network::network_stats(reduced);
  network::EnrollmentNetwork lcc = network::largest_component(reduced);

  std::ostringstream body;
  network::write_enrollments(lcc, body);
  write_file(a.output, body.str());
  if (!a.stats_out.empty()) write_file(a.stats_out, stats_json(st).dump(2) + "\n");

  manifest::RunManifest mf;
  mf.subcommand = "reduce";
  mf.seed = a.seed;
  mf.config = json{{"phi", phi->to_string()}, {"mode", a.mode}, {"seed", a.seed}};
  mf.inputs = {{a.input, manifest::file_digest(a.input)}};
  mf.outputs = {a.output};
  if (!a.stats_out.empty()) mf.outputs.push_back(a.stats_out);
  mf.write(sidecar_manifest_path(a.output));
  return 0;
}

// ===== simulate =====

struct SimulateArgs {
  std::string input;
  std::string output;
  std::string params_path;
  epidemic::EpidemicParams params = epidemic::EpidemicParams::central();
  // Which parameter flags were given explicitly (they out-rank the file).
  std::set<std::string> given;
  int days = 90;
  int initial = 10;
  std::uint64_t seed = 0;
};

epidemic::EpidemicParams params_from_kv(const kv::Map& m, epidemic::EpidemicParams base) {
  for (const auto& [key, value] : m) {
    auto v = text::parse_double(value);
    if (!v) throw ConfigError(key + ": not a number: " + value);
    if (key == "theta_I2") base.theta_I2 = *v;
    else if (key == "rho_A") base.rho_A = *v;
    else if (key == "rho_I1") base.rho_I1 = *v;
    else if (key == "q_E") base.q_E = *v;
    else if (key == "q_A") base.q_A = *v;
    else if (key == "q_I1") base.q_I1 = *v;
    else if (key == "q_I2") base.q_I2 = *v;
    else if (key == "q_EA") base.q_EA = *v;
    else throw ConfigError("unknown parameter key '" + key + "'");
  }
  return base;
}

int cmd_simulate(const SimulateArgs& a) {
  epidemic::EpidemicParams p = a.params;
  if (!a.params_path.empty()) {
    // File values fill in everything the command line did not set.
    epidemic::EpidemicParams from_file =
        params_from_kv(kv::parse_file(a.params_path), epidemic::EpidemicParams::central());
    auto keep = [&](const char* name, double epidemic::EpidemicParams::* field) {
      if (!a.given.count(name)) p.*field = from_file.*field;
    };
    keep("theta_I2", &epidemic::EpidemicParams::theta_I2);
    keep("rho_A", &epidemic::EpidemicParams::rho_A);
    keep("rho_I1", &epidemic::EpidemicParams::rho_I1);
    keep("q_E", &epidemic::EpidemicParams::q_E);
    keep("q_A", &epidemic::EpidemicParams::q_A);
    keep("q_I1", &epidemic::EpidemicParams::q_I1);
    keep("q_I2", &epidemic::EpidemicParams::q_I2);
    keep("q_EA", &epidemic::EpidemicParams::q_EA);
  }
  p.validate();

  network::EnrollmentNetwork net = network::drop_degenerate(load_network(a.input));
  epidemic::SimConfig cfg;
  cfg.n_days = a.days;
  cfg.n_initial = a.initial;
  cfg.seed = a.seed;
  epidemic::ClampCounter clamps;
  const epidemic::Trajectory traj = epidemic::run_simulation(net, p, cfg, &clamps);
  if (clamps.clamps > 0)
    std::cerr << "warning: " << clamps.clamps
              << " transmission probabilities clamped into [0,1]\n";

  std::ostringstream body;
  epidemic::write_trajectory_csv(traj, body);
  write_file(a.output, body.str());

  manifest::RunManifest mf;
  mf.subcommand = "simulate";
  mf.seed = a.seed;
  mf.config = json{{"params", params_json(p)},
                   {"n_days", a.days},
                   {"n_initial", a.initial},
                   {"seed", a.seed},
                   {"clamped_probabilities", clamps.clamps}};
  mf.inputs = {{a.input, manifest::file_digest(a.input)}};
  if (!a.params_path.empty())
    mf.inputs.emplace_back(a.params_path, manifest::file_digest(a.params_path));
  mf.outputs = {a.output};
  mf.write(sidecar_manifest_path(a.output));
  return 0;
}

// ===== sweep =====

struct SweepArgs {
  std::string input;
  std::string output;
  std::string grid_path;
  std::string mode = "threshold";
  int reps = 50;
  std::uint64_t seed = 0;
  int jobs = 0;  // 0: one thread per hardware core
  int days = 90;
  int initial = 10;
  std::size_t subsample = 0;  // 0: full grid
  bool keep_trajectories = false;
  bool quiet = false;
};

int cmd_sweep(const SweepArgs& a) {
  auto mode = sweep::parse_mode(a.mode);
  if (!mode) throw ConfigError("mode: expected 'threshold' or 'thin', got '" + a.mode + "'");
  sweep::ParameterGrid grid = a.grid_path.empty()
                                  ? sweep::ParameterGrid::defaults()
                                  : grid_from_kv(kv::parse_file(a.grid_path));

  network::EnrollmentNetwork base = network::drop_degenerate(load_network(a.input));

  sweep::SweepOptions opt;
  opt.reps = a.reps;
  opt.master_seed = a.seed;
  opt.mode = *mode;
  opt.jobs = a.jobs > 0 ? a.jobs
                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  opt.n_days = a.days;
  opt.n_initial = a.initial;
  opt.keep_trajectories = a.keep_trajectories;
  if (a.subsample > 0)
    opt.combo_subset = sweep::subsample_combos(grid.combo_count(), a.subsample, a.seed);
  if (!a.quiet)
    opt.progress = [](std::size_t done, std::size_t total) {
      const int pct = static_cast<int>(100 * done / total);
      std::fprintf(stderr, "\rsweep: %d%% (%zu/%zu)", pct, done, total);
      if (done == total) std::fputc('\n', stderr);
      std::fflush(stderr);
    };

  const sweep::SweepResult result = sweep::run_sweep(base, grid, opt);

  std::ostringstream body;
  sweep::write_sweep_csv(result.records, body);
  write_file(a.output, body.str());

  const std::string stem = out_stem(a.output);
  std::vector<std::string> outputs = {a.output};
  for (const auto& [phi, st] : result.per_phi_stats) {
    const std::string path = stem + "_phi" + phi.to_string() + "_network.json";
    write_file(path, stats_json(st).dump(2) + "\n");
    outputs.push_back(path);
  }
  if (a.keep_trajectories) {
    std::ostringstream tbody;
    tbody << "combo_index,replicate,day,S,E,A,I1,I2,R\n";
    for (std::size_t i = 0; i < result.records.size(); ++i) {
      const sweep::SweepRecord& rec = result.records[i];
      const epidemic::Trajectory& traj = result.trajectories[i];
      for (std::size_t d = 0; d < traj.days.size(); ++d) {
        tbody << rec.combo_index << ',' << rec.replicate << ',' << d;
        for (std::int64_t v : traj.days[d]) tbody << ',' << v;
        tbody << '\n';
      }
    }
    const std::string path = stem + "_trajectories.csv";
    write_file(path, tbody.str());
    outputs.push_back(path);
  }

  manifest::RunManifest mf;
  mf.subcommand = "sweep";
  mf.seed = a.seed;
  mf.config = json{{"grid", grid_json(grid)},
                   {"mode", a.mode},
                   {"reps", a.reps},
                   {"seed", a.seed},
                   {"n_days", a.days},
                   {"n_initial", a.initial},
                   {"subsample", a.subsample},
                   {"keep_trajectories", a.keep_trajectories}};
  if (a.subsample > 0) mf.config["combo_subset"] = opt.combo_subset;
  mf.inputs = {{a.input, manifest::file_digest(a.input)}};
  if (!a.grid_path.empty())
    mf.inputs.emplace_back(a.grid_path, manifest::file_digest(a.grid_path));
  mf.outputs = outputs;
  mf.write(sidecar_manifest_path(a.output));
  return 0;
}

// ===== analyze =====

struct AnalyzeArgs {
  std::string input;
  std::string outdir;
  std::string response = "both";  // cii | peak | both
  int folds = 10;
  std::uint64_t seed = 0;
  std::string sizes = "10,25,50,100,200";
  double outlier_sd = 4.0;
  bool drop_outliers = false;
  int listing_splits = 25;
  std::int64_t min_node_rows = 20;
  std::int64_t min_leaf_rows = 7;
};

// Predictor order is the documented grid order; the importance table
// reorders columns for reporting.
const std::vector<std::string> kPredictors = {"theta_I2", "rho_A", "rho_I1", "q_E",
                                              "q_A",      "q_I1",  "q_I2",   "q_EA"};
const std::vector<std::string> kImportanceColumns = {"rho_A", "rho_I1", "theta_I2", "q_E",
                                                     "q_A",   "q_I1",   "q_I2",     "q_EA"};

struct PhiGroup {
  network::Threshold phi = network::Threshold::infinite();
  cart::Dataset data;
  // Identity of each dataset row in the sweep file.
  std::vector<std::pair<std::int64_t, int>> row_ids;  // (combo_index, replicate)
  std::vector<double> raw;                            // untransformed response
};

struct SelectedTree {
  std::string label;
  int n_splits = 0;
  double cv_rmse = 0;
  cart::Tree tree;
};

int cmd_analyze(const AnalyzeArgs& a) {
  if (a.folds < 2) throw ConfigError("folds must be >= 2");
  if (!(a.outlier_sd > 0)) throw ConfigError("outlier-sd must be positive");

  std::vector<int> sizes;
  for (std::string_view item : text::split(a.sizes, ',')) {
    auto v = text::parse_int(text::trim(item));
    if (!v || *v < 0) throw ConfigError("sizes: bad entry '" + std::string(item) + "'");
    sizes.push_back(static_cast<int>(*v));
  }
  if (sizes.empty()) throw ConfigError("sizes: empty list");

  std::ifstream in(a.input, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open sweep file: " + a.input);
  const std::vector<sweep::SweepRecord> records = sweep::read_sweep_csv(in);
  if (records.empty()) throw std::runtime_error("sweep file has no records");
  for (const sweep::SweepRecord& r : records)
    if (r.mode != records.front().mode)
      throw std::runtime_error("sweep file mixes reduction modes; analyze them separately");

  std::vector<std::string> responses;
  if (a.response == "both") responses = {"cii", "peak"};
  else if (a.response == "cii" || a.response == "peak") responses = {a.response};
  else throw ConfigError("response: expected cii, peak or both");

  fs::create_directories(a.outdir);

  std::int64_t n_max = 0;
  for (const sweep::SweepRecord& r : records) n_max = std::max(n_max, r.population);
  const double eps = sweep::logit_epsilon(n_max);

  cart::FitControl ctl;
  ctl.min_node_rows = a.min_node_rows;
  ctl.min_leaf_rows = a.min_leaf_rows;

  std::vector<network::Threshold> phis;
  for (const sweep::SweepRecord& r : records)
    if (std::find(phis.begin(), phis.end(), r.phi) == phis.end()) phis.push_back(r.phi);
  std::sort(phis.begin(), phis.end());

  std::vector<std::string> outputs;
  epidemic::ClampCounter logit_clamps;
  json report_counts = json::object();

  for (const std::string& resp : responses) {
    std::ostringstream cv_csv, imp_csv, outlier_csv;
    cv_csv << "phi,selector,splits,cv_rmse\n";
    imp_csv << "phi,tree";
    for (const std::string& c : kImportanceColumns) imp_csv << ',' << c;
    imp_csv << '\n';
    outlier_csv << "phi,combo_index,replicate," << resp << ",logit_" << resp
                << ",deviation_sd\n";
    std::int64_t outliers_total = 0, dropped_total = 0;

    for (network::Threshold phi : phis) {
      PhiGroup g;
      g.phi = phi;
      g.data.names = kPredictors;
      for (const sweep::SweepRecord& r : records) {
        if (r.phi != phi) continue;
        const double raw = (resp == "cii") ? r.cii : r.peak;
        const double x[8] = {r.params.theta_I2, r.params.rho_A, r.params.rho_I1,
                             r.params.q_E,      r.params.q_A,   r.params.q_I1,
                             r.params.q_I2,     r.params.q_EA};
        g.data.add_row(x, sweep::logit(raw, eps, &logit_clamps));
        g.row_ids.emplace_back(r.combo_index, r.replicate);
        g.raw.push_back(raw);
      }

      const std::vector<cart::OutlierFlag> flags = cart::outlier_report(g.data, a.outlier_sd);
      outliers_total += static_cast<std::int64_t>(flags.size());
      for (const cart::OutlierFlag& f : flags)
        outlier_csv << phi.to_string() << ',' << g.row_ids[f.row].first << ','
                    << g.row_ids[f.row].second << ',' << text::fmt_double(g.raw[f.row])
                    << ',' << text::fmt_double(g.data.y[f.row]) << ','
                    << text::fmt_double(f.deviation_sd) << '\n';
      if (a.drop_outliers && !flags.empty()) {
        cart::Dataset kept;
        kept.names = g.data.names;
        std::vector<char> is_out(g.data.n_rows(), 0);
        for (const cart::OutlierFlag& f : flags) is_out[f.row] = 1;
        for (std::size_t r = 0; r < g.data.n_rows(); ++r)
          if (!is_out[r]) kept.add_row(g.data.row(r), g.data.y[r]);
        dropped_total += static_cast<std::int64_t>(g.data.n_rows() - kept.n_rows());
        g.data = std::move(kept);
      }

      // One full-data fit and one cross-validation serve every selector.
      cart::Tree master = cart::fit_tree(g.data, ctl);
      const cart::PruneSequence seq = cart::prune_sequence(master);
      const std::uint64_t cv_seed = rng::derive_seed(
          a.seed, {rng::fnv1a64("cv-folds"), rng::fnv1a64(resp),
                   static_cast<std::uint64_t>(phi.encoded())});
      const cart::CvResult cv = cart::cross_validate(g.data, ctl, a.folds, cv_seed);

      std::vector<SelectedTree> selected;
      for (int target : sizes) {
        const std::size_t e = seq.entry_for_size(target);
        selected.push_back({std::to_string(target), seq.entries[e].n_splits, cv.rmse(e),
                            cart::prune_to_size(seq, target)});
      }
      selected.push_back({"cv_min", cv.entries[cv.idx_min].n_splits, cv.rmse(cv.idx_min),
                          cv.tree_min.clone()});
      selected.push_back({"cv_1se", cv.entries[cv.idx_1se].n_splits, cv.rmse(cv.idx_1se),
                          cv.tree_1se.clone()});

      for (const SelectedTree& st : selected) {
        cv_csv << phi.to_string() << ',' << st.label << ',' << st.n_splits << ','
               << text::fmt_double(st.cv_rmse) << '\n';
        const std::map<int, double> imp = cart::variable_importance(st.tree.root());
        imp_csv << phi.to_string() << ',' << st.label;
        for (const std::string& col : kImportanceColumns) {
          const auto var = static_cast<int>(
              std::find(kPredictors.begin(), kPredictors.end(), col) - kPredictors.begin());
          auto it = imp.find(var);
          imp_csv << ',';
          if (it != imp.end()) imp_csv << text::fmt_double(it->second);
        }
        imp_csv << '\n';
      }

      // Split listing for the inspection-size tree.
      const cart::Tree listing = cart::prune_to_size(seq, a.listing_splits);
      std::ostringstream listing_body;
      cart::write_split_listing(listing.root(), g.data.names, listing_body);
      const std::string listing_path =
          (fs::path(a.outdir) / ("splits_" + resp + "_phi" + phi.to_string() + ".txt")).string();
      write_file(listing_path, listing_body.str());
      outputs.push_back(listing_path);
    }

    const std::string cv_path = (fs::path(a.outdir) / ("cv_" + resp + ".csv")).string();
    const std::string imp_path =
        (fs::path(a.outdir) / ("importance_" + resp + ".csv")).string();
    const std::string outlier_path =
        (fs::path(a.outdir) / ("outliers_" + resp + ".csv")).string();
    write_file(cv_path, cv_csv.str());
    write_file(imp_path, imp_csv.str());
    write_file(outlier_path, outlier_csv.str());
    outputs.push_back(cv_path);
    outputs.push_back(imp_path);
    outputs.push_back(outlier_path);
    report_counts[resp] = json{{"outliers_flagged", outliers_total},
                               {"rows_dropped", dropped_total}};
  }

  if (logit_clamps.clamps > 0)
    std::cerr << "note: " << logit_clamps.clamps
              << " responses clamped before the logit transform\n";

  manifest::RunManifest mf;
  mf.subcommand = "analyze";
  mf.seed = a.seed;
  mf.config = json{{"response", a.response},
                   {"folds", a.folds},
                   {"seed", a.seed},
                   {"sizes", a.sizes},
                   {"outlier_sd", a.outlier_sd},
                   {"drop_outliers", a.drop_outliers},
                   {"listing_splits", a.listing_splits},
                   {"min_node_rows", a.min_node_rows},
                   {"min_leaf_rows", a.min_leaf_rows},
                   {"logit_epsilon", eps},
                   {"logit_clamps", logit_clamps.clamps},
                   {"outliers", report_counts}};
  mf.inputs = {{a.input, manifest::file_digest(a.input)}};
  mf.outputs = outputs;
  mf.write((fs::path(a.outdir) / "manifest.json").string());
  return 0;
}

}  // namespace

// ===== argument wiring =====

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Class-enrollment contact networks, outbreak simulation and parameter studies"};
  app.set_version_flag("--version",
                       std::string(manifest::kToolName) + " " + manifest::kToolVersion);
  app.require_subcommand(1);

  GenerateArgs gen;
  {
    CLI::App* c = app.add_subcommand(
        "generate", "Generate a synthetic enrollment network (CSV to a file)");
    c->add_option("--preset", gen.preset, "Starting preset: sfu-like, desk, tiny")
        ->capture_default_str();
    c->add_option("--config", gen.config_path, "key = value file overriding the preset");
    c->add_option("-o,--output", gen.output, "Output network CSV")->required();
    c->add_option("--students", gen.n_students, "Number of students");
    c->add_option("--classes", gen.n_classes, "Number of class sections");
    c->add_option("--class-size-law", gen.class_size_law,
                  "uniform(lo,hi) or truncated-power-law(alpha,lo,hi)");
    c->add_option("--mean-load", gen.mean_load, "Mean classes per student (>= 1)");
    c->add_option("--pattern-pool", gen.pattern_pool,
                  "Weighted meeting patterns, e.g. MoWeFr:0.4,TuTh:0.6");
    c->add_option("--seed", gen.seed, "Generation seed");
  }

  StatsArgs stats;
  {
    CLI::App* c = app.add_subcommand("stats", "Summarize a network (JSON)");
    c->add_option("-i,--input", stats.input, "Network CSV")->required();
    c->add_option("-o,--output", stats.output, "Output JSON (default: stdout)");
  }

  ReduceArgs red;
  {
    CLI::App* c = app.add_subcommand(
        "reduce", "Cap class sizes (threshold or thin), keep the largest component");
    c->add_option("-i,--input", red.input, "Network CSV")->required();
    c->add_option("-o,--output", red.output, "Output network CSV")->required();
    c->add_option("--phi", red.phi, "Class-size cap (integer > 1 or 'inf')")
        ->capture_default_str();
    c->add_option("--mode", red.mode, "threshold or thin")->capture_default_str();
    c->add_option("--seed", red.seed, "Seed for thinning draws")->capture_default_str();
    c->add_option("--stats-out", red.stats_out,
                  "Write stats of the reduced network (before the component cut)");
  }

  SimulateArgs sim;
  {
    CLI::App* c = app.add_subcommand("simulate", "Run one outbreak, write the trajectory CSV");
    c->add_option("-i,--input", sim.input, "Network CSV")->required();
    c->add_option("-o,--output", sim.output, "Output trajectory CSV")->required();
    c->add_option("--params", sim.params_path, "key = value parameter file");
    c->add_option("--days", sim.days, "Days to simulate")->capture_default_str();
    c->add_option("--initial", sim.initial, "Initially infected students")
        ->capture_default_str();
    c->add_option("--seed", sim.seed, "Run seed")->capture_default_str();
    auto param_flag = [&](const char* flag, const char* key, double epidemic::EpidemicParams::* field) {
      c->add_option_function<double>(
           flag,
           [&sim, key, field](double v) {
             sim.params.*field = v;
             sim.given.insert(key);
           },
           std::string("Override ") + key)
          ->expected(1);
    };
    param_flag("--theta-i2", "theta_I2", &epidemic::EpidemicParams::theta_I2);
    param_flag("--rho-a", "rho_A", &epidemic::EpidemicParams::rho_A);
    param_flag("--rho-i1", "rho_I1", &epidemic::EpidemicParams::rho_I1);
    param_flag("--q-e", "q_E", &epidemic::EpidemicParams::q_E);
    param_flag("--q-a", "q_A", &epidemic::EpidemicParams::q_A);
    param_flag("--q-i1", "q_I1", &epidemic::EpidemicParams::q_I1);
    param_flag("--q-i2", "q_I2", &epidemic::EpidemicParams::q_I2);
    param_flag("--q-ea", "q_EA", &epidemic::EpidemicParams::q_EA);
  }

  SweepArgs swp;
  {
    CLI::App* c = app.add_subcommand(
        "sweep", "Run the parameter grid with replicates, write per-run summaries");
    c->add_option("-i,--input", swp.input, "Network CSV")->required();
    c->add_option("-o,--output", swp.output, "Output sweep CSV")->required();
    c->add_option("--grid", swp.grid_path, "key = value file overriding grid axes");
    c->add_option("--mode", swp.mode, "threshold or thin")->capture_default_str();
    c->add_option("--reps", swp.reps, "Replicates per combination")->capture_default_str();
    c->add_option("--seed", swp.seed, "Master seed")->capture_default_str();
    c->add_option("--jobs", swp.jobs, "Worker threads (default: hardware)");
    c->add_option("--days", swp.days, "Days per run")->capture_default_str();
    c->add_option("--initial", swp.initial, "Initially infected per run")
        ->capture_default_str();
    c->add_option("--subsample-grid", swp.subsample,
                  "Run only this many uniformly chosen combinations");
    c->add_flag("--keep-trajectories", swp.keep_trajectories,
                "Also write every trajectory (large)");
    c->add_flag("--quiet", swp.quiet, "No progress output");
  }

  AnalyzeArgs ana;
  {
    CLI::App* c = app.add_subcommand(
        "analyze", "Fit pruned regression trees to sweep results, write report tables");
    c->add_option("-i,--input", ana.input, "Sweep CSV")->required();
    c->add_option("--outdir", ana.outdir, "Output directory")->required();
    c->add_option("--response", ana.response, "cii, peak or both")->capture_default_str();
    c->add_option("--folds", ana.folds, "Cross-validation folds")->capture_default_str();
    c->add_option("--seed", ana.seed, "Fold-assignment seed")->capture_default_str();
    c->add_option("--sizes", ana.sizes, "Fixed tree sizes to report")->capture_default_str();
    c->add_option("--outlier-sd", ana.outlier_sd,
                  "Flag rows this many pooled SDs from their replicate-group mean")
        ->capture_default_str();
    c->add_flag("--drop-outliers", ana.drop_outliers, "Exclude flagged rows from the fits");
    c->add_option("--listing-splits", ana.listing_splits,
                  "Tree size for the split listings")
        ->capture_default_str();
    c->add_option("--min-node-rows", ana.min_node_rows, "Smallest node worth splitting")
        ->capture_default_str();
    c->add_option("--min-leaf-rows", ana.min_leaf_rows, "Smallest leaf allowed")
        ->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand("generate")) return cmd_generate(gen);
    if (app.got_subcommand("stats")) return cmd_stats(stats);
    if (app.got_subcommand("reduce")) return cmd_reduce(red);
    if (app.got_subcommand("simulate")) return cmd_simulate(sim);
    if (app.got_subcommand("sweep")) return cmd_sweep(swp);
    if (app.got_subcommand("analyze")) return cmd_analyze(ana);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("enrollsim");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace enrollsim::cli
