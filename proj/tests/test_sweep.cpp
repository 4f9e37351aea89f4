#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "enrollsim/network.hpp"
#include "enrollsim/rng.hpp"
#include "enrollsim/sweep.hpp"
#include "enrollsim/synthgen.hpp"

using namespace enrollsim;
using network::Threshold;
using sweep::Mode;
using sweep::ParameterGrid;
using sweep::SweepOptions;
using sweep::SweepRecord;

namespace {

network::EnrollmentNetwork tiny_net(std::uint64_t seed) {
  auto cfg = synthgen::SynthConfig::preset("tiny");
  cfg.seed = seed;
  return network::drop_degenerate(synthgen::generate(cfg));
}

// Single-point grid except where a test widens an axis.
ParameterGrid point_grid() {
  auto p = epidemic::EpidemicParams::central();
  ParameterGrid g;
  g.theta_I2 = {p.theta_I2};
  g.rho_A = {p.rho_A};
  g.rho_I1 = {p.rho_I1};
  g.q_E = {p.q_E};
  g.q_A = {p.q_A};
  g.q_I1 = {p.q_I1};
  g.q_I2 = {p.q_I2};
  g.q_EA = {p.q_EA};
  g.phi = {Threshold::infinite()};
  return g;
}

std::string csv_of(const std::vector<SweepRecord>& records) {
  std::ostringstream out;
  sweep::write_sweep_csv(records, out);
  return out.str();
}

// Row-major re-encoding of a combo, the documented inverse of combo_at.
std::size_t index_of(const ParameterGrid& g, const ParameterGrid::Combo& c) {
  auto pos = [](const std::vector<double>& axis, double v) {
    return static_cast<std::size_t>(std::find(axis.begin(), axis.end(), v) - axis.begin());
  };
  std::size_t idx = pos(g.theta_I2, c.params.theta_I2);
  idx = idx * g.rho_A.size() + pos(g.rho_A, c.params.rho_A);
  idx = idx * g.rho_I1.size() + pos(g.rho_I1, c.params.rho_I1);
  idx = idx * g.q_E.size() + pos(g.q_E, c.params.q_E);
  idx = idx * g.q_A.size() + pos(g.q_A, c.params.q_A);
  idx = idx * g.q_I1.size() + pos(g.q_I1, c.params.q_I1);
  idx = idx * g.q_I2.size() + pos(g.q_I2, c.params.q_I2);
  idx = idx * g.q_EA.size() + pos(g.q_EA, c.params.q_EA);
  auto phi_pos = static_cast<std::size_t>(
      std::find(g.phi.begin(), g.phi.end(), c.phi) - g.phi.begin());
  return idx * g.phi.size() + phi_pos;
}

}  // namespace

TEST_CASE("modes parse and print") {
  CHECK(sweep::parse_mode("threshold") == Mode::Threshold);
  CHECK(sweep::parse_mode("thin") == Mode::Thin);
  CHECK_FALSE(sweep::parse_mode("trim").has_value());
  CHECK(std::string(sweep::to_string(Mode::Threshold)) == "threshold");
  CHECK(std::string(sweep::to_string(Mode::Thin)) == "thin");
}

TEST_CASE("default grid enumerates the full factorial") {
  auto g = ParameterGrid::defaults();
  CHECK_NOTHROW(g.validate());
  CHECK(g.theta_I2.size() == 3);
  CHECK(g.rho_A.size() == 3);
  CHECK(g.rho_I1.size() == 3);
  CHECK(g.q_E.size() == 3);
  CHECK(g.q_A.size() == 3);
  CHECK(g.q_I1.size() == 3);
  CHECK(g.q_I2.size() == 3);
  CHECK(g.q_EA.size() == 3);
  CHECK(g.phi.size() == 4);
  CHECK(g.combo_count() == 26244);  // 3^8 * 4
}

TEST_CASE("combo_at walks the grid row-major with phi fastest") {
  auto g = ParameterGrid::defaults();

  auto first = g.combo_at(0);
  CHECK(first.params.theta_I2 == 0.141);
  CHECK(first.params.rho_A == 0.4);
  CHECK(first.params.rho_I1 == 0.18);
  CHECK(first.params.q_E == 0.168);
  CHECK(first.params.q_A == 0.115);
  CHECK(first.params.q_I1 == 0.333);
  CHECK(first.params.q_I2 == 0.063);
  CHECK(first.params.q_EA == 0.09);
  CHECK(first.phi == Threshold::finite(20));

  CHECK(g.combo_at(1).phi == Threshold::finite(50));
  CHECK(g.combo_at(3).phi.is_infinite());
  CHECK(g.combo_at(3).params.q_EA == 0.09);   // phi wrapped, q_EA not yet
  CHECK(g.combo_at(4).params.q_EA == 0.18);   // next-slowest axis advances
  CHECK(g.combo_at(4).phi == Threshold::finite(20));

  auto last = g.combo_at(g.combo_count() - 1);
  CHECK(last.params.theta_I2 == 0.240);
  CHECK(last.params.q_EA == 0.26);
  CHECK(last.phi.is_infinite());

  for (std::size_t idx : {0ul, 1ul, 4ul, 12ul, 107ul, 9999ul, 26243ul})
    CHECK(index_of(g, g.combo_at(idx)) == idx);
}

TEST_CASE("grid validation rejects malformed axes") {
  auto g = ParameterGrid::defaults();
  g.q_E = {0.2, 1.5};
  CHECK_THROWS_AS(g.validate(), ConfigError);

  g = ParameterGrid::defaults();
  g.theta_I2.clear();
  CHECK_THROWS_AS(g.validate(), ConfigError);

  g = ParameterGrid::defaults();
  g.phi.clear();
  CHECK_THROWS_AS(g.validate(), ConfigError);

  g = ParameterGrid::defaults();
  g.rho_I1 = {-0.5};
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("summaries read cumulative incidence, peak and last active day") {
  epidemic::Trajectory traj;
  traj.days.push_back({90, 0, 0, 0, 10, 0});   // active 10
  traj.days.push_back({80, 10, 0, 0, 5, 5});   // active 15, the peak
  traj.days.push_back({80, 0, 0, 0, 0, 20});   // settled
  auto s = sweep::summarize(traj);
  CHECK(s.cii == doctest::Approx(0.2));   // 100 -> 80 susceptible
  CHECK(s.peak == doctest::Approx(0.15));
  CHECK(s.final_day_active == 1);

  epidemic::Trajectory cold;
  cold.days.push_back({100, 0, 0, 0, 0, 0});
  auto sc = sweep::summarize(cold);
  CHECK(sc.cii == 0.0);
  CHECK(sc.peak == 0.0);
  CHECK(sc.final_day_active == 0);
}

TEST_CASE("logit clamps into the open interval and counts it") {
  CHECK(sweep::logit(0.5, 1e-4) == doctest::Approx(0.0));
  CHECK(sweep::logit(0.14, 1e-4) == doctest::Approx(std::log(0.14 / 0.86)));

  epidemic::ClampCounter cc;
  CHECK(sweep::logit(0.0, 1e-4, &cc) == doctest::Approx(std::log(1e-4 / (1 - 1e-4))));
  CHECK(cc.clamps == 1);
  CHECK(sweep::logit(1.0, 1e-4, &cc) == doctest::Approx(-std::log(1e-4 / (1 - 1e-4))));
  CHECK(cc.clamps == 2);
  CHECK(sweep::logit(0.3, 1e-4, &cc) < 0);
  CHECK(cc.clamps == 2);

  CHECK(sweep::logit_epsilon(5000) == doctest::Approx(1e-4));
  CHECK(sweep::logit_epsilon(1) == doctest::Approx(0.5));
}

TEST_CASE("combo subsampling is a deterministic sorted sample") {
  auto a = sweep::subsample_combos(1000, 100, 7);
  auto b = sweep::subsample_combos(1000, 100, 7);
  auto c = sweep::subsample_combos(1000, 100, 8);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.size() == 100);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::set<std::int64_t>(a.begin(), a.end()).size() == 100);
  CHECK(a.front() >= 0);
  CHECK(a.back() < 1000);

  auto all = sweep::subsample_combos(50, 60, 7);
  REQUIRE(all.size() == 50);
  for (std::int64_t i = 0; i < 50; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("sweeps enumerate records in slot order with derived seeds") {
  auto net = tiny_net(3);
  auto g = point_grid();
  g.phi = {Threshold::finite(6), Threshold::infinite()};

  SweepOptions opt;
  opt.reps = 3;
  opt.master_seed = 11;
  opt.mode = Mode::Threshold;
  opt.n_days = 30;
  opt.keep_trajectories = true;

  auto res = sweep::run_sweep(net, g, opt);
  REQUIRE(res.records.size() == 6);
  REQUIRE(res.trajectories.size() == 6);

  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    const auto& r = res.records[i];
    CHECK(r.combo_index == static_cast<std::int64_t>(i / 3));
    CHECK(r.replicate == static_cast<int>(i % 3));
    CHECK(r.mode == Mode::Threshold);
    // The seed schedule is part of the output contract.
    CHECK(r.seed == rng::derive_seed(opt.master_seed,
                                     {rng::fnv1a64("threshold"),
                                      static_cast<std::uint64_t>(r.combo_index),
                                      static_cast<std::uint64_t>(r.replicate)}));
    seeds.insert(r.seed);
    CHECK(r.cii >= 0);
    CHECK(r.cii <= 1);
    CHECK(r.peak >= 0);
    CHECK(r.peak <= 1);
    CHECK(r.final_day_active >= 0);
    CHECK(r.final_day_active <= 30);

    // Kept trajectories are the runs the summaries came from.
    auto s = sweep::summarize(res.trajectories[i]);
    CHECK(r.cii == doctest::Approx(s.cii));
    CHECK(r.peak == doctest::Approx(s.peak));
    CHECK(r.final_day_active == s.final_day_active);
    CHECK(res.trajectories[i].population() == r.population);
  }
  CHECK(seeds.size() == 6);

  // Populations equal the largest-component size of each reduced network.
  auto capped = network::apply_threshold(net, Threshold::finite(6));
  auto full_lcc = network::network_stats(net).n_students_lcc;
  auto capped_lcc = network::network_stats(capped).n_students_lcc;
  CHECK(res.records[0].population == capped_lcc);
  CHECK(res.records[3].population == full_lcc);

  // Per-phi stats describe the reduced networks before the component cut.
  REQUIRE(res.per_phi_stats.size() == 2);
  CHECK(res.per_phi_stats[0].first == Threshold::finite(6));
  CHECK(res.per_phi_stats[0].second.n_students == network::network_stats(capped).n_students);
  CHECK(res.per_phi_stats[0].second.n_enrollments ==
        network::network_stats(capped).n_enrollments);
  CHECK(res.per_phi_stats[1].first.is_infinite());
  CHECK(res.per_phi_stats[1].second.n_students == network::network_stats(net).n_students);
}

TEST_CASE("sweep output is identical for any job count and seed-stable") {
  auto net = tiny_net(4);
  auto g = point_grid();
  g.q_I2 = {0.063, 0.092};
  g.phi = {Threshold::finite(8), Threshold::infinite()};

  SweepOptions opt;
  opt.reps = 2;
  opt.master_seed = 5;
  opt.n_days = 25;
  opt.jobs = 1;
  auto serial = sweep::run_sweep(net, g, opt);

  opt.jobs = 8;
  auto parallel = sweep::run_sweep(net, g, opt);
  CHECK(csv_of(serial.records) == csv_of(parallel.records));

  opt.jobs = 3;
  opt.master_seed = 6;
  auto other = sweep::run_sweep(net, g, opt);
  CHECK(csv_of(serial.records) != csv_of(other.records));
}

TEST_CASE("thinning matches enrollment totals and reuses one network per phi") {
  auto net = tiny_net(5);
  auto g = point_grid();
  g.q_EA = {0.09, 0.26};  // two combos per phi
  g.phi = {Threshold::finite(5), Threshold::finite(8)};

  SweepOptions opt;
  opt.reps = 2;
  opt.master_seed = 9;
  opt.mode = Mode::Thin;
  opt.n_days = 20;
  opt.n_initial = 2;  // aggressive thinning leaves a small largest component
  auto res = sweep::run_sweep(net, g, opt);
  REQUIRE(res.records.size() == 8);

  // The thinned network is drawn once per phi from the master seed, so every
  // record with the same phi simulates the same population.
  for (const auto& r : res.records) {
    auto same_phi = std::find_if(res.records.begin(), res.records.end(),
                                 [&](const SweepRecord& o) { return o.phi == r.phi; });
    CHECK(same_phi->population == r.population);
  }

  // Thinning removes enrollments down to exactly what the threshold keeps.
  REQUIRE(res.per_phi_stats.size() == 2);
  for (const auto& [phi, stats] : res.per_phi_stats)
    CHECK(stats.n_enrollments == network::thinning_target(net, phi));

  // Thinned and thresholded reductions are different networks.
  SweepOptions topt = opt;
  topt.mode = Mode::Threshold;
  auto tres = sweep::run_sweep(net, g, topt);
  CHECK(csv_of(res.records) != csv_of(tres.records));

  // An unbounded cap leaves nothing to thin.
  g.phi = {Threshold::infinite()};
  CHECK_THROWS_AS(sweep::run_sweep(net, g, opt), ConfigError);
}

TEST_CASE("combo subsets restrict the run without renumbering") {
  auto net = tiny_net(6);
  auto g = point_grid();
  g.q_E = {0.168, 0.182, 0.196};
  g.phi = {Threshold::infinite()};

  SweepOptions opt;
  opt.reps = 1;
  opt.master_seed = 2;
  opt.n_days = 15;
  opt.combo_subset = {2, 0};

  auto res = sweep::run_sweep(net, g, opt);
  REQUIRE(res.records.size() == 2);
  CHECK(res.records[0].combo_index == 0);
  CHECK(res.records[1].combo_index == 2);
  CHECK(res.records[1].params.q_E == 0.196);

  // Records carry the same seeds they would in a full sweep.
  SweepOptions full = opt;
  full.combo_subset.clear();
  auto fres = sweep::run_sweep(net, g, full);
  CHECK(res.records[1].seed == fres.records[2].seed);
  CHECK(res.records[1].cii == fres.records[2].cii);
}

TEST_CASE("progress reporting reaches the total") {
  auto net = tiny_net(7);
  auto g = point_grid();
  SweepOptions opt;
  opt.reps = 4;
  opt.n_days = 10;
  std::vector<std::pair<std::size_t, std::size_t>> calls;
  opt.progress = [&](std::size_t done, std::size_t total) { calls.emplace_back(done, total); };
  sweep::run_sweep(net, g, opt);
  REQUIRE(!calls.empty());
  CHECK(calls.back().first == 4);
  for (auto [done, total] : calls) {
    CHECK(total == 4);
    CHECK(done <= total);
  }
}

TEST_CASE("sweep csv round-trips every field") {
  auto net = tiny_net(8);
  auto g = point_grid();
  g.phi = {Threshold::finite(6), Threshold::infinite()};
  SweepOptions opt;
  opt.reps = 2;
  opt.master_seed = 13;
  opt.n_days = 12;
  auto res = sweep::run_sweep(net, g, opt);

  std::istringstream in(csv_of(res.records));
  auto back = sweep::read_sweep_csv(in);
  REQUIRE(back.size() == res.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = res.records[i];
    const auto& b = back[i];
    CHECK(a.combo_index == b.combo_index);
    CHECK(a.params.theta_I2 == b.params.theta_I2);
    CHECK(a.params.rho_A == b.params.rho_A);
    CHECK(a.params.rho_I1 == b.params.rho_I1);
    CHECK(a.params.q_E == b.params.q_E);
    CHECK(a.params.q_A == b.params.q_A);
    CHECK(a.params.q_I1 == b.params.q_I1);
    CHECK(a.params.q_I2 == b.params.q_I2);
    CHECK(a.params.q_EA == b.params.q_EA);
    CHECK(a.phi == b.phi);
    CHECK(a.mode == b.mode);
    CHECK(a.replicate == b.replicate);
    CHECK(a.seed == b.seed);
    CHECK(a.population == b.population);
    CHECK(a.cii == b.cii);  // exact: shortest round-trip formatting
    CHECK(a.peak == b.peak);
    CHECK(a.final_day_active == b.final_day_active);
  }

  // The header is part of the contract.
  std::istringstream probe(csv_of(res.records));
  std::string header;
  std::getline(probe, header);
  CHECK(header ==
        "combo_index,theta_I2,rho_A,rho_I1,q_E,q_A,q_I1,q_I2,q_EA,phi,mode,replicate,seed,N,"
        "cii,peak,final_day_active");
}

TEST_CASE("sweep csv reader pinpoints malformed input") {
  auto expect_parse_error = [](const std::string& text, const std::string& needle) {
    std::istringstream in(text);
    try {
      sweep::read_sweep_csv(in);
      FAIL("expected ParseError for ", needle);
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  const std::string good_header =
      "combo_index,theta_I2,rho_A,rho_I1,q_E,q_A,q_I1,q_I2,q_EA,phi,mode,replicate,seed,N,"
      "cii,peak,final_day_active";
  const std::string good_row = "0,0.198,0.75,0.63,0.182,0.138,0.435,0.075,0.18,inf,threshold,"
                               "0,42,100,0.5,0.1,60";

  // A header missing a column names the column.
  expect_parse_error(
      "combo_index,theta_I2,rho_A,rho_I1,q_E,q_A,q_I1,q_I2,q_EA,phi,mode,replicate,seed,N,"
      "cii,final_day_active\n",
      "peak");
  // Short rows and unparseable numbers point at the line.
  expect_parse_error(good_header + "\n0,0.198\n", "line 2");
  expect_parse_error(good_header + "\n" + good_row + "\n1,x,0.75,0.63,0.182,0.138,0.435,0.075,"
                         "0.18,inf,threshold,0,42,100,0.5,0.1,60\n",
                     "line 3");

  std::istringstream ok(good_header + "\n" + good_row + "\n");
  auto rows = sweep::read_sweep_csv(ok);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].phi.is_infinite());
  CHECK(rows[0].mode == Mode::Threshold);
  CHECK(rows[0].population == 100);
}
