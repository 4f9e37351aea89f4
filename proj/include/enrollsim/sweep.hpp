#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "enrollsim/epidemic.hpp"
#include "enrollsim/network.hpp"

namespace enrollsim::sweep {

// How a class-size cap is realized on the network before simulating:
// threshold removes the large classes outright, thin keeps every class but
// deletes uniformly chosen enrollments until the totals match what the
// threshold would have kept.
enum class Mode { Threshold, Thin };
const char* to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view s);

// Cartesian parameter grid. combo_at enumerates it in row-major order over
// (theta_I2, rho_A, rho_I1, q_E, q_A, q_I1, q_I2, q_EA, phi) with phi
// varying fastest, so one integer indexes a combination stably.
struct ParameterGrid {
  std::vector<double> theta_I2, rho_A, rho_I1, q_E, q_A, q_I1, q_I2, q_EA;
  std::vector<network::Threshold> phi;

  struct Combo {
    epidemic::EpidemicParams params;
    network::Threshold phi = network::Threshold::infinite();
  };

  static ParameterGrid defaults();
  std::size_t combo_count() const;
  Combo combo_at(std::size_t index) const;
  void validate() const;  // throws ConfigError
};

struct SweepRecord {
  std::int64_t combo_index = 0;
  epidemic::EpidemicParams params;
  network::Threshold phi = network::Threshold::infinite();
  Mode mode = Mode::Threshold;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::int64_t population = 0;  // students in the simulated component
  double cii = 0;               // cumulative incidence at the horizon, fraction of population
  double peak = 0;              // max daily active (E+A+I1+I2) fraction
  std::int64_t final_day_active = 0;
};

struct Summary {
  double cii = 0;
  double peak = 0;
  std::int64_t final_day_active = 0;
};
Summary summarize(const epidemic::Trajectory& traj);

// log(p / (1-p)) after clamping p into [eps, 1-eps].
double logit(double p, double eps, epidemic::ClampCounter* clamps = nullptr);
// Half a reciprocal count: the usual continuity correction for outcomes
// measured out of at most n_max individuals.
double logit_epsilon(std::int64_t n_max);

struct SweepOptions {
  int reps = 50;
  std::uint64_t master_seed = 0;
  Mode mode = Mode::Threshold;
  int jobs = 1;
  int n_days = 90;
  int n_initial = 10;
  // Combo indices to run; empty means the whole grid.
  std::vector<std::int64_t> combo_subset;
  bool keep_trajectories = false;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct SweepResult {
  // One record per (combo, replicate), combos ascending, replicates inner.
  std::vector<SweepRecord> records;
  // Stats of each reduced network before the largest-component cut, keyed
  // by phi in first-appearance order.
  std::vector<std::pair<network::Threshold, network::NetworkStats>> per_phi_stats;
  // Parallel to records when keep_trajectories is set, else empty.
  std::vector<epidemic::Trajectory> trajectories;
};

// Runs the grid over the base network. The base should already be free of
// degenerate classes. Every run's seed is derived from (master_seed, mode,
// combo_index, replicate), and results are written into preassigned slots,
// so the output is byte-identical for any job count.
SweepResult run_sweep(const network::EnrollmentNetwork& base, const ParameterGrid& grid,
                      const SweepOptions& opt);

// CSV with header:
// combo_index,theta_I2,rho_A,rho_I1,q_E,q_A,q_I1,q_I2,q_EA,phi,mode,replicate,seed,N,cii,peak,final_day_active
void write_sweep_csv(const std::vector<SweepRecord>& records, std::ostream& out);
std::vector<SweepRecord> read_sweep_csv(std::istream& in);  // throws ParseError

// Uniformly chosen k distinct combo indices, ascending. k >= combo_count
// returns the full range.
std::vector<std::int64_t> subsample_combos(std::size_t combo_count, std::size_t k,
                                           std::uint64_t master_seed);

}  // namespace enrollsim::sweep
