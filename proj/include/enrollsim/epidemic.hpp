#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "enrollsim/network.hpp"
#include "enrollsim/rng.hpp"

namespace enrollsim::epidemic {

// S susceptible, E exposed (latent), A asymptomatic infectious,
// I1 presymptomatic infectious, I2 symptomatic infectious, R removed.
// Progressions: S->E, E->A or E->I1, I1->I2, A->R, I2->R.
enum class Compartment : std::uint8_t { S, E, A, I1, I2, R };
inline constexpr int kCompartments = 6;
const char* to_string(Compartment c);

// Counts how often a probability had to be clamped into range. Clamps are
// legal but worth surfacing: frequent ones mean the parameters are pushing
// the model outside its intended regime.
struct ClampCounter {
  std::int64_t clamps = 0;
};

struct EpidemicParams {
  // Pairwise per-day transmission scale of the symptomatic stage; the other
  // stages scale it by their rho.
  double theta_I2 = 0;
  double rho_A = 0;
  double rho_I1 = 0;
  // Daily exit probabilities (geometric holding times, mean 1/q).
  double q_E = 0;
  double q_A = 0;
  double q_I1 = 0;
  double q_I2 = 0;
  // Probability an E exit goes to A rather than I1.
  double q_EA = 0;

  double theta_A() const { return rho_A * theta_I2; }
  double theta_I1() const { return rho_I1 * theta_I2; }

  void validate() const;  // throws std::invalid_argument naming the field
  static EpidemicParams central();
};

struct SimConfig {
  int n_days = 90;
  int n_initial = 10;
  std::uint64_t seed = 0;
};

// Read-only, index-based view of an enrollment network, compiled once per
// reduced network and shared by every run on it. Students are numbered by
// ascending id; member lists and per-student class lists are ascending.
struct SimNetwork {
  struct Section {
    network::DaySet days;
    std::vector<std::int32_t> members;
  };

  std::vector<std::string> student_ids;
  std::vector<std::string> section_ids;
  std::vector<Section> sections;
  // Sections each student belongs to, ascending.
  std::vector<std::vector<std::int32_t>> sections_of;

  static SimNetwork compile(const network::EnrollmentNetwork& net);
  std::int64_t n_students() const { return static_cast<std::int64_t>(student_ids.size()); }
};

struct EpidemicState {
  std::vector<Compartment> assignment;
  int day = 0;
  std::array<std::int64_t, kCompartments> totals{};

  // Per-section counts of the compartments the step needs, maintained in
  // lockstep with assignment so a day costs only the affected rosters.
  struct SectionCounts {
    std::int32_t s = 0, a = 0, i1 = 0, i2 = 0;
  };
  std::vector<SectionCounts> section_counts;

  static EpidemicState from_assignment(const SimNetwork& net,
                                       std::vector<Compartment> assignment, int day = 0);
};

// One compartment row per day, day 0 first.
struct Trajectory {
  std::vector<std::array<std::int64_t, kCompartments>> days;

  std::int64_t population() const;
  std::int64_t active(std::size_t day) const;  // E + A + I1 + I2
};

// Per-pair daily transmission probability theta / sqrt(class size), clamped
// to [0,1]. class_size must be >= 2: a one-person class has no pairs.
double pair_transmission_prob(double theta, std::int64_t class_size,
                              ClampCounter* clamps = nullptr);

// Probability a susceptible catches it today in one class with the given
// infectious composition: 1 - prod_stages (1 - tau_stage)^count.
double class_infection_prob(std::int64_t m_a, std::int64_t m_i1, std::int64_t m_i2,
                            std::int64_t class_size, const EpidemicParams& p,
                            ClampCounter* clamps = nullptr);

// Day 1 is a Monday; the week wraps every 7 days.
network::Weekday weekday_of(int day_index);

// All susceptible except n_initial uniformly chosen students, who start I2.
EpidemicState initialize(const SimNetwork& net, const SimConfig& cfg, rng::Engine& eng);

// Advances one day. Infections and progressions are both computed from the
// start-of-day snapshot and applied together: a student exposed today cannot
// progress today, and today's E exits still count as E for transmission.
// Draw order is fixed (sections ascending, then E, A, I1, I2 cohorts) so a
// seed fully determines the path.
EpidemicState step_day(EpidemicState state, int day_index, const SimNetwork& net,
                       const EpidemicParams& params, rng::Engine& eng,
                       ClampCounter* clamps = nullptr);

Trajectory run_simulation(const SimNetwork& net, const EpidemicParams& params,
                          const SimConfig& cfg, ClampCounter* clamps = nullptr);
Trajectory run_simulation(const network::EnrollmentNetwork& net, const EpidemicParams& params,
                          const SimConfig& cfg, ClampCounter* clamps = nullptr);

// CSV with header "day,S,E,A,I1,I2,R".
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace enrollsim::epidemic
