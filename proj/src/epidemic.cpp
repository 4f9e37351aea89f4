#include "enrollsim/epidemic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace enrollsim::epidemic {

const char* to_string(Compartment c) {
  switch (c) {
    case Compartment::S: return "S";
    case Compartment::E: return "E";
    case Compartment::A: return "A";
    case Compartment::I1: return "I1";
    case Compartment::I2: return "I2";
    case Compartment::R: return "R";
  }
  return "?";
}

void EpidemicParams::validate() const {
  auto check_unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument(std::string(name) + " must be in [0,1]");
  };
  check_unit(theta_I2, "theta_I2");
  if (!(rho_A >= 0.0)) throw std::invalid_argument("rho_A must be >= 0");
  if (!(rho_I1 >= 0.0)) throw std::invalid_argument("rho_I1 must be >= 0");
  check_unit(q_E, "q_E");
  check_unit(q_A, "q_A");
  check_unit(q_I1, "q_I1");
  check_unit(q_I2, "q_I2");
  check_unit(q_EA, "q_EA");
}

EpidemicParams EpidemicParams::central() {
  EpidemicParams p;
  p.theta_I2 = 0.198;
  p.rho_A = 0.75;
  p.rho_I1 = 0.63;
  p.q_E = 0.182;
  p.q_A = 0.138;
  p.q_I1 = 0.435;
  p.q_I2 = 0.075;
  p.q_EA = 0.18;
  return p;
}

SimNetwork SimNetwork::compile(const network::EnrollmentNetwork& net) {
  SimNetwork sn;
  sn.student_ids.reserve(net.students().size());
  std::map<std::string_view, std::int32_t> index;
  for (const auto& [sid, cls] : net.students()) {
    index.emplace(sid, static_cast<std::int32_t>(sn.student_ids.size()));
    sn.student_ids.push_back(sid);
  }
  sn.sections.reserve(net.classes().size());
  sn.sections_of.resize(sn.student_ids.size());
  for (const auto& [cid, sec] : net.classes()) {
    const auto c = static_cast<std::int32_t>(sn.sections.size());
    Section out;
    out.days = sec.meeting_days;
    out.members.reserve(sec.roster.size());
    // The roster is sorted by id, so the index list comes out ascending.
    for (const auto& sid : sec.roster) {
      const std::int32_t m = index.at(sid);
      out.members.push_back(m);
      sn.sections_of[static_cast<std::size_t>(m)].push_back(c);
    }
    sn.section_ids.push_back(cid);
    sn.sections.push_back(std::move(out));
  }
  return sn;
}

EpidemicState EpidemicState::from_assignment(const SimNetwork& net,
                                             std::vector<Compartment> assignment, int day) {
  if (assignment.size() != net.student_ids.size())
    throw std::invalid_argument("assignment size does not match network");
  EpidemicState st;
  st.assignment = std::move(assignment);
  st.day = day;
  for (Compartment c : st.assignment) ++st.totals[static_cast<int>(c)];
  st.section_counts.resize(net.sections.size());
  for (std::size_t c = 0; c < net.sections.size(); ++c) {
    SectionCounts& sc = st.section_counts[c];
    for (std::int32_t m : net.sections[c].members) {
      switch (st.assignment[static_cast<std::size_t>(m)]) {
        case Compartment::S: ++sc.s; break;
        case Compartment::A: ++sc.a; break;
        case Compartment::I1: ++sc.i1; break;
        case Compartment::I2: ++sc.i2; break;
        default: break;
      }
    }
  }
  return st;
}

std::int64_t Trajectory::population() const {
  if (days.empty()) return 0;
  return std::accumulate(days[0].begin(), days[0].end(), std::int64_t{0});
}

std::int64_t Trajectory::active(std::size_t day) const {
  const auto& row = days.at(day);
  return row[1] + row[2] + row[3] + row[4];
}

double pair_transmission_prob(double theta, std::int64_t class_size, ClampCounter* clamps) {
  if (class_size < 2)
    throw std::invalid_argument("pair transmission needs class size >= 2");
  double tau = theta / std::sqrt(static_cast<double>(class_size));
  if (tau < 0.0) {
    tau = 0.0;
    if (clamps) ++clamps->clamps;
  } else if (tau > 1.0) {
    tau = 1.0;
    if (clamps) ++clamps->clamps;
  }
  return tau;
}

double class_infection_prob(std::int64_t m_a, std::int64_t m_i1, std::int64_t m_i2,
                            std::int64_t class_size, const EpidemicParams& p,
                            ClampCounter* clamps) {
  double escape = 1.0;
  if (m_a > 0)
    escape *= std::pow(1.0 - pair_transmission_prob(p.theta_A(), class_size, clamps),
                       static_cast<double>(m_a));
  if (m_i1 > 0)
    escape *= std::pow(1.0 - pair_transmission_prob(p.theta_I1(), class_size, clamps),
                       static_cast<double>(m_i1));
  if (m_i2 > 0)
    escape *= std::pow(1.0 - pair_transmission_prob(p.theta_I2, class_size, clamps),
                       static_cast<double>(m_i2));
  return 1.0 - escape;
}

network::Weekday weekday_of(int day_index) {
  if (day_index < 1) throw std::invalid_argument("day index starts at 1");
  return static_cast<network::Weekday>((day_index - 1) % 7);
}

EpidemicState initialize(const SimNetwork& net, const SimConfig& cfg, rng::Engine& eng) {
  const auto n = static_cast<std::int64_t>(net.student_ids.size());
  if (cfg.n_initial < 0 || cfg.n_initial > n)
    throw std::invalid_argument("n_initial must be in [0, population]");
  std::vector<std::int32_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  eng.partial_shuffle(order, static_cast<std::size_t>(cfg.n_initial));

  std::vector<Compartment> assignment(static_cast<std::size_t>(n), Compartment::S);
  for (int i = 0; i < cfg.n_initial; ++i)
    assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = Compartment::I2;
  return EpidemicState::from_assignment(net, std::move(assignment), 0);
}

namespace {

// Single source of truth for state mutation; keeps totals and the section
// counters consistent with the assignment.
void move_student(EpidemicState& st, const SimNetwork& net, std::int32_t s,
                  Compartment from, Compartment to) {
  auto& slot = st.assignment[static_cast<std::size_t>(s)];
  if (slot != from) throw std::logic_error("compartment bookkeeping out of sync");
  slot = to;
  --st.totals[static_cast<int>(from)];
  ++st.totals[static_cast<int>(to)];

  auto field = [](EpidemicState::SectionCounts& sc, Compartment c) -> std::int32_t* {
    switch (c) {
      case Compartment::S: return &sc.s;
      case Compartment::A: return &sc.a;
      case Compartment::I1: return &sc.i1;
      case Compartment::I2: return &sc.i2;
      default: return nullptr;  // E and R are not tracked per section
    }
  };
  for (std::int32_t c : net.sections_of[static_cast<std::size_t>(s)]) {
    EpidemicState::SectionCounts& sc = st.section_counts[static_cast<std::size_t>(c)];
    if (std::int32_t* f = field(sc, from)) --*f;
    if (std::int32_t* f = field(sc, to)) ++*f;
  }
}

}  // namespace

EpidemicState step_day(EpidemicState state, int day_index, const SimNetwork& net,
                       const EpidemicParams& params, rng::Engine& eng,
                       ClampCounter* clamps) {
  if (state.assignment.size() != net.student_ids.size())
    throw std::invalid_argument("state does not match network");
  const network::Weekday wd = weekday_of(day_index);

  // Phase 1: transmission, section by section, off the start-of-day counts.
  std::vector<std::int32_t> newly_exposed;
  std::vector<char> exposed_mark(state.assignment.size(), 0);
  std::vector<std::int32_t> susceptibles;
  for (std::size_t c = 0; c < net.sections.size(); ++c) {
    const SimNetwork::Section& sec = net.sections[c];
    if (!sec.days.contains(wd)) continue;
    const EpidemicState::SectionCounts& sc = state.section_counts[c];
    if (sc.s == 0 || (sc.a + sc.i1 + sc.i2) == 0) continue;
    const double tau = class_infection_prob(sc.a, sc.i1, sc.i2,
                                            static_cast<std::int64_t>(sec.members.size()),
                                            params, clamps);
    const std::int64_t hits = eng.binomial(sc.s, tau);
    if (hits == 0) continue;
    susceptibles.clear();
    for (std::int32_t m : sec.members)
      if (state.assignment[static_cast<std::size_t>(m)] == Compartment::S)
        susceptibles.push_back(m);
    eng.partial_shuffle(susceptibles, static_cast<std::size_t>(hits));
    // A student exposed in an earlier section today stays marked; the later
    // hit lands on someone already leaving S, not on a fresh victim.
    for (std::int64_t i = 0; i < hits; ++i) {
      const std::int32_t s = susceptibles[static_cast<std::size_t>(i)];
      if (!exposed_mark[static_cast<std::size_t>(s)]) {
        exposed_mark[static_cast<std::size_t>(s)] = 1;
        newly_exposed.push_back(s);
      }
    }
  }

  // Phase 2: progressions, off the same snapshot.
  std::vector<std::int32_t> in_e, in_a, in_i1, in_i2;
  for (std::size_t s = 0; s < state.assignment.size(); ++s) {
    switch (state.assignment[s]) {
      case Compartment::E: in_e.push_back(static_cast<std::int32_t>(s)); break;
      case Compartment::A: in_a.push_back(static_cast<std::int32_t>(s)); break;
      case Compartment::I1: in_i1.push_back(static_cast<std::int32_t>(s)); break;
      case Compartment::I2: in_i2.push_back(static_cast<std::int32_t>(s)); break;
      default: break;
    }
  }
  auto draw_exits = [&](std::vector<std::int32_t>& cohort, double q) {
    const std::int64_t k = eng.binomial(static_cast<std::int64_t>(cohort.size()), q);
    eng.partial_shuffle(cohort, static_cast<std::size_t>(k));
    return k;
  };
  const std::int64_t k_e = draw_exits(in_e, params.q_E);
  std::vector<std::int32_t> to_a, to_i1;
  for (std::int64_t i = 0; i < k_e; ++i) {
    const std::int32_t s = in_e[static_cast<std::size_t>(i)];
    (eng.bernoulli(params.q_EA) ? to_a : to_i1).push_back(s);
  }
  const std::int64_t k_a = draw_exits(in_a, params.q_A);
  const std::int64_t k_i1 = draw_exits(in_i1, params.q_I1);
  const std::int64_t k_i2 = draw_exits(in_i2, params.q_I2);

  // Phase 3: apply everything at once.
  for (std::int32_t s : newly_exposed) move_student(state, net, s, Compartment::S, Compartment::E);
  for (std::int32_t s : to_a) move_student(state, net, s, Compartment::E, Compartment::A);
  for (std::int32_t s : to_i1) move_student(state, net, s, Compartment::E, Compartment::I1);
  for (std::int64_t i = 0; i < k_a; ++i)
    move_student(state, net, in_a[static_cast<std::size_t>(i)], Compartment::A, Compartment::R);
  for (std::int64_t i = 0; i < k_i1; ++i)
    move_student(state, net, in_i1[static_cast<std::size_t>(i)], Compartment::I1, Compartment::I2);
  for (std::int64_t i = 0; i < k_i2; ++i)
    move_student(state, net, in_i2[static_cast<std::size_t>(i)], Compartment::I2, Compartment::R);

  state.day = day_index;
  return state;
}

Trajectory run_simulation(const SimNetwork& net, const EpidemicParams& params,
                          const SimConfig& cfg, ClampCounter* clamps) {
  params.validate();
  if (net.student_ids.empty())
    throw std::invalid_argument("cannot simulate an empty network");
  if (cfg.n_days < 0) throw std::invalid_argument("n_days must be >= 0");

  rng::Engine eng(cfg.seed);
  EpidemicState state = initialize(net, cfg, eng);
  Trajectory traj;
  traj.days.reserve(static_cast<std::size_t>(cfg.n_days) + 1);
  traj.days.push_back(state.totals);
  for (int d = 1; d <= cfg.n_days; ++d) {
    state = step_day(std::move(state), d, net, params, eng, clamps);
    traj.days.push_back(state.totals);
  }
  return traj;
}

Trajectory run_simulation(const network::EnrollmentNetwork& net, const EpidemicParams& params,
                          const SimConfig& cfg, ClampCounter* clamps) {
  return run_simulation(SimNetwork::compile(net), params, cfg, clamps);
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  out << "day,S,E,A,I1,I2,R\n";
  for (std::size_t d = 0; d < traj.days.size(); ++d) {
    const auto& row = traj.days[d];
    out << d;
    for (std::int64_t v : row) out << ',' << v;
    out << '\n';
  }
}

}  // namespace enrollsim::epidemic
