#include "enrollsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "enrollsim/errors.hpp"
#include "enrollsim/textio.hpp"

namespace enrollsim::sweep {

const char* to_string(Mode m) {
  return m == Mode::Threshold ? "threshold" : "thin";
}

std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "threshold") return Mode::Threshold;
  if (s == "thin") return Mode::Thin;
  return std::nullopt;
}

ParameterGrid ParameterGrid::defaults() {
  ParameterGrid g;
  g.theta_I2 = {0.141, 0.198, 0.240};
  g.rho_A = {0.4, 0.75, 1.0};
  g.rho_I1 = {0.18, 0.63, 2.26};
  g.q_E = {0.168, 0.182, 0.196};
  g.q_A = {0.115, 0.138, 0.169};
  g.q_I1 = {0.333, 0.435, 0.833};
  g.q_I2 = {0.063, 0.075, 0.092};
  g.q_EA = {0.09, 0.18, 0.26};
  g.phi = {network::Threshold::finite(20), network::Threshold::finite(50),
           network::Threshold::finite(100), network::Threshold::infinite()};
  return g;
}

std::size_t ParameterGrid::combo_count() const {
  return theta_I2.size() * rho_A.size() * rho_I1.size() * q_E.size() * q_A.size() *
         q_I1.size() * q_I2.size() * q_EA.size() * phi.size();
}

void ParameterGrid::validate() const {
  auto nonempty = [](const auto& v, const char* name) {
    if (v.empty()) throw ConfigError(std::string("grid axis '") + name + "' is empty");
  };
  nonempty(theta_I2, "theta_I2");
  nonempty(rho_A, "rho_A");
  nonempty(rho_I1, "rho_I1");
  nonempty(q_E, "q_E");
  nonempty(q_A, "q_A");
  nonempty(q_I1, "q_I1");
  nonempty(q_I2, "q_I2");
  nonempty(q_EA, "q_EA");
  nonempty(phi, "phi");
  // Check value ranges axis by axis instead of per combo; the grid is the
  // product, so valid axes make every combo valid.
  epidemic::EpidemicParams probe = epidemic::EpidemicParams::central();
  try {
    for (double v : theta_I2) { probe.theta_I2 = v; probe.validate(); }
    probe = epidemic::EpidemicParams::central();
    for (double v : rho_A) { probe.rho_A = v; probe.validate(); }
    probe = epidemic::EpidemicParams::central();
    for (double v : rho_I1) { probe.rho_I1 = v; probe.validate(); }
    probe = epidemic::EpidemicParams::central();
    for (double v : q_E) { probe.q_E = v; probe.validate(); }
    probe = epidemic::EpidemicParams::central();
    for (double v : q_A) { probe.q_A = v; probe.validate(); }
    probe = epidemic::EpidemicParams::central();
    for (double v : q_I1) { probe.q_I1 = v; probe.validate(); }
    probe = epidemic::EpidemicParams::central();
    for (double v : q_I2) { probe.q_I2 = v; probe.validate(); }
    probe = epidemic::EpidemicParams::central();
    for (double v : q_EA) { probe.q_EA = v; probe.validate(); }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid value out of range: ") + e.what());
  }
}

ParameterGrid::Combo ParameterGrid::combo_at(std::size_t index) const {
  if (index >= combo_count()) throw std::out_of_range("combo index out of range");
  // Row-major decode, last axis (phi) fastest.
  auto take = [&index](const std::vector<double>& axis) {
    const std::size_t i = index % axis.size();
    index /= axis.size();
    return axis[i];
  };
  Combo c;
  const std::size_t phi_i = index % phi.size();
  index /= phi.size();
  c.phi = phi[phi_i];
  c.params.q_EA = take(q_EA);
  c.params.q_I2 = take(q_I2);
  c.params.q_I1 = take(q_I1);
  c.params.q_A = take(q_A);
  c.params.q_E = take(q_E);
  c.params.rho_I1 = take(rho_I1);
  c.params.rho_A = take(rho_A);
  c.params.theta_I2 = take(theta_I2);
  return c;
}

Summary summarize(const epidemic::Trajectory& traj) {
  Summary s;
  const auto n = static_cast<double>(traj.population());
  const auto& last = traj.days.back();
  s.cii = (n - static_cast<double>(last[0])) / n;
  for (std::size_t d = 0; d < traj.days.size(); ++d) {
    s.peak = std::max(s.peak, static_cast<double>(traj.active(d)) / n);
    if (traj.active(d) > 0) s.final_day_active = static_cast<std::int64_t>(d);
  }
  return s;
}

double logit(double p, double eps, epidemic::ClampCounter* clamps) {
  double q = std::clamp(p, eps, 1.0 - eps);
  if (q != p && clamps) ++clamps->clamps;
  return std::log(q / (1.0 - q));
}

double logit_epsilon(std::int64_t n_max) {
  if (n_max <= 0) throw std::invalid_argument("logit_epsilon needs a positive count");
  return 1.0 / (2.0 * static_cast<double>(n_max));
}

SweepResult run_sweep(const network::EnrollmentNetwork& base, const ParameterGrid& grid,
                      const SweepOptions& opt) {
  grid.validate();
  if (opt.reps < 1) throw ConfigError("reps must be >= 1");
  if (opt.n_days < 0) throw ConfigError("n_days must be >= 0");
  if (opt.mode == Mode::Thin)
    for (network::Threshold phi : grid.phi)
      if (phi.is_infinite())
        throw ConfigError("thinning needs a finite phi: the unbounded threshold removes nothing");

  SweepResult result;

  // Reduce once per distinct phi. For thinning the removal draw depends
  // only on (master_seed, phi), so the same thinned network serves all its
  // combos and replicates.
  std::map<std::int64_t, std::size_t> phi_slot;
  std::vector<epidemic::SimNetwork> nets;
  for (network::Threshold phi : grid.phi) {
    if (phi_slot.count(phi.encoded())) continue;
    network::EnrollmentNetwork reduced;
    if (opt.mode == Mode::Threshold) {
      reduced = network::apply_threshold(base, phi);
    } else {
      rng::Engine thin_eng(rng::derive_seed(
          opt.master_seed,
          {rng::fnv1a64("thin-network"), static_cast<std::uint64_t>(phi.encoded())}));
      reduced = network::thin_uniform(base, network::thinning_target(base, phi), thin_eng);
    }
    phi_slot.emplace(phi.encoded(), nets.size());
    result.per_phi_stats.emplace_back(phi, network::network_stats(reduced));
    nets.push_back(epidemic::SimNetwork::compile(network::largest_component(reduced)));
  }

  std::vector<std::int64_t> combos;
  if (opt.combo_subset.empty()) {
    combos.resize(grid.combo_count());
    std::iota(combos.begin(), combos.end(), std::int64_t{0});
  } else {
    combos = opt.combo_subset;
    std::sort(combos.begin(), combos.end());
    combos.erase(std::unique(combos.begin(), combos.end()), combos.end());
    for (std::int64_t ci : combos)
      if (ci < 0 || static_cast<std::size_t>(ci) >= grid.combo_count())
        throw ConfigError("combo index " + std::to_string(ci) + " outside the grid");
  }

  const std::size_t reps = static_cast<std::size_t>(opt.reps);
  const std::size_t total = combos.size() * reps;
  result.records.resize(total);
  if (opt.keep_trajectories) result.trajectories.resize(total);

  const std::uint64_t mode_label = rng::fnv1a64(to_string(opt.mode));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;
  std::exception_ptr failure;
  std::mutex failure_mu;
  const std::size_t report_every = std::max<std::size_t>(1, total / 100);

  auto work = [&]() {
    try {
      for (;;) {
        const std::size_t t = next.fetch_add(1);
        if (t >= total) return;
        const std::size_t ci = t / reps;
        const auto rep = static_cast<int>(t % reps);
        const std::int64_t combo_index = combos[ci];
        const ParameterGrid::Combo combo = grid.combo_at(static_cast<std::size_t>(combo_index));
        const epidemic::SimNetwork& net = nets[phi_slot.at(combo.phi.encoded())];
        const std::uint64_t seed = rng::derive_seed(
            opt.master_seed, {mode_label, static_cast<std::uint64_t>(combo_index),
                              static_cast<std::uint64_t>(rep)});
        epidemic::SimConfig cfg;
        cfg.n_days = opt.n_days;
        cfg.n_initial = opt.n_initial;
        cfg.seed = seed;
        epidemic::Trajectory traj = epidemic::run_simulation(net, combo.params, cfg);
        const Summary sm = summarize(traj);

        SweepRecord& rec = result.records[t];
        rec.combo_index = combo_index;
        rec.params = combo.params;
        rec.phi = combo.phi;
        rec.mode = opt.mode;
        rec.replicate = rep;
        rec.seed = seed;
        rec.population = net.n_students();
        rec.cii = sm.cii;
        rec.peak = sm.peak;
        rec.final_day_active = sm.final_day_active;
        if (opt.keep_trajectories) result.trajectories[t] = std::move(traj);

        const std::size_t d = done.fetch_add(1) + 1;
        if (opt.progress && (d % report_every == 0 || d == total)) {
          std::lock_guard<std::mutex> lock(progress_mu);
          opt.progress(d, total);
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next.store(total);  // stop the other workers
    }
  };

  const std::size_t n_threads =
      std::min<std::size_t>(std::max(opt.jobs, 1), std::max<std::size_t>(total, 1));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

namespace {

constexpr const char* kSweepHeader =
    "combo_index,theta_I2,rho_A,rho_I1,q_E,q_A,q_I1,q_I2,q_EA,phi,mode,replicate,seed,N,"
    "cii,peak,final_day_active";

}  // namespace

void write_sweep_csv(const std::vector<SweepRecord>& records, std::ostream& out) {
  out << kSweepHeader << '\n';
  for (const SweepRecord& r : records) {
    out << r.combo_index << ',' << text::fmt_double(r.params.theta_I2) << ','
        << text::fmt_double(r.params.rho_A) << ',' << text::fmt_double(r.params.rho_I1) << ','
        << text::fmt_double(r.params.q_E) << ',' << text::fmt_double(r.params.q_A) << ','
        << text::fmt_double(r.params.q_I1) << ',' << text::fmt_double(r.params.q_I2) << ','
        << text::fmt_double(r.params.q_EA) << ',' << r.phi.to_string() << ','
        << to_string(r.mode) << ',' << r.replicate << ',' << r.seed << ',' << r.population
        << ',' << text::fmt_double(r.cii) << ',' << text::fmt_double(r.peak) << ','
        << r.final_day_active << '\n';
  }
}

std::vector<SweepRecord> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    const auto expected = text::split(kSweepHeader, ',');
    const auto got = text::split(line, ',');
    for (std::string_view col : expected)
      if (std::find(got.begin(), got.end(), col) == got.end())
        throw ParseError(1, "missing column '" + std::string(col) + "'");
    if (got.size() != expected.size() ||
        !std::equal(got.begin(), got.end(), expected.begin()))
      throw ParseError(1, "unexpected column order or extras in header");
  }

  std::vector<SweepRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 17)
      throw ParseError(lineno, "expected 17 fields, got " + std::to_string(f.size()));
    SweepRecord r;
    auto num = [&](std::string_view s, const char* what) {
      auto v = text::parse_double(s);
      if (!v) throw ParseError(lineno, std::string("bad ") + what + ": '" + std::string(s) + "'");
      return *v;
    };
    auto integer = [&](std::string_view s, const char* what) {
      auto v = text::parse_int(s);
      if (!v) throw ParseError(lineno, std::string("bad ") + what + ": '" + std::string(s) + "'");
      return *v;
    };
    r.combo_index = integer(f[0], "combo_index");
    r.params.theta_I2 = num(f[1], "theta_I2");
    r.params.rho_A = num(f[2], "rho_A");
    r.params.rho_I1 = num(f[3], "rho_I1");
    r.params.q_E = num(f[4], "q_E");
    r.params.q_A = num(f[5], "q_A");
    r.params.q_I1 = num(f[6], "q_I1");
    r.params.q_I2 = num(f[7], "q_I2");
    r.params.q_EA = num(f[8], "q_EA");
    auto phi = network::Threshold::parse(f[9]);
    if (!phi) throw ParseError(lineno, "bad phi: '" + std::string(f[9]) + "'");
    r.phi = *phi;
    auto mode = parse_mode(f[10]);
    if (!mode) throw ParseError(lineno, "bad mode: '" + std::string(f[10]) + "'");
    r.mode = *mode;
    r.replicate = static_cast<int>(integer(f[11], "replicate"));
    auto seed = text::parse_uint(f[12]);
    if (!seed) throw ParseError(lineno, "bad seed: '" + std::string(f[12]) + "'");
    r.seed = *seed;
    r.population = integer(f[13], "N");
    r.cii = num(f[14], "cii");
    r.peak = num(f[15], "peak");
    r.final_day_active = integer(f[16], "final_day_active");
    records.push_back(r);
  }
  return records;
}

std::vector<std::int64_t> subsample_combos(std::size_t combo_count, std::size_t k,
                                           std::uint64_t master_seed) {
  std::vector<std::int64_t> all(combo_count);
  std::iota(all.begin(), all.end(), std::int64_t{0});
  if (k >= combo_count) return all;
  rng::Engine eng(rng::derive_seed(master_seed, rng::fnv1a64("subsample-grid")));
  eng.partial_shuffle(all, k);
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace enrollsim::sweep
