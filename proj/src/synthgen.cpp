#include "enrollsim/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "enrollsim/textio.hpp"

namespace enrollsim::synthgen {

using network::DaySet;
using network::EnrollmentNetwork;
using network::Weekday;

ClassSizeLaw ClassSizeLaw::uniform(std::int64_t lo, std::int64_t hi) {
  ClassSizeLaw law;
  law.kind = Kind::Uniform;
  law.lo = lo;
  law.hi = hi;
  return law;
}

ClassSizeLaw ClassSizeLaw::truncated_power_law(double alpha, std::int64_t lo, std::int64_t hi) {
  ClassSizeLaw law;
  law.kind = Kind::TruncatedPowerLaw;
  law.alpha = alpha;
  law.lo = lo;
  law.hi = hi;
  return law;
}

std::optional<ClassSizeLaw> ClassSizeLaw::parse(std::string_view s) {
  auto args_of = [&](std::string_view name) -> std::optional<std::string_view> {
    if (s.size() < name.size() + 2) return std::nullopt;
    if (s.substr(0, name.size()) != name) return std::nullopt;
    if (s[name.size()] != '(' || s.back() != ')') return std::nullopt;
    return s.substr(name.size() + 1, s.size() - name.size() - 2);
  };
  if (auto args = args_of("uniform")) {
    auto parts = text::split(*args, ',');
    if (parts.size() != 2) return std::nullopt;
    auto lo = text::parse_int(text::trim(parts[0]));
    auto hi = text::parse_int(text::trim(parts[1]));
    if (!lo || !hi) return std::nullopt;
    return uniform(*lo, *hi);
  }
  if (auto args = args_of("truncated-power-law")) {
    auto parts = text::split(*args, ',');
    if (parts.size() != 3) return std::nullopt;
    auto a = text::parse_double(text::trim(parts[0]));
    auto lo = text::parse_int(text::trim(parts[1]));
    auto hi = text::parse_int(text::trim(parts[2]));
    if (!a || !lo || !hi) return std::nullopt;
    return truncated_power_law(*a, *lo, *hi);
  }
  return std::nullopt;
}

std::string ClassSizeLaw::to_string() const {
  if (kind == Kind::Uniform)
    return "uniform(" + std::to_string(lo) + "," + std::to_string(hi) + ")";
  return "truncated-power-law(" + text::fmt_double(alpha) + "," + std::to_string(lo) +
         "," + std::to_string(hi) + ")";
}

PatternPool PatternPool::standard() {
  PatternPool pool;
  pool.entries = {
      {DaySet::of({Weekday::Mon, Weekday::Wed, Weekday::Fri}), 0.4},
      {DaySet::of({Weekday::Tue, Weekday::Thu}), 0.4},
      {DaySet::of({Weekday::Mon}), 0.2 / 3},
      {DaySet::of({Weekday::Wed}), 0.2 / 3},
      {DaySet::of({Weekday::Fri}), 0.2 / 3},
  };
  return pool;
}

std::optional<PatternPool> PatternPool::parse(std::string_view s) {
  PatternPool pool;
  for (std::string_view item : text::split(s, ',')) {
    item = text::trim(item);
    auto colon = item.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto days = DaySet::parse(item.substr(0, colon));
    auto w = text::parse_double(item.substr(colon + 1));
    if (!days || days->empty() || !w) return std::nullopt;
    pool.entries.emplace_back(*days, *w);
  }
  if (pool.entries.empty()) return std::nullopt;
  return pool;
}

std::string PatternPool::to_string() const {
  std::string out;
  for (const auto& [days, w] : entries) {
    if (!out.empty()) out += ',';
    out += days.to_string() + ":" + text::fmt_double(w);
  }
  return out;
}

void SynthConfig::validate() const {
  if (n_students < 2) throw ConfigError("n_students must be >= 2");
  if (n_classes < 1) throw ConfigError("n_classes must be >= 1");
  if (class_size_law.lo < 0) throw ConfigError("class_size_law: lo must be >= 0");
  if (class_size_law.hi < class_size_law.lo)
    throw ConfigError("class_size_law: hi must be >= lo");
  if (class_size_law.hi > n_students)
    throw ConfigError("class_size_law: hi exceeds n_students, rosters cannot be distinct");
  if (class_size_law.kind == ClassSizeLaw::Kind::TruncatedPowerLaw) {
    if (!(class_size_law.alpha > 0)) throw ConfigError("class_size_law: alpha must be > 0");
    if (class_size_law.lo < 1) throw ConfigError("class_size_law: lo must be >= 1");
  }
  if (!(classes_per_student_mean >= 1.0))
    throw ConfigError("classes_per_student_mean must be >= 1");
  if (pattern_pool.entries.empty()) throw ConfigError("pattern_pool must not be empty");
  double wsum = 0;
  for (const auto& [days, w] : pattern_pool.entries) {
    if (days.empty()) throw ConfigError("pattern_pool: empty day set");
    if (!(w > 0)) throw ConfigError("pattern_pool: weights must be positive");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw ConfigError("pattern_pool: weights must sum to 1");
}

SynthConfig SynthConfig::preset(std::string_view name) {
  SynthConfig cfg;
  if (name == "sfu-like") {
    cfg.n_students = 25000;
    cfg.n_classes = 3000;
    cfg.class_size_law = ClassSizeLaw::truncated_power_law(1.8, 2, 481);
    cfg.classes_per_student_mean = 4.3;
    return cfg;
  }
  if (name == "desk") {
    cfg.n_students = 2000;
    cfg.n_classes = 320;
    cfg.class_size_law = ClassSizeLaw::truncated_power_law(1.8, 2, 200);
    cfg.classes_per_student_mean = 4.3;
    return cfg;
  }
  if (name == "tiny") {
    cfg.n_students = 200;
    cfg.n_classes = 40;
    cfg.class_size_law = ClassSizeLaw::uniform(2, 12);
    cfg.classes_per_student_mean = 3.0;
    return cfg;
  }
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

std::vector<std::string> SynthConfig::preset_names() {
  return {"sfu-like", "desk", "tiny"};
}

SynthConfig SynthConfig::from_kv(const kv::Map& m) { return from_kv(m, SynthConfig{}); }

SynthConfig SynthConfig::from_kv(const kv::Map& m, SynthConfig base) {
  for (const auto& [key, value] : m) {
    if (key == "n_students") {
      auto v = text::parse_int(value);
      if (!v) throw ConfigError("n_students: not an integer: " + value);
      base.n_students = *v;
    } else if (key == "n_classes") {
      auto v = text::parse_int(value);
      if (!v) throw ConfigError("n_classes: not an integer: " + value);
      base.n_classes = *v;
    } else if (key == "class_size_law") {
      auto v = ClassSizeLaw::parse(value);
      if (!v) throw ConfigError("class_size_law: cannot parse: " + value);
      base.class_size_law = *v;
    } else if (key == "classes_per_student_mean") {
      auto v = text::parse_double(value);
      if (!v) throw ConfigError("classes_per_student_mean: not a number: " + value);
      base.classes_per_student_mean = *v;
    } else if (key == "pattern_pool") {
      auto v = PatternPool::parse(value);
      if (!v) throw ConfigError("pattern_pool: cannot parse: " + value);
      base.pattern_pool = *v;
    } else if (key == "seed") {
      auto v = text::parse_uint(value);
      if (!v) throw ConfigError("seed: not an unsigned integer: " + value);
      base.seed = *v;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return base;
}

namespace {

// Fenwick tree over integer weights; supports point update and sampling an
// index with probability proportional to its weight.
class WeightIndex {
 public:
  explicit WeightIndex(const std::vector<std::int64_t>& w)
      : n_(w.size()), tree_(w.size() + 1, 0), total_(0) {
    for (std::size_t i = 0; i < n_; ++i) add(i, w[i]);
  }

  void add(std::size_t i, std::int64_t delta) {
    total_ += delta;
    for (std::size_t j = i + 1; j <= n_; j += j & (~j + 1)) tree_[j] += delta;
  }

  std::int64_t total() const { return total_; }

  // Index of the first position whose cumulative weight exceeds r,
  // 0 <= r < total().
  std::size_t find(std::int64_t r) const {
    std::size_t pos = 0;
    std::size_t mask = 1;
    while ((mask << 1) <= n_) mask <<= 1;
    for (; mask != 0; mask >>= 1) {
      std::size_t next = pos + mask;
      if (next <= n_ && tree_[next] <= r) {
        pos = next;
        r -= tree_[next];
      }
    }
    return pos;
  }

 private:
  std::size_t n_;
  std::vector<std::int64_t> tree_;
  std::int64_t total_;
};

std::int64_t draw_class_size(const ClassSizeLaw& law, const std::vector<double>& cdf,
                             rng::Engine& eng) {
  if (law.kind == ClassSizeLaw::Kind::Uniform)
    return law.lo + static_cast<std::int64_t>(
                        eng.below(static_cast<std::uint64_t>(law.hi - law.lo + 1)));
  const double u = eng.next_unit();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const auto off = std::min<std::ptrdiff_t>(it - cdf.begin(),
                                            static_cast<std::ptrdiff_t>(cdf.size()) - 1);
  return law.lo + off;
}

std::string padded_id(char prefix, std::int64_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*lld", prefix, width,
                static_cast<long long>(i));
  return buf;
}

int digits(std::int64_t n) {
  int d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return d;
}

}  // namespace

EnrollmentNetwork generate(const SynthConfig& cfg) {
  cfg.validate();
  rng::Engine eng(cfg.seed);

  // Power-law cdf over lo..hi, built once.
  std::vector<double> cdf;
  if (cfg.class_size_law.kind == ClassSizeLaw::Kind::TruncatedPowerLaw) {
    const auto span = static_cast<std::size_t>(cfg.class_size_law.hi - cfg.class_size_law.lo + 1);
    cdf.resize(span);
    double acc = 0;
    for (std::size_t i = 0; i < span; ++i) {
      acc += std::pow(static_cast<double>(cfg.class_size_law.lo + static_cast<std::int64_t>(i)),
                      -cfg.class_size_law.alpha);
      cdf[i] = acc;
    }
    for (double& v : cdf) v /= acc;
  }

  std::vector<std::int64_t> sizes(static_cast<std::size_t>(cfg.n_classes));
  for (auto& s : sizes) s = draw_class_size(cfg.class_size_law, cdf, eng);

  std::vector<double> pattern_cdf;
  {
    double acc = 0;
    for (const auto& [days, w] : cfg.pattern_pool.entries) {
      acc += w;
      pattern_cdf.push_back(acc);
    }
    pattern_cdf.back() = 1.0;
  }
  std::vector<std::size_t> pattern_of(sizes.size());
  for (auto& p : pattern_of) {
    const double u = eng.next_unit();
    p = static_cast<std::size_t>(
        std::upper_bound(pattern_cdf.begin(), pattern_cdf.end(), u) - pattern_cdf.begin());
    if (p >= pattern_cdf.size()) p = pattern_cdf.size() - 1;
  }

  // Everyone takes at least one class; the excess over one is Poisson so the
  // mean lands on target without zero-enrollment students.
  std::vector<std::int64_t> budget(static_cast<std::size_t>(cfg.n_students));
  for (auto& b : budget) b = 1 + eng.poisson(cfg.classes_per_student_mean - 1.0);

  const std::int64_t seats = std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0});
  const std::int64_t budget_total = std::accumulate(budget.begin(), budget.end(), std::int64_t{0});
  if (seats > budget_total)
    throw GenerationError(
        "infeasible draw: target class seats (" + std::to_string(seats) +
        ") exceed total student budgets (" + std::to_string(budget_total) +
        "); raise classes_per_student_mean or n_students, or shrink the class size law");

  WeightIndex weights(budget);
  const int sw = digits(cfg.n_students - 1);
  const int cw = digits(cfg.n_classes - 1);

  std::vector<network::ClassSection> sections;
  sections.reserve(sizes.size());
  std::vector<std::int64_t> member_idx;
  std::vector<std::int64_t> stashed;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    member_idx.clear();
    stashed.clear();
    for (std::int64_t seat = 0; seat < sizes[c]; ++seat) {
      std::int64_t s;
      if (weights.total() > 0) {
        s = static_cast<std::int64_t>(
            weights.find(static_cast<std::int64_t>(eng.below(
                static_cast<std::uint64_t>(weights.total())))));
      } else {
        // All remaining budget sits on students already in this roster.
        // Fall back to a uniform pick among outsiders; overshooting a few
        // budgets beats failing the whole draw.
        std::vector<std::int64_t> outsiders;
        std::vector<char> in_roster(budget.size(), 0);
        for (std::int64_t m : member_idx) in_roster[static_cast<std::size_t>(m)] = 1;
        for (std::size_t i = 0; i < budget.size(); ++i)
          if (!in_roster[i]) outsiders.push_back(static_cast<std::int64_t>(i));
        s = outsiders[eng.below(outsiders.size())];
        member_idx.push_back(s);
        stashed.push_back(0);
        continue;
      }
      member_idx.push_back(s);
      // Park the weight at zero so the roster stays duplicate-free.
      stashed.push_back(budget[static_cast<std::size_t>(s)]);
      weights.add(static_cast<std::size_t>(s), -stashed.back());
    }
    network::ClassSection sec;
    sec.id = padded_id('c', static_cast<std::int64_t>(c), cw);
    sec.meeting_days = cfg.pattern_pool.entries[pattern_of[c]].first;
    for (std::size_t i = 0; i < member_idx.size(); ++i) {
      const auto s = static_cast<std::size_t>(member_idx[i]);
      sec.roster.push_back(padded_id('s', member_idx[i], sw));
      // Fallback picks (stashed == 0) had no budget left; nothing to restore.
      if (stashed[i] > 0) {
        budget[s] = stashed[i] - 1;
        weights.add(s, budget[s]);
      }
    }
    sections.push_back(std::move(sec));
  }

  EnrollmentNetwork net = EnrollmentNetwork::from_sections(std::move(sections));
  if (network::drop_degenerate(net).empty())
    throw GenerationError("generated network is fully degenerate; widen the class size law");
  return net;
}

}  // namespace enrollsim::synthgen
