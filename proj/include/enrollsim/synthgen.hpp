#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "enrollsim/errors.hpp"
#include "enrollsim/kvconfig.hpp"
#include "enrollsim/network.hpp"

namespace enrollsim::synthgen {

// Target class-size distribution. Text forms:
//   uniform(lo,hi)                   equal weight on lo..hi
//   truncated-power-law(a,lo,hi)     pmf proportional to k^-a on lo..hi
struct ClassSizeLaw {
  enum class Kind { Uniform, TruncatedPowerLaw };
  Kind kind = Kind::Uniform;
  std::int64_t lo = 2;
  std::int64_t hi = 2;
  double alpha = 0.0;

  static ClassSizeLaw uniform(std::int64_t lo, std::int64_t hi);
  static ClassSizeLaw truncated_power_law(double alpha, std::int64_t lo, std::int64_t hi);
  static std::optional<ClassSizeLaw> parse(std::string_view s);
  std::string to_string() const;
};

// Weighted pool of weekly meeting patterns. Weights must be positive and
// sum to 1 (within rounding). Text form: "MoWeFr:0.4,TuTh:0.4,Mo:0.2".
struct PatternPool {
  std::vector<std::pair<network::DaySet, double>> entries;

  // Three-day MWF and two-day TuTh blocks dominate; a small remainder of
  // single-day seminars split evenly across Mo, We, Fr.
  static PatternPool standard();
  static std::optional<PatternPool> parse(std::string_view s);
  std::string to_string() const;
};

struct SynthConfig {
  std::int64_t n_students = 0;
  std::int64_t n_classes = 0;
  ClassSizeLaw class_size_law;
  double classes_per_student_mean = 1.0;
  PatternPool pattern_pool = PatternPool::standard();
  std::uint64_t seed = 0;

  // Throws ConfigError naming the offending field.
  void validate() const;

  // Named starting points; every field can be overridden afterwards.
  //   sfu-like  large commuter university, heavy-tailed class sizes
  //   desk      same shape at desk scale, seconds to sweep
  //   tiny      toy network for tests and examples
  static SynthConfig preset(std::string_view name);
  static std::vector<std::string> preset_names();

  // Keys: n_students, n_classes, class_size_law, classes_per_student_mean,
  // pattern_pool, seed. Unknown keys are a ConfigError.
  static SynthConfig from_kv(const kv::Map& m, SynthConfig base);
  static SynthConfig from_kv(const kv::Map& m);
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Builds a random enrollment network matching the config. Deterministic in
// cfg.seed. Class sizes are drawn from the law, per-student enrollment
// budgets as 1 + Poisson(mean - 1), and rosters are filled by weighted
// sampling without replacement so heavy enrollers land in more classes.
// Throws GenerationError when the drawn sizes cannot be seated.
network::EnrollmentNetwork generate(const SynthConfig& cfg);

}  // namespace enrollsim::synthgen
