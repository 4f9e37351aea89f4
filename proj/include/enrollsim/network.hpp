#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "enrollsim/errors.hpp"
#include "enrollsim/rng.hpp"

namespace enrollsim::network {

using StudentId = std::string;
using ClassId = std::string;

enum class Weekday : std::uint8_t { Mon, Tue, Wed, Thu, Fri, Sat, Sun };

// Set of weekdays a section meets, as a 7-bit mask. The text form is a
// concatenation of two-letter codes, e.g. "MoWeFr", always emitted in
// Mon..Sun order.
class DaySet {
 public:
  constexpr DaySet() = default;

  static DaySet of(std::initializer_list<Weekday> days) {
    DaySet s;
    for (Weekday d : days) s.add(d);
    return s;
  }

  // Empty string parses to the empty set. Unknown codes or odd-length
  // strings do not parse.
  static std::optional<DaySet> parse(std::string_view s);

  void add(Weekday d) { bits_ |= static_cast<std::uint8_t>(1u << static_cast<int>(d)); }
  bool contains(Weekday d) const {
    return (bits_ & (1u << static_cast<int>(d))) != 0;
  }
  bool empty() const { return bits_ == 0; }
  int count() const;
  std::string to_string() const;

  friend bool operator==(DaySet a, DaySet b) { return a.bits_ == b.bits_; }
  friend bool operator!=(DaySet a, DaySet b) { return a.bits_ != b.bits_; }

 private:
  std::uint8_t bits_ = 0;
};

struct ClassSection {
  ClassId id;
  DaySet meeting_days;
  std::vector<StudentId> roster;  // ascending, no duplicates

  std::int64_t size() const { return static_cast<std::int64_t>(roster.size()); }
};

// Class-size cap: a finite value > 1, or unbounded. Parsed/printed as a
// plain integer or "inf".
class Threshold {
 public:
  static Threshold finite(std::int64_t v);
  static Threshold infinite() { return Threshold(-1); }
  static std::optional<Threshold> parse(std::string_view s);

  bool is_infinite() const { return value_ < 0; }
  std::int64_t value() const;  // finite thresholds only
  bool admits(std::int64_t class_size) const {
    return is_infinite() || class_size <= value_;
  }
  std::string to_string() const;

  // Finite value, or -1 for the unbounded threshold. Stable across runs,
  // suitable as a map key or a seed component.
  std::int64_t encoded() const { return value_; }

  friend bool operator==(Threshold a, Threshold b) { return a.value_ == b.value_; }
  friend bool operator!=(Threshold a, Threshold b) { return a.value_ != b.value_; }
  // Finite ascending, unbounded last.
  friend bool operator<(Threshold a, Threshold b) {
    if (a.is_infinite() != b.is_infinite()) return !a.is_infinite();
    return a.value_ < b.value_;
  }

 private:
  explicit Threshold(std::int64_t v) : value_(v) {}
  std::int64_t value_;
};

struct NetworkStats {
  std::int64_t n_students = 0;
  std::int64_t n_classes = 0;
  std::int64_t n_enrollments = 0;
  std::int64_t n_students_lcc = 0;
  std::map<std::int64_t, std::int64_t> class_size_histogram;
  std::int64_t max_class_size = 0;
};

// Bipartite student x class-section network. Students exist only through
// rosters, so every student listed has at least one class and the two
// directions agree by construction.
class EnrollmentNetwork {
 public:
  EnrollmentNetwork() = default;

  // Deduplicates rosters and sorts them. Throws std::invalid_argument on a
  // duplicate class id.
  static EnrollmentNetwork from_sections(std::vector<ClassSection> sections);

  const std::map<ClassId, ClassSection>& classes() const { return classes_; }
  // Values are ascending class-id lists.
  const std::map<StudentId, std::vector<ClassId>>& students() const { return students_; }

  std::int64_t n_students() const { return static_cast<std::int64_t>(students_.size()); }
  std::int64_t n_classes() const { return static_cast<std::int64_t>(classes_.size()); }
  std::int64_t n_enrollments() const { return n_enrollments_; }
  bool empty() const { return classes_.empty(); }

 private:
  std::map<ClassId, ClassSection> classes_;
  std::map<StudentId, std::vector<ClassId>> students_;
  std::int64_t n_enrollments_ = 0;
};

// CSV with header "student_id,class_id,days". Ids match [A-Za-z0-9_-]+.
// Repeated (student, class) rows collapse to one enrollment; rows giving
// the same class different day sets are an error. Throws ParseError.
EnrollmentNetwork parse_enrollments(std::istream& in);

// Canonical form: rows sorted by (class_id, student_id). Parsing the output
// reproduces the network exactly.
void write_enrollments(const EnrollmentNetwork& net, std::ostream& out);

// Removes classes that never meet or have fewer than two students, then
// students left with no classes.
EnrollmentNetwork drop_degenerate(const EnrollmentNetwork& net);

// Removes classes larger than phi (strictly), then students left with no
// classes. The unbounded threshold is the identity.
EnrollmentNetwork apply_threshold(const EnrollmentNetwork& net, Threshold phi);

// Keeps the connected component with the most vertices (students plus
// classes). Ties break toward the component with the smallest member id.
EnrollmentNetwork largest_component(const EnrollmentNetwork& net);

// Deletes uniformly chosen enrollments until exactly target_enrollments
// remain, then drops emptied classes and classless students. One-student
// classes are kept: thinning models reduced enrollment, not a size cap.
// Throws std::invalid_argument if target exceeds the current count.
EnrollmentNetwork thin_uniform(const EnrollmentNetwork& net,
                               std::int64_t target_enrollments,
                               rng::Engine& eng);

// Total enrollment a threshold reduction would leave behind: the sum of
// sizes over classes the threshold admits. Pairing thin_uniform with this
// target matches the two reductions enrollment-for-enrollment.
std::int64_t thinning_target(const EnrollmentNetwork& net, Threshold phi);

NetworkStats network_stats(const EnrollmentNetwork& net);

// Full structural audit, for tests: rosters sorted and unique, both
// directions agree, enrollment count correct.
bool is_consistent(const EnrollmentNetwork& net);

}  // namespace enrollsim::network
