#include "enrollsim/network.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "enrollsim/textio.hpp"

namespace enrollsim::network {

namespace {

constexpr const char* kDayCodes[7] = {"Mo", "Tu", "We", "Th", "Fr", "Sa", "Su"};

bool valid_id(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
              (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::optional<DaySet> DaySet::parse(std::string_view s) {
  if (s.size() % 2 != 0) return std::nullopt;
  DaySet out;
  for (std::size_t i = 0; i < s.size(); i += 2) {
    std::string_view code = s.substr(i, 2);
    int d = -1;
    for (int j = 0; j < 7; ++j)
      if (code == kDayCodes[j]) {
        d = j;
        break;
      }
    if (d < 0) return std::nullopt;
    out.add(static_cast<Weekday>(d));
  }
  return out;
}

int DaySet::count() const {
  int n = 0;
  for (int d = 0; d < 7; ++d)
    if (bits_ & (1u << d)) ++n;
  return n;
}

std::string DaySet::to_string() const {
  std::string out;
  for (int d = 0; d < 7; ++d)
    if (bits_ & (1u << d)) out += kDayCodes[d];
  return out;
}

Threshold Threshold::finite(std::int64_t v) {
  if (v <= 1)
    throw std::invalid_argument("threshold must exceed 1, got " + std::to_string(v));
  return Threshold(v);
}

std::int64_t Threshold::value() const {
  if (is_infinite()) throw std::logic_error("unbounded threshold has no value");
  return value_;
}

std::string Threshold::to_string() const {
  return is_infinite() ? "inf" : std::to_string(value_);
}

std::optional<Threshold> Threshold::parse(std::string_view s) {
  if (s == "inf") return infinite();
  auto v = text::parse_int(s);
  if (!v || *v <= 1) return std::nullopt;
  return finite(*v);
}

EnrollmentNetwork EnrollmentNetwork::from_sections(std::vector<ClassSection> sections) {
  EnrollmentNetwork net;
  for (auto& sec : sections) {
    std::sort(sec.roster.begin(), sec.roster.end());
    sec.roster.erase(std::unique(sec.roster.begin(), sec.roster.end()), sec.roster.end());
    auto [it, inserted] = net.classes_.emplace(sec.id, std::move(sec));
    if (!inserted)
      throw std::invalid_argument("duplicate class id: " + it->first);
  }
  for (const auto& [cid, sec] : net.classes_) {
    net.n_enrollments_ += sec.size();
    for (const StudentId& sid : sec.roster) net.students_[sid].push_back(cid);
  }
  // classes_ is iterated in id order, so the per-student lists are already
  // ascending.
  return net;
}

EnrollmentNetwork parse_enrollments(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(in, line))
    throw ParseError(1, "missing header");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "student_id,class_id,days")
    throw ParseError(1, "expected header 'student_id,class_id,days', got '" + line + "'");

  struct Pending {
    DaySet days;
    bool days_set = false;
    std::vector<StudentId> roster;
  };
  std::map<ClassId, Pending> pending;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = text::split(line, ',');
    if (fields.size() != 3)
      throw ParseError(lineno, "expected 3 fields, got " + std::to_string(fields.size()));
    std::string_view sid = fields[0], cid = fields[1], days_str = fields[2];
    if (!valid_id(sid)) throw ParseError(lineno, "invalid student id '" + std::string(sid) + "'");
    if (!valid_id(cid)) throw ParseError(lineno, "invalid class id '" + std::string(cid) + "'");
    auto days = DaySet::parse(days_str);
    if (!days) throw ParseError(lineno, "invalid day set '" + std::string(days_str) + "'");

    Pending& p = pending[std::string(cid)];
    if (p.days_set) {
      if (p.days != *days)
        throw ParseError(lineno, "class '" + std::string(cid) + "' listed with conflicting meeting days");
    } else {
      p.days = *days;
      p.days_set = true;
    }
    p.roster.emplace_back(sid);
  }

  std::vector<ClassSection> sections;
  sections.reserve(pending.size());
  for (auto& [cid, p] : pending)
    sections.push_back(ClassSection{cid, p.days, std::move(p.roster)});
  return EnrollmentNetwork::from_sections(std::move(sections));
}

void write_enrollments(const EnrollmentNetwork& net, std::ostream& out) {
  out << "student_id,class_id,days\n";
  for (const auto& [cid, sec] : net.classes()) {
    const std::string days = sec.meeting_days.to_string();
    for (const StudentId& sid : sec.roster)
      out << sid << ',' << cid << ',' << days << '\n';
  }
}

EnrollmentNetwork drop_degenerate(const EnrollmentNetwork& net) {
  std::vector<ClassSection> kept;
  for (const auto& [cid, sec] : net.classes())
    if (!sec.meeting_days.empty() && sec.size() >= 2) kept.push_back(sec);
  return EnrollmentNetwork::from_sections(std::move(kept));
}

EnrollmentNetwork apply_threshold(const EnrollmentNetwork& net, Threshold phi) {
  if (phi.is_infinite()) return net;
  std::vector<ClassSection> kept;
  for (const auto& [cid, sec] : net.classes())
    if (phi.admits(sec.size())) kept.push_back(sec);
  return EnrollmentNetwork::from_sections(std::move(kept));
}

// Union-find over students and classes. Simple and hard to get wrong, which
// matters more here than BFS locality.
namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_;
};

struct ComponentScan {
  std::vector<const ClassSection*> best_classes;
  std::int64_t best_students = 0;
};

// Picks the largest component: most vertices first, then smallest member id
// (students and classes pooled), then smallest class id. Distinct components
// can share a pooled minimum only when a student id equals a class id, so
// the class-id tiebreak settles any remainder deterministically.
ComponentScan scan_components(const EnrollmentNetwork& net) {
  ComponentScan out;
  if (net.empty()) return out;

  std::map<StudentId, std::size_t> student_idx;
  std::size_t next = 0;
  for (const auto& [sid, cls] : net.students()) student_idx.emplace(sid, next++);
  const std::size_t n_students = next;
  const std::size_t n_classes = net.classes().size();

  UnionFind uf(n_students + n_classes);
  std::vector<const ClassSection*> class_at;
  class_at.reserve(n_classes);
  for (const auto& [cid, sec] : net.classes()) {
    const std::size_t cvert = n_students + class_at.size();
    class_at.push_back(&sec);
    for (const StudentId& sid : sec.roster) uf.unite(cvert, student_idx.at(sid));
  }

  struct Info {
    std::int64_t n_students = 0;
    std::int64_t n_classes = 0;
    std::vector<const ClassSection*> classes;
    const std::string* min_member = nullptr;
    const std::string* min_class = nullptr;
  };
  std::map<std::size_t, Info> comps;

  for (const auto& [sid, idx] : student_idx) {
    Info& info = comps[uf.find(idx)];
    ++info.n_students;
    if (!info.min_member || sid < *info.min_member) info.min_member = &sid;
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    Info& info = comps[uf.find(n_students + c)];
    ++info.n_classes;
    info.classes.push_back(class_at[c]);
    const std::string& cid = class_at[c]->id;
    if (!info.min_member || cid < *info.min_member) info.min_member = &cid;
    if (!info.min_class || cid < *info.min_class) info.min_class = &cid;
  }

  const Info* best = nullptr;
  for (const auto& [root, info] : comps) {
    if (!best) {
      best = &info;
      continue;
    }
    const std::int64_t a = info.n_students + info.n_classes;
    const std::int64_t b = best->n_students + best->n_classes;
    if (a != b) {
      if (a > b) best = &info;
      continue;
    }
    if (*info.min_member != *best->min_member) {
      if (*info.min_member < *best->min_member) best = &info;
      continue;
    }
    if (*info.min_class < *best->min_class) best = &info;
  }
  out.best_classes = best->classes;
  out.best_students = best->n_students;
  return out;
}

}  // namespace

EnrollmentNetwork largest_component(const EnrollmentNetwork& net) {
  if (net.empty()) return net;
  ComponentScan scan = scan_components(net);
  std::vector<ClassSection> kept;
  kept.reserve(scan.best_classes.size());
  for (const ClassSection* sec : scan.best_classes) kept.push_back(*sec);
  return EnrollmentNetwork::from_sections(std::move(kept));
}

EnrollmentNetwork thin_uniform(const EnrollmentNetwork& net,
                               std::int64_t target_enrollments,
                               rng::Engine& eng) {
  const std::int64_t current = net.n_enrollments();
  if (target_enrollments < 0 || target_enrollments > current)
    throw std::invalid_argument("thinning target " + std::to_string(target_enrollments) +
                                " out of range [0," + std::to_string(current) + "]");
  if (target_enrollments == current) return net;

  // Enrollments in canonical (class, student) order; the removal set is a
  // uniform subset of these indices.
  std::vector<std::int64_t> idx(static_cast<std::size_t>(current));
  std::iota(idx.begin(), idx.end(), std::int64_t{0});
  const auto k_remove = static_cast<std::size_t>(current - target_enrollments);
  eng.partial_shuffle(idx, k_remove);
  std::vector<char> removed(static_cast<std::size_t>(current), 0);
  for (std::size_t i = 0; i < k_remove; ++i) removed[static_cast<std::size_t>(idx[i])] = 1;

  std::vector<ClassSection> kept;
  std::int64_t cursor = 0;
  for (const auto& [cid, sec] : net.classes()) {
    ClassSection out{cid, sec.meeting_days, {}};
    out.roster.reserve(sec.roster.size());
    for (const StudentId& sid : sec.roster) {
      if (!removed[static_cast<std::size_t>(cursor)]) out.roster.push_back(sid);
      ++cursor;
    }
    if (!out.roster.empty()) kept.push_back(std::move(out));
  }
  return EnrollmentNetwork::from_sections(std::move(kept));
}

std::int64_t thinning_target(const EnrollmentNetwork& net, Threshold phi) {
  std::int64_t total = 0;
  for (const auto& [cid, sec] : net.classes())
    if (phi.admits(sec.size())) total += sec.size();
  return total;
}

NetworkStats network_stats(const EnrollmentNetwork& net) {
  NetworkStats st;
  st.n_students = net.n_students();
  st.n_classes = net.n_classes();
  st.n_enrollments = net.n_enrollments();
  for (const auto& [cid, sec] : net.classes()) {
    ++st.class_size_histogram[sec.size()];
    st.max_class_size = std::max(st.max_class_size, sec.size());
  }
  if (!net.empty()) st.n_students_lcc = scan_components(net).best_students;
  return st;
}

bool is_consistent(const EnrollmentNetwork& net) {
  std::int64_t enrollments = 0;
  for (const auto& [cid, sec] : net.classes()) {
    if (sec.id != cid) return false;
    if (!std::is_sorted(sec.roster.begin(), sec.roster.end())) return false;
    if (std::adjacent_find(sec.roster.begin(), sec.roster.end()) != sec.roster.end())
      return false;
    enrollments += sec.size();
    for (const StudentId& sid : sec.roster) {
      auto it = net.students().find(sid);
      if (it == net.students().end()) return false;
      if (!std::binary_search(it->second.begin(), it->second.end(), cid)) return false;
    }
  }
  if (enrollments != net.n_enrollments()) return false;
  for (const auto& [sid, cls] : net.students()) {
    if (cls.empty()) return false;
    if (!std::is_sorted(cls.begin(), cls.end())) return false;
    if (std::adjacent_find(cls.begin(), cls.end()) != cls.end()) return false;
    for (const ClassId& cid : cls) {
      auto it = net.classes().find(cid);
      if (it == net.classes().end()) return false;
      if (!std::binary_search(it->second.roster.begin(), it->second.roster.end(), sid))
        return false;
    }
  }
  return true;
}

}  // namespace enrollsim::network
