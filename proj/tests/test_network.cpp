#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "enrollsim/network.hpp"

using namespace enrollsim;
using network::ClassSection;
using network::DaySet;
using network::EnrollmentNetwork;
using network::Threshold;
using network::Weekday;

namespace {

EnrollmentNetwork net_of(std::vector<ClassSection> sections) {
  return EnrollmentNetwork::from_sections(std::move(sections));
}

DaySet mwf() { return DaySet::of({Weekday::Mon, Weekday::Wed, Weekday::Fri}); }

}  // namespace

TEST_CASE("day sets parse and print canonically") {
  CHECK(DaySet::parse("MoWeFr").value() == mwf());
  CHECK(DaySet::parse("FrMoWe").value() == mwf());  // order does not matter
  CHECK(DaySet::parse("MoWeFr").value().to_string() == "MoWeFr");
  CHECK(DaySet::parse("").value().empty());
  CHECK(DaySet::parse("TuTh").value().count() == 2);
  CHECK_FALSE(DaySet::parse("Mon").has_value());  // odd length
  CHECK_FALSE(DaySet::parse("Xx").has_value());
  CHECK(DaySet::parse("MoMo").value().count() == 1);  // duplicates collapse
}

TEST_CASE("threshold parses, orders and admits") {
  CHECK(Threshold::parse("20").value() == Threshold::finite(20));
  CHECK(Threshold::parse("inf").value().is_infinite());
  CHECK_FALSE(Threshold::parse("1").has_value());
  CHECK_FALSE(Threshold::parse("0").has_value());
  CHECK_FALSE(Threshold::parse("-3").has_value());
  CHECK_FALSE(Threshold::parse("twenty").has_value());
  CHECK_THROWS_AS(Threshold::finite(1), std::invalid_argument);

  CHECK(Threshold::finite(20).admits(20));
  CHECK_FALSE(Threshold::finite(20).admits(21));
  CHECK(Threshold::infinite().admits(1 << 30));

  CHECK(Threshold::finite(20) < Threshold::finite(50));
  CHECK(Threshold::finite(1000) < Threshold::infinite());
  CHECK(Threshold::infinite().to_string() == "inf");
  CHECK(Threshold::finite(50).to_string() == "50");
}

TEST_CASE("from_sections builds a consistent bidirectional view") {
  auto net = net_of({
      {"c1", mwf(), {"s2", "s1", "s1"}},  // unsorted, duplicated on purpose
      {"c2", DaySet::of({Weekday::Tue}), {"s2", "s3"}},
  });
  CHECK(net.n_students() == 3);
  CHECK(net.n_classes() == 2);
  CHECK(net.n_enrollments() == 4);
  CHECK(net.classes().at("c1").roster == std::vector<std::string>{"s1", "s2"});
  CHECK(net.students().at("s2") == std::vector<std::string>{"c1", "c2"});
  CHECK(network::is_consistent(net));

  CHECK_THROWS_AS(net_of({{"c1", mwf(), {"s1"}}, {"c1", mwf(), {"s2"}}}),
                  std::invalid_argument);
}

TEST_CASE("enrollment csv round-trips through the canonical form") {
  auto net = net_of({
      {"phys-200", DaySet::of({Weekday::Tue, Weekday::Thu}), {"alice", "bob"}},
      {"chem-101", mwf(), {"alice", "carol", "dan"}},
  });
  std::ostringstream out;
  network::write_enrollments(net, out);
  // Canonical: class-major, both levels sorted.
  CHECK(out.str() ==
        "student_id,class_id,days\n"
        "alice,chem-101,MoWeFr\n"
        "carol,chem-101,MoWeFr\n"
        "dan,chem-101,MoWeFr\n"
        "alice,phys-200,TuTh\n"
        "bob,phys-200,TuTh\n");

  std::istringstream in(out.str());
  auto back = network::parse_enrollments(in);
  CHECK(back.n_students() == net.n_students());
  CHECK(back.n_enrollments() == net.n_enrollments());
  CHECK(back.classes().at("phys-200").meeting_days == DaySet::of({Weekday::Tue, Weekday::Thu}));
  std::ostringstream out2;
  network::write_enrollments(back, out2);
  CHECK(out2.str() == out.str());
}

TEST_CASE("parser rejects malformed input with line numbers") {
  auto expect_error = [](const std::string& body, std::size_t line) {
    std::istringstream in(body);
    try {
      network::parse_enrollments(in);
      FAIL_CHECK("expected ParseError for: " << body);
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
    }
  };
  expect_error("", 1);
  expect_error("student,class,days\ns1,c1,Mo\n", 1);  // wrong header
  expect_error("student_id,class_id,days\ns1,c1\n", 2);
  expect_error("student_id,class_id,days\ns1,c1,Mo,extra\n", 2);
  expect_error("student_id,class_id,days\ns1,c1,Monday\n", 2);
  expect_error("student_id,class_id,days\n,c1,Mo\n", 2);
  expect_error("student_id,class_id,days\ns 1,c1,Mo\n", 2);
  expect_error("student_id,class_id,days\ns1,c1,Mo\ns2,c1,Tu\n", 3);  // day conflict

  // Repeated identical enrollment rows collapse silently.
  std::istringstream dup("student_id,class_id,days\ns1,c1,Mo\ns1,c1,Mo\ns2,c1,Mo\n");
  auto net = network::parse_enrollments(dup);
  CHECK(net.n_enrollments() == 2);

  // CRLF input parses.
  std::istringstream crlf("student_id,class_id,days\r\ns1,c1,Mo\r\ns2,c1,Mo\r\n");
  CHECK(network::parse_enrollments(crlf).n_students() == 2);
}

TEST_CASE("drop_degenerate removes non-meeting and singleton classes") {
  auto net = net_of({
      {"c1", mwf(), {"s1", "s2"}},
      {"c2", DaySet{}, {"s1", "s3"}},          // never meets
      {"c3", mwf(), {"s4"}},                   // one student
      {"c4", DaySet::of({Weekday::Sat}), {"s5", "s6"}},
  });
  auto kept = network::drop_degenerate(net);
  CHECK(kept.n_classes() == 2);
  CHECK(kept.classes().count("c1") == 1);
  CHECK(kept.classes().count("c4") == 1);
  // s3 and s4 lost their only classes and disappear.
  CHECK(kept.n_students() == 4);
  CHECK(kept.students().count("s3") == 0);
  CHECK(kept.students().count("s4") == 0);
  CHECK(network::is_consistent(kept));
}

TEST_CASE("apply_threshold removes strictly larger classes and orphans") {
  auto net = net_of({
      {"small", mwf(), {"s1", "s2"}},
      {"exact", mwf(), {"s1", "s2", "s3"}},
      {"big", mwf(), {"s1", "s2", "s3", "s4"}},
      {"only-big", mwf(), {"s5", "s6", "s7", "s8"}},
  });
  auto cut = network::apply_threshold(net, Threshold::finite(3));
  CHECK(cut.n_classes() == 2);
  CHECK(cut.classes().count("exact") == 1);  // boundary class stays
  CHECK(cut.classes().count("big") == 0);
  CHECK(cut.n_students() == 3);  // s4..s8 had only big classes
  CHECK(network::is_consistent(cut));

  // Unbounded threshold is the identity.
  auto same = network::apply_threshold(net, Threshold::infinite());
  CHECK(same.n_enrollments() == net.n_enrollments());
}

TEST_CASE("largest_component keeps the most vertices and breaks ties by id") {
  // Component A: 2 classes + 3 students = 5 vertices.
  // Component B: 1 class + 4 students = 5 vertices. Tie; smallest id wins.
  auto net = net_of({
      {"a1", mwf(), {"s1", "s2"}},
      {"a2", mwf(), {"s2", "s3"}},
      {"b1", mwf(), {"t1", "t2", "t3", "t4"}},
  });
  auto lcc = network::largest_component(net);
  CHECK(lcc.n_classes() == 2);  // "a1" < "b1" decides the tie
  CHECK(lcc.classes().count("a1") == 1);

  // A clearly larger component wins regardless of ids.
  auto net2 = net_of({
      {"z9", mwf(), {"u1", "u2", "u3", "u4", "u5"}},
      {"a1", mwf(), {"s1", "s2"}},
  });
  auto lcc2 = network::largest_component(net2);
  CHECK(lcc2.n_classes() == 1);
  CHECK(lcc2.classes().count("z9") == 1);
  CHECK(network::is_consistent(lcc2));
}

TEST_CASE("network_stats counts the right things") {
  auto net = net_of({
      {"c1", mwf(), {"s1", "s2"}},
      {"c2", mwf(), {"s2", "s3"}},
      {"c3", mwf(), {"t1", "t2"}},
  });
  auto st = network::network_stats(net);
  CHECK(st.n_students == 5);
  CHECK(st.n_classes == 3);
  CHECK(st.n_enrollments == 6);
  CHECK(st.n_students_lcc == 3);  // c1+c2 component
  CHECK(st.max_class_size == 2);
  CHECK(st.class_size_histogram.at(2) == 3);

  auto empty = network::network_stats(EnrollmentNetwork{});
  CHECK(empty.n_students == 0);
  CHECK(empty.n_students_lcc == 0);
}

TEST_CASE("thinning_target sums admitted class sizes") {
  auto net = net_of({
      {"c1", mwf(), {"s1", "s2"}},
      {"c2", mwf(), {"s1", "s2", "s3"}},
      {"c3", mwf(), {"s1", "s2", "s3", "s4"}},
  });
  CHECK(network::thinning_target(net, Threshold::finite(3)) == 5);
  CHECK(network::thinning_target(net, Threshold::finite(2)) == 2);
  CHECK(network::thinning_target(net, Threshold::infinite()) == 9);
}

TEST_CASE("thin_uniform hits the target exactly and keeps structure legal") {
  auto net = net_of({
      {"c1", mwf(), {"s1", "s2", "s3", "s4", "s5"}},
      {"c2", mwf(), {"s1", "s2", "s3"}},
      {"c3", mwf(), {"s4", "s5"}},
  });
  rng::Engine eng(11);
  auto thinned = network::thin_uniform(net, 4, eng);
  CHECK(thinned.n_enrollments() == 4);
  CHECK(network::is_consistent(thinned));
  // No class gained students, and classes never grow back.
  for (const auto& [cid, sec] : thinned.classes())
    CHECK(sec.size() <= net.classes().at(cid).size());

  // Identity when the target equals the current count.
  rng::Engine eng2(11);
  auto same = network::thin_uniform(net, net.n_enrollments(), eng2);
  CHECK(same.n_enrollments() == net.n_enrollments());

  rng::Engine eng3(11);
  CHECK_THROWS_AS(network::thin_uniform(net, 11, eng3), std::invalid_argument);
  CHECK_THROWS_AS(network::thin_uniform(net, -1, eng3), std::invalid_argument);

  // Thinning to zero leaves the empty network.
  rng::Engine eng4(3);
  auto none = network::thin_uniform(net, 0, eng4);
  CHECK(none.empty());
  CHECK(none.n_students() == 0);
}

TEST_CASE("thin_uniform keeps one-student classes") {
  auto net = net_of({{"c1", mwf(), {"s1", "s2"}}});
  // Removing exactly one enrollment must leave a singleton class, not none.
  int singletons = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    rng::Engine eng(seed);
    auto thinned = network::thin_uniform(net, 1, eng);
    CHECK(thinned.n_enrollments() == 1);
    CHECK(thinned.n_classes() == 1);
    singletons += thinned.classes().at("c1").size() == 1;
  }
  CHECK(singletons == 20);
}

TEST_CASE("thin_uniform removal sets are uniform over enrollments") {
  // 4 enrollments, remove 2: all 6 pairs should be roughly equally likely.
  auto net = net_of({
      {"c1", mwf(), {"s1", "s2"}},
      {"c2", mwf(), {"s1", "s2"}},
  });
  std::map<std::set<std::string>, int> counts;
  const int runs = 30000;
  for (int seed = 0; seed < runs; ++seed) {
    rng::Engine eng(static_cast<std::uint64_t>(seed));
    auto thinned = network::thin_uniform(net, 2, eng);
    std::set<std::string> kept;
    for (const auto& [cid, sec] : thinned.classes())
      for (const auto& sid : sec.roster) kept.insert(cid + "/" + sid);
    ++counts[kept];
  }
  CHECK(counts.size() == 6);
  for (const auto& [k, c] : counts) CHECK(std::abs(c - runs / 6) < 350);
}
