#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "treespec/measure.hpp"

using namespace treespec;
using Catch::Approx;

TEST_CASE("weight_from_branching on reference points") {
  CHECK(weight_from_branching(4.0) == Approx(3.0).epsilon(1e-14));
  CHECK(weight_from_branching(9.0) == Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(weight_from_branching(1.0), ValidationError);
  CHECK_THROWS_AS(weight_from_branching(0.5), ValidationError);
}

TEST_CASE("branching_from_weight inverts the weight map") {
  CHECK(branching_from_weight(3.0) == Approx(4.0).epsilon(1e-14));
  CHECK(branching_from_weight(2.0) == Approx(9.0).epsilon(1e-14));
  CHECK_THROWS_AS(branching_from_weight(1.0), ValidationError);

  for (double b : {2.0, 3.0, 7.5}) {
    CHECK(branching_from_weight(weight_from_branching(b)) == Approx(b).epsilon(1e-12));
  }
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(1.0 + 1e-6, 1e6);
  for (int i = 0; i < 200; ++i) {
    const double b = dist(rng);
    CHECK(branching_from_weight(weight_from_branching(b)) == Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("geometry validation enforces the standing assumptions") {
  auto g = TreeGeometry::explicit_list({{1.0, 2.0}, {1.0, 2.0}});
  CHECK(g.gamma() == 1.0);
  CHECK(g.min_branching() == 2.0);

  CHECK_THROWS_AS(TreeGeometry::explicit_list({{1.0, 2.0}, {0.0, 3.0}}), ValidationError);
  CHECK_THROWS_AS(TreeGeometry::explicit_list({{1.0, 1.0}}), ValidationError);
  CHECK_THROWS_AS(TreeGeometry::explicit_list({}), ValidationError);
  CHECK_THROWS_AS(TreeGeometry::explicit_list({{-1.0, 2.0}}), ValidationError);
  CHECK_THROWS_AS(TreeGeometry::eventually_periodic({{1.0, 2.0}}, 0, 0), ValidationError);
  CHECK_THROWS_AS(TreeGeometry::eventually_periodic({{1.0, 2.0}}, 1, 1), ValidationError);
}

TEST_CASE("build_measure places atoms at cumulative positions") {
  SECTION("equilateral binary, three atoms") {
    auto g = TreeGeometry::eventually_periodic({{1.0, 2.0}}, 0, 1);
    auto mu = build_measure(g, 3);
    const double beta = 3.0 + 2.0 * std::sqrt(2.0);  // (sqrt 2 + 1)/(sqrt 2 - 1)
    REQUIRE(mu.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(mu.position(i) == Approx(1.0 + static_cast<double>(i)).margin(1e-15));
      CHECK(mu.weight(i) == Approx(beta).epsilon(1e-14));
    }
    CHECK(mu.separation() == 1.0);
  }
  SECTION("two explicit edges") {
    auto g = TreeGeometry::explicit_list({{1.0, 4.0}, {2.0, 9.0}});
    auto mu = build_measure(g, 2);
    REQUIRE(mu.size() == 2);
    CHECK(mu.position(0) == Approx(1.0));
    CHECK(mu.weight(0) == Approx(3.0));
    CHECK(mu.position(1) == Approx(3.0));
    CHECK(mu.weight(1) == Approx(2.0));
  }
  SECTION("single atom") {
    auto g = TreeGeometry::explicit_list({{2.5, 3.0}});
    auto mu = build_measure(g, 1);
    REQUIRE(mu.size() == 1);
    CHECK(mu.position(0) == Approx(2.5));
  }
  SECTION("explicit list rejects counts beyond its edges") {
    auto g = TreeGeometry::explicit_list({{1.0, 2.0}});
    CHECK_THROWS_AS(build_measure(g, 2), std::invalid_argument);
    CHECK_THROWS_AS(build_measure(g, 0), std::invalid_argument);
  }
}

TEST_CASE("eventually periodic expansion walks preperiod then period") {
  auto g = TreeGeometry::eventually_periodic(
      {{0.5, 2.0}, {1.0, 4.0}, {2.0, 9.0}}, 1, 2);
  auto mu = build_measure(g, 5);
  REQUIRE(mu.size() == 5);
  CHECK(mu.position(0) == Approx(0.5));
  CHECK(mu.position(1) == Approx(1.5));
  CHECK(mu.position(2) == Approx(3.5));
  CHECK(mu.position(3) == Approx(4.5));
  CHECK(mu.position(4) == Approx(6.5));
  CHECK(mu.weight(1) == Approx(3.0));  // b = 4
  CHECK(mu.weight(2) == Approx(2.0));  // b = 9
  CHECK(mu.weight(3) == Approx(3.0));
}

TEST_CASE("substitution expansion is deterministic and extends on demand") {
  SubstitutionSystem sys;
  sys.alphabet['A'] = {1.0, 2.0};
  sys.alphabet['B'] = {2.0, 2.0};
  sys.rules['A'] = "AB";
  sys.rules['B'] = "A";
  sys.axiom = "A";
  sys.depth = 3;
  auto g = TreeGeometry::substitution(sys);

  CHECK(g.word_prefix(5) == "ABAAB");
  CHECK(g.word_prefix(8) == "ABAABABA");
  // requesting far beyond the initial depth re-expands deterministically
  auto mu1 = build_measure(g, 100);
  auto mu2 = build_measure(g, 100);
  REQUIRE(mu1.size() == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(mu1.position(i) == mu2.position(i));

  SECTION("rule validation") {
    SubstitutionSystem bad = sys;
    bad.rules['A'] = "AC";
    CHECK_THROWS_AS(TreeGeometry::substitution(bad), ValidationError);
    bad = sys;
    bad.rules['B'] = "";
    CHECK_THROWS_AS(TreeGeometry::substitution(bad), ValidationError);
    bad = sys;
    bad.rules.erase('B');
    CHECK_THROWS_AS(TreeGeometry::substitution(bad), ValidationError);
  }
}

TEST_CASE("norm_loc over closed unit windows") {
  SECTION("integer lattice with weight 3 sees two atoms per window") {
    std::vector<Atom> atoms;
    for (int n = 1; n <= 10; ++n) atoms.push_back({static_cast<double>(n), 3.0});
    auto mu = AtomicMeasure::from_atoms(atoms);
    CHECK(norm_loc(mu) == Approx(6.0).margin(1e-12));
  }
  SECTION("single atom") {
    auto mu = AtomicMeasure::from_atoms({{2.0, 5.0}});
    CHECK(norm_loc(mu) == Approx(5.0));
  }
  SECTION("gaps above 1 isolate atoms") {
    auto mu = AtomicMeasure::from_atoms({{1.0, 2.5}, {2.5, 4.0}, {4.0, 3.0}});
    CHECK(norm_loc(mu) == Approx(4.0));
  }
  SECTION("agrees with the brute-force anchor scan") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
      auto mu = oracles::random_alphabet_measure(rng, 40);
      CHECK(norm_loc(mu) == Approx(oracles::norm_loc_bruteforce(mu)).margin(1e-12));
    }
  }
}

TEST_CASE("shift translates positions and preserves weights") {
  auto mu = AtomicMeasure::from_atoms({{1.0, 3.0}});
  auto nu = shift(mu, 1.0);
  CHECK(nu.position(0) == Approx(0.0).margin(1e-15));
  CHECK(nu.weight(0) == 3.0);
  CHECK(nu.separation() == mu.separation());

  SECTION("zero shift is the identity") {
    auto same = shift(mu, 0.0);
    CHECK(same.position(0) == mu.position(0));
  }
  SECTION("shifts compose additively") {
    std::mt19937_64 rng(3);
    auto big = oracles::random_alphabet_measure(rng, 20);
    auto lhs = shift(shift(big, 0.7), -2.3);
    auto rhs = shift(big, 0.7 - 2.3);
    REQUIRE(lhs.size() == rhs.size());
    for (std::size_t i = 0; i < lhs.size(); ++i)
      CHECK(lhs.position(i) == Approx(rhs.position(i)).margin(1e-12));
  }
}

TEST_CASE("generated measures satisfy the class invariants") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    auto mu = oracles::random_alphabet_measure(rng, 60);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      CHECK(mu.weight(i) > 1.0);
      if (i > 0) CHECK(mu.position(i) - mu.position(i - 1) >= mu.separation() - 1e-12);
    }
    CHECK(mu.loc_bound() >= oracles::norm_loc_bruteforce(mu) - 1e-12);
  }
  CHECK_THROWS_AS(AtomicMeasure::from_atoms({{1.0, 0.5}}), ValidationError);
  CHECK_THROWS_AS(AtomicMeasure::from_atoms({{1.0, 2.0}, {1.0, 2.0}}), ValidationError);
  CHECK_THROWS_AS(AtomicMeasure::from_atoms({{2.0, 2.0}, {1.0, 2.0}}), ValidationError);
}

TEST_CASE("decompose_tree multiplicities") {
  SECTION("equilateral binary: 1, 1, 2, 4") {
    auto g = TreeGeometry::eventually_periodic({{1.0, 2.0}}, 0, 1);
    auto entries = decompose_tree(g, 3);
    REQUIRE(entries.size() == 4);
    CHECK(*entries[0].multiplicity == 1);
    CHECK(*entries[1].multiplicity == 1);
    CHECK(*entries[2].multiplicity == 2);
    CHECK(*entries[3].multiplicity == 4);
  }
  SECTION("constant branching 3 at generation 2 gives 3 * 2") {
    auto g = TreeGeometry::eventually_periodic({{1.0, 3.0}}, 0, 1);
    auto entries = decompose_tree(g, 2);
    CHECK(*entries[2].multiplicity == 6);
  }
  SECTION("non-integer branchings flag multiplicity unavailable") {
    auto g = TreeGeometry::eventually_periodic({{1.0, 2.5}}, 0, 1);
    auto entries = decompose_tree(g, 2);
    CHECK(*entries[0].multiplicity == 1);
    CHECK_FALSE(entries[1].multiplicity.has_value());
    CHECK_FALSE(entries[2].multiplicity.has_value());
  }
}

TEST_CASE("generation-k operator carries the shifted tail measure") {
  auto g = TreeGeometry::eventually_periodic(
      {{0.5, 2.0}, {1.0, 4.0}, {2.0, 9.0}}, 1, 2);
  const std::size_t count = 24;
  auto full = build_measure(g, count);
  auto entries = decompose_tree(g, 3, count);
  for (const auto& e : entries) {
    const AtomicMeasure expected = shift(tail_from(full, e.op.origin), e.op.origin);
    const AtomicMeasure got = e.op.normalized();
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got.position(i) == Approx(expected.position(i)).margin(1e-12));
      CHECK(got.weight(i) == expected.weight(i));
    }
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.position(i) > 0.0);
  }
  // origins are the atom positions t_k
  CHECK(entries[0].op.origin == 0.0);
  CHECK(entries[1].op.origin == Approx(0.5));
  CHECK(entries[2].op.origin == Approx(1.5));
  CHECK(entries[3].op.origin == Approx(3.5));
}

TEST_CASE("restrict_to and tail_from slice windows") {
  auto mu = AtomicMeasure::from_atoms({{1.0, 2.0}, {2.0, 3.0}, {3.0, 2.0}});
  auto mid = restrict_to(mu, 2.0, 3.0);  // half-open: keeps 2.0, drops 3.0
  REQUIRE(mid.size() == 1);
  CHECK(mid.position(0) == 2.0);
  auto tail = tail_from(mu, 2.0);  // strict: drops 2.0
  REQUIRE(tail.size() == 1);
  CHECK(tail.position(0) == 3.0);
}
