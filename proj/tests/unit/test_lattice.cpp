#include "common.hpp"

#include "doctest.h"

#include <set>
#include <sstream>

using namespace flexbc;
using namespace flexbc::testing;

TEST_CASE("hexagonal basis geometry") {
  const auto b = BravaisBasis::hexagonal(1.0);
  CHECK(b.dim == 2);
  CHECK(b.cell_volume() == doctest::Approx(std::sqrt(3.0) / 2));
  CHECK(b.offsets_within(1.0).size() == 6);
  CHECK(b.offsets_within(std::sqrt(3.0)).size() == 12);
  const auto radii = b.shell_radii(3);
  REQUIRE(radii.size() == 3);
  CHECK(radii[0] == doctest::Approx(1.0));
  CHECK(radii[1] == doctest::Approx(std::sqrt(3.0)));
  CHECK(radii[2] == doctest::Approx(2.0));
}

TEST_CASE("chain basis") {
  const auto b = BravaisBasis::chain(0.5);
  CHECK(b.dim == 1);
  CHECK(b.offsets_within(1.0).size() == 4);
  const auto sites = build_disc_domain(b, 3.0);
  CHECK(sites.size() == 13);
}

TEST_CASE("disc domain is ordered by radius") {
  const auto sites = build_disc_domain(BravaisBasis::hexagonal(1.0), 5.0);
  REQUIRE(!sites.empty());
  CHECK(sites.front().n == LatticeCoord{0, 0});
  for (std::size_t k = 1; k < sites.size(); ++k) CHECK(sites[k].x.norm() >= sites[k - 1].x.norm() - 1e-12);
  for (const auto& s : sites) CHECK(s.x.norm() <= 5.0 + 1e-9);
}

TEST_CASE("decomposition index sets") {
  const auto m = morse_model();
  const auto d = disc(m, 15, 5);
  auto as_set = [](const IndexSet& s) { return std::set<int>(s.begin(), s.end()); };
  const auto l = as_set(d.l);

  CHECK(set_union(d.a, d.c) == d.l);
  CHECK(set_difference(d.a, d.c) == d.a);
  for (int id : d.p) CHECK(set_contains(d.c, id));
  for (int id : d.i) CHECK(set_contains(d.a, id));
  for (int id : d.ip) CHECK(set_contains(d.c, id));
  for (int id : d.o) CHECK(!l.count(id));
  for (int id : d.op) {
    CHECK(!l.count(id));
    CHECK(!set_contains(d.o, id));
  }
  for (int id : d.a) CHECK(d.sites[id].x.norm() <= 5 * m.basis.ell + 1e-9);
  // The pad covers the atomistic interaction range.
  for (int id : d.a)
    for (const auto& rho : m.neighbours) {
      const int t = d.find(d.sites[id].n + rho);
      REQUIRE(t >= 0);
      CHECK((set_contains(d.a, t) || set_contains(d.p, t)));
    }
  CHECK(d.find({1000, 0}) == -1);
  for (std::size_t k = 0; k < d.size(); ++k) CHECK(d.find(d.sites[k].n) == static_cast<int>(k));
}

TEST_CASE("debug csv") {
  const auto d = disc(morse_model(), 8, 3);
  std::ostringstream os;
  d.write_csv(os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "id,x,y,set_memberships");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == static_cast<int>(d.size()));
  CHECK(os.str().find('\r') == std::string::npos);
  CHECK((d.membership(d.find({0, 0})) & kInA) != 0);
  CHECK((d.membership(d.p.front()) & kInP) != 0);
  CHECK((d.membership(d.o.front()) & kInO) != 0);
}

TEST_CASE("defect removal") {
  const auto d0 = disc(morse_model(), 10, 4);
  const auto pattern = microcrack_pattern();
  CHECK(pattern.vacancies.size() == 8);
  const auto d = remove_defect_atoms(d0, pattern);
  CHECK(d.active_a().size() + pattern.vacancies.size() == d0.active_a().size());
  for (const auto& n : pattern.vacancies) {
    const int id = d.find(n);
    REQUIRE(id >= 0);
    CHECK(!d.active[id]);
    CHECK((d.membership(id) & kInactive) != 0);
  }
  const auto row = microcrack_defect(5, 1);
  CHECK(row.vacancies.size() == 5);
}

TEST_CASE("set helpers") {
  const IndexSet x{1, 3, 5}, y{2, 3, 6};
  CHECK(set_union(x, y) == IndexSet{1, 2, 3, 5, 6});
  CHECK(set_difference(x, y) == IndexSet{1, 5});
  CHECK(set_contains(x, 5));
  CHECK(!set_contains(x, 4));
  CHECK(pack_coord({1, 2}) != pack_coord({2, 1}));
}
