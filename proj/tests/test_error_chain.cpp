#include <doctest.h>

#include <fstream>

#include "support.hpp"
#include "thermo/error_chain.hpp"
#include "thermo/text.hpp"

using namespace thermo;
using namespace thermo::chain;

namespace {

StructuralElement element(const std::string& name, Axis axis, double length, double alpha,
                          std::vector<std::string> nodes) {
  StructuralElement e;
  e.name = name;
  e.axis = axis;
  e.length = length;
  e.alpha = alpha;
  e.nodes = std::move(nodes);
  return e;
}

Chain random_chain(Rng& rng, const std::vector<std::string>& ids) {
  Chain c;
  const int n = static_cast<int>(rng.integer(1, 6));
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> nodes;
    const int k = static_cast<int>(rng.integer(1, 3));
    for (int j = 0; j < k; ++j) nodes.push_back(ids[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(ids.size()) - 1))]);
    auto e = element("e" + std::to_string(i), static_cast<Axis>(rng.integer(0, 2)), rng.uniform(0.1, 2.0),
                     rng.uniform(5e-6, 25e-6), nodes);
    e.in_chain = rng.bernoulli(0.8);
    c.elements.push_back(e);
  }
  c.pairs.push_back({"p", "e0", c.elements.back().name, rng.uniform(0.2, 1.0)});
  return c;
}

std::vector<std::string> labels(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("n" + std::to_string(i));
  return ids;
}

}  // namespace

TEST_SUITE("error_chain") {

TEST_CASE("strain and stress products") {
  CHECK(thermal_strain(12e-6, 0.0) == 0.0);
  CHECK(thermal_stress(200e9, 12e-6, 0.0) == 0.0);
  CHECK(thermal_strain(12e-6, 10.0) == doctest::Approx(1.2e-4).epsilon(1e-14));
  CHECK(thermal_stress(200e9, 12e-6, 10.0) == doctest::Approx(24e6).epsilon(1e-14));
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const double e = rng.uniform(50e9, 250e9), a = rng.uniform(1e-6, 30e-6), dt = rng.uniform(-50, 50);
    CHECK(thermal_stress(e, a, dt) == doctest::Approx(e * thermal_strain(a, dt)).epsilon(1e-14));
  }
}

TEST_CASE("axis position formula") {
  auto e = element("x", Axis::X, 1.0, 10e-6, {"a"});
  CHECK(axis_position(e, kReferenceTemp) == -1.0);
  CHECK(axis_position(e, kReferenceTemp + 5.0) == doctest::Approx(-1.00005).epsilon(1e-14));
  auto with_u = e;
  with_u.alpha_uncertainty = 2e-6;
  for (double dt : {-3.0, 1.0, 5.0}) {
    const double diff = axis_position(with_u, kReferenceTemp + dt) - axis_position(e, kReferenceTemp + dt);
    CHECK(diff == doctest::Approx(-1.0 * 2e-6 * dt).epsilon(1e-9));
  }
  e.geometric_error = 3e-6;
  CHECK(axis_position(e, kReferenceTemp) == doctest::Approx(-1.0 + 3e-6).epsilon(1e-15));
}

TEST_CASE("single element drift") {
  Chain c;
  c.elements.push_back(element("s", Axis::Z, 0.5, 11e-6, {"a", "b"}));
  const std::vector<double> t{kReferenceTemp + 4.0, kReferenceTemp + 4.0};
  const auto d = tcp_drift(c, {"a", "b"}, t);
  CHECK(d.drift[2] == doctest::Approx(22e-6).epsilon(1e-12));
  CHECK(d.drift[0] == 0.0);
  CHECK(d.drift[1] == 0.0);
  const std::vector<double> ref{kReferenceTemp, kReferenceTemp};
  CHECK(tcp_drift(c, {"a", "b"}, ref).drift == AxisVector{0, 0, 0});
}

TEST_CASE("series elements add") {
  Chain a, b, both;
  a.elements.push_back(element("a", Axis::Z, 0.7, 12e-6, {"n0"}));
  b.elements.push_back(element("b", Axis::Z, 0.4, 10e-6, {"n1", "n2"}));
  both.elements = {a.elements[0], b.elements[0]};
  Rng rng(2);
  const auto ids = labels(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> t(3);
    for (auto& v : t) v = rng.uniform(280, 330);
    CHECK(tcp_drift(both, ids, t).drift[2] ==
          doctest::Approx(tcp_drift(a, ids, t).drift[2] + tcp_drift(b, ids, t).drift[2]).epsilon(1e-13));
  }
}

TEST_CASE("offset negates the drift and cancels it") {
  DriftEstimate d;
  d.drift = {22e-6, 0.0, -5e-6};
  CHECK(compensation_offset(d) == AxisVector{-22e-6, 0.0, 5e-6});
  CHECK(compensation_offset(DriftEstimate{}) == AxisVector{0, 0, 0});

  Rng rng(3);
  const auto ids = labels(6);
  for (int trial = 0; trial < 30; ++trial) {
    const auto c = random_chain(rng, ids);
    std::vector<double> t(6);
    for (auto& v : t) v = rng.uniform(280, 330);
    const auto drift = tcp_drift(c, ids, t);
    CHECK(residual(drift, compensation_offset(drift)) == AxisVector{0, 0, 0});
  }
}

TEST_CASE("drift is linear in the temperature rise") {
  Rng rng(4);
  const auto ids = labels(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_chain(rng, ids);
    std::vector<double> d1(5), d2(5), mix(5), t1(5), t2(5);
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    for (std::size_t i = 0; i < 5; ++i) {
      d1[i] = rng.uniform(-20, 20);
      d2[i] = rng.uniform(-20, 20);
      t1[i] = kReferenceTemp + d1[i];
      t2[i] = kReferenceTemp + d2[i];
      mix[i] = kReferenceTemp + a * d1[i] + b * d2[i];
    }
    const auto r1 = tcp_drift(c, ids, t1), r2 = tcp_drift(c, ids, t2), rm = tcp_drift(c, ids, mix);
    for (std::size_t ax = 0; ax < 3; ++ax) {
      const double expect = a * r1.drift[ax] + b * r2.drift[ax];
      CHECK(std::abs(rm.drift[ax] - expect) <= 1e-12 * (1.0 + std::abs(expect)) + 1e-17);
    }
  }
}

TEST_CASE("drift changes by at most the Lipschitz bound") {
  Rng rng(5);
  const auto ids = labels(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_chain(rng, ids);
    const auto bound = lipschitz_bound(c);
    std::vector<double> t(5), u(5);
    double worst = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      t[i] = rng.uniform(280, 330);
      u[i] = t[i] + rng.uniform(-3, 3);
      worst = std::max(worst, std::abs(u[i] - t[i]));
    }
    const auto a = tcp_drift(c, ids, t), b = tcp_drift(c, ids, u);
    for (std::size_t ax = 0; ax < 3; ++ax) CHECK(std::abs(a.drift[ax] - b.drift[ax]) <= bound[ax] * worst * (1 + 1e-12));
  }
}

TEST_CASE("orientation from differential expansion") {
  Chain c;
  c.elements.push_back(element("top", Axis::Z, 0.9, 10e-6, {"a"}));
  c.elements.push_back(element("bottom", Axis::Z, 0.9, 10e-6, {"b"}));
  c.elements[0].in_chain = c.elements[1].in_chain = false;
  c.pairs.push_back({"pitch", "top", "bottom", 0.5});
  const std::vector<double> t{kReferenceTemp + 2.0, kReferenceTemp};
  const auto d = tcp_drift(c, {"a", "b"}, t);
  CHECK(d.drift == AxisVector{0, 0, 0});
  REQUIRE(d.orientation.size() == 1);
  CHECK(d.orientation[0] == doctest::Approx(0.9 * 10e-6 * 2.0 / 0.5).epsilon(1e-13));
}

TEST_CASE("unmapped nodes and malformed chains") {
  Chain c;
  c.elements.push_back(element("s", Axis::X, 1.0, 1e-5, {"ghost"}));
  const std::vector<double> t{300.0};
  CHECK(testing::error_kind([&] { tcp_drift(c, {"a"}, t); }) == ErrorKind::UnmappedNode);
  CHECK(testing::error_kind([&] { tcp_drift(c, {"a", "b"}, t); }) == ErrorKind::DimensionMismatch);

  try {
    parse_chain("element a axis=X length=1 alpha=1e-5 nodes=n\nelement b axis=Q length=1 alpha=1e-5 nodes=n\n", "c.cfg");
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
    CHECK(std::string(e.what()).find("c.cfg:2") != std::string::npos);
  }
  CHECK(testing::error_kind([] { parse_chain("element a axis=X length=-1 alpha=1e-5 nodes=n\n", "c"); }) ==
        ErrorKind::ConfigError);
  CHECK(testing::error_kind([] {
          parse_chain("element a axis=X length=1 alpha=1e-5 nodes=n\npair p top=a bottom=zz separation=1\n", "c");
        }) == ErrorKind::ConfigError);
  CHECK(testing::error_kind([] { parse_chain("# nothing\n", "c"); }) == ErrorKind::ConfigError);
}

TEST_CASE("shipped chain maps onto the simulated sensors") {
  const auto c = load_chain(std::string(THERMO_SOURCE_DIR) + "/configs/chain.cfg");
  CHECK(c.elements.size() == 8);
  CHECK(c.pairs.size() == 1);
  CHECK(!c.element("front").in_chain);
  CHECK(c.element("bed_x").alpha_uncertainty == 0.5e-6);
}

TEST_CASE("compensation csv columns") {
  testing::TempDir dir("comp");
  Chain c;
  c.elements.push_back(element("s", Axis::Y, 0.5, 11e-6, {"a"}));
  c.elements.push_back(element("t", Axis::Y, 0.5, 11e-6, {"b"}));
  c.pairs.push_back({"roll", "s", "t", 1.0});
  std::vector<double> ts(12);
  Matrix m(12, 2, kReferenceTemp + 4.0);
  for (std::size_t i = 0; i < 12; ++i) ts[i] = static_cast<double>(i);
  write_compensation_csv(c, dataset::NodeTimeSeries("RUN1", dataset::Quantity::Temperature, ts, m, {"a", "b"}),
                         dir / "comp.csv");
  std::ifstream in(dir / "comp.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "time,drift_x,drift_y,drift_z,offset_x,offset_y,offset_z,tilt_roll");
  const auto f = text::split(first, ',');
  REQUIRE(f.size() == 8);
  CHECK(std::stod(std::string(f[2])) == doctest::Approx(44e-6).epsilon(1e-12));
  CHECK(std::stod(std::string(f[5])) == doctest::Approx(-44e-6).epsilon(1e-12));
  CHECK(std::stod(std::string(f[7])) == 0.0);
}

}  // TEST_SUITE
