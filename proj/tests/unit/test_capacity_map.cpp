#include "doctest.h"

#include <random>

#include "cryomap/archive.hpp"
#include "cryomap/capacity_map.hpp"
#include "cryomap/error.hpp"
#include "support.hpp"

using namespace cryomap;
using cryomap::testing::coarse_map;
using cryomap::testing::factorial;
using cryomap::testing::rel_diff;

namespace {

// Affine in every load, so multilinear interpolation reproduces it exactly.
PlatformState affine(const LoadVector& q) {
  PlatformState s;
  s.set_temperature(StageId::PT1, 30 + 1.0 * q[StageId::PT1] + 0.5 * q[StageId::PT2]);
  s.set_temperature(StageId::PT2, 3 + 0.2 * q[StageId::PT1] + 1.0 * q[StageId::PT2]);
  s.set_temperature(StageId::STL, 0.7 + 4.0 * q[StageId::STL]);
  s.set_temperature(StageId::CLD, 0.08 + 7.0 * q[StageId::CLD]);
  s.set_temperature(StageId::MXC, 0.007 + 100.0 * q[StageId::MXC]);
  return s;
}

const std::array<std::vector<double>, kStageCount> kAxes{
    {{0, 1, 3}, {0, 0.5, 2}, {0, 0.01, 0.05}, {0}, {0, 1e-5, 4e-5}}};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

}  // namespace

TEST_SUITE("capacity_map") {
  TEST_CASE("nodes return their records exactly") {
    auto d = factorial(kAxes, affine);
    auto m = CapacityMap::build(d);
    for (const auto& r : d.records) {
      auto res = m.query(r.applied);
      CHECK(res.containment == Containment::NodeExact);
      for (StageId s : kStages) CHECK(res.state.temperature(s) == r.state.temperature(s));
    }
  }

  TEST_CASE("affine data is reproduced between nodes") {
    auto m = CapacityMap::build(factorial(kAxes, affine));
    LoadVector q({2.2, 0.7, 0.03, 0, 2.5e-5});
    auto res = m.query(q);
    CHECK(res.containment == Containment::Interior);
    auto expect = affine(q);
    for (StageId s : kStages) CHECK(rel_diff(res.state.temperature(s), expect.temperature(s)) < 1e-12);
  }

  TEST_CASE("cell midpoint is the corner mean") {
    const auto& m = coarse_map();
    NodeIndex lower{1, 0, 2, 1, 0};
    std::array<double, kStageCount> mid;
    mid.fill(0.5);
    auto st = m.evaluate_cell(lower, mid);
    const auto& active = m.grid().active_stages();
    std::array<double, kFieldCount> mean{};
    const std::size_t corners = std::size_t{1} << active.size();
    for (std::size_t c = 0; c < corners; ++c) {
      NodeIndex n = lower;
      for (std::size_t a = 0; a < active.size(); ++a) n[index(active[a])] += (c >> a) & 1u;
      const auto& s = m.node_state(*m.grid().record_at(n));
      for (std::size_t f = 0; f < kFieldCount; ++f) mean[f] += s.values[f] / static_cast<double>(corners);
    }
    for (std::size_t f = 0; f < kFieldCount; ++f) CHECK(rel_diff(st.values[f], mean[f]) < 1e-12);
  }

  TEST_CASE("query classification and domain errors") {
    auto m = CapacityMap::build(factorial(kAxes, affine));
    CHECK(m.query(LoadVector({0.5, 0, 0, 0, 0})).containment == Containment::OnFace);
    try {
      m.query(LoadVector({3.5, 0, 0, 0, 0}));
      FAIL("expected OutOfDomain");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::OutOfDomain);
      REQUIRE(e.stage().has_value());
      CHECK(*e.stage() == StageId::PT1);
    }
    CHECK(code_of([&] { m.query(LoadVector({0, 0, 0, 1e-3, 0})); }) == ErrorCode::CollapsedAxisMismatch);

    auto holed = factorial(kAxes, affine);
    holed.records.erase(std::find_if(holed.records.begin(), holed.records.end(), [](const auto& r) {
      return r.applied == LoadVector({1, 0.5, 0.01, 0, 1e-5});
    }));
    auto h = CapacityMap::build(holed);
    // The removed node is a corner of every cell.
    CHECK(h.grid().valid_cell_count() == 0);
    CHECK(code_of([&] { h.query(LoadVector({2, 1, 0.03, 0, 2e-5})); }) == ErrorCode::InvalidCell);
    CHECK(h.query(LoadVector({3, 2, 0.05, 0, 4e-5})).containment == Containment::NodeExact);
  }

  TEST_CASE("build errors") {
    Dataset empty;
    CHECK(code_of([&] { CapacityMap::build(empty); }) == ErrorCode::EmptyDataset);
    auto d = factorial(kAxes, affine);
    d.records[3].state.set_temperature(StageId::MXC, -1.0);
    CHECK(code_of([&] { CapacityMap::build(d); }) == ErrorCode::BadDocument);
  }

  TEST_CASE("slices") {
    auto m = CapacityMap::build(factorial(kAxes, affine));
    SliceSpec s;
    s.x = StageId::PT2;
    s.y = StageId::PT1;
    s.field = Field::T_PT1;
    auto t = slice(m, s);
    CHECK(t.xs == kAxes[1]);
    CHECK(t.ys == kAxes[0]);
    CHECK(t.gap_count() == 0);
    CHECK(*t.at(2, 1) == affine(LoadVector({1, 2, 0, 0, 0})).temperature(StageId::PT1));
    auto csv = slice_to_csv(t);
    CHECK(csv.rfind("x_W,y_W,value\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);

    s.y = StageId::PT2;
    CHECK_THROWS_AS(slice(m, s), Error);
    s.y = StageId::CLD;
    CHECK_THROWS_AS(slice(m, s), Error);
  }

  TEST_CASE("cooling power on an affine profile") {
    auto m = CapacityMap::build(factorial(kAxes, affine));
    // T_STL = 0.7 + 4 q, so 0.78 K sits at 20 mW.
    CHECK(std::abs(cooling_power_at(m, StageId::STL, 0.78, LoadVector{}) - 0.02) <= 1e-6);
    CHECK(cooling_power_at(m, StageId::STL, 0.74, LoadVector{}) == 0.01);
    CHECK(code_of([&] { cooling_power_at(m, StageId::STL, 2.0, LoadVector{}); }) == ErrorCode::NotBracketed);
  }

  TEST_CASE("diffs") {
    const auto& m = coarse_map();
    auto self = diff_maps(m, m);
    CHECK(self.nodes.size() == m.grid().node_count());
    for (const auto& n : self.nodes) {
      for (Field f : kFields) {
        if (m.has_field(f)) CHECK(n.delta[index(f)] == 0.0);
      }
    }

    Dataset bumped = m.dataset();
    for (auto& r : bumped.records) r.state[Field::T_MXC] *= 1.02;
    auto d = diff_maps(m, CapacityMap::build(bumped));
    CHECK(d.mean_pct[index(Field::T_MXC)] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(d.mean_pct[index(Field::T_STL)] == 0.0);
    auto csv = diff_to_csv(d);
    CHECK(csv.find("pct_t_mxc") != std::string::npos);

    auto other = CapacityMap::build(factorial(kAxes, affine));
    auto shared = diff_maps(other, other);
    CHECK(shared.nodes.size() == 81);
  }

  TEST_CASE("archive round trip") {
    const auto& m = coarse_map();
    auto text = archive_to_string(m);
    auto back = archive_from_string(text);
    CHECK(back.grid().node_count() == m.grid().node_count());
    CHECK(archive_to_string(back) == text);
    LoadVector q({2.5, 1.0, 0.04, 0.002, 3e-5});
    CHECK(back.query(q).state.values == m.query(q).state.values);

    auto tampered = text;
    auto pos = tampered.find("0.7");
    REQUIRE(pos != std::string::npos);
    tampered[pos + 2] = '9';
    CHECK(code_of([&] { archive_from_string(tampered); }) == ErrorCode::BadDocument);
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }
}

TEST_SUITE("inverse") {
  TEST_CASE("recovers an interior point of an affine map") {
    auto m = CapacityMap::build(factorial(kAxes, affine));
    LoadVector q({1.7, 1.1, 0.02, 0, 3e-5});
    auto obs = m.query(q).state;
    std::map<StageId, double> t;
    for (StageId s : kStages) t[s] = obs.temperature(s);
    auto r = infer_load(m, t, {}, 4);
    for (StageId s : {StageId::PT1, StageId::PT2, StageId::STL, StageId::MXC}) {
      CHECK(rel_diff(r.q[s], q[s]) < 1e-6);
    }
    CHECK(r.residual < 1e-9);
  }

  TEST_CASE("an unobservable stage makes the answer non-unique") {
    auto m = CapacityMap::build(factorial(kAxes, affine));
    std::map<StageId, double> t{{StageId::PT1, 31.0}, {StageId::PT2, 3.7}};
    auto r = infer_load(m, t, {}, 16);
    CHECK(r.residual < 1e-8);
    CHECK(r.non_unique);
    CHECK_FALSE(r.alternatives.empty());
  }

  TEST_CASE("input errors") {
    auto m = CapacityMap::build(factorial(kAxes, affine));
    CHECK(code_of([&] { infer_load(m, std::map<StageId, double>{}, {}, 4); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { infer_load(m, {{StageId::PT1, 500.0}}, {}, 4); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { infer_load(m, std::map<Field, double>{{Field::FLOW, 1e-4}}); }) ==
          ErrorCode::InvalidArgument);
  }

  TEST_CASE("a map without a full valid cell has no start") {
    Dataset d = factorial({{{0, 1}, {0, 1}, {0}, {0}, {0}}}, affine);
    d.records.pop_back();
    finalize_dataset(d);
    auto m = CapacityMap::build(d);
    CHECK(m.grid().valid_cell_count() == 0);
    CHECK(code_of([&] { infer_load(m, {{StageId::PT1, 30.5}}, {}, 4); }) == ErrorCode::NoValidStart);
  }
}
