#include "doctest.h"

#include "cryomap/error.hpp"
#include "cryomap/payload.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace cryomap;
using cryomap::testing::rel_diff;

namespace {

std::shared_ptr<const MaterialCurve> table(std::vector<double> T, std::vector<double> k) {
  auto c = std::make_shared<MaterialCurve>();
  c->name = "test";
  c->T = std::move(T);
  c->k = std::move(k);
  c->validate();
  return c;
}

const PayloadLibrary& lib() {
  static const PayloadLibrary l = load_library(default_data_dir());
  return l;
}

const std::map<StageId, double> kBase{{StageId::PT1, 32.0},
                                      {StageId::PT2, 2.7},
                                      {StageId::STL, 0.72},
                                      {StageId::CLD, 0.085},
                                      {StageId::MXC, 0.0073}};

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

TEST_SUITE("material") {
  TEST_CASE("conductivity interpolation rules") {
    auto c = table({1, 10}, {1, 10});
    CHECK(conductivity(*c, 0.5) == 0.5);
    CHECK(conductivity(*c, 10) == 10);
    CHECK(conductivity(*c, 1) == 1);
    CHECK(code_of([&] { conductivity(*c, 11); }) == ErrorCode::OutOfDomain);
    CHECK(code_of([&] { conductivity(*c, 0); }) == ErrorCode::InvalidArgument);

    auto steep = table({1, 2}, {1, 3});  // line crosses zero at 0.5 K
    CHECK(conductivity(*steep, 0.5) == 0.0);
    CHECK(conductivity(*steep, 0.25) == 0.0);
    CHECK(conductivity(*steep, 0.75) == doctest::Approx(0.5).epsilon(1e-15));

    const auto& ss = *lib().materials.at("ss304");
    std::size_t j = std::upper_bound(ss.T.begin(), ss.T.end(), 4.2) - ss.T.begin();
    double hand = ss.k[j - 1] * std::pow(ss.k[j] / ss.k[j - 1],
                                         std::log(4.2 / ss.T[j - 1]) / std::log(ss.T[j] / ss.T[j - 1]));
    CHECK(rel_diff(conductivity(ss, 4.2), hand) < 1e-9);
    CHECK(conductivity(ss, 4.0) == 0.272396);
  }

  TEST_CASE("malformed tables are rejected") {
    CHECK_THROWS_AS(table({1, 1}, {1, 2}), Error);
    CHECK_THROWS_AS(table({1, 2}, {1, -1}), Error);
    CHECK_THROWS_AS(table({1}, {1}), Error);
    CHECK_THROWS_AS(parse_material_curve("# name: x\nT_K,k_W_mK\n1,abc\n2,3\n"), Error);
  }

  TEST_CASE("analytic integrals") {
    auto flat = table({1, 400}, {1, 1});
    ConductorLink link{flat, 1e-6, 0.1, StageId::AMBIENT, StageId::PT1};
    const double tc = 1e-12;
    CHECK(rel_diff(conduction_load(link, 300, tc), 1e-5 * (300 - tc)) < 1e-12);

    auto linear = table({1, 100}, {1, 100});
    ConductorLink l2{linear, 1e-5, 1.0, StageId::PT1, StageId::PT2};
    CHECK(rel_diff(conduction_load(l2, 40, 4), 7.92e-3) < 1e-9);
  }

  TEST_CASE("shipped curves agree with a trapezoid oracle") {
    for (const auto& [name, c] : lib().materials) {
      CAPTURE(name);
      for (auto [a, b] : std::vector<std::pair<double, double>>{
               {c->t_min(), c->t_max()}, {32.0, 295.0}, {2.7, 32.0}, {0.0073, 0.72}, {0.72, 2.7}}) {
        CAPTURE(a);
        double oracle = cryomap::testing::oracle_integral(c->T, c->k, a, b);
        CHECK(rel_diff(conductivity_integral(*c, a, b), oracle) < 1e-6);
      }
    }
  }

  TEST_CASE("monotonicity, scaling and additivity") {
    auto c = lib().materials.at("cuni");
    ConductorLink link{c, 2e-7, 0.2, StageId::PT1, StageId::PT2};
    double q = conduction_load(link, 40, 3);
    CHECK(conduction_load(link, 41, 3) > q);
    CHECK(conduction_load(link, 40, 3.5) < q);
    auto twice_area = link;
    twice_area.area_m2 *= 2;
    CHECK(conduction_load(twice_area, 40, 3) == 2 * q);
    auto twice_length = link;
    twice_length.length_m *= 2;
    CHECK(conduction_load(twice_length, 40, 3) == 0.5 * q);
    double split = conductivity_integral(*c, 3, 11) + conductivity_integral(*c, 11, 40);
    CHECK(rel_diff(split, conductivity_integral(*c, 3, 40)) < 1e-9);
    CHECK(code_of([&] { conduction_load(link, 3, 40); }) == ErrorCode::InvalidArgument);
  }
}

TEST_SUITE("payload") {
  TEST_CASE("cable decomposition") {
    const auto& ss = lib().cables.at("SC219SS");
    SpanSegment seg{StageId::AMBIENT, StageId::PT1, 0.134};
    auto links = decompose_cable(ss, seg, CurveSource::MaterialReference);
    REQUIRE(links.size() == 3);
    double sum = 0;
    for (const auto& l : links) sum += conduction_load(l, 295, 32);
    auto m = decompose_cable(ss, seg, CurveSource::Manufacturer);
    CHECK(m.size() == 1);

    PayloadSpec p;
    CableRun run{ss, {StageId::AMBIENT, StageId::PT1}, {0.134}, 1};
    p.runs.push_back(run);
    CHECK(aggregate_loads(p, kBase)[StageId::PT1] == sum);

    auto bare = ss;
    bare.manufacturer.reset();
    CHECK(code_of([&] { decompose_cable(bare, seg, CurveSource::Manufacturer); }) ==
          ErrorCode::MissingSourceData);
  }

  TEST_CASE("aggregation deposits on cold endpoints") {
    CHECK(aggregate_loads(PayloadSpec{}, kBase).is_zero());

    const auto& cn = lib().cables.at("SC219CN");
    PayloadSpec p;
    p.runs.push_back({cn, {StageId::AMBIENT, StageId::PT1, StageId::PT2}, {0.2, 0.2}, 3});
    auto q = aggregate_loads(p, kBase);
    auto per = [&](StageId h, StageId c, double th, double tc) {
      double s = 0;
      for (const auto& l : decompose_cable(cn, {h, c, 0.2}, CurveSource::MaterialReference))
        s += conduction_load(l, th, tc);
      return 3 * s;
    };
    CHECK(rel_diff(q[StageId::PT1], per(StageId::AMBIENT, StageId::PT1, 295, 32)) < 1e-15);
    CHECK(rel_diff(q[StageId::PT2], per(StageId::PT1, StageId::PT2, 32, 2.7)) < 1e-15);
    CHECK(q[StageId::STL] == 0.0);

    p.runs[0].coupling = Coupling::ContinuousSpan;
    auto cont = aggregate_loads(p, kBase);
    CHECK(cont[StageId::PT1] == 0.0);
    CHECK(cont[StageId::PT2] > 0.0);

    p.active_loads.set(StageId::MXC, 1e-6);
    CHECK(aggregate_loads(p, kBase)[StageId::MXC] == 1e-6);

    auto partial = kBase;
    partial.erase(StageId::PT2);
    CHECK(code_of([&] { aggregate_loads(p, partial); }) == ErrorCode::MissingTemperature);
    CHECK(code_of([&] { aggregate_loads(p, kBase, 20.0); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("validation rejects inconsistent runs") {
    const auto& cn = lib().cables.at("SC219CN");
    PayloadSpec p;
    p.runs.push_back({cn, {StageId::PT2, StageId::PT1}, {0.2}, 1});
    CHECK(code_of([&] { validate_payload(p); }) == ErrorCode::InconsistentCoupling);
    p.runs[0] = {cn, {StageId::PT1, StageId::PT2}, {0.2, 0.1}, 1};
    CHECK(code_of([&] { validate_payload(p); }) == ErrorCode::InconsistentCoupling);
    p.runs[0] = {cn, {StageId::PT1, StageId::PT2}, {0.2}, 0};
    CHECK(code_of([&] { validate_payload(p); }) == ErrorCode::InconsistentCoupling);
  }

  TEST_CASE("source comparison") {
    auto cable = lib().cables.at("SC219SS");
    std::vector<SpanSegment> spans{{StageId::AMBIENT, StageId::PT1, 0.134}, {StageId::PT1, StageId::PT2, 0.201}};
    auto rows = compare_sources(cable, spans, kBase);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) CHECK(r.material_W > r.manufacturer_W);

    CableModel same;
    same.name = "same";
    auto curve = lib().materials.at("ss304");
    same.elements = {{"outer", curve, 1e-6}};
    same.manufacturer = CableElement{"whole", curve, 1e-6};
    for (const auto& r : compare_sources(same, spans, kBase)) CHECK(r.material_W == r.manufacturer_W);
  }

  TEST_CASE("shipped validation payload") {
    auto p = load_payload(default_data_dir() / "payloads" / "validation.payload", lib());
    CHECK(p.runs.size() == 3);
    auto q = aggregate_loads(p, kBase);
    CHECK(q[StageId::PT1] >= 1.99);
    CHECK(q[StageId::PT1] <= 4.45);
    auto m = load_payload(default_data_dir() / "payloads" / "validation_manufacturer.payload", lib());
    CHECK(aggregate_loads(m, kBase)[StageId::PT1] < q[StageId::PT1]);
  }
}
