#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "gmswarm/error.hpp"
#include "gmswarm/lut.hpp"
#include "support/oracles.hpp"

using namespace gmswarm;
namespace gt = gmswarm::testing;

namespace {

const char* kHeader = "L_um,gmid,jd_uA_per_um,gm_gds,gm_cgg_hz,vgs_v,vdssat_v\n";

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::io_error;
}

DeviceLut two_point_lut() {
  return parse_lut(std::string(kHeader) +
                   "0.3,10,1.0,50,1e9,0.6,0.2\n"
                   "0.3,12,2.0,40,3e9,0.5,0.1\n");
}

}  // namespace

TEST_CASE("load_lut parses a single-length table") {
  auto lut = parse_lut(std::string(kHeader) +
                       "# comment\n"
                       "0.3,12,4.0,40,1e9,0.5,0.1\n"
                       "0.3,10,5.0,50,2e9,0.6,0.2\n");
  REQUIRE(lut.lengths() == std::vector<double>{0.3});
  CHECK(lut.slice(0.3).gmid == std::vector<double>{10, 12});
  CHECK(lut.lookup(LutColumn::current_density, 10, 0.3) == 5.0);
}

TEST_CASE("load_lut schema errors") {
  CHECK(code_of([] { parse_lut("L_um,gmid,gm_gds,gm_cgg_hz,vgs_v,vdssat_v\n0.3,10,1,1,1,1\n"); }) ==
        Errc::missing_column);
  CHECK(code_of([] {
          parse_lut(std::string(kHeader) + "0.3,10,1,1,1,1,1\n0.3,10,2,1,1,1,1\n");
        }) == Errc::non_monotonic_axis);
  CHECK(code_of([] { parse_lut(std::string(kHeader) + "0.3,10,1,1,1,1,1\n"); }) ==
        Errc::empty_length);
  CHECK(code_of([] { parse_lut(std::string(kHeader) + "0.3,abc,1,1,1,1,1\n"); }) ==
        Errc::parse_error);
}

TEST_CASE("device kind comment") {
  auto lut = parse_lut(std::string("# device_kind=p_type\n") + kHeader +
                       "0.3,10,1,1,1,1,1\n0.3,11,1,1,1,1,1\n");
  CHECK(lut.kind() == DeviceKind::p_type);
}

TEST_CASE("lookup") {
  auto lut = two_point_lut();
  CHECK(lut.lookup(LutColumn::current_density, 11, 0.3) == doctest::Approx(1.5));
  CHECK(lut.lookup("jd_uA_per_um", 12, 0.3) == 2.0);
  CHECK(lut.lookup("current_density", 10, 0.3) == 1.0);
  CHECK(code_of([&] { lut.lookup(LutColumn::current_density, 11, 0.35); }) ==
        Errc::length_not_in_grid);
  CHECK(code_of([&] { lut.lookup(LutColumn::current_density, 9.99, 0.3); }) ==
        Errc::gmid_out_of_range);
  CHECK(code_of([&] { lut.lookup("bogus", 11, 0.3); }) == Errc::unknown_column);

  auto two = parse_lut(std::string(kHeader) +
                       "0.3,10,1,1,1,1,1\n0.3,11,1,1,1,1,1\n"
                       "0.4,10,1,1,1,1,1\n0.4,11,1,1,1,1,1\n");
  CHECK(code_of([&] { two.lookup(LutColumn::current_density, 10.5, 0.35); }) ==
        Errc::length_not_in_grid);
}

TEST_CASE("width_for_current") {
  auto lut = parse_lut(std::string(kHeader) + "0.3,10,10,1,1,1,1\n0.3,12,10,1,1,1,1\n");
  CHECK(lut.width_for_current(11, 0.3, 100) == doctest::Approx(10.0));
  CHECK(code_of([&] { lut.width_for_current(11, 0.3, 0); }) == Errc::non_positive_current);

  auto synth = gt::synthetic_luts().n_type;
  for (const auto& sl : synth.slices()) {
    for (double g : sl.gmid) {
      const double w = synth.width_for_current(g, sl.length_um, 7.5);
      const double expect = 7.5 / gt::model_jd(g, sl.length_um);
      CHECK(std::abs(w - expect) / expect < 1e-9);
    }
  }
}

TEST_CASE("width_for_current increases with current") {
  auto synth = gt::synthetic_luts().p_type;
  double prev = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double w = synth.width_for_current(13.1, 0.5, 0.1 * k);
    CHECK(w > prev);
    prev = w;
  }
}

TEST_CASE("generate_synthetic_lut") {
  auto lut = generate_synthetic_lut(DeviceKind::n_type, {0.3}, {5, 20}, 16);
  REQUIRE(lut.slices().size() == 1);
  CHECK(lut.slice(0.3).gmid.size() == 16);
  CHECK(lut.slice(0.3).gmid.front() == 5.0);
  CHECK(lut.slice(0.3).gmid.back() == 20.0);

  CHECK(code_of([] { generate_synthetic_lut(DeviceKind::n_type, {0.3}, {5, 20}, 1); }) ==
        Errc::invalid_range);
  CHECK(code_of([] { generate_synthetic_lut(DeviceKind::n_type, {0.3}, {20, 5}, 4); }) ==
        Errc::invalid_range);
  CHECK(code_of([] { generate_synthetic_lut(DeviceKind::n_type, {0.3}, {-1, 5}, 4); }) ==
        Errc::invalid_range);

  // model columns against the closed form
  auto full = gt::synthetic_luts().n_type;
  for (const auto& sl : full.slices()) {
    for (std::size_t k = 0; k < sl.gmid.size(); ++k) {
      const double g = sl.gmid[k];
      CHECK(sl.column(LutColumn::intrinsic_gain)[k] ==
            doctest::Approx(gt::model_gain(g, sl.length_um)).epsilon(1e-12));
      CHECK(sl.column(LutColumn::transit_figure)[k] ==
            doctest::Approx(gt::model_transit(g, sl.length_um)).epsilon(1e-12));
      CHECK(sl.column(LutColumn::gate_source_voltage)[k] ==
            doctest::Approx(1.0 - 0.035 * g).epsilon(1e-12));
      CHECK(sl.column(LutColumn::saturation_voltage)[k] == doctest::Approx(2.0 / g).epsilon(1e-12));
    }
  }
}

TEST_CASE("current density falls with gm/ID") {
  auto lut = gt::synthetic_luts().n_type;
  for (const auto& sl : lut.slices()) {
    const auto& jd = sl.column(LutColumn::current_density);
    for (std::size_t k = 1; k < jd.size(); ++k) CHECK(jd[k] < jd[k - 1]);
  }
}

TEST_CASE("write then load is the identity") {
  auto luts = gt::synthetic_luts();
  const auto dir = std::filesystem::temp_directory_path() / "gmswarm_test_lut";
  std::filesystem::create_directories(dir);
  write_lut(luts.p_type, dir / "p.csv");
  auto back = load_lut(dir / "p.csv");
  CHECK(back == luts.p_type);
  CHECK(parse_lut(format_lut(luts.n_type)) == luts.n_type);
  std::filesystem::remove_all(dir);
}

TEST_CASE("row order does not matter") {
  auto lut = gt::synthetic_luts().n_type;
  auto text = format_lut(lut);
  std::vector<std::string> lines;
  std::string header;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    if (line[0] == '#' || line[0] == 'L') {
      header += line + "\n";
    } else {
      lines.push_back(line);
    }
  }
  std::mt19937 rng(3);
  std::shuffle(lines.begin(), lines.end(), rng);
  std::string shuffled = header;
  for (auto& l : lines) shuffled += l + "\n";
  CHECK(parse_lut(shuffled) == lut);
}

TEST_CASE("exact hits and interpolation sandwich") {
  auto lut = gt::synthetic_luts().p_type;
  constexpr LutColumn cols[] = {LutColumn::current_density, LutColumn::intrinsic_gain,
                                LutColumn::transit_figure, LutColumn::gate_source_voltage,
                                LutColumn::saturation_voltage};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& sl : lut.slices()) {
    for (std::size_t k = 0; k < sl.gmid.size(); ++k) {
      for (auto c : cols) {
        CHECK(lut.lookup(c, sl.gmid[k], sl.length_um) == sl.column(c)[k]);
        if (k + 1 < sl.gmid.size()) {
          const double g = sl.gmid[k] + u(rng) * (sl.gmid[k + 1] - sl.gmid[k]);
          const double v = lut.lookup(c, g, sl.length_um);
          const double a = sl.column(c)[k], b = sl.column(c)[k + 1];
          CHECK(v >= std::min(a, b));
          CHECK(v <= std::max(a, b));
        }
      }
    }
  }
}

TEST_CASE("gm/ID from current density") {
  auto lut = gt::synthetic_luts().n_type;
  auto g = lut.gmid_for_current_density(0.3, gt::model_jd(12.0, 0.3));
  REQUIRE(g);
  CHECK(*g == doctest::Approx(12.0).epsilon(1e-9));
  CHECK_FALSE(lut.gmid_for_current_density(0.3, 1e6));
}
