#include <doctest.h>

#include <initializer_list>

#include "pinchsec/units.hpp"

using namespace pinchsec;

TEST_CASE("dBm conversion") {
  CHECK(dbm_to_watt(0.0) == doctest::Approx(1e-3).epsilon(1e-15));
  CHECK(dbm_to_watt(30.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(dbm_to_watt(-90.0) == doctest::Approx(1e-12).epsilon(1e-14));
  for (double d : {-40.0, -10.0, 0.0, 7.5, 20.0}) CHECK(watt_to_dbm(dbm_to_watt(d)) == doctest::Approx(d));
}
