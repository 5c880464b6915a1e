#ifndef NLSLAB_TEST_SUPPORT_HPP
#define NLSLAB_TEST_SUPPORT_HPP

#include "nlslab/groundstate.hpp"

namespace fixtures {

struct FamilyFixture {
  nlslab::ProfileFamily family;
};

// Built once per test binary.
inline FamilyFixture& cubic_d1() {
  static FamilyFixture f{nlslab::ProfileFamily::build(nlslab::NonlinearityModel(1.0), 1.0, 1)};
  return f;
}

inline FamilyFixture& cubic_d3() {
  static FamilyFixture f{nlslab::ProfileFamily::build(nlslab::NonlinearityModel(1.0), 1.0, 3)};
  return f;
}

inline FamilyFixture& half_d3() {
  static FamilyFixture f{nlslab::ProfileFamily::build(nlslab::NonlinearityModel(0.5), 1.0, 3)};
  return f;
}

}  // namespace fixtures

#endif
