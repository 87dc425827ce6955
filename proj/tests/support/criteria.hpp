#pragma once

// Checks shared by the property tests and the acceptance binary. Each returns
// whether the criterion holds plus a one-line detail.

#include <string>

namespace criteria {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome variation1();
Outcome variation2();
Outcome zitmo_table();
Outcome codec_properties(int trials = 1000);
Outcome reasoner_oracle(int programs = 200);
Outcome bag_numerics(int dags = 50, int monotone_cases = 1000, int sequences = 10000);
/// Same brute-force comparison restricted to singly connected graphs.
Outcome bag_polytrees(int graphs = 50);
Outcome defender_l3();
Outcome determinism();

} // namespace criteria
