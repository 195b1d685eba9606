#pragma once

#include <string>

#include <json.hpp>

namespace iwm::oracle {

// Named verification suites over freshly generated random instances:
//   "mi"             data-processing inequality at every enumerated node
//   "sufficiency"    history expectimax == belief expectimax
//   "elbo"           enumerated ELBO bounded by the exact log-likelihood
//   "markov-blanket" the o'-factorization identity at every node
// The report carries per-instance numbers and an overall pass flag.
nlohmann::json run_suite(const std::string& name, std::size_t count, std::uint64_t seed);

}  // namespace iwm::oracle
