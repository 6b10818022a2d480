// Composition of the stock algorithm registry: the two real toy providers
// (Module-LWE KEM, WOTS+Merkle signature) plus the size/cost-calibrated
// mocks for every benchmarked scheme and the classical control pair.
#pragma once

#include <memory>

#include "pqtls/crypto_suite.hpp"
#include "pqtls/hashsig.hpp"
#include "pqtls/mlkem.hpp"

namespace pqtls {

inline Registry make_default_registry() {
  Registry reg;
  reg.add_kem(std::make_shared<mlkem::MlkemProvider>());
  reg.add_sig(std::make_shared<hashsig::HashSigProvider>());
  for (const SchemeMetadata& m : default_mock_metadata()) {
    if (m.id.kind == AlgKind::kem)
      reg.add_kem(std::make_shared<MockKem>(m));
    else
      reg.add_sig(std::make_shared<MockSig>(m));
  }
  return reg;
}

// Shared process-wide instance; providers are stateless or internally
// synchronized, so sharing is safe.
inline const Registry& default_registry() {
  static Registry reg = make_default_registry();
  return reg;
}

}  // namespace pqtls
