// Umbrella header: the whole library in one include.
#pragma once

#include "pqtls/bytes.hpp"
#include "pqtls/errors.hpp"
#include "pqtls/hash.hpp"
#include "pqtls/crypto_suite.hpp"
#include "pqtls/mlkem.hpp"
#include "pqtls/hashsig.hpp"
#include "pqtls/wire.hpp"
#include "pqtls/handshake.hpp"
#include "pqtls/registry.hpp"
#include "pqtls/transport.hpp"
#include "pqtls/bench.hpp"
