#pragma once

// Umbrella header: the whole toolkit in one include.

#include "haluj/core.hpp"       // IWYU pragma: export
#include "haluj/rng.hpp"        // IWYU pragma: export
#include "haluj/jsonl.hpp"      // IWYU pragma: export
#include "haluj/parsing.hpp"    // IWYU pragma: export
#include "haluj/templates.hpp"  // IWYU pragma: export
#include "haluj/gateway.hpp"    // IWYU pragma: export
#include "haluj/remote.hpp"     // IWYU pragma: export
#include "haluj/detector.hpp"   // IWYU pragma: export
#include "haluj/oracle.hpp"     // IWYU pragma: export
#include "haluj/synthesizer.hpp"  // IWYU pragma: export
#include "haluj/preference.hpp"   // IWYU pragma: export
#include "haluj/evaluator.hpp"    // IWYU pragma: export
#include "haluj/config.hpp"       // IWYU pragma: export
#include "haluj/commands.hpp"     // IWYU pragma: export
