#pragma once

#include "evcoord/mdp.hpp"          // IWYU pragma: export
#include "evcoord/sessions.hpp"     // IWYU pragma: export
#include "evcoord/experience.hpp"   // IWYU pragma: export
#include "evcoord/net.hpp"          // IWYU pragma: export
#include "evcoord/fqi.hpp"          // IWYU pragma: export
#include "evcoord/baselines.hpp"    // IWYU pragma: export
#include "evcoord/eval.hpp"         // IWYU pragma: export
#include "evcoord/pipeline.hpp"     // IWYU pragma: export
