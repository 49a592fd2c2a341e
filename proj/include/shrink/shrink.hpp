#pragma once

// Umbrella header. io.hpp additionally needs nlohmann/json on the include path.

#include "shrink/error.hpp"
#include "shrink/rational.hpp"
#include "shrink/interval_algebra.hpp"
#include "shrink/circle_maps.hpp"
#include "shrink/target_engine.hpp"
#include "shrink/covering_radius.hpp"
#include "shrink/constructions.hpp"
#include "shrink/random_covering.hpp"
#include "shrink/io.hpp"
