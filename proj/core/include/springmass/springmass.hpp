#pragma once

#include "springmass/actuation.hpp"
#include "springmass/builder.hpp"
#include "springmass/control.hpp"
#include "springmass/diagnostics.hpp"
#include "springmass/engine.hpp"
#include "springmass/errors.hpp"
#include "springmass/log.hpp"
#include "springmass/snapshot_io.hpp"
#include "springmass/store.hpp"
#include "springmass/types.hpp"
#include "springmass/vec3.hpp"
#include "springmass/version.hpp"
