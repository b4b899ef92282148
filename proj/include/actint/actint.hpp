#pragma once

#include "actint/activation.hpp"
#include "actint/compiler.hpp"
#include "actint/conversion.hpp"
#include "actint/error.hpp"
#include "actint/eval.hpp"
#include "actint/inversion.hpp"
#include "actint/io.hpp"
#include "actint/network.hpp"
#include "actint/partition.hpp"
#include "actint/solution_space.hpp"
#include "actint/trainer.hpp"
