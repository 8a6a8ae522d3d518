#pragma once

#include "clcd/var_set.hpp"
#include "clcd/error.hpp"
#include "clcd/dataset.hpp"
#include "clcd/special_functions.hpp"
#include "clcd/ci_test.hpp"
#include "clcd/mb_discovery.hpp"
#include "clcd/equivalence.hpp"
#include "clcd/parallel.hpp"
#include "clcd/clcd.hpp"
#include "clcd/clcd_fs.hpp"
#include "clcd/rng.hpp"
#include "clcd/synth.hpp"
#include "clcd/eval.hpp"
#include "clcd/json_io.hpp"
