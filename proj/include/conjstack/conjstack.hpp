// Copyright 2026 The conjstack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "conjstack/errors.hpp"
#include "conjstack/action_box.hpp"
#include "conjstack/scalar_solver.hpp"
#include "conjstack/game.hpp"
#include "conjstack/builtin_games.hpp"
#include "conjstack/conjecture.hpp"
#include "conjstack/conjecture_set.hpp"
#include "conjstack/io.hpp"
#include "conjstack/training.hpp"
#include "conjstack/dynamics.hpp"
#include "conjstack/analysis.hpp"
#include "conjstack/experiment.hpp"
