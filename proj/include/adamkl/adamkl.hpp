/*
 * Copyright 2026 the adamkl authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "adamkl/active.hpp"
#include "adamkl/config.hpp"
#include "adamkl/data.hpp"
#include "adamkl/errors.hpp"
#include "adamkl/eval.hpp"
#include "adamkl/kernels.hpp"
#include "adamkl/mkl_da.hpp"
#include "adamkl/rng.hpp"
#include "adamkl/runner.hpp"
#include "adamkl/svm.hpp"
