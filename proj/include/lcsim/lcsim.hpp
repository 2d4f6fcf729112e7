// Copyright 2026 The lcsim Authors
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

#ifndef LCSIM_LCSIM_HPP
#define LCSIM_LCSIM_HPP

#include "lcsim/pauli.hpp"
#include "lcsim/dense_ops.hpp"
#include "lcsim/superop.hpp"
#include "lcsim/lcs.hpp"
#include "lcsim/compensation.hpp"
#include "lcsim/engine.hpp"
#include "lcsim/estimator.hpp"
#include "lcsim/oracle.hpp"
#include "lcsim/presets.hpp"
#include "lcsim/resources.hpp"

#endif
