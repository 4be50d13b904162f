// Copyright 2026 The Memoprobe Authors
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

// Umbrella header for everything except the HTTP clients (memoprobe/http.hpp).

#ifndef MEMOPROBE_MEMOPROBE_HPP_
#define MEMOPROBE_MEMOPROBE_HPP_

#include "memoprobe/analysis.hpp"
#include "memoprobe/datamodel.hpp"
#include "memoprobe/error.hpp"
#include "memoprobe/grading.hpp"
#include "memoprobe/lexer.hpp"
#include "memoprobe/mock_models.hpp"
#include "memoprobe/modelclient.hpp"
#include "memoprobe/perturbation.hpp"
#include "memoprobe/report.hpp"
#include "memoprobe/sensitivity.hpp"
#include "memoprobe/stats.hpp"
#include "memoprobe/util.hpp"

#endif  // MEMOPROBE_MEMOPROBE_HPP_
