// Copyright 2026 The Fairprobe Authors
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

#include "fairprobe/cache.hpp"
#include "fairprobe/engine.hpp"
#include "fairprobe/errors.hpp"
#include "fairprobe/fixtures.hpp"
#include "fairprobe/oracle.hpp"
#include "fairprobe/report.hpp"
#include "fairprobe/rng.hpp"
#include "fairprobe/sampler.hpp"
#include "fairprobe/schema.hpp"
#include "fairprobe/search.hpp"
#include "fairprobe/subject.hpp"
