// Copyright 2026 The flowlearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Everything in one include.

#pragma once

#include "flowlearn/acquisition.hpp"
#include "flowlearn/compare.hpp"
#include "flowlearn/ensemble.hpp"
#include "flowlearn/error.hpp"
#include "flowlearn/flowsim.hpp"
#include "flowlearn/gaussian_field.hpp"
#include "flowlearn/geometry.hpp"
#include "flowlearn/io/config.hpp"
#include "flowlearn/io/oracle_instance.hpp"
#include "flowlearn/io/output.hpp"
#include "flowlearn/kernel.hpp"
#include "flowlearn/mixture.hpp"
#include "flowlearn/oracle.hpp"
#include "flowlearn/orchestrator.hpp"
#include "flowlearn/planner.hpp"
#include "flowlearn/random.hpp"
#include "flowlearn/rig.hpp"
#include "flowlearn/sigproc.hpp"
#include "flowlearn/srom.hpp"
