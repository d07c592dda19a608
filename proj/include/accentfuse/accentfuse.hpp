// Copyright (c) 2026 The accentfuse Authors. All Rights Reserved.
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

// Umbrella header.

#pragma once

#include "accentfuse/acoustic.hpp"
#include "accentfuse/aggregation.hpp"
#include "accentfuse/autograd.hpp"
#include "accentfuse/checkpoint.hpp"
#include "accentfuse/common.hpp"
#include "accentfuse/config.hpp"
#include "accentfuse/data.hpp"
#include "accentfuse/degradation.hpp"
#include "accentfuse/features.hpp"
#include "accentfuse/fusion.hpp"
#include "accentfuse/layers.hpp"
#include "accentfuse/losses.hpp"
#include "accentfuse/model.hpp"
#include "accentfuse/optim.hpp"
#include "accentfuse/phonemes.hpp"
#include "accentfuse/probes.hpp"
#include "accentfuse/synthetic.hpp"
#include "accentfuse/training.hpp"
