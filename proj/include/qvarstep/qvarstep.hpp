// Copyright 2026 The qvarstep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "qvarstep/accuracy.hpp"
#include "qvarstep/counter.hpp"
#include "qvarstep/dsp_filter.hpp"
#include "qvarstep/error.hpp"
#include "qvarstep/frames.hpp"
#include "qvarstep/manifest.hpp"
#include "qvarstep/peak_detect.hpp"
#include "qvarstep/signal_core.hpp"
#include "qvarstep/spectral.hpp"
#include "qvarstep/streaming.hpp"
#include "qvarstep/synth.hpp"
#include "qvarstep/tuner_eval.hpp"
