// sasv/sasv.hpp
//
// Copyright 2022  sasvkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Convenience include for the whole library.

#pragma once

#include "sasv/embedding.hpp"
#include "sasv/fusion.hpp"
#include "sasv/metrics.hpp"
#include "sasv/mlp.hpp"
#include "sasv/random.hpp"
#include "sasv/score_file.hpp"
#include "sasv/synthetic.hpp"
#include "sasv/text_io.hpp"
#include "sasv/trial.hpp"
