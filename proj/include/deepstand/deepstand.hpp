// Copyright 2026 The DeepStand Authors.
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

#ifndef DEEPSTAND_DEEPSTAND_HPP_
#define DEEPSTAND_DEEPSTAND_HPP_

#include "deepstand/core.hpp"
#include "deepstand/tensor.hpp"
#include "deepstand/autograd.hpp"
#include "deepstand/ops.hpp"
#include "deepstand/density.hpp"
#include "deepstand/network.hpp"
#include "deepstand/image.hpp"
#include "deepstand/data.hpp"
#include "deepstand/postprocess.hpp"
#include "deepstand/config.hpp"
#include "deepstand/training.hpp"
#include "deepstand/evaluation.hpp"
#include "deepstand/render.hpp"
#include "deepstand/profiles.hpp"

#endif  // DEEPSTAND_DEEPSTAND_HPP_
