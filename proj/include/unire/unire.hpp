// Copyright 2026 The unire Authors
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

#include "unire/errors.hpp"
#include "unire/label_table.hpp"
#include "unire/biaffine_net.hpp"
#include "unire/objectives.hpp"
#include "unire/decoder.hpp"
#include "unire/evaluation.hpp"
#include "unire/trainer.hpp"
#include "unire/corpus.hpp"
#include "unire/io.hpp"
#include "unire/bench.hpp"
