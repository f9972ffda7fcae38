// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "docmt/bleu.hpp"
#include "docmt/checkpoint.hpp"
#include "docmt/config.hpp"
#include "docmt/context.hpp"
#include "docmt/corpus.hpp"
#include "docmt/error.hpp"
#include "docmt/graph.hpp"
#include "docmt/model.hpp"
#include "docmt/objective.hpp"
#include "docmt/rng.hpp"
#include "docmt/search.hpp"
#include "docmt/synthetic.hpp"
#include "docmt/tensor.hpp"
#include "docmt/trainer.hpp"
