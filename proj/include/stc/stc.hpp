#pragma once

#include "stc/augment.hpp"
#include "stc/checkpoint.hpp"
#include "stc/config.hpp"
#include "stc/data.hpp"
#include "stc/error.hpp"
#include "stc/evaluate.hpp"
#include "stc/losses.hpp"
#include "stc/matrix.hpp"
#include "stc/model.hpp"
#include "stc/nn.hpp"
#include "stc/random.hpp"
#include "stc/sample.hpp"
#include "stc/symbolize.hpp"
#include "stc/trainer.hpp"
