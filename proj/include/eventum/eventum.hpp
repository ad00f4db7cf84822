#pragma once

#include "eventum/algebra.hpp"
#include "eventum/chain.hpp"
#include "eventum/embedding.hpp"
#include "eventum/errors.hpp"
#include "eventum/io.hpp"
#include "eventum/matrix.hpp"
#include "eventum/model.hpp"
#include "eventum/models.hpp"
#include "eventum/random.hpp"
