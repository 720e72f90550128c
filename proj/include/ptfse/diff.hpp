#pragma once

#include "ptfse/diff/adam.hpp"
#include "ptfse/diff/checkpoint.hpp"
#include "ptfse/diff/conv.hpp"
#include "ptfse/diff/gradcheck.hpp"
#include "ptfse/diff/lstm.hpp"
#include "ptfse/diff/ops.hpp"
#include "ptfse/diff/params.hpp"
#include "ptfse/diff/tensor.hpp"
