#pragma once

#include "ptfse/diff.hpp"
#include "ptfse/errors.hpp"
#include "ptfse/masking/bands.hpp"
#include "ptfse/masking/loss.hpp"
#include "ptfse/masking/mask.hpp"
#include "ptfse/metrics/si_sdr.hpp"
#include "ptfse/metrics/stoi.hpp"
#include "ptfse/model/config.hpp"
#include "ptfse/model/modules.hpp"
#include "ptfse/model/ptfse.hpp"
#include "ptfse/pipeline/dataset.hpp"
#include "ptfse/pipeline/enhance.hpp"
#include "ptfse/pipeline/train.hpp"
#include "ptfse/rng.hpp"
#include "ptfse/signal/mix.hpp"
#include "ptfse/signal/stft.hpp"
#include "ptfse/signal/synth.hpp"
#include "ptfse/signal/types.hpp"
#include "ptfse/signal/wav.hpp"
