#pragma once

#include "eegnet/adam.hpp"
#include "eegnet/augmentation.hpp"
#include "eegnet/benchmark.hpp"
#include "eegnet/checkpoint.hpp"
#include "eegnet/dataset.hpp"
#include "eegnet/dsp.hpp"
#include "eegnet/error.hpp"
#include "eegnet/lstm.hpp"
#include "eegnet/metrics.hpp"
#include "eegnet/model.hpp"
#include "eegnet/network.hpp"
#include "eegnet/rng.hpp"
#include "eegnet/synth.hpp"
#include "eegnet/tensor.hpp"
#include "eegnet/train.hpp"
