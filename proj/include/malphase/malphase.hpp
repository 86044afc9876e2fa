#pragma once

#include "malphase/classifiers.hpp"
#include "malphase/common.hpp"
#include "malphase/dataset.hpp"
#include "malphase/denoiser.hpp"
#include "malphase/evaluation.hpp"
#include "malphase/features.hpp"
#include "malphase/flow_csv.hpp"
#include "malphase/flow_meter.hpp"
#include "malphase/nn.hpp"
#include "malphase/packet.hpp"
#include "malphase/pcap.hpp"
#include "malphase/pipeline.hpp"
#include "malphase/synth.hpp"
#include "malphase/training.hpp"
