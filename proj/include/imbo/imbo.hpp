#pragma once

// Umbrella header.

#include "imbo/bandwidth.hpp"
#include "imbo/classifiers.hpp"
#include "imbo/dataset.hpp"
#include "imbo/evaluation.hpp"
#include "imbo/experiment.hpp"
#include "imbo/kde.hpp"
#include "imbo/linalg.hpp"
#include "imbo/model_io.hpp"
#include "imbo/neighbors.hpp"
#include "imbo/oversample.hpp"
#include "imbo/rng.hpp"
#include "imbo/simgen.hpp"
