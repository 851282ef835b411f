#pragma once

#include "cuts3d/affinity.hpp"
#include "cuts3d/annotation.hpp"
#include "cuts3d/augment.hpp"
#include "cuts3d/confidence.hpp"
#include "cuts3d/config.hpp"
#include "cuts3d/error.hpp"
#include "cuts3d/grid.hpp"
#include "cuts3d/image.hpp"
#include "cuts3d/localcut.hpp"
#include "cuts3d/maxflow.hpp"
#include "cuts3d/ncut.hpp"
#include "cuts3d/pipeline.hpp"
#include "cuts3d/refine.hpp"
#include "cuts3d/resample.hpp"
#include "cuts3d/rle.hpp"
#include "cuts3d/tensorio.hpp"
