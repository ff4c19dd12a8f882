#pragma once

#include "vortexdiv/error.hpp"
#include "vortexdiv/grid.hpp"
#include "vortexdiv/fft.hpp"
#include "vortexdiv/aperture.hpp"
#include "vortexdiv/incoherent.hpp"
#include "vortexdiv/deconv.hpp"
#include "vortexdiv/coherent.hpp"
#include "vortexdiv/phase_retrieval.hpp"
#include "vortexdiv/metrics.hpp"
#include "vortexdiv/raster.hpp"
#include "vortexdiv/random.hpp"
#include "vortexdiv/synthetic.hpp"
#include "vortexdiv/tensor_io.hpp"
#include "vortexdiv/image_io.hpp"
#include "vortexdiv/dataset.hpp"
