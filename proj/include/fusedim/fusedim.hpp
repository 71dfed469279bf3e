#pragma once

// Umbrella header for the fusedim toolkit: planar object footprints from a
// 360-degree laser range finder fused with vertical extent from calibrated
// stereo disparity, plus a synthetic scene oracle for end-to-end testing.

#include "fusedim/calibration.hpp"
#include "fusedim/camera.hpp"
#include "fusedim/canny.hpp"
#include "fusedim/dimension.hpp"
#include "fusedim/error.hpp"
#include "fusedim/footprint.hpp"
#include "fusedim/fusion.hpp"
#include "fusedim/image.hpp"
#include "fusedim/image_io.hpp"
#include "fusedim/keyvalue.hpp"
#include "fusedim/lrf.hpp"
#include "fusedim/morphology.hpp"
#include "fusedim/plot.hpp"
#include "fusedim/scene.hpp"
#include "fusedim/sgm.hpp"
#include "fusedim/stereo.hpp"
