#pragma once

#include "det3d/bundle.hpp"
#include "det3d/core.hpp"
#include "det3d/decode.hpp"
#include "det3d/error.hpp"
#include "det3d/fmap_io.hpp"
#include "det3d/geometry3d.hpp"
#include "det3d/io.hpp"
#include "det3d/kitti.hpp"
#include "det3d/metrics.hpp"
#include "det3d/pipeline.hpp"
#include "det3d/pooling.hpp"
#include "det3d/serialize.hpp"
#include "det3d/synthgen.hpp"
