#pragma once

#include "demoforge/action_extract.hpp"
#include "demoforge/codec.hpp"
#include "demoforge/episode.hpp"
#include "demoforge/episode_io.hpp"
#include "demoforge/error.hpp"
#include "demoforge/frame_compose.hpp"
#include "demoforge/gen_bridge.hpp"
#include "demoforge/parallel.hpp"
#include "demoforge/pipeline.hpp"
#include "demoforge/pose.hpp"
#include "demoforge/quality_metrics.hpp"
#include "demoforge/raster.hpp"
#include "demoforge/stage_classify.hpp"
#include "demoforge/synth_gen.hpp"
#include "demoforge/temporal_align.hpp"
