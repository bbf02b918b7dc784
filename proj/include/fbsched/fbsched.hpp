#pragma once

#include "fbsched/event_queue.hpp"
#include "fbsched/feedback.hpp"
#include "fbsched/kernel.hpp"
#include "fbsched/metrics.hpp"
#include "fbsched/pid.hpp"
#include "fbsched/plant.hpp"
#include "fbsched/report.hpp"
#include "fbsched/scenario.hpp"
#include "fbsched/scheduler.hpp"
#include "fbsched/sim_time.hpp"
