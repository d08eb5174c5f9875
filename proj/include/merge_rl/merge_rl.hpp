#pragma once

#include "merge_rl/checkpoint.hpp"
#include "merge_rl/config.hpp"
#include "merge_rl/core.hpp"
#include "merge_rl/csv.hpp"
#include "merge_rl/errors.hpp"
#include "merge_rl/eval.hpp"
#include "merge_rl/gradcheck.hpp"
#include "merge_rl/merge_env.hpp"
#include "merge_rl/neuralnet.hpp"
#include "merge_rl/oracle.hpp"
#include "merge_rl/qfunction.hpp"
#include "merge_rl/replay.hpp"
#include "merge_rl/report.hpp"
#include "merge_rl/reward.hpp"
#include "merge_rl/tasks.hpp"
#include "merge_rl/toy_mdp.hpp"
#include "merge_rl/trainer.hpp"
