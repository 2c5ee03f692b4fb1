#pragma once

#include "adp/bandit.hpp"
#include "adp/baselines.hpp"
#include "adp/checkpoint.hpp"
#include "adp/config.hpp"
#include "adp/envs.hpp"
#include "adp/errors.hpp"
#include "adp/eval.hpp"
#include "adp/experiment.hpp"
#include "adp/mlp.hpp"
#include "adp/param_space.hpp"
#include "adp/policy.hpp"
#include "adp/ppo.hpp"
#include "adp/random.hpp"
#include "adp/report_io.hpp"
#include "adp/sampler.hpp"
#include "adp/trainer.hpp"
