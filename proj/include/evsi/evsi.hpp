#pragma once

#include "evsi/betabin.hpp"
#include "evsi/bootstrap.hpp"
#include "evsi/dataset.hpp"
#include "evsi/errors.hpp"
#include "evsi/generic.hpp"
#include "evsi/net_benefit.hpp"
#include "evsi/oracle.hpp"
#include "evsi/parallel.hpp"
#include "evsi/random.hpp"
#include "evsi/report.hpp"
#include "evsi/sweep.hpp"
#include "evsi/synth.hpp"
#include "evsi/voi.hpp"
