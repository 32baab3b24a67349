#pragma once

#include "robstat/calib.hpp"
#include "robstat/classify.hpp"
#include "robstat/datamodel.hpp"
#include "robstat/diagnostics.hpp"
#include "robstat/lts.hpp"
#include "robstat/mcd.hpp"
#include "robstat/mvreg.hpp"
#include "robstat/oracle.hpp"
#include "robstat/outlier_map.hpp"
#include "robstat/robpca.hpp"
#include "robstat/unirobust.hpp"
