#pragma once

#include "fairsqp/csv.hpp"
#include "fairsqp/dataset.hpp"
#include "fairsqp/errors.hpp"
#include "fairsqp/fairness.hpp"
#include "fairsqp/model.hpp"
#include "fairsqp/qp.hpp"
#include "fairsqp/report.hpp"
#include "fairsqp/rng.hpp"
#include "fairsqp/runner.hpp"
#include "fairsqp/sampler.hpp"
#include "fairsqp/sqp.hpp"
#include "fairsqp/surrogate.hpp"
#include "fairsqp/synthetic.hpp"
