#ifndef SALARY_HPP
#define SALARY_HPP

#include "salary/achievement.hpp"
#include "salary/cart.hpp"
#include "salary/commands.hpp"
#include "salary/common.hpp"
#include "salary/csv.hpp"
#include "salary/dataset.hpp"
#include "salary/estimate.hpp"
#include "salary/evaluate.hpp"
#include "salary/forest.hpp"
#include "salary/ingest.hpp"
#include "salary/mixedmodel.hpp"
#include "salary/svg.hpp"

#endif  // SALARY_HPP
