#pragma once

// Everything except the HTTP layer, which pulls in httplib; include
// "sxai/service.hpp" for that.

#include "sxai/classifier.hpp"
#include "sxai/dataset.hpp"
#include "sxai/decision_tree.hpp"
#include "sxai/domain.hpp"
#include "sxai/error.hpp"
#include "sxai/explain.hpp"
#include "sxai/knn.hpp"
#include "sxai/knowledge.hpp"
#include "sxai/models.hpp"
#include "sxai/naive_bayes.hpp"
#include "sxai/pipeline.hpp"
#include "sxai/realiser.hpp"
#include "sxai/rng.hpp"
#include "sxai/selection.hpp"
#include "sxai/simulator.hpp"
