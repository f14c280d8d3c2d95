#pragma once

#include "corpus.hpp"
#include "database.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "flat_index.hpp"
#include "hnsw_index.hpp"
#include "index.hpp"
#include "lsh_index.hpp"
#include "report.hpp"
#include "sidecar.hpp"
#include "snapshot.hpp"
#include "synthetic.hpp"
#include "vecmath.hpp"
