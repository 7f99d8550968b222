#pragma once

#include "distrag/sparql/ast.hpp"
#include "distrag/sparql/eval.hpp"
#include "distrag/sparql/parser.hpp"
