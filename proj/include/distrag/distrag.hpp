#pragma once

#include "distrag/embed.hpp"
#include "distrag/errors.hpp"
#include "distrag/evaluator.hpp"
#include "distrag/geo.hpp"
#include "distrag/graph.hpp"
#include "distrag/llm_client.hpp"
#include "distrag/places_client.hpp"
#include "distrag/prompts.hpp"
#include "distrag/question_text.hpp"
#include "distrag/questions.hpp"
#include "distrag/sparql.hpp"
#include "distrag/turtle.hpp"
