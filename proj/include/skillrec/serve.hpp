#pragma once

#include <memory>

#include "skillrec/bundle.hpp"
#include "skillrec/ingest.hpp"
#include "skillrec/recommend.hpp"

namespace httplib {
class Server;
}

namespace skillrec {

/// Read-only state behind the HTTP endpoints. A null bundle answers 503.
struct ServeState {
  std::shared_ptr<const Corpus> corpus;
  std::shared_ptr<const Bundle> bundle;
  std::shared_ptr<const Embedder> embedder;
  RecommendOptions defaults;
};

/// GET /health and POST /recommend with body {"student", "week", "k"}.
std::unique_ptr<httplib::Server> make_server(std::shared_ptr<const ServeState> state);

}  // namespace skillrec
