#include "skillrec/serve.hpp"

#include <httplib.h>
#include <json.hpp>

#include "skillrec/cli.hpp"
#include "skillrec/error.hpp"

namespace skillrec {

namespace {

void reply_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
}

}  // namespace

std::unique_ptr<httplib::Server> make_server(std::shared_ptr<const ServeState> state) {
  auto server = std::make_unique<httplib::Server>();

  server->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  server->Post("/recommend", [state](const httplib::Request& req, httplib::Response& res) {
    if (!state->bundle || !state->embedder || !state->corpus) {
      reply_error(res, 503, "no model bundle loaded");
      return;
    }
    nlohmann::json body;
    RecommendOptions options = state->defaults;
    std::string student;
    int week = 0;
    try {
      body = nlohmann::json::parse(req.body);
      student = body.at("student").get<std::string>();
      week = body.at("week").get<int>();
      if (body.contains("k")) options.k = body.at("k").get<int>();
    } catch (const nlohmann::json::exception& e) {
      reply_error(res, 400, std::string("malformed request: ") + e.what());
      return;
    }
    if (options.k < 1) {
      reply_error(res, 400, "k must be at least 1");
      return;
    }
    try {
      res.set_content(cli::recommend_json(*state->corpus, *state->bundle, *state->embedder,
                                          student, week, options),
                      "application/json");
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::UnknownStudent: reply_error(res, 404, e.what()); break;
        case ErrorCode::InvalidArgument: reply_error(res, 400, e.what()); break;
        case ErrorCode::EmptyAfterScope: reply_error(res, 422, e.what()); break;
        default: reply_error(res, 500, e.what()); break;
      }
    }
  });

  return server;
}

}  // namespace skillrec
