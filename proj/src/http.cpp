#include "storyloom/log.hpp"
#include "storyloom/service.hpp"

#include <httplib.h>

#include <fstream>
#include <sstream>

namespace storyloom {

namespace {

using nlohmann::ordered_json;

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  send_json(res, status, ordered_json{{"error", code}, {"message", message}});
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const NotFound& e) {
    send_error(res, 404, "not_found", e.what());
  } catch (const UnknownCorpus& e) {
    send_error(res, 404, "unknown_corpus", e.what());
  } catch (const Conflict& e) {
    send_error(res, 409, "conflict", e.what());
  } catch (const SessionNotActive& e) {
    send_error(res, 409, "session_not_active", e.what());
  } catch (const CorpusMismatch& e) {
    send_error(res, 409, "corpus_mismatch", e.what());
  } catch (const EmptyMessage& e) {
    send_error(res, 400, "empty_message", e.what());
  } catch (const UpstreamUnavailable& e) {
    send_error(res, 503, "upstream_unavailable", e.what());
  } catch (const nlohmann::json::exception& e) {
    send_error(res, 400, "bad_request", e.what());
  } catch (const std::exception& e) {
    log(LogLevel::Error, std::string("request failed: ") + e.what());
    send_error(res, 500, "internal", e.what());
  }
}

nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  auto doc = nlohmann::json::parse(req.body);
  if (!doc.is_object()) throw nlohmann::json::type_error::create(302, "request body must be a JSON object", nullptr);
  return doc;
}

std::string content_type_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

bool confined(std::string_view p) {
  if (p.empty() || p.front() == '/' || p.find('\\') != std::string_view::npos) return false;
  std::size_t start = 0;
  while (start <= p.size()) {
    auto end = p.find('/', start);
    if (end == std::string_view::npos) end = p.size();
    if (p.substr(start, end - start) == "..") return false;
    start = end + 1;
  }
  return true;
}

}  // namespace

struct HttpFrontend::Impl {
  GameService& service;
  Options options;
  httplib::Server server;

  Impl(GameService& s, Options o) : service(s), options(std::move(o)) { routes(); }

  void routes() {
    if (!options.ui_origin.empty()) {
      server.set_default_headers({{"Access-Control-Allow-Origin", options.ui_origin},
                                  {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                  {"Access-Control-Allow-Headers", "Content-Type"},
                                  {"Vary", "Origin"}});
    }
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        std::string corpus_id = service.corpora().front()->corpus_id;
        if (body.contains("corpus_id")) corpus_id = body.at("corpus_id").get<std::string>();
        const GameSession s = service.create_session(corpus_id);
        auto view = service.session_view(s.session_id);
        send_json(res, 201,
                  ordered_json{{"session_id", s.session_id},
                               {"corpus_id", corpus_id},
                               {"corpus_hash", s.corpus_hash},
                               {"goal_text", view["goal_text"]},
                               {"history", view["history"]}});
      });
    });

    server.Post(R"(/api/sessions/([^/]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        if (!body.contains("text") || !body.at("text").is_string()) {
          send_error(res, 400, "bad_request", "body needs a string field 'text'");
          return;
        }
        const auto outcome = service.post_message(req.matches[1].str(), body.at("text").get<std::string>());
        send_json(res, 200, outcome_to_json(outcome));
      });
    });

    server.Post(R"(/api/sessions/([^/]+)/abandon)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const GameSession s = service.abandon(req.matches[1].str());
        send_json(res, 200, ordered_json{{"status", to_string(s.status)}});
      });
    });

    server.Get(R"(/api/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, service.session_view(req.matches[1].str())); });
    });

    server.Get(R"(/api/sessions/([^/]+)/feed)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, feed_to_json(service.get_feed(req.matches[1].str()))); });
    });

    server.Get(R"(/assets/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string rel = req.matches[1].str();
        const auto path = confined(rel) ? service.resolve_asset(rel) : std::nullopt;
        if (!path) {
          send_error(res, 404, "not_found", "no such asset");
          return;
        }
        std::ifstream in(*path, std::ios::binary);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        res.status = 200;
        res.set_content(bytes.str(), content_type_for(*path));
      });
    });

    server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, service.health()); });
    });
  }
};

HttpFrontend::HttpFrontend(GameService& service, Options options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

HttpFrontend::~HttpFrontend() { stop(); }

bool HttpFrontend::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpFrontend::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpFrontend::serve() { return impl_->server.listen_after_bind(); }

void HttpFrontend::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void HttpFrontend::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace storyloom
