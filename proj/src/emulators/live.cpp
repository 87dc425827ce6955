#include "iirs/emulators.hpp"

#include <httplib.h>

#include <mutex>
#include <thread>

namespace iirs::emulators {

struct LiveServer::Impl {
  Endpoint endpoint;
  Transport handler;
  httplib::Server server;
  std::mutex mutex;
  std::thread thread;
  int bound_port = 0;

  void install() {
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
      HttpRequest r;
      r.method = req.method;
      r.uri = req.path;
      for (const auto& [k, v] : req.headers)
        if (k != "REMOTE_ADDR" && k != "REMOTE_PORT" && k != "LOCAL_ADDR" && k != "LOCAL_PORT")
          r.headers.emplace_back(k, v);
      r.body = req.body;
      HttpResponse out;
      {
        std::lock_guard lock(mutex);
        out = handler(r);
      }
      res.status = out.status;
      res.set_content(out.body, out.content_type);
    };
    server.Get(".*", route);
    server.Post(".*", route);
  }

  void bind() {
    if (endpoint.port == 0)
      bound_port = server.bind_to_any_port(endpoint.host);
    else if (server.bind_to_port(endpoint.host, endpoint.port))
      bound_port = endpoint.port;
    else
      bound_port = -1;
    if (bound_port <= 0)
      throw Error("cannot bind " + endpoint.host + ":" + std::to_string(endpoint.port));
  }
};

LiveServer::LiveServer(Endpoint endpoint, Transport handler) : impl_(std::make_unique<Impl>()) {
  impl_->endpoint = std::move(endpoint);
  impl_->handler = std::move(handler);
  impl_->install();
}

LiveServer::~LiveServer() { stop(); }

int LiveServer::start() {
  impl_->bind();
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->bound_port;
}

void LiveServer::run() {
  impl_->bind();
  impl_->server.listen_after_bind();
}

void LiveServer::stop() {
  if (!impl_)
    return;
  impl_->server.stop();
  if (impl_->thread.joinable())
    impl_->thread.join();
}

Transport http_transport(Endpoint endpoint) {
  return [endpoint](const HttpRequest& request) {
    httplib::Client client(endpoint.host, endpoint.port);
    client.set_connection_timeout(5);
    client.set_read_timeout(5);
    httplib::Headers headers;
    std::string content_type = "text/plain";
    for (const auto& [k, v] : request.headers) {
      if (k == "Content-Type")
        content_type = v;
      else if (k != "Host")
        headers.emplace(k, v);
    }
    httplib::Result res = request.method == "POST"
                              ? client.Post(request.uri, headers, request.body, content_type)
                              : client.Get(request.uri, headers);
    if (!res)
      throw Error("HTTP request to " + endpoint.host + ":" + std::to_string(endpoint.port) + " failed: " +
                  httplib::to_string(res.error()));
    HttpResponse out;
    out.status = res->status;
    out.content_type = res->get_header_value("Content-Type");
    out.body = res->body;
    return out;
  };
}

} // namespace iirs::emulators
