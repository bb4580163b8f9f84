#include "threatwatch/webhook.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace threatwatch {

bool parse_webhook_url(const std::string& url, WebhookTarget& out) {
  constexpr std::string_view kScheme = "http://";
  if (url.rfind(kScheme, 0) != 0) return false;
  const auto rest = url.substr(kScheme.size());
  if (rest.empty()) return false;
  const auto slash = rest.find('/');
  const auto authority = rest.substr(0, slash);
  if (authority.empty()) return false;
  out.scheme_host_port = std::string(kScheme) + authority;
  out.path = slash == std::string::npos ? "/" : rest.substr(slash);
  return true;
}

WebhookNotifier::WebhookNotifier(std::string url, int timeout_ms)
    : url_(std::move(url)), timeout_ms_(timeout_ms) {
  valid_ = parse_webhook_url(url_, target_);
  if (!valid_)
    spdlog::error("webhook: unsupported URL '{}', events will not be posted", url_);
  worker_ = std::thread([this] { run(); });
}

WebhookNotifier::~WebhookNotifier() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void WebhookNotifier::post(std::string json_body) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(json_body));
  }
  cv_.notify_one();
}

void WebhookNotifier::drain() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

bool WebhookNotifier::send(const std::string& body) {
  if (!valid_) return false;
  httplib::Client client(target_.scheme_host_port);
  const auto timeout = std::chrono::milliseconds(timeout_ms_);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  auto res = client.Post(target_.path, body, "application/json");
  return res && res->status >= 200 && res->status < 300;
}

void WebhookNotifier::run() {
  for (;;) {
    std::string body;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;  // stopping and drained
      body = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
    }
    const bool ok = send(body) || send(body);
    if (ok) {
      ++delivered_;
    } else {
      ++failed_;
      spdlog::warn("webhook: delivery to {} failed after retry", url_);
    }
    {
      std::lock_guard lock(mu_);
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

}  // namespace threatwatch
