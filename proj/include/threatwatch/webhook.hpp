#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <string>
#include <thread>

namespace threatwatch {

struct WebhookTarget {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;              // "/hook", defaults to "/"
};

// Splits an http:// URL. Returns false for anything else (https is not
// compiled in).
bool parse_webhook_url(const std::string& url, WebhookTarget& out);

// Fire-and-forget JSON POSTs from a background thread. `post` only enqueues,
// so a slow or dead endpoint never stalls the caller. Each body gets one
// retry; failures are logged and counted. The destructor drains the queue.
class WebhookNotifier {
 public:
  explicit WebhookNotifier(std::string url, int timeout_ms = 1000);
  ~WebhookNotifier();

  WebhookNotifier(const WebhookNotifier&) = delete;
  WebhookNotifier& operator=(const WebhookNotifier&) = delete;

  void post(std::string json_body);

  // Blocks until everything queued so far has been attempted.
  void drain();

  std::size_t delivered() const noexcept { return delivered_.load(); }
  std::size_t failed() const noexcept { return failed_.load(); }
  const std::string& url() const noexcept { return url_; }

 private:
  void run();
  bool send(const std::string& body);

  std::string url_;
  WebhookTarget target_;
  bool valid_ = false;
  int timeout_ms_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<std::string> queue_;
  bool stopping_ = false;
  bool busy_ = false;
  std::atomic<std::size_t> delivered_{0};
  std::atomic<std::size_t> failed_{0};
  std::thread worker_;
};

}  // namespace threatwatch
