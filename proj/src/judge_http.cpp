#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "summjudge/judge.hpp"

namespace summjudge::judge {

HttpChatClient::HttpChatClient(std::string endpoint, std::string api_key) : api_key_(std::move(api_key)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(endpoint, m, kUrl)) throw ConfigError("endpoint must be an http(s) URL: " + endpoint);
  base_ = m[1].str();
  std::string prefix = m[2].str();
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (base_.rfind("https", 0) == 0) throw ConfigError("built without TLS support; https endpoints unavailable");
#endif
}

std::unique_ptr<HttpChatClient> HttpChatClient::from_environment(const std::string& endpoint) {
  const char* key = std::getenv(kApiKeyEnv);
  return std::make_unique<HttpChatClient>(endpoint, key ? key : "");
}

nlohmann::json HttpChatClient::request_body(const ChatRequest& request) {
  return {{"model", request.model},
          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
          {"temperature", request.temperature}};
}

std::string HttpChatClient::response_content(std::string_view body) {
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw TransportError("response is not JSON");
  try {
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw TransportError("response has no choices[0].message.content");
  }
}

std::string HttpChatClient::complete(const ChatRequest& request) {
  httplib::Client client(base_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  if (!request.request_id.empty()) headers.emplace("X-Request-Id", request.request_id);

  const auto res = client.Post(path_, headers, request_body(request).dump(), "application/json");
  if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
  if (res->status == 429) {
    std::chrono::milliseconds retry_after{0};
    if (res->has_header("Retry-After")) {
      try {
        retry_after = std::chrono::milliseconds(
            static_cast<long long>(std::stod(res->get_header_value("Retry-After")) * 1000.0));
      } catch (const std::exception&) {
      }
    }
    throw RateLimitError("HTTP 429 from " + base_ + path_, retry_after);
  }
  if (res->status != 200) {
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + base_ + path_ + ": " +
                         res->body.substr(0, 200));
  }
  return response_content(res->body);
}

}  // namespace summjudge::judge
