#pragma once

// Client side of the hand-to-gripper image generation service.
//
//   GET  /v1/health    -> {"status": "ok"}
//   POST /v1/generate  {"request_id", "prompt", "image_png_b64"}
//                   -> {"request_id", "image_png_b64", "latency_ms"}
//
// Images travel as base64 PNG (RGB8). Two in-process mocks stand in for the
// service in hermetic runs: Echo returns the request image; CompositeTruth
// returns truth_dir/composites/<idx>.png where idx is the request_id suffix
// after the last ':'.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "httplib.h"

#include "demoforge/codec.hpp"
#include "demoforge/episode.hpp"
#include "demoforge/episode_io.hpp"
#include "demoforge/error.hpp"
#include "demoforge/parallel.hpp"

namespace demoforge {

inline constexpr std::string_view kPromptPrefix = "Turn the hand into a gripper. The gripper is holding a ";

struct GenRequest {
  Image image;
  std::string prompt;
  std::string request_id;
};

struct GenResponse {
  Image image;
  std::string request_id;
  double latency_ms = 0.0;
};

inline std::string build_prompt(std::string_view obj_name) {
  if (obj_name.empty()) fail(ErrorCode::InvalidObjectName, "object name is empty");
  for (unsigned char c : obj_name)
    if (c < 0x20 || c == 0x7f) fail(ErrorCode::InvalidObjectName, "object name contains control characters");
  std::string p(kPromptPrefix);
  p += obj_name;
  p += '.';
  return p;
}

// ---- Wire format -----------------------------------------------------------

inline json request_json(const GenRequest& r) {
  json j = json::object();
  j["request_id"] = r.request_id;
  j["prompt"] = r.prompt;
  j["image_png_b64"] = base64_encode(encode_png(r.image));
  return j;
}

inline json response_json(const GenResponse& r) {
  json j = json::object();
  j["request_id"] = r.request_id;
  j["image_png_b64"] = base64_encode(encode_png(r.image));
  j["latency_ms"] = r.latency_ms;
  return j;
}

namespace detail {
inline const json& wire_field(const json& j, const char* key, bool (json::*is)() const noexcept) {
  if (!j.is_object() || !j.contains(key) || !(j.at(key).*is)())
    fail(ErrorCode::ProtocolError, std::string("missing or mistyped field '") + key + "'");
  return j.at(key);
}

inline Image wire_image(const json& j) {
  const auto& b64 = wire_field(j, "image_png_b64", &json::is_string).get_ref<const std::string&>();
  try {
    return decode_png(base64_decode(b64));
  } catch (const Error& e) {
    fail(ErrorCode::ProtocolError, std::string("image payload: ") + e.what());
  }
}
}  // namespace detail

inline GenRequest parse_request(const json& j) {
  GenRequest r;
  r.request_id = detail::wire_field(j, "request_id", &json::is_string).get<std::string>();
  r.prompt = detail::wire_field(j, "prompt", &json::is_string).get<std::string>();
  r.image = detail::wire_image(j);
  return r;
}

inline GenResponse parse_response(const json& j) {
  GenResponse r;
  r.request_id = detail::wire_field(j, "request_id", &json::is_string).get<std::string>();
  r.latency_ms = detail::wire_field(j, "latency_ms", &json::is_number).get<double>();
  r.image = detail::wire_image(j);
  return r;
}

// ---- Endpoints -------------------------------------------------------------

struct HttpEndpoint {
  std::string url;  // scheme://host:port
};

enum class MockMode { Echo, CompositeTruth };

struct MockEndpoint {
  MockMode mode = MockMode::Echo;
  fs::path truth_dir;
};

using Endpoint = std::variant<HttpEndpoint, MockEndpoint>;

inline constexpr int kGenMaxAttempts = 3;  // first try plus two retries

/// Index encoded as the request_id suffix after the last ':'.
inline std::optional<std::size_t> request_index(std::string_view request_id) {
  const auto pos = request_id.rfind(':');
  if (pos == std::string_view::npos || pos + 1 == request_id.size()) return std::nullopt;
  std::size_t v = 0;
  for (char c : request_id.substr(pos + 1)) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  return v;
}

namespace detail {

inline GenResponse mock_generate(const GenRequest& req, const MockEndpoint& ep) {
  GenResponse r;
  r.request_id = req.request_id;
  if (ep.mode == MockMode::Echo) {
    r.image = req.image;
    return r;
  }
  const auto idx = request_index(req.request_id);
  if (!idx) fail(ErrorCode::ProtocolError, "request_id '" + req.request_id + "' carries no ':<idx>' suffix");
  const fs::path p = ep.truth_dir / "composites" / frame_filename(*idx);
  if (!fs::exists(p)) fail(ErrorCode::ProtocolError, "no truth composite for index " + std::to_string(*idx));
  r.image = read_png(p);
  return r;
}

inline GenResponse http_generate(const GenRequest& req, const HttpEndpoint& ep, int timeout_ms) {
  const std::string body = request_json(req).dump();
  std::string last_error;
  bool transport_failure = false;
  for (int attempt = 0; attempt < kGenMaxAttempts; ++attempt) {
    httplib::Client cli(ep.url);
    if (!cli.is_valid()) fail(ErrorCode::ProtocolError, "invalid endpoint '" + ep.url + "'");
    const auto to = std::chrono::milliseconds(timeout_ms);
    cli.set_connection_timeout(to);
    cli.set_read_timeout(to);
    cli.set_write_timeout(to);

    const auto started = std::chrono::steady_clock::now();
    auto res = cli.Post("/v1/generate", body, "application/json");
    if (!res) {
      transport_failure = true;
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      transport_failure = false;
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) fail(ErrorCode::ProtocolError, "HTTP " + std::to_string(res->status) + ": " + res->body);

    json j;
    try {
      j = json::parse(res->body);
    } catch (const json::exception& e) {
      fail(ErrorCode::ProtocolError, std::string("response is not JSON: ") + e.what());
    }
    GenResponse r = parse_response(j);
    if (r.latency_ms < 0.0)
      r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return r;
  }
  if (transport_failure)
    fail(ErrorCode::GenTimeout, "no answer from " + ep.url + " after " + std::to_string(kGenMaxAttempts) +
                                    " attempts (" + last_error + ")");
  fail(ErrorCode::ProtocolError, ep.url + " kept failing: " + last_error);
}

}  // namespace detail

/// One blocking generation call. Transport failures are retried up to two
/// more times; exhausting them reports GenTimeout.
inline GenResponse generate(const GenRequest& req, const Endpoint& endpoint, int timeout_ms = 30000) {
  if (req.prompt.empty()) fail(ErrorCode::InvalidObjectName, "request prompt is empty");
  const auto started = std::chrono::steady_clock::now();
  GenResponse r = std::holds_alternative<MockEndpoint>(endpoint)
                      ? detail::mock_generate(req, std::get<MockEndpoint>(endpoint))
                      : detail::http_generate(req, std::get<HttpEndpoint>(endpoint), timeout_ms);
  if (std::holds_alternative<MockEndpoint>(endpoint))
    r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  if (r.request_id != req.request_id)
    fail(ErrorCode::ProtocolError, "response request_id '" + r.request_id + "' != '" + req.request_id + "'");
  if (!same_dims(r.image, req.image))
    fail(ErrorCode::BadGeneration, "generated image is " + std::to_string(r.image.width()) + "x" +
                                       std::to_string(r.image.height()) + ", expected " + std::to_string(req.image.width()) +
                                       "x" + std::to_string(req.image.height()));
  return r;
}

inline bool health_check(const HttpEndpoint& ep, int timeout_ms = 2000) {
  httplib::Client cli(ep.url);
  if (!cli.is_valid()) return false;
  cli.set_connection_timeout(std::chrono::milliseconds(timeout_ms));
  cli.set_read_timeout(std::chrono::milliseconds(timeout_ms));
  auto res = cli.Get("/v1/health");
  if (!res || res->status != 200) return false;
  try {
    return json::parse(res->body).value("status", "") == "ok";
  } catch (const json::exception&) {
    return false;
  }
}

/// Generates every frame of a hand episode with at most `concurrency`
/// requests in flight. Output frames keep the input order and timestamps.
inline Episode generate_episode(const Episode& episode, const std::string& obj_name, const Endpoint& endpoint,
                                unsigned concurrency = 4, int timeout_ms = 30000) {
  if (episode.role() != Role::Hand)
    fail(ErrorCode::InvalidRole, "generate_episode expects a hand episode, got " + std::string(to_string(episode.role())));
  if (episode.empty()) fail(ErrorCode::EmptyInput, "episode '" + episode.episode_id() + "' has no frames");
  const std::string prompt = build_prompt(obj_name);

  std::vector<Frame> out(episode.size());
  std::vector<std::string> errors(episode.size());
  parallel_for(episode.size(), std::max(1u, concurrency), [&](std::size_t i) {
    const Frame& src = episode.frame(i);
    try {
      GenResponse r = generate({src.image, prompt, episode.episode_id() + ":" + std::to_string(i)}, endpoint, timeout_ms);
      out[i].timestamp_ns = src.timestamp_ns;
      out[i].image = std::move(r.image);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  std::string indices, first_error;
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) {
      indices += (indices.empty() ? "" : ",") + std::to_string(i);
      if (first_error.empty()) first_error = errors[i];
    }
  if (!indices.empty())
    fail(ErrorCode::EpisodeGenerationFailed, "failed frames [" + indices + "]; first error: " + first_error);

  return Episode(episode.episode_id() + "-generated", Role::Generated, episode.task(), obj_name, std::move(out),
                 episode.camera_poses());
}

}  // namespace demoforge
