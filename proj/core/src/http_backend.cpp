#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "stepeval/errors.hpp"
#include "stepeval/judge.hpp"

namespace stepeval {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string base64_encode(const std::string& bytes) {
    static const char* table =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 2 < bytes.size()) {
        unsigned v = (unsigned char)(bytes[i]) << 16 | (unsigned char)(bytes[i + 1]) << 8 |
                     (unsigned char)(bytes[i + 2]);
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += table[(v >> 6) & 63];
        out += table[v & 63];
        i += 3;
    }
    if (i + 1 == bytes.size()) {
        unsigned v = (unsigned char)(bytes[i]) << 16;
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        unsigned v = (unsigned char)(bytes[i]) << 16 | (unsigned char)(bytes[i + 1]) << 8;
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += table[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingImageError(path.string());
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return bytes.str();
}

// Simple token bucket; refills continuously at `rate` per second.
class TokenBucket {
public:
    explicit TokenBucket(double rate) : rate_(rate), tokens_(rate > 0 ? rate : 0) {
        last_ = std::chrono::steady_clock::now();
    }

    void acquire() {
        if (rate_ <= 0) return;
        std::unique_lock<std::mutex> lock(mutex_);
        for (;;) {
            refill();
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            double wait_s = (1.0 - tokens_) / rate_;
            lock.unlock();
            std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
            lock.lock();
        }
    }

private:
    void refill() {
        auto now = std::chrono::steady_clock::now();
        tokens_ = std::min(rate_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
        last_ = now;
    }

    double rate_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

struct ParsedEndpoint {
    std::string base;  // scheme://host:port
    std::string path;
};

ParsedEndpoint parse_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw BackendUnavailableError("malformed endpoint URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpBackend final : public JudgeBackend {
public:
    explicit HttpBackend(HttpBackendOptions options)
        : options_(std::move(options)), bucket_(options_.requests_per_second) {}

    JudgeReply judge_call(const JudgeRequest& request) override {
        ordered_json content = ordered_json::array();
        content.push_back({{"type", "text"}, {"text", request.prompt_text}});
        for (const auto& image : request.images) {
            auto resolution = request.resolution ? request.resolution : options_.resolution;
            content.push_back(
                {{"type", "image_url"},
                 {"image_url",
                  {{"url", "data:" + image.media_type + ";base64," +
                               encode_image_base64(image, resolution)}}}});
        }
        ordered_json body;
        body["model"] = request.model_id.empty() ? options_.model_id : request.model_id;
        body["messages"] = ordered_json::array(
            {{{"role", "user"}, {"content", std::move(content)}}});
        body["temperature"] = 0;

        const auto started = std::chrono::steady_clock::now();
        auto response = post_with_retries(body.dump());
        JudgeReply reply = parse_response(response);
        reply.latency_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return reply;
    }

    std::string backend_id() const override { return "http:" + options_.model_id; }

private:
    httplib::Result post_with_retries(const std::string& payload) {
        auto [base, path] = parse_endpoint(options_.endpoint);
        httplib::Client client(base);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!options_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + options_.api_key);

        std::string last_failure;
        for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
            if (attempt > 0) {
                double delay = options_.backoff_base_seconds * double(1 << (attempt - 1));
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            }
            bucket_.acquire();
            auto result = client.Post(path, headers, payload, "application/json");
            if (!result) {
                last_failure = "transport error: " + httplib::to_string(result.error());
                continue;  // retryable
            }
            const int status = result->status;
            if (status == 401 || status == 403)
                throw AuthRejectedError("HTTP " + std::to_string(status));
            if (status >= 500 || status == 429) {
                last_failure = "HTTP " + std::to_string(status);
                continue;  // retryable
            }
            if (status >= 400)
                throw ProviderError("HTTP " + std::to_string(status) + ": " + result->body);
            return result;
        }
        throw BackendUnavailableError(last_failure + " after " +
                                      std::to_string(options_.max_retries) + " retries");
    }

    static JudgeReply parse_response(const httplib::Result& response) {
        JudgeReply reply;
        try {
            auto doc = json::parse(response->body);
            reply.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
            if (doc.contains("usage") && doc["usage"].contains("prompt_tokens")) {
                reply.prompt_tokens = doc["usage"]["prompt_tokens"].get<long long>();
                reply.completion_tokens =
                    doc["usage"].value("completion_tokens", (long long)(0));
                reply.tokens_measured = true;
            }
        } catch (const json::exception& e) {
            throw ProviderError(std::string("unreadable reply payload: ") + e.what());
        }
        return reply;
    }

    HttpBackendOptions options_;
    TokenBucket bucket_;
};

}  // namespace

std::string encode_image_base64(const ImageRef& ref, std::optional<int> resolution) {
    std::string bytes = read_file(ref.path);
    if (!resolution) return base64_encode(bytes);

    cv::Mat raw(1, int(bytes.size()), CV_8UC1, bytes.data());
    cv::Mat image = cv::imdecode(raw, cv::IMREAD_UNCHANGED);
    if (image.empty())
        throw MissingImageError("undecodable image: " + ref.path.string());

    const int longest = std::max(image.cols, image.rows);
    if (longest <= *resolution) return base64_encode(bytes);  // never upscale

    const double scale = double(*resolution) / double(longest);
    cv::Mat resized;
    cv::resize(image, resized, cv::Size(), scale, scale, cv::INTER_AREA);

    const std::string ext = ref.media_type == "image/jpeg" ? ".jpg" : ".png";
    std::vector<unsigned char> encoded;
    if (!cv::imencode(ext, resized, encoded))
        throw MissingImageError("re-encode failed: " + ref.path.string());
    return base64_encode(std::string(encoded.begin(), encoded.end()));
}

std::unique_ptr<JudgeBackend> http_backend(const HttpBackendOptions& options) {
    return std::make_unique<HttpBackend>(options);
}

}  // namespace stepeval
