#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <future>
#include <nlohmann/json.hpp>
#include <thread>

#include "cpsec/bundle.hpp"
#include "cpsec/service/server.hpp"
#include "test_support.hpp"

namespace cpsec::service {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using json = nlohmann::json;
using ::testing::Contains;

struct Reply {
  unsigned status;
  std::string body;
  std::string cors;
};

Reply request(std::uint16_t port, http::verb verb, const std::string& target, const std::string& body = {}) {
  asio::io_context io;
  beast::tcp_stream stream(io);
  stream.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), port));
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "127.0.0.1");
  if (!body.empty()) {
    req.set(http::field::content_type, "application/json");
    req.body() = body;
  }
  req.prepare_payload();
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(stream, buffer, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return {res.result_int(), res.body(), std::string(res[http::field::access_control_allow_origin])};
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    save_snapshot(*testing::uas_corpus(), dir / "corpus.jsonl");
    auto project = new_project(testing::fixture("uas-topology.graphml"), testing::fixture("uas-spec.graphml"),
                               dir / "corpus.jsonl");
    project.layout_iterations = 20;
    save_bundle(project, dir / "uas.cpsec");
    sid = api.add_session(load_session(dir / "uas.cpsec").session, dir / "uas.cpsec");
    server = std::make_unique<Server>(api, "127.0.0.1", 0, 2);
    server->start();
  }
  void TearDown() override { server->stop(); }

  testing::TempDir dir;
  Api api;
  std::string sid;
  std::unique_ptr<Server> server;
};

TEST_F(ServerTest, ServesJsonOverHttp) {
  ASSERT_NE(server->port(), 0);
  auto r = request(server->port(), http::verb::get, "/api/sessions/" + sid + "/surface");
  EXPECT_EQ(r.status, 200u);
  EXPECT_EQ(r.cors, "*");
  EXPECT_EQ(json::parse(r.body)["nodes"].size(), 3u);
  EXPECT_EQ(request(server->port(), http::verb::get, "/api/sessions/zz/surface").status, 404u);
  EXPECT_EQ(request(server->port(), http::verb::get, "/").status, 404u);
}

TEST_F(ServerTest, HandlesConcurrentClients) {
  std::vector<std::future<unsigned>> replies;
  for (int i = 0; i < 16; ++i)
    replies.push_back(std::async(std::launch::async, [&, i] {
      if (i % 4 == 0)
        return request(server->port(), http::verb::post, "/api/sessions/" + sid + "/commands",
                       json{{"op", "expand"}, {"id", "CWE-120"}}.dump())
            .status;
      return request(server->port(), http::verb::get, "/api/sessions/" + sid + "/av-graph").status;
    }));
  for (auto& f : replies) EXPECT_EQ(f.get(), 200u);
  auto log = json::parse(request(server->port(), http::verb::get, "/api/sessions/" + sid + "/edit-log").body);
  EXPECT_EQ(log["commands"].size(), 4u);
}

TEST_F(ServerTest, PushesInvalidationsOverWebSocket) {
  asio::io_context io;
  websocket::stream<beast::tcp_stream> ws(io);
  beast::get_lowest_layer(ws).connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), server->port()));
  ws.handshake("127.0.0.1", "/api/sessions/" + sid + "/events");
  // The subscription is registered after the handshake completes on the server.
  std::this_thread::sleep_for(std::chrono::milliseconds(100));

  auto r = request(server->port(), http::verb::post, "/api/sessions/" + sid + "/commands",
                   json{{"op", "bucket_add"}, {"id", "CAPEC-94"}}.dump());
  ASSERT_EQ(r.status, 200u);

  beast::flat_buffer buffer;
  beast::get_lowest_layer(ws).expires_after(std::chrono::seconds(5));
  ws.read(buffer);
  auto event = json::parse(beast::buffers_to_string(buffer.data()));
  EXPECT_EQ(event["session"], sid);
  EXPECT_THAT(event["invalidated"].get<std::vector<std::string>>(), Contains("bucket"));
  ws.close(websocket::close_code::normal);
}

TEST_F(ServerTest, RejectsEventsForUnknownSession) {
  asio::io_context io;
  websocket::stream<beast::tcp_stream> ws(io);
  beast::get_lowest_layer(ws).connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), server->port()));
  EXPECT_THROW(ws.handshake("127.0.0.1", "/api/sessions/zz/events"), beast::system_error);
}

TEST_F(ServerTest, StopsCleanly) {
  const auto port = server->port();
  server->stop();
  asio::io_context io;
  tcp::socket socket(io);
  beast::error_code ec;
  socket.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), port), ec);
  EXPECT_TRUE(ec);
}

}  // namespace
}  // namespace cpsec::service
