#include <thread>

#include <gtest/gtest.h>

#include "auscultrl/auscultrl.hpp"
#include "auscultrl/service.hpp"

using namespace auscultrl;
using nlohmann::json;

namespace {

QNetwork constant_policy(int action) {
    auto net = QNetwork::zeros(default_layer_sizes());
    net.layers.back().bias[action] = 1.0;
    return net;
}

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override {
        auto models = std::make_shared<ModelRegistry>();
        models->add("first", constant_policy(0), {{"agent", "interactive"}});
        models->add("alarm", constant_policy(14));
        service_ = std::make_unique<GuideService>(std::make_shared<SessionManager>(models));
        service_->register_routes(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        ASSERT_GT(port_, 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }

    void TearDown() override {
        server_.stop();
        thread_.join();
    }

    std::pair<int, json> post(const std::string& path, const std::string& body) {
        auto r = client_->Post(path, body, "application/json");
        EXPECT_TRUE(r);
        return {r->status, r->body.empty() ? json() : json::parse(r->body)};
    }

    std::string create(const std::string& model) {
        auto [status, body] = post("/v1/sessions", json{{"model_id", model}}.dump());
        EXPECT_EQ(status, 201);
        return body["session_id"].get<std::string>();
    }

    httplib::Server server_;
    std::unique_ptr<GuideService> service_;
    std::unique_ptr<httplib::Client> client_;
    std::thread thread_;
    int port_ = 0;
};

json features_body(int point) {
    return {{"point", point}, {"features", std::vector<double>(8, 0.0)}};
}

} // namespace

TEST_F(ServiceTest, ListsModels) {
    auto r = client_->Get("/v1/models");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    const auto j = json::parse(r->body);
    ASSERT_EQ(j["models"].size(), 2u);
    EXPECT_EQ(j["models"][1]["model_id"], "first");
    EXPECT_EQ(j["models"][1]["layer_sizes"], json::array({108, 256, 256, 256, 15}));
}

TEST_F(ServiceTest, SessionLifecycle) {
    auto [st, created] = post("/v1/sessions", json{{"model_id", "first"}}.dump());
    ASSERT_EQ(st, 201);
    EXPECT_EQ(created["status"], "active");
    EXPECT_EQ(created["advice"]["type"], "auscultate");
    EXPECT_EQ(created["advice"]["point"], 1);
    const std::string id = created["session_id"];

    auto [st2, obs] = post("/v1/sessions/" + id + "/observations", features_body(3).dump());
    EXPECT_EQ(st2, 200);
    EXPECT_EQ(obs["auscultations"], 1);
    EXPECT_EQ(obs["warnings"].size(), 1u);

    auto g = client_->Get("/v1/sessions/" + id);
    ASSERT_TRUE(g);
    EXPECT_EQ(g->status, 200);
    const auto full = json::parse(g->body);
    EXPECT_EQ(full["history"].size(), 1u);
    EXPECT_EQ(full["state"][2][8], 1.0);

    auto d = client_->Delete("/v1/sessions/" + id);
    ASSERT_TRUE(d);
    EXPECT_EQ(d->status, 204);
    auto gone = client_->Get("/v1/sessions/" + id);
    EXPECT_EQ(gone->status, 404);
    EXPECT_EQ(json::parse(gone->body)["code"], "not_found");
}

TEST_F(ServiceTest, RasterSubmission) {
    const auto id = create("first");
    Examination e;
    e.noise_sigma = 0;
    e.profiles[0][4] = 0.9;
    Rng rng(2);
    const auto raster = render_raster(e, 1, rng);
    auto [st, body] = post("/v1/sessions/" + id + "/rasters", json{{"point", 1}, {"raster", raster_to_json(raster)}}.dump());
    EXPECT_EQ(st, 200);
    auto g = json::parse(client_->Get("/v1/sessions/" + id)->body);
    EXPECT_NEAR(g["state"][0][4].get<double>(), 0.9, 0.05);

    auto [bad, err] = post("/v1/sessions/" + id + "/rasters", R"({"point":1,"raster":{"frame_count":2,"rows":[]}})");
    EXPECT_EQ(bad, 400);
}

TEST_F(ServiceTest, DeclaredSessionRejectsObservations) {
    auto [st, created] = post("/v1/sessions", json{{"model_id", "alarm"}}.dump());
    EXPECT_EQ(created["status"], "declared");
    EXPECT_EQ(created["advice"]["type"], "declare");
    EXPECT_EQ(created["advice"]["alarm"], true);
    auto [st2, err] = post("/v1/sessions/" + created["session_id"].get<std::string>() + "/observations",
                           features_body(1).dump());
    EXPECT_EQ(st2, 409);
    EXPECT_EQ(err["code"], "not_active");
}

TEST_F(ServiceTest, LimitReached) {
    const auto id = create("first");
    json last;
    for (int i = 0; i < 12; ++i) last = post("/v1/sessions/" + id + "/observations", features_body(1).dump()).second;
    EXPECT_EQ(last["status"], "limit_reached");
    EXPECT_TRUE(last["advice"].is_null());
    EXPECT_EQ(post("/v1/sessions/" + id + "/observations", features_body(1).dump()).first, 409);
}

TEST_F(ServiceTest, BadRequests) {
    const auto id = create("first");
    EXPECT_EQ(post("/v1/sessions/" + id + "/observations", "{oops").first, 400);
    EXPECT_EQ(post("/v1/sessions/" + id + "/observations", R"({"point":1,"features":[0,0]})").first, 400);
    EXPECT_EQ(post("/v1/sessions/" + id + "/observations", R"({"point":13,"features":[0,0,0,0,0,0,0,0]})").first, 400);
    EXPECT_EQ(post("/v1/sessions/" + id + "/observations", R"({"features":[0,0,0,0,0,0,0,0]})").first, 400);
    EXPECT_EQ(post("/v1/sessions/unknown/observations", features_body(1).dump()).first, 404);
    EXPECT_EQ(post("/v1/sessions", json{{"model_id", "nope"}}.dump()).first, 404);
    // two models loaded: model_id is required
    EXPECT_EQ(post("/v1/sessions", "").first, 400);
}
