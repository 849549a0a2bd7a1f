#pragma once

// HTTP front end for SessionManager. Bodies are JSON; errors are returned as
// {"code": ..., "message": ...}.

#include <memory>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "errors.hpp"
#include "raster.hpp"
#include "session.hpp"

namespace auscultrl {

class GuideService {
public:
    explicit GuideService(std::shared_ptr<SessionManager> sessions, FeatureConfig features = {})
        : sessions_(std::move(sessions)), features_(features) {}

    void register_routes(httplib::Server& server) {
        server.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                const auto body = parse_body(req, true);
                std::string model_id;
                if (body.contains("model_id")) {
                    model_id = body.at("model_id").get<std::string>();
                } else {
                    const auto models = sessions_->models().list();
                    if (models.size() != 1) throw PreconditionError("model_id is required when several models are loaded");
                    model_id = models.front()->id;
                }
                const Session s = sessions_->create_session(model_id);
                reply(res, 201, session_summary(s));
            });
        });

        server.Post(R"(/v1/sessions/([^/]+)/observations)", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                const auto body = parse_body(req, false);
                const int point = body.at("point").get<int>();
                const auto values = body.at("features").get<std::vector<double>>();
                if (values.size() != kFeatureCount) throw StructureError("features must hold exactly 8 values");
                PhenomenaFeatures f;
                std::copy(values.begin(), values.end(), f.values.begin());
                reply(res, 200, session_summary(sessions_->submit_observation(req.matches[1], point, f)));
            });
        });

        server.Post(R"(/v1/sessions/([^/]+)/rasters)", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                const auto body = parse_body(req, false);
                const int point = body.at("point").get<int>();
                const ProbabilityRaster raster = raster_from_json(body.at("raster"));
                reply(res, 200, session_summary(sessions_->submit_raster(req.matches[1], point, raster, features_)));
            });
        });

        server.Get(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] { reply(res, 200, session_to_json(sessions_->get_session(req.matches[1]))); });
        });

        server.Delete(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                sessions_->close_session(req.matches[1]);
                res.status = 204;
            });
        });

        server.Get("/v1/models", [this](const httplib::Request&, httplib::Response& res) {
            handle(res, [&] {
                nlohmann::json list = nlohmann::json::array();
                for (const auto& m : sessions_->models().list())
                    list.push_back({{"model_id", m->id}, {"layer_sizes", m->params.sizes()}, {"metadata", m->metadata}});
                reply(res, 200, {{"models", list}});
            });
        });
    }

private:
    static nlohmann::json session_summary(const Session& s) {
        return {{"session_id", s.id},
                {"status", to_string(s.status)},
                {"auscultations", s.auscultations},
                {"advice", advice_to_json(s.advice)},
                {"warnings", s.warnings}};
    }

    static nlohmann::json parse_body(const httplib::Request& req, bool allow_empty) {
        if (req.body.empty()) {
            if (allow_empty) return nlohmann::json::object();
            throw FormatError("request body is required");
        }
        try {
            auto j = nlohmann::json::parse(req.body);
            if (!j.is_object()) throw FormatError("request body must be a JSON object");
            return j;
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(std::string("malformed JSON: ") + e.what());
        }
    }

    static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void fail(httplib::Response& res, int status, const char* code, const std::string& message) {
        reply(res, status, {{"code", code}, {"message", message}});
    }

    template <class F>
    static void handle(httplib::Response& res, F&& f) {
        try {
            f();
        } catch (const NotFoundError& e) {
            fail(res, 404, "not_found", e.what());
        } catch (const StateError& e) {
            fail(res, 409, "not_active", e.what());
        } catch (const nlohmann::json::exception& e) {
            fail(res, 400, "bad_request", e.what());
        } catch (const Error& e) {
            fail(res, 400, "invalid", e.what());
        } catch (const std::exception& e) {
            fail(res, 500, "internal", e.what());
        }
    }

    std::shared_ptr<SessionManager> sessions_;
    FeatureConfig features_;
};

} // namespace auscultrl
