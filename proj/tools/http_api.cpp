#include "http_api.hpp"

namespace pcqa::cli {

namespace {

void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, {{"error", message}}, status);
}

}  // namespace

void mount_annotation_routes(httplib::Server& server, AnnotationService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  server.Get("/groups", [&](const httplib::Request&, httplib::Response& res) { send_json(res, service.groups_json()); });

  server.Get(R"(/image/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    const auto png = service.image_png(req.matches[1].str());
    if (!png) return send_error(res, 404, "unknown image");
    res.set_content(*png, "image/png");
  });

  server.Post("/selection", [&](const httplib::Request& req, httplib::Response& res) {
    Selection s;
    try {
      s = selection_from_json(nlohmann::json::parse(req.body));
    } catch (const std::exception& e) {
      return send_error(res, 400, std::string("bad selection: ") + e.what());
    }
    switch (service.submit(s)) {
      case SubmitStatus::Accepted:
        return send_json(res, {{"status", "ok"}});
      case SubmitStatus::UnknownGroup:
        return send_error(res, 404, "unknown group " + s.group_id);
      case SubmitStatus::BadIndex:
        return send_error(res, 400, "worst_index out of range");
      case SubmitStatus::Duplicate:
        return send_error(res, 409, "rater already answered this group");
    }
  });

  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Get("/ci", [&](const httplib::Request&, httplib::Response& res) { send_json(res, service.ci_json()); });

  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });
}

}  // namespace pcqa::cli
