#pragma once

#include <memory>
#include <string>

#include "connsim/classifier.hpp"

namespace connsim {

/// HTTP/JSON front end over in-memory connectomes and simulation sessions.
/// Endpoints are listed in docs/api.md.
class Service {
public:
    Service();
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    void add_model(const std::string& id, std::shared_ptr<const StageClassifier> model);
    /// Serves files under `dir` at "/".
    void mount_static(const std::string& dir);

    /// Binds without serving; port 0 picks a free port. Returns the port.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void serve();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace connsim
