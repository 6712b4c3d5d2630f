#pragma once

#include <atomic>
#include <cerrno>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "arm_model.hpp"
#include "config_table.hpp"
#include "lut_controller.hpp"

namespace serpent::teleop
{
    using json = nlohmann::json;

    enum class Mode
    {
        full_robotic, ///< end-effector targets resolved through the learned table
        telerobotic,  ///< direct joint jogging
    };

    inline const char *to_string(Mode m) { return m == Mode::full_robotic ? "full_robotic" : "telerobotic"; }

    /// What every session shares: the arm and the learned table. Immutable once built.
    struct Controller
    {
        ArmModel model;
        ConfigTable table;
    };

    struct SessionState
    {
        DofVector config{};
        Mode mode = Mode::full_robotic;
        std::optional<Point3> target;
        std::optional<double> deviation;
    };

    /// One client's control session. Messages are handled one at a time; a message that
    /// fails leaves the state exactly as it was.
    class Session
    {
    public:
        explicit Session(std::shared_ptr<const Controller> controller) : controller_(std::move(controller)) {}

        const SessionState &state() const { return state_; }

        /// Handles one frame of text and returns the reply frame (without delimiter).
        std::string handle_frame(std::string_view frame)
        {
            json msg;
            try
            {
                msg = json::parse(frame);
            }
            catch (const json::parse_error &e)
            {
                return error_reply("parse_error", e.what()).dump();
            }
            return handle(msg).dump();
        }

        json handle(const json &msg)
        {
            if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string())
                return error_reply("bad_message", "expected an object with a string 'type' field");
            const std::string type = msg["type"].get<std::string>();
            if (type == "get_state")
                return state_reply(state_);
            if (type == "set_mode")
                return handle_set_mode(msg);
            if (type == "set_target")
                return handle_set_target(msg);
            if (type == "jog")
                return handle_jog(msg);
            return error_reply("unknown_type", "unknown message type '" + type + "'");
        }

        json state_reply(const SessionState &s) const
        {
            const ArmPose pose = forward_kinematics(controller_->model, s.config);
            json points = json::array();
            for (const auto &p : pose.points)
                points.push_back({p.x(), p.y(), p.z()});
            const auto &ee = pose.end_effector();
            return {{"type", "state"},
                    {"mode", to_string(s.mode)},
                    {"dofs", s.config.deg},
                    {"points", std::move(points)},
                    {"ee", {ee.x(), ee.y(), ee.z()}},
                    {"target", s.target ? json{s.target->x(), s.target->y(), s.target->z()} : json(nullptr)},
                    {"deviation", s.deviation ? json(*s.deviation) : json(nullptr)}};
        }

        static json error_reply(std::string_view code, std::string_view detail)
        {
            return {{"type", "error"}, {"code", code}, {"detail", detail}};
        }

    private:
        static std::optional<double> number_field(const json &msg, const char *key)
        {
            if (!msg.contains(key) || !msg[key].is_number())
                return std::nullopt;
            return msg[key].get<double>();
        }

        json handle_set_mode(const json &msg)
        {
            if (!msg.contains("mode") || !msg["mode"].is_string())
                return error_reply("bad_field", "set_mode needs a string 'mode'");
            const std::string m = msg["mode"].get<std::string>();
            SessionState next = state_;
            if (m == "full_robotic")
                next.mode = Mode::full_robotic;
            else if (m == "telerobotic")
                next.mode = Mode::telerobotic;
            else
                return error_reply("unknown_mode", "unknown mode '" + m + "'");
            return commit(std::move(next));
        }

        json handle_set_target(const json &msg)
        {
            if (state_.mode != Mode::full_robotic)
                return error_reply("mode_error", "set_target requires full_robotic mode");
            const auto x = number_field(msg, "x"), y = number_field(msg, "y"), z = number_field(msg, "z");
            if (!x || !y || !z)
                return error_reply("bad_field", "set_target needs numeric x, y, z");
            const Point3 p(*x, *y, *z);
            SessionState next = state_;
            try
            {
                next.config = ik_lookup(controller_->table, controller_->model, p);
                next.deviation = (end_effector(controller_->model, next.config) - p).norm();
            }
            catch (const Error &e)
            {
                return error_reply(to_string(e.code()), e.detail());
            }
            next.target = p;
            return commit(std::move(next));
        }

        json handle_jog(const json &msg)
        {
            if (state_.mode != Mode::telerobotic)
                return error_reply("mode_error", "jog requires telerobotic mode");
            if (!msg.contains("dof") || !msg["dof"].is_number_integer())
                return error_reply("bad_index", "jog needs an integer 'dof' in [0, 9]");
            const auto dof = msg["dof"].get<long long>();
            if (dof < 0 || dof >= static_cast<long long>(dof_count))
                return error_reply("bad_index", "dof " + std::to_string(dof) + " outside [0, 9]");
            const auto delta = number_field(msg, "delta");
            if (!delta || !std::isfinite(*delta))
                return error_reply("bad_field", "jog needs a numeric 'delta'");
            SessionState next = state_;
            const auto c = static_cast<std::size_t>(dof);
            next.config[c] = controller_->model.limits[c].clamp(next.config[c] + *delta);
            // The pose no longer follows a table target.
            next.target.reset();
            next.deviation.reset();
            return commit(std::move(next));
        }

        json commit(SessionState next)
        {
            json reply = state_reply(next);
            state_ = std::move(next);
            return reply;
        }

        std::shared_ptr<const Controller> controller_;
        SessionState state_;
    };

    /// TCP service: newline-delimited frames, one JSON message per frame, one Session per
    /// connection. Connections are served on their own threads and share the controller.
    class Server
    {
    public:
        explicit Server(std::shared_ptr<const Controller> controller) : controller_(std::move(controller)) {}

        ~Server() { stop(); }

        Server(const Server &) = delete;
        Server &operator=(const Server &) = delete;

        /// Binds and listens. Port 0 picks an ephemeral port; see port().
        void listen(int port, const std::string &host = "127.0.0.1")
        {
            fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
            if (fd_ < 0)
                throw Error(ErrorCode::file_error, std::string("socket: ") + std::strerror(errno));
            int one = 1;
            ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
            sockaddr_in addr{};
            addr.sin_family = AF_INET;
            addr.sin_port = htons(static_cast<std::uint16_t>(port));
            if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
                throw Error(ErrorCode::invalid_argument, "bad host " + host);
            if (::bind(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) < 0 || ::listen(fd_, 16) < 0)
            {
                const std::string why = std::strerror(errno);
                ::close(fd_);
                fd_ = -1;
                throw Error(ErrorCode::file_error, "cannot listen on port " + std::to_string(port) + ": " + why);
            }
            socklen_t len = sizeof addr;
            ::getsockname(fd_, reinterpret_cast<sockaddr *>(&addr), &len);
            port_ = ntohs(addr.sin_port);
        }

        int port() const { return port_; }

        /// Accept loop; returns after stop().
        void serve()
        {
            while (!stopping_)
            {
                pollfd pfd{fd_, POLLIN, 0};
                if (::poll(&pfd, 1, 100) <= 0)
                    continue;
                const int client = ::accept(fd_, nullptr, nullptr);
                if (client < 0)
                    continue;
                std::lock_guard lock(mutex_);
                workers_.emplace_back([this, client] { serve_connection(client); });
            }
        }

        void stop()
        {
            stopping_ = true;
            {
                std::lock_guard lock(mutex_);
                workers_.clear(); // joins
            }
            if (fd_ >= 0)
            {
                ::close(fd_);
                fd_ = -1;
            }
        }

    private:
        void serve_connection(int client)
        {
            Session session(controller_);
            std::string buffer;
            char chunk[4096];
            while (!stopping_)
            {
                pollfd pfd{client, POLLIN, 0};
                const int ready = ::poll(&pfd, 1, 100);
                if (ready < 0)
                    break;
                if (ready == 0)
                    continue;
                const ssize_t n = ::recv(client, chunk, sizeof chunk, 0);
                if (n <= 0)
                    break;
                buffer.append(chunk, static_cast<std::size_t>(n));
                std::size_t nl;
                while ((nl = buffer.find('\n')) != std::string::npos)
                {
                    std::string frame = buffer.substr(0, nl);
                    buffer.erase(0, nl + 1);
                    if (!frame.empty() && frame.back() == '\r')
                        frame.pop_back();
                    if (frame.empty())
                        continue;
                    const std::string reply = session.handle_frame(frame) + "\n";
                    if (!send_all(client, reply))
                    {
                        ::close(client);
                        return;
                    }
                }
                if (buffer.size() > max_frame_)
                {
                    send_all(client, Session::error_reply("frame_too_large", "frames are limited to 1 MiB").dump() + "\n");
                    break;
                }
            }
            ::close(client);
        }

        static bool send_all(int fd, const std::string &data)
        {
            std::size_t sent = 0;
            while (sent < data.size())
            {
                const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
                if (n <= 0)
                    return false;
                sent += static_cast<std::size_t>(n);
            }
            return true;
        }

        static constexpr std::size_t max_frame_ = 1 << 20;

        std::shared_ptr<const Controller> controller_;
        int fd_ = -1;
        int port_ = 0;
        std::atomic<bool> stopping_{false};
        std::mutex mutex_;
        std::vector<std::jthread> workers_;
    };
}
