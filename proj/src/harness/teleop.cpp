#include "safewalk/harness/teleop.hpp"

#include <atomic>
#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "safewalk/error.hpp"

namespace safewalk::harness {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using json = nlohmann::json;

namespace {

// A client that falls this far behind is disconnected rather than buffered forever.
constexpr std::size_t kMaxBacklog = 4096;

}  // namespace

std::string state_frame(const env::TrajectoryRecord& r, std::size_t fall_count, const env::Workspace& ws) {
  json j = {{"type", "state"},
            {"t", r.t},
            {"x", r.x},
            {"y", r.y},
            {"yaw", r.yaw},
            {"roll", r.roll},
            {"pitch", r.pitch},
            {"f_s", r.f_s},
            {"reward", r.reward},
            {"task", r.task},
            {"fall_count", fall_count},
            {"workspace", {{"w", 2.0 * ws.half_width}, {"h", 2.0 * ws.half_height}}}};
  return j.dump();
}

std::string error_frame(const std::string& message) { return json{{"type", "error"}, {"message", message}}.dump(); }

class Session;

struct TeleopServer::Impl {
  struct Command {
    std::weak_ptr<Session> from;
    std::string text;
  };

  Impl(tasks::ComposedController c, TeleopOptions o)
      : controller(std::move(c)), options(std::move(o)), acceptor(ioc) {
    task = controller.tasks()[0].name;
  }

  void accept();
  void simulate();
  void handle(const Command& cmd);
  void broadcast(std::shared_ptr<const std::string> frame);
  void join(const std::shared_ptr<Session>& s);
  void leave(const std::shared_ptr<Session>& s);
  void enqueue(Command cmd);

  tasks::ComposedController controller;
  TeleopOptions options;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::thread net_thread;
  std::thread sim_thread;

  mutable std::mutex mutex;
  std::condition_variable wake;
  std::deque<Command> commands;
  std::set<std::shared_ptr<Session>> sessions;
  bool stopping = false;
  bool stopped = false;
  std::atomic<bool> client_paused{false};
  std::atomic<std::uint64_t> step_count{0};
  std::string task;
  unsigned short bound_port = 0;
};

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, TeleopServer::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(beast::bind_front_handler(&Session::on_accept, shared_from_this()));
  }

  void send(std::shared_ptr<const std::string> frame) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), frame = std::move(frame)] {
      if (self->closed_) return;
      if (self->outbox_.size() >= kMaxBacklog) {
        self->close();
        return;
      }
      self->outbox_.push_back(frame);
      if (self->outbox_.size() == 1) self->write_next();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).socket().close(ec);
    server_.leave(shared_from_this());
  }

  void shutdown() {
    asio::post(ws_.get_executor(), [self = shared_from_this()] { self->close(); });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    ws_.text(true);
    server_.join(shared_from_this());
    read();
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&Session::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      close();
      return;
    }
    server_.enqueue({weak_from_this(), beast::buffers_to_string(buffer_.data())});
    buffer_.consume(buffer_.size());
    read();
  }

  void write_next() {
    ws_.async_write(asio::buffer(*outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->close();
                        return;
                      }
                      self->outbox_.pop_front();
                      if (!self->outbox_.empty()) self->write_next();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  TeleopServer::Impl& server_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> outbox_;
  bool closed_ = false;
};

void TeleopServer::Impl::join(const std::shared_ptr<Session>& s) {
  {
    std::lock_guard lock(mutex);
    sessions.insert(s);
  }
  wake.notify_all();
}

void TeleopServer::Impl::leave(const std::shared_ptr<Session>& s) {
  std::lock_guard lock(mutex);
  sessions.erase(s);
}

void TeleopServer::Impl::enqueue(Command cmd) {
  {
    std::lock_guard lock(mutex);
    commands.push_back(std::move(cmd));
  }
  wake.notify_all();
}

void TeleopServer::Impl::accept() {
  acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<Session>(std::move(socket), *this)->start();
    accept();
  });
}

void TeleopServer::Impl::broadcast(std::shared_ptr<const std::string> frame) {
  std::vector<std::shared_ptr<Session>> targets;
  {
    std::lock_guard lock(mutex);
    targets.assign(sessions.begin(), sessions.end());
  }
  for (const auto& s : targets) s->send(frame);
}

void TeleopServer::Impl::handle(const Command& cmd) {
  auto reply_error = [&](const std::string& message) {
    if (auto s = cmd.from.lock()) s->send(std::make_shared<const std::string>(error_frame(message)));
  };
  json j;
  try {
    j = json::parse(cmd.text);
  } catch (const json::parse_error&) {
    reply_error("malformed message: not valid JSON");
    return;
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    reply_error("malformed message: expected an object with a string 'type'");
    return;
  }
  const std::string type = j["type"];
  if (type == "set_task") {
    if (!j.contains("name") || !j["name"].is_string()) {
      reply_error("set_task needs a string 'name'");
      return;
    }
    const std::string name = j["name"];
    try {
      controller.tasks().index_of(name);
    } catch (const ContractViolation&) {
      reply_error("unknown task '" + name + "'");
      return;
    }
    task = name;
  } else if (type == "pause") {
    client_paused = true;
  } else if (type == "resume") {
    client_paused = false;
  } else if (type == "reset") {
    controller.reset();
  } else {
    reply_error("unknown message type '" + type + "'");
  }
}

void TeleopServer::Impl::simulate() {
  using clock = std::chrono::steady_clock;
  const auto period = options.pace > 0.0
                          ? std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(env::kDt / options.pace))
                          : clock::duration::zero();
  auto next = clock::now();
  for (;;) {
    std::deque<Command> pending;
    {
      std::unique_lock lock(mutex);
      wake.wait(lock, [&] { return stopping || !commands.empty() || (!sessions.empty() && !client_paused); });
      if (stopping) return;
      pending.swap(commands);
    }
    for (const auto& cmd : pending) handle(cmd);
    bool run = false;
    {
      std::lock_guard lock(mutex);
      run = !sessions.empty() && !client_paused;
    }
    if (!run) {
      next = clock::now();
      continue;
    }
    const env::TrajectoryRecord rec = controller.step(task);
    ++step_count;
    if (options.on_step) options.on_step(rec);
    broadcast(std::make_shared<const std::string>(
        state_frame(rec, controller.fall_count(), controller.settings().workspace)));
    if (period > clock::duration::zero()) {
      next += period;
      const auto now = clock::now();
      if (next < now) next = now;
      std::unique_lock lock(mutex);
      wake.wait_until(lock, next, [&] { return stopping; });
    }
  }
}

TeleopServer::TeleopServer(tasks::ComposedController controller, TeleopOptions options)
    : impl_(std::make_unique<Impl>(std::move(controller), std::move(options))) {}

TeleopServer::~TeleopServer() { stop(); }

void TeleopServer::start() {
  Impl& s = *impl_;
  beast::error_code ec;
  const tcp::endpoint endpoint(asio::ip::make_address(s.options.address, ec), s.options.port);
  if (ec) throw std::runtime_error("invalid address '" + s.options.address + "'");
  s.acceptor.open(endpoint.protocol(), ec);
  if (!ec) s.acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) s.acceptor.bind(endpoint, ec);
  if (!ec) s.acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw std::runtime_error("cannot listen on " + s.options.address + ":" + std::to_string(s.options.port) +
                             ": " + ec.message());
  }
  s.bound_port = s.acceptor.local_endpoint().port();
  s.accept();
  s.net_thread = std::thread([&s] { s.ioc.run(); });
  s.sim_thread = std::thread([&s] { s.simulate(); });
}

void TeleopServer::stop() {
  Impl& s = *impl_;
  {
    std::lock_guard lock(s.mutex);
    if (s.stopped) return;
    s.stopping = true;
    s.stopped = true;
  }
  s.wake.notify_all();
  if (s.sim_thread.joinable()) s.sim_thread.join();
  asio::post(s.ioc, [&s] {
    beast::error_code ec;
    s.acceptor.close(ec);
  });
  std::vector<std::shared_ptr<Session>> open;
  {
    std::lock_guard lock(s.mutex);
    open.assign(s.sessions.begin(), s.sessions.end());
  }
  for (const auto& session : open) session->shutdown();
  // One network thread, so this runs after the closes queued above.
  asio::post(s.ioc, [&s] { s.ioc.stop(); });
  if (s.net_thread.joinable()) s.net_thread.join();
  std::lock_guard lock(s.mutex);
  s.sessions.clear();
}

void TeleopServer::wait() {
  Impl& s = *impl_;
  std::unique_lock lock(s.mutex);
  s.wake.wait(lock, [&] { return s.stopping; });
}

unsigned short TeleopServer::port() const { return impl_->bound_port; }

std::size_t TeleopServer::client_count() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->sessions.size();
}

std::uint64_t TeleopServer::steps() const { return impl_->step_count; }

bool TeleopServer::paused() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->sessions.empty() || impl_->client_paused;
}

}  // namespace safewalk::harness
