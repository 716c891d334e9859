#include <condition_variable>
#include <vector>
#include <mutex>

#include "hesplit/error.h"
#include "hesplit/wire/transport.h"

namespace hesplit::wire {

namespace {

struct Queue {
    std::mutex mu;
    std::condition_variable cv;
    std::vector<std::uint8_t> bytes;
    std::size_t head = 0;  // first unread byte

    std::size_t available() const { return bytes.size() - head; }
    bool closed = false;
};

class PipeEnd final : public Transport {
public:
    PipeEnd(std::shared_ptr<Queue> in, std::shared_ptr<Queue> out) : in_(std::move(in)), out_(std::move(out)) {}
    ~PipeEnd() override { close(); }

    void write_all(std::span<const std::uint8_t> data) override {
        std::lock_guard lock(out_->mu);
        if (out_->closed) throw TransportError("pipe closed while writing", 0);
        if (out_->head > 0 && out_->head * 2 >= out_->bytes.size()) {
            out_->bytes.erase(out_->bytes.begin(), out_->bytes.begin() + static_cast<std::ptrdiff_t>(out_->head));
            out_->head = 0;
        }
        out_->bytes.insert(out_->bytes.end(), data.begin(), data.end());
        out_->cv.notify_all();
    }

    void read_exact(std::span<std::uint8_t> data) override {
        std::unique_lock lock(in_->mu);
        std::size_t got = 0;
        while (got < data.size()) {
            in_->cv.wait(lock, [&] { return in_->available() > 0 || in_->closed; });
            if (in_->available() == 0) throw TransportError("pipe closed while reading", got);
            const std::size_t n = std::min(data.size() - got, in_->available());
            std::copy_n(in_->bytes.begin() + static_cast<std::ptrdiff_t>(in_->head), n,
                        data.begin() + static_cast<std::ptrdiff_t>(got));
            in_->head += n;
            got += n;
        }
    }

    void close() override {
        for (auto* q : {in_.get(), out_.get()}) {
            std::lock_guard lock(q->mu);
            q->closed = true;
            q->cv.notify_all();
        }
    }

private:
    std::shared_ptr<Queue> in_, out_;
};

}  // namespace

std::pair<TransportPtr, TransportPtr> memory_pipe() {
    auto a = std::make_shared<Queue>(), b = std::make_shared<Queue>();
    return {std::make_unique<PipeEnd>(a, b), std::make_unique<PipeEnd>(b, a)};
}

}  // namespace hesplit::wire
