#pragma once

#include <cstddef>

#include "hesplit/config.h"
#include "hesplit/wire/message.h"

namespace hesplit::wire {

enum class Party { client, server };

const char* party_name(Party p);

// Accepts exactly the session's message order:
//   HELLO(c) HELLO(s) SYNC(c) SYNC(s) [CTX_PUB(c)]
//   per epoch, N batches of
//     plain:     ACT_PLAIN(c) OUT_PLAIN(s) GRAD_OUT(c) GRAD_ACT(s)
//     encrypted: ACT_ENC(c) OUT_ENC(s) GRAD_OUT(c) GRAD_W(c) GRAD_ACT(s)
//   then EPOCH_END(c) EPOCH_END(s)
//   evaluation: any number of ACT(c) OUT(s), then BYE(c) BYE(s).
// Anything else raises ProtocolError.
class ProtocolMachine {
public:
    // Must happen before the server's SYNC; fixes mode and counts.
    void configure(const TrainConfig& cfg);
    void advance(Tag tag, Party sender);

    bool configured() const noexcept { return configured_; }
    bool finished() const noexcept { return state_ == State::closed; }
    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }
    bool in_evaluation() const noexcept { return state_ == State::eval_idle || state_ == State::eval_out; }

private:
    enum class State {
        client_hello,
        server_hello,
        client_sync,
        server_sync,
        ctx_pub,
        batch_idle,
        await_out,
        await_grad_out,
        await_grad_w,
        await_grad_act,
        epoch_echo,
        eval_idle,
        eval_out,
        bye_echo,
        closed,
    };

    [[noreturn]] void reject(Tag tag, Party sender) const;
    void after_epoch_boundary();

    State state_ = State::client_hello;
    bool configured_ = false;
    bool encrypted_ = false;
    bool encrypted_eval_ = false;
    std::size_t batches_ = 0;
    std::size_t epochs_ = 0;
    std::size_t epoch_ = 0;
    std::size_t batch_ = 0;
};

}  // namespace hesplit::wire
