#include "hesplit/wire/protocol.h"

#include "hesplit/error.h"

namespace hesplit::wire {

const char* party_name(Party p) { return p == Party::client ? "client" : "server"; }

void ProtocolMachine::configure(const TrainConfig& cfg) {
    if (cfg.batches_per_epoch == 0 || cfg.epochs == 0) {
        throw InvalidStateError("protocol needs a resolved batch count and at least one epoch");
    }
    encrypted_ = cfg.mode == Mode::encrypted;
    encrypted_eval_ = cfg.encrypted_eval;
    batches_ = cfg.batches_per_epoch;
    epochs_ = cfg.epochs;
    configured_ = true;
}

void ProtocolMachine::reject(Tag tag, Party sender) const {
    throw ProtocolError(std::string("unexpected ") + tag_name(tag) + " from " + party_name(sender) +
                        " at epoch " + std::to_string(epoch_) + ", batch " + std::to_string(batch_));
}

void ProtocolMachine::after_epoch_boundary() {
    state_ = epoch_ == epochs_ ? State::eval_idle : State::batch_idle;
}

void ProtocolMachine::advance(Tag tag, Party sender) {
    const bool c = sender == Party::client;
    const Tag act = encrypted_ ? Tag::act_enc : Tag::act_plain;
    const Tag out = encrypted_ ? Tag::out_enc : Tag::out_plain;
    const Tag eval_act = encrypted_eval_ ? Tag::act_enc : Tag::act_plain;
    const Tag eval_out = encrypted_eval_ ? Tag::out_enc : Tag::out_plain;
    switch (state_) {
        case State::client_hello:
            if (!(c && tag == Tag::hello)) reject(tag, sender);
            state_ = State::server_hello;
            return;
        case State::server_hello:
            if (!(!c && tag == Tag::hello)) reject(tag, sender);
            state_ = State::client_sync;
            return;
        case State::client_sync:
            if (!(c && tag == Tag::sync)) reject(tag, sender);
            state_ = State::server_sync;
            return;
        case State::server_sync:
            if (!(!c && tag == Tag::sync)) reject(tag, sender);
            if (!configured_) throw InvalidStateError("protocol session not configured before SYNC completed");
            state_ = (encrypted_ || encrypted_eval_) ? State::ctx_pub : State::batch_idle;
            return;
        case State::ctx_pub:
            if (!(c && tag == Tag::ctx_pub)) reject(tag, sender);
            state_ = State::batch_idle;
            return;
        case State::batch_idle:
            if (c && batch_ < batches_ && tag == act) {
                state_ = State::await_out;
            } else if (c && batch_ == batches_ && tag == Tag::epoch_end) {
                state_ = State::epoch_echo;
            } else {
                reject(tag, sender);
            }
            return;
        case State::await_out:
            if (!(!c && tag == out)) reject(tag, sender);
            state_ = State::await_grad_out;
            return;
        case State::await_grad_out:
            if (!(c && tag == Tag::grad_out)) reject(tag, sender);
            state_ = encrypted_ ? State::await_grad_w : State::await_grad_act;
            return;
        case State::await_grad_w:
            if (!(c && tag == Tag::grad_w)) reject(tag, sender);
            state_ = State::await_grad_act;
            return;
        case State::await_grad_act:
            if (!(!c && tag == Tag::grad_act)) reject(tag, sender);
            ++batch_;
            state_ = State::batch_idle;
            return;
        case State::epoch_echo:
            if (!(!c && tag == Tag::epoch_end)) reject(tag, sender);
            ++epoch_;
            batch_ = 0;
            after_epoch_boundary();
            return;
        case State::eval_idle:
            if (c && tag == eval_act) {
                state_ = State::eval_out;
            } else if (c && tag == Tag::bye) {
                state_ = State::bye_echo;
            } else {
                reject(tag, sender);
            }
            return;
        case State::eval_out:
            if (!(!c && tag == eval_out)) reject(tag, sender);
            state_ = State::eval_idle;
            return;
        case State::bye_echo:
            if (!(!c && tag == Tag::bye)) reject(tag, sender);
            state_ = State::closed;
            return;
        case State::closed:
            reject(tag, sender);
    }
}

}  // namespace hesplit::wire
