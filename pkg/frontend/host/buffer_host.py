#!/usr/bin/env python3
"""Line-protocol host for the replay buffer bindings.

Reads one JSON request per line on stdin, writes one JSON response per line
on stdout.  Each call delegates to a freshreplay ReplayBuffer, so semantics
are exactly the native ones; the host itself holds no state beyond the
buffer and never retains returned batches.

Request:  {"id": n, "op": <op>, ...op fields}
Response: {"id": n, "ok": true, "result": {...}}
        | {"id": n, "ok": false, "error": {"code": "E_*", "message": str}}

Ops and their fields:
  open     config: {capacity, alpha, beta_start, beta_end, beta_anneal_steps,
                    tau (number or "inf"), epsilon, base_kind,
                    eviction_policy, seed}
  insert   record: {steps: [[state_id, action_id, reward, behavior_logprob,
                             next_state_id, terminal(0|1)], ...],
                    episode_return, collection_step,
                    signal?: {reward?, advantage?, td_error?}}
  sample   batch_size, beta
  refresh  current_step
  snapshot (no fields; returns the documented dump lines)
  close    (no fields; host exits after responding)

Error codes: E_SCHEMA, E_CLOSED, E_EMPTY_BUFFER, E_FROZEN_BASE,
E_UNKNOWN_ID, E_BAD_ARG, E_INTERNAL.

Protocol version: 1.0.0 (semantic: breaking changes bump the major).
"""

import json
import math
import sys

import numpy as np

from freshreplay import (
    EmptyBufferError,
    FrozenBasePriorityError,
    PriorityConfig,
    PrioritySignal,
    ReplayBuffer,
    Step,
    Trajectory,
    UnknownTrajectoryError,
)

PROTOCOL_VERSION = "1.0.0"


class HostError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _require(payload, key, kinds):
    if key not in payload:
        raise HostError("E_SCHEMA", f"missing field {key!r}")
    value = payload[key]
    if not isinstance(value, kinds) or isinstance(value, bool):
        raise HostError("E_SCHEMA", f"field {key!r} has wrong type")
    return value


def _parse_tau(raw):
    if raw == "inf":
        return math.inf
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    raise HostError("E_SCHEMA", "tau must be a number or \"inf\"")


def _build_buffer(config):
    if not isinstance(config, dict):
        raise HostError("E_SCHEMA", "config must be an object")
    known = {
        "capacity", "alpha", "beta_start", "beta_end", "beta_anneal_steps",
        "tau", "epsilon", "base_kind", "eviction_policy", "seed",
    }
    unknown = set(config) - known
    if unknown:
        raise HostError("E_SCHEMA", f"unknown config fields: {sorted(unknown)}")
    prio = PriorityConfig(
        alpha=float(config.get("alpha", 0.6)),
        beta_start=float(config.get("beta_start", 0.4)),
        beta_end=float(config.get("beta_end", 1.0)),
        beta_anneal_steps=int(config.get("beta_anneal_steps", 0)),
        tau=_parse_tau(config.get("tau", 500.0)),
        epsilon=float(config.get("epsilon", 0.01)),
        base_kind=str(config.get("base_kind", "reward_magnitude")),
    )
    try:
        return ReplayBuffer(
            capacity=int(config.get("capacity", 1024)),
            priority=prio,
            eviction_policy=str(config.get("eviction_policy", "lowest_effective_priority")),
            rng=np.random.default_rng(int(config.get("seed", 0))),
        )
    except ValueError as exc:
        raise HostError("E_BAD_ARG", str(exc)) from None


def _parse_record(record):
    if not isinstance(record, dict):
        raise HostError("E_SCHEMA", "record must be an object")
    raw_steps = _require(record, "steps", list)
    if not raw_steps:
        raise HostError("E_SCHEMA", "record.steps must be non-empty")
    steps = []
    for i, tup in enumerate(raw_steps):
        if not isinstance(tup, list) or len(tup) != 6:
            raise HostError("E_SCHEMA", f"step {i} must be a 6-element array")
        state, action, reward, logprob, next_state, terminal = tup
        if terminal not in (0, 1):
            raise HostError("E_SCHEMA", f"step {i}: terminal must be 0 or 1")
        steps.append(
            Step(int(state), int(action), float(reward), float(logprob), int(next_state), bool(terminal))
        )
    collection_step = _require(record, "collection_step", int)
    episode_return = _require(record, "episode_return", (int, float))
    traj = Trajectory(tuple(steps), episode_return, collection_step)
    raw_signal = record.get("signal")
    if raw_signal is None:
        signal = PrioritySignal(reward=episode_return)
    else:
        if not isinstance(raw_signal, dict):
            raise HostError("E_SCHEMA", "signal must be an object")
        signal = PrioritySignal(
            reward=raw_signal.get("reward"),
            advantage=raw_signal.get("advantage"),
            td_error=raw_signal.get("td_error"),
        )
    return traj, signal


class Host:
    def __init__(self):
        self.buffer = None
        self.closed = False

    def dispatch(self, op, payload):
        if self.closed:
            raise HostError("E_CLOSED", "handle already closed")
        if op == "open":
            if self.buffer is not None:
                raise HostError("E_BAD_ARG", "buffer already open")
            self.buffer = _build_buffer(payload.get("config", {}))
            return {"protocol_version": PROTOCOL_VERSION, "capacity": self.buffer.capacity}
        if op == "close":
            self.closed = True
            return {"closed": True}
        if self.buffer is None:
            raise HostError("E_CLOSED", "open() must come first")
        if op == "insert":
            traj, signal = _parse_record(payload.get("record"))
            current_step = _require(payload, "current_step", int) if "current_step" in payload else traj.collection_step
            try:
                slot = self.buffer.insert(traj, signal, current_step)
            except ValueError as exc:
                raise HostError("E_BAD_ARG", str(exc)) from None
            entry = self.buffer._entries[slot]
            return {"slot": slot, "trajectory_id": entry.trajectory.trajectory_id}
        if op == "sample":
            batch_size = _require(payload, "batch_size", int)
            beta = _require(payload, "beta", (int, float))
            try:
                batch = self.buffer.sample_stratified(batch_size, float(beta))
            except EmptyBufferError as exc:
                raise HostError("E_EMPTY_BUFFER", str(exc)) from None
            except ValueError as exc:
                raise HostError("E_BAD_ARG", str(exc)) from None
            return {
                "trajectory_ids": [e.trajectory.trajectory_id for e in batch.entries],
                "slots": [e.slot for e in batch.entries],
                "sample_probs": batch.sample_probs.tolist(),
                "is_weights": batch.is_weights.tolist(),
                "buffer_size": batch.buffer_size_at_sample,
            }
        if op == "refresh":
            current_step = _require(payload, "current_step", int)
            try:
                report = self.buffer.refresh_priorities(current_step)
            except ValueError as exc:
                raise HostError("E_BAD_ARG", str(exc)) from None
            return {"entries_scanned": report.entries_scanned, "wall_time": report.wall_time}
        if op == "snapshot":
            return {"lines": self.buffer.snapshot_lines()}
        raise HostError("E_SCHEMA", f"unknown op {op!r}")


def main():
    host = Host()
    out = sys.stdout
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        req_id = None
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise HostError("E_SCHEMA", "request must be a JSON object")
            req_id = request.get("id")
            op = request.get("op")
            if not isinstance(op, str):
                raise HostError("E_SCHEMA", "missing op")
            result = host.dispatch(op, request)
            out.write(json.dumps({"id": req_id, "ok": True, "result": result}) + "\n")
        except HostError as exc:
            out.write(
                json.dumps(
                    {"id": req_id, "ok": False, "error": {"code": exc.code, "message": str(exc)}}
                )
                + "\n"
            )
        except json.JSONDecodeError as exc:
            out.write(
                json.dumps(
                    {"id": req_id, "ok": False, "error": {"code": "E_SCHEMA", "message": str(exc)}}
                )
                + "\n"
            )
        except Exception as exc:  # never crash the host on a bad request
            out.write(
                json.dumps(
                    {"id": req_id, "ok": False, "error": {"code": "E_INTERNAL", "message": str(exc)}}
                )
                + "\n"
            )
        out.flush()
        if host.closed:
            break


if __name__ == "__main__":
    main()
