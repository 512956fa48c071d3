#!/usr/bin/env python3
"""Generate a randomized buffer call script for the bindings parity check.

Writes one JSON call per line: insert / sample / refresh ops against a
single buffer, plus a leading open config.  The same file is executed once
through the TypeScript bindings and once natively; byte-identical snapshot
dumps afterwards mean the boundary is faithful.
"""

import argparse
import json
import sys

import numpy as np


def generate(seed: int, calls: int, capacity: int = 512):
    rng = np.random.default_rng(seed)
    lines = [
        json.dumps(
            {
                "op": "open",
                "config": {
                    "capacity": capacity,
                    "alpha": 0.6,
                    "tau": 200.0,
                    "epsilon": 0.01,
                    "base_kind": "reward_magnitude",
                    "eviction_policy": "lowest_effective_priority",
                    "seed": seed,
                },
            }
        )
    ]
    step = 0
    inserted = 0
    for _ in range(calls):
        roll = rng.random()
        if inserted == 0 or roll < 0.55:
            n_steps = int(rng.integers(1, 5))
            rewards = rng.uniform(-5.0, 5.0, n_steps)
            steps = []
            for i in range(n_steps):
                steps.append(
                    [
                        int(rng.integers(0, 16)),
                        int(rng.integers(0, 4)),
                        float(rewards[i]),
                        float(-rng.uniform(0.01, 3.0)),
                        int(rng.integers(0, 16)),
                        1 if i == n_steps - 1 else 0,
                    ]
                )
            record = {
                "steps": steps,
                # sequential sum, matching how the trajectory invariant is checked
                "episode_return": sum(float(r) for r in rewards),
                "collection_step": step,
            }
            lines.append(json.dumps({"op": "insert", "record": record, "current_step": step}))
            inserted += 1
        elif roll < 0.85:
            lines.append(
                json.dumps(
                    {
                        "op": "sample",
                        "batch_size": int(rng.integers(1, 17)),
                        "beta": float(rng.uniform(0.0, 1.0)),
                    }
                )
            )
        else:
            step += int(rng.integers(1, 4))
            lines.append(json.dumps({"op": "refresh", "current_step": step}))
        step += 1
    lines.append(json.dumps({"op": "snapshot"}))
    return lines


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--calls", type=int, default=10_000)
    parser.add_argument("--capacity", type=int, default=512)
    parser.add_argument("--out", default="-")
    args = parser.parse_args()
    lines = generate(args.seed, args.calls, args.capacity)
    text = "\n".join(lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)


if __name__ == "__main__":
    main()
