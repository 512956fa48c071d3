#!/usr/bin/env python3
"""Execute a parity script directly against the native buffer.

Reads the JSON call script produced by gen_script.py and replays it through
the host dispatch layer in-process (no subprocess, no wire), then prints
the final snapshot dump.  Comparing this output byte-for-byte with the dump
obtained through the TypeScript bindings is the parity oracle.
"""

import argparse
import json
import sys

from buffer_host import Host


def run_script(lines):
    host = Host()
    snapshot = None
    for line in lines:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        result = host.dispatch(request["op"], request)
        if request["op"] == "snapshot":
            snapshot = result["lines"]
    if snapshot is None:
        raise SystemExit("script contained no snapshot op")
    return snapshot


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("script", help="call script (JSON lines), '-' for stdin")
    args = parser.parse_args()
    if args.script == "-":
        lines = sys.stdin.readlines()
    else:
        with open(args.script, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    for line in run_script(lines):
        print(line)


if __name__ == "__main__":
    main()
