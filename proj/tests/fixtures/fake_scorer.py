#!/usr/bin/env python3
"""Scorer stand-in for protocol tests.

Scores 0.5 (categorize -> "caption"). Ids starting with "slow" are answered
after a 1 s delay, ids starting with "big" get a score of 1.7, "junk" gets a
non-JSON line, and "die" makes the process exit without answering.
"""
import json
import sys
import time

for line in sys.stdin:
    req = json.loads(line)
    rid = req["id"]
    if rid.startswith("die"):
        sys.exit(3)
    if rid.startswith("slow"):
        time.sleep(1.0)
    if rid.startswith("junk"):
        sys.stdout.write("not json\n")
    elif req["mode"] == "categorize":
        sys.stdout.write(json.dumps({"id": rid, "category": "caption"}) + "\n")
    else:
        score = 1.7 if rid.startswith("big") else 0.5
        sys.stdout.write(json.dumps({"id": rid, "score": score, "metadata": {"model": "fake"}}) + "\n")
    sys.stdout.flush()
