"""Deterministic attack-trace generator for desk-scale testing.

Each scenario writes a small fixture set: an event file, the policy and
signature database it plays against, a ready-to-use config, and a sidecar
with the expected judgment for every event. The sidecar is constructed by
the scripts below, never by running the engine, so it can serve as ground
truth for end-to-end tests.
"""

from __future__ import annotations

import json
import random
from datetime import datetime, timedelta, timezone

from .errors import EngineError


class UnknownScenario(EngineError):
    """The requested scenario name is not one the generator knows."""


SCENARIOS = ("benign", "multistage", "flood", "policy-violation")

_POLICY = """\
# allow-list for the simulated host
allow alice /bin/* read /home/alice/*
allow alice /bin/* write /home/alice/*
allow alice /usr/bin/mail send mail:*
allow bob /bin/* read /home/bob/*
allow mallory /bin/* read /home/mallory/*
allow mallory /usr/bin/sendmail connect host:*
"""

_SIGNATURES = {
    "stages": ["recon", "exploit", "root", "flood"],
    "edges": [["recon", "exploit"], ["exploit", "root"]],
    "signatures": [
        {
            "id": "portscan-sweep",
            "stage": "recon",
            "match": {"subject": "*", "program": "/usr/bin/nmap", "op": "scan", "object": "host:*"},
        },
        {
            "id": "remote-login-exploit",
            "stage": "exploit",
            "match": {"subject": "*", "program": "/usr/bin/ssh", "op": "login", "object": "host:*"},
        },
        {
            "id": "setuid-root-shell",
            "stage": "root",
            "match": {"subject": "*", "program": "*", "op": "setuid", "object": "uid:0"},
        },
        {
            "id": "smtp-connect-flood",
            "stage": "flood",
            "match": {"subject": "*", "program": "/usr/bin/sendmail", "op": "connect", "object": "host:25"},
            "threshold": {"count": 3, "window": 5},
        },
    ],
    "scenarios": [
        {
            "id": "remote-root-intrusion",
            "steps": ["portscan-sweep", "remote-login-exploit", "setuid-root-shell"],
        }
    ],
}

_CONFIG = {
    "policy": "policy.allow",
    "signatures": "signatures.json",
    "maps": [],
    "models": None,
    "options": {},
}


class _TraceBuilder:
    """Accumulates events and their by-construction expected outputs."""

    def __init__(self, seed: int):
        self.rng = random.Random(seed)
        self.clock = datetime(2025, 1, 1, tzinfo=timezone.utc)
        self.events: list[dict] = []
        self.outputs: list[dict] = []
        self.labels: list[str] = []

    def _emit(self, subject, program, op, object, label, output, trigger):
        self.clock += timedelta(seconds=self.rng.randint(2, 45))
        ts = self.clock.isoformat().replace("+00:00", "Z")
        self.events.append(
            {
                "ts": ts,
                "subject": subject,
                "program": program,
                "object": object,
                "op": op,
                "level": 0,
                "attrs": {"pid": str(self.rng.randint(100, 65535))},
            }
        )
        self.outputs.append(
            {
                "event_index": len(self.events) - 1,
                "ts": ts,
                "subject": subject,
                "output": output,
                "trigger": trigger,
                "post_halt": False,
            }
        )
        self.labels.append(label)

    def secure(self, subject, program, op, object, label="benign"):
        self._emit(subject, program, op, object, label, "Secure", [program, op, object])

    def unsecure(self, subject, program, op, object, label):
        self._emit(subject, program, op, object, label, "UnSecure", [program, op, object])

    def stage(self, subject, program, op, object, stage, signature, label):
        output = {"stage": stage, "out_of_sequence": False}
        self._emit(subject, program, op, object, label, output, signature)

    def alice_filler(self, n=1):
        # matrix-permitted desk work, guaranteed not to match any signature
        for _ in range(n):
            name = self.rng.choice(("notes.txt", "todo.md", "report.tex", "inbox.txt"))
            program = self.rng.choice(("/bin/cat", "/bin/less"))
            self.secure("alice", program, "read", f"/home/alice/{name}")


def _benign(b: _TraceBuilder):
    b.alice_filler(2)
    b.secure("alice", "/bin/vi", "write", "/home/alice/notes.txt")
    b.alice_filler(1)
    b.secure("alice", "/usr/bin/mail", "send", "mail:bob@example.com")
    b.secure("alice", "/bin/vi", "write", "/home/alice/todo.md")
    b.alice_filler(2)


def _multistage(b: _TraceBuilder):
    # probe, then remote login, then the forbidden privilege grab
    b.alice_filler(1)
    b.secure("mallory", "/bin/cat", "read", "/home/mallory/recon-notes.txt")
    b.secure("alice", "/usr/bin/mail", "send", "mail:carol@example.com")
    b.stage("mallory", "/usr/bin/nmap", "scan", "host:db01", "recon", "portscan-sweep", "probe")
    b.secure("mallory", "/bin/cat", "read", "/home/mallory/scan-results.txt")
    b.alice_filler(1)
    b.stage("mallory", "/usr/bin/ssh", "login", "host:db01", "exploit", "remote-login-exploit", "r2l")
    b.unsecure("mallory", "/bin/sh", "write", "/etc/shadow", "u2r")
    b.alice_filler(1)


def _flood(b: _TraceBuilder):
    # the third connect is the one that crosses count=3 within window=5
    b.alice_filler(1)
    b.secure("mallory", "/bin/cat", "read", "/home/mallory/targets.txt")
    b.secure("mallory", "/usr/bin/sendmail", "connect", "host:25", label="dos")
    b.secure("mallory", "/usr/bin/sendmail", "connect", "host:25", label="dos")
    b.secure("mallory", "/bin/cat", "read", "/home/mallory/queue.txt")
    b.stage("mallory", "/usr/bin/sendmail", "connect", "host:25", "flood", "smtp-connect-flood", "dos")
    b.alice_filler(1)


def _policy_violation(b: _TraceBuilder):
    b.secure("bob", "/bin/cat", "read", "/home/bob/mbox")
    b.alice_filler(1)
    b.secure("bob", "/bin/less", "read", "/home/bob/notes.txt")
    b.unsecure("bob", "/bin/cat", "read", "/etc/passwd", "violation")
    b.alice_filler(1)


_SCRIPTS = {
    "benign": (_benign, {"alice": "benign"}),
    "multistage": (_multistage, {"alice": "benign", "mallory": "attacker"}),
    "flood": (_flood, {"alice": "benign", "mallory": "attacker"}),
    "policy-violation": (_policy_violation, {"alice": "benign", "bob": "attacker"}),
}


def simulate(scenario: str, seed: int) -> dict[str, str]:
    """Build one scenario's fixture files as {filename: content}.

    Deterministic: the same (scenario, seed) always produces byte-identical
    content.
    """
    if scenario not in _SCRIPTS:
        raise UnknownScenario(
            f"unknown scenario {scenario!r}; pick one of {', '.join(SCENARIOS)}"
        )
    script, roles = _SCRIPTS[scenario]
    builder = _TraceBuilder(seed)
    script(builder)

    alerts = [o for o in builder.outputs if o["output"] != "Secure"]
    unsecure = sum(1 for o in builder.outputs if o["output"] == "UnSecure")
    sidecar = {
        "scenario": scenario,
        "seed": seed,
        "subjects": roles,
        "labels": builder.labels,
        "outputs": builder.outputs,
        "alerts": alerts,
        "summary": {
            "secure": sum(1 for o in builder.outputs if o["output"] == "Secure"),
            "unsecure": unsecure,
            "stage-alerts": sum(1 for o in builder.outputs if isinstance(o["output"], dict)),
            "subjects": len({e["subject"] for e in builder.events}),
            "skipped-lines": 0,
        },
        "exit_code": 2 if unsecure else 0,
    }

    event_lines = "".join(
        json.dumps(event, separators=(", ", ": ")) + "\n" for event in builder.events
    )
    return {
        "events.ndjson": event_lines,
        "expected.json": json.dumps(sidecar, indent=2) + "\n",
        "policy.allow": _POLICY,
        "signatures.json": json.dumps(_SIGNATURES, indent=2) + "\n",
        "config.json": json.dumps(_CONFIG, indent=2) + "\n",
    }
