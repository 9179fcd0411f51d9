"""
End-to-end scenario through the CLI.

keygen -> publish one skill of each publication type -> five-auditor audit
-> tally -> licensed purchase -> load every skill -> verify the log.
"""

import argparse
import io
import json
import shutil
import sys
import tempfile
import time
from contextlib import redirect_stdout
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from canon_crypto import content_hash
from cli.main import main as sigil

AUDITORS = [f"auditor{i}" for i in range(1, 6)]
TYPES = ["transparent", "licensed", "sealed", "committed"]
MANIFEST = {"tools": ["read_file", "web_search"], "scopes": ["workspace"], "bounds": ["no_network_writes"]}


class ScenarioFailed(Exception):
    pass


class Runner:
    def __init__(self, workspace: Path):
        self.workspace = workspace
        self.clock = 1_700_000_000

    def __call__(self, *argv, expect: int = 0):
        self.clock += 1
        out = io.StringIO()
        with redirect_stdout(out):
            code = sigil(["--workspace", str(self.workspace), "--time", str(self.clock), *argv])
        if code != expect:
            raise ScenarioFailed(f"`sigil {' '.join(argv)}` exited {code}, expected {expect}")
        text = out.getvalue()
        return json.loads(text) if text.strip().startswith("{") else text


def write_skill(root: Path, ptype: str) -> Path:
    skill_dir = root / "skills" / f"{ptype}-helper"
    skill_dir.mkdir(parents=True, exist_ok=True)
    (skill_dir / "SKILL.md").write_text(
        f"# {ptype} helper\n\nSummarize files in the workspace. Never write to the network.\n",
        encoding="utf-8",
    )
    (skill_dir / "manifest.json").write_text(json.dumps(MANIFEST), encoding="utf-8")
    return skill_dir


def run_scenario(workspace: Path) -> dict:
    run = Runner(workspace)
    run("init")
    for name in ["dev", "user", *AUDITORS]:
        run("keygen", name)
    run("ledger", "mint", "--to", "dev", "--amount", "200")
    run("ledger", "mint", "--to", "user", "--amount", "20")
    for auditor in AUDITORS:
        run("ledger", "mint", "--to", auditor, "--amount", "60")
        run("auditor", "register", auditor, "--stake", "20")

    skills = {}
    for ptype in TYPES:
        skill_dir = write_skill(workspace, ptype)
        extra = ["--price", "1"] if ptype == "licensed" else []
        receipt = run("publish", str(skill_dir), "--type", ptype, "--as", "dev", *extra)
        skills[ptype] = {"id": receipt["skill_id"], "hash": receipt["content_hash"], "dir": skill_dir}
        print(f"   published {ptype:<12} {receipt['skill_id'][:16]}  fee {receipt['fee']['total']}")

    for ptype, skill in skills.items():
        for auditor in AUDITORS:
            run("audit", "claim", skill["id"], "--as", auditor)
        if ptype != "transparent":
            run("audit", "deliver", skill["id"], "--as", "dev")
        for auditor in AUDITORS:
            fetched = workspace / "fetched" / f"{ptype}-{auditor}.md"
            fetched.parent.mkdir(exist_ok=True)
            got = run("audit", "fetch-key", skill["id"], "--as", auditor, "--out", str(fetched))
            if got["content_hash"] != skill["hash"]:
                raise ScenarioFailed(f"{auditor} reviewed different bytes for {ptype}")
            run("audit", "verdict", skill["id"], "--as", auditor, "--vote", "safe")
        report = run("audit", "tally", skill["id"])
        if report["status"] != "approved":
            raise ScenarioFailed(f"{ptype} skill was not approved: {report}")

    run("license", "purchase", skills["licensed"]["id"], "--as", "user")
    run("license", "deliver", skills["licensed"]["id"], "--buyer", "user", "--as", "dev")

    scope_file = workspace / "scope.json"
    scope_file.write_text(json.dumps({"tools": MANIFEST["tools"], "scopes": MANIFEST["scopes"]}), encoding="utf-8")
    loaders = {
        "transparent": [skills["transparent"]["id"]],
        "licensed": [skills["licensed"]["id"], "--as", "user"],
        "sealed": [skills["sealed"]["id"], "--as", "dev"],
        "committed": [f"{skills['committed']['id']}={skills['committed']['dir'] / 'SKILL.md'}"],
    }
    timings = {}
    for ptype, argv in loaders.items():
        started = time.perf_counter()
        result = run("load", *argv, "--scope", str(scope_file), "--non-interactive")
        timings[ptype] = (time.perf_counter() - started) * 1000
        loaded = result["skills"][0]
        if content_hash(loaded["content"].encode("utf-8")).hex() != skills[ptype]["hash"]:
            raise ScenarioFailed(f"Loaded {ptype} content does not match its committed hash")

    verify = run("ledger", "verify")
    if not verify["ok"]:
        raise ScenarioFailed(f"Registry log does not verify: {verify}")
    return {"skills": {k: v["id"] for k, v in skills.items()}, "load_ms": timings, "log_entries": verify["entries"]}


def main() -> int:
    parser = argparse.ArgumentParser(description="Scripted SIGIL end-to-end scenario")
    parser.add_argument("--workspace", help="keep the workspace here instead of a temp dir")
    args = parser.parse_args()

    print("=" * 50)
    print("SIGIL End-to-End Scenario")
    print("=" * 50)

    root = Path(args.workspace) if args.workspace else Path(tempfile.mkdtemp(prefix="sigil-e2e-"))
    try:
        summary = run_scenario(root)
    except ScenarioFailed as e:
        print(f"\nFAILED: {e}")
        return 1
    finally:
        if not args.workspace:
            shutil.rmtree(root, ignore_errors=True)

    print()
    for ptype, ms in summary["load_ms"].items():
        print(f"   load {ptype:<12} {ms:8.2f} ms")
    print(f"\n   Log entries: {summary['log_entries']} (verified)")
    print("=" * 50)
    return 0


if __name__ == "__main__":
    sys.exit(main())
