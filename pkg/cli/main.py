"""
SIGIL CLI
Operator surface over one workspace: identities, publishing, audits,
licensing, loading, governance, the ledger and the simulator.

Every command prints one JSON document on stdout. Errors go to stderr and
map onto fixed exit codes (see EXIT_CODES).
"""

import argparse
import json
import logging
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple

from pydantic import ValidationError

from audit.models import Verdict, Vote
from canon_crypto import SigilError, content_hash
from economics import export_ledger, stake_account, tc, to_tc
from economics.export import FORMATS
from protocol import SigilNode
from registry.models import PublicationType, SkillRecord
from simulator import (
    CollusionConfig,
    GammaSweepConfig,
    GameMatrix,
    R0SweepConfig,
    SimConfig,
    default_economy_config,
    deviation_losses,
    nash_equilibria,
    pure_equilibria,
    run_collusion,
    run_collusion_batch,
    run_economy,
    run_economy_batch,
    sweep_gamma,
    sweep_r0,
)
from simulator.config import load_config
from simulator.export import write_collusion, write_frame, write_summary, write_sweep, write_trajectories
from simulator.game import format_profiles
from svl import LoadRefused, LoadRequest, LoadTarget, RefusalKind, UserScope

from .logs import configure_logging
from .workspace import Workspace, WorkspaceConfig, WorkspaceError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_PROTOCOL = 3
EXIT_WORKSPACE = 4

EXIT_CODES = {
    "workspace": EXIT_WORKSPACE,
    "not-found": 10,
    "not-approved": 11,
    "access-denied": 12,
    "decryption-failure": 13,
    "integrity-mismatch": 14,
    "permission-exceeded": 15,
    "log-corrupt": 20,
    "wrong-state": 21,
    "insufficient-funds": 22,
}


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, SigilError):
        return EXIT_CODES.get(getattr(error, "code", ""), EXIT_PROTOCOL)
    return EXIT_INTERNAL


# ============================================
# HELPERS
# ============================================

def _emit(document: Any):
    print(json.dumps(document, indent=2, sort_keys=True))


def _amount(text: str) -> int:
    """TC on the command line, milli-TC inside."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an amount: {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"amount must be non-negative: {text!r}")
    return tc(value)


def _now(args) -> int:
    return args.time if args.time is not None else int(time.time())


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(os.getenv("SIGIL_SEED", "0"))


def _read_json(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


@contextmanager
def _session(args, mutate: bool = True) -> Iterator[Tuple[Workspace, SigilNode]]:
    workspace = Workspace(args.workspace)
    workspace.require()
    with workspace.lock():
        node = workspace.open_node()
        try:
            yield workspace, node
        finally:
            # the log is appended as the node goes, so state follows it even on failure
            if mutate:
                workspace.save_node(node)


def _content_key(workspace: Workspace, record: SkillRecord) -> Optional[bytes]:
    value = workspace.secret(record.skill_id).get("content_key")
    return bytes.fromhex(value) if value else None


CONTENT_FILES = ("skill.txt", "SKILL.md", "skill.md")
METADATA_KEYS = {"name", "type"}


@dataclass
class SkillPackage:
    name: str
    publication_type: Optional[str]
    content: bytes
    content_file: Path
    manifest: Dict[str, Any]


def _package_json(explicit: Optional[str], default: Optional[Path]) -> Dict[str, Any]:
    if explicit:
        return _read_json(explicit)
    if default is not None and default.exists():
        return _read_json(str(default))
    return {}


def _read_skill(path: Path, manifest_path: Optional[str] = None, metadata_path: Optional[str] = None) -> SkillPackage:
    """A skill is a directory (skill.txt or SKILL.md, manifest.json,
    metadata.json with name and type) or a single content file. Explicit
    manifest/metadata paths replace the ones in the directory."""
    if path.is_dir():
        content_file = next((path / n for n in CONTENT_FILES if (path / n).is_file()), None)
        if content_file is None:
            raise FileNotFoundError(f"No {' or '.join(CONTENT_FILES[:2])} in {path}")
        manifest = _package_json(manifest_path, path / "manifest.json")
        metadata = _package_json(metadata_path, path / "metadata.json")
        default_name = path.name
    else:
        content_file = path
        manifest = _package_json(manifest_path, None)
        metadata = _package_json(metadata_path, None)
        default_name = path.stem
    unknown = set(metadata) - METADATA_KEYS
    if unknown:
        raise ValueError(f"Unknown metadata keys: {sorted(unknown)}")
    ptype = metadata.get("type")
    if ptype is not None and ptype not in [t.label for t in PublicationType]:
        raise ValueError(f"Unknown publication type in metadata: {ptype!r}")
    return SkillPackage(
        name=str(metadata.get("name") or default_name),
        publication_type=ptype,
        content=content_file.read_bytes(),
        content_file=content_file,
        manifest=manifest,
    )


# ============================================
# WORKSPACE AND IDENTITIES
# ============================================

def cmd_init(args) -> int:
    workspace = Workspace(args.workspace)
    config = WorkspaceConfig.model_validate(_read_json(args.config)) if args.config else None
    config = workspace.init(config, force=args.force)
    _emit({"workspace": str(workspace.root.resolve()), "params": config.params.model_dump(mode="json")})
    return EXIT_OK


def cmd_keygen(args) -> int:
    workspace = Workspace(args.workspace)
    workspace.require()
    with workspace.lock():
        keys = workspace.create_identity(args.name)
    _emit({
        "name": args.name,
        "public_key": keys.public_key.hex(),
        "verify_key": keys.verify_key.hex(),
        "fingerprint": keys.fingerprint(),
    })
    return EXIT_OK


def cmd_publish(args) -> int:
    package = _read_skill(Path(args.path), args.manifest, args.metadata)
    ptype = args.type or package.publication_type
    if ptype is None:
        raise ValueError("No publication type: pass --type or set \"type\" in metadata.json")
    local_file = str(package.content_file.resolve())
    with _session(args) as (workspace, node):
        keys = workspace.identity(args.identity)
        prev = node.skill(args.prev).skill_id if args.prev else None
        receipt = node.publish(
            args.identity, keys, args.name or package.name, ptype, package.content, package.manifest,
            _now(args), prev_version=prev, token_count=args.tokens, price=args.price,
        )
        if receipt.content_key is not None:
            workspace.save_secret(receipt.skill_id, content_key=receipt.content_key.hex())
        elif receipt.publication_type == PublicationType.COMMITTED:
            workspace.save_secret(receipt.skill_id, local_path=local_file)
        document = receipt.to_dict()
        document["status"] = node.skill(receipt.skill_id).status.value
        if receipt.publication_type == PublicationType.COMMITTED:
            document["local_file"] = local_file
    _emit(document)
    return EXIT_OK


def cmd_auditor_register(args) -> int:
    with _session(args) as (workspace, node):
        keys = workspace.identity(args.name)
        account = node.register_auditor(args.name, keys, args.stake, _now(args))
        document = account.to_dict()
    _emit(document)
    return EXIT_OK


# ============================================
# AUDIT
# ============================================

def _task_document(task) -> Dict[str, Any]:
    return {
        "task": task.task_id,
        "state": task.state.value,
        "claims": len(task.claimants),
        "required": task.required_claims,
        "verdicts": len(task.verdicts),
        "unclaimed": task.unclaimed,
    }


def cmd_audit_claim(args) -> int:
    with _session(args) as (_, node):
        task = node.claim(args.skill, args.identity, _now(args), deposit=args.deposit, bond=args.bond)
        document = _task_document(task)
    _emit(document)
    return EXIT_OK


def cmd_audit_deliver(args) -> int:
    with _session(args) as (workspace, node):
        record = node.skill(args.skill)
        keys = workspace.identity(args.identity)
        content_key = _content_key(workspace, record)
        plaintext = None
        if record.publication_type == PublicationType.COMMITTED:
            source = args.content or workspace.secret(record.skill_id).get("local_path")
            if not source:
                raise WorkspaceError(f"Pass --content: no local file recorded for {record.qualified_name}")
            plaintext = Path(source).read_bytes()
        elif record.publication_type == PublicationType.LICENSED and content_key is None:
            raise WorkspaceError(f"No content key for {record.qualified_name} in this workspace")
        deliveries = node.deliver_audit_keys(record.skill_id, keys, content_key=content_key, plaintext=plaintext)
        bundles = []
        if record.publication_type == PublicationType.COMMITTED:
            bundles = [str(workspace.save_bundle(record.skill_id, d)) for d in deliveries]
        document = {
            "skill_id": record.skill_id.hex(),
            "delivered": sorted(d.auditor for d in deliveries),
            "bundles": bundles,
        }
    _emit(document)
    return EXIT_OK


def cmd_audit_fetch(args) -> int:
    with _session(args, mutate=False) as (workspace, node):
        record = node.skill(args.skill)
        keys = workspace.identity(args.identity)
        delivery = None
        if record.publication_type == PublicationType.COMMITTED:
            delivery = workspace.bundle(record.skill_id, args.identity)
            if delivery is None:
                raise WorkspaceError(f"No off-log bundle for {args.identity} on {record.qualified_name}")
        content = node.fetch_audit_content(record.skill_id, keys, delivery)
    if args.out:
        Path(args.out).write_bytes(content)
        _emit({"skill_id": record.skill_id.hex(), "content_hash": content_hash(content).hex(), "out": args.out})
    else:
        sys.stdout.buffer.write(content)
        sys.stdout.flush()
    return EXIT_OK


def cmd_audit_verdict(args) -> int:
    with _session(args) as (workspace, node):
        record = node.skill(args.skill)
        keys = workspace.identity(args.identity)
        verdict = Verdict.create(
            record.skill_id, args.identity, Vote.parse(args.vote), keys,
            risk_findings=args.finding or (), confidence=args.confidence,
        )
        task = node.submit_verdict(verdict, _now(args))
        document = _task_document(task)
    _emit(document)
    return EXIT_OK


def cmd_audit_tally(args) -> int:
    with _session(args) as (_, node):
        document = node.tally(args.skill, _now(args)).to_dict()
    _emit(document)
    return EXIT_OK


def cmd_audit_expire(args) -> int:
    with _session(args) as (_, node):
        missing = node.expire_task(args.skill, _now(args))
        document = {"defaulted": missing, **_task_document(node.task(args.skill))}
    _emit(document)
    return EXIT_OK


# ============================================
# LICENSING
# ============================================

def cmd_license_purchase(args) -> int:
    with _session(args) as (workspace, node):
        keys = workspace.identity(args.identity)
        document = node.purchase(args.skill, args.identity, keys.public_key, _now(args)).to_dict()
    _emit(document)
    return EXIT_OK


def cmd_license_deliver(args) -> int:
    with _session(args) as (workspace, node):
        record = node.skill(args.skill)
        keys = workspace.identity(args.identity)
        delivery = node.deliver_license(record.skill_id, args.buyer, keys, _content_key(workspace, record), _now(args))
        document = delivery.to_dict()
    _emit(document)
    return EXIT_OK


def cmd_license_expire(args) -> int:
    with _session(args) as (_, node):
        document = {"expired": [p.to_dict() for p in node.expire_purchases(_now(args))]}
    _emit(document)
    return EXIT_OK


# ============================================
# LOADING
# ============================================

def _parse_target(text: str) -> LoadTarget:
    ref, sep, path = text.partition("=")
    if not sep:
        return LoadTarget(ref)
    return LoadTarget(ref, local_path=path)


def _confirm_escalation(refusal: LoadRefused) -> bool:
    sys.stderr.write(
        f"{refusal.skill} needs tools {sorted(refusal.excess_tools)} and scopes "
        f"{sorted(refusal.excess_scopes)} beyond your scope. Grant? [y/N] "
    )
    sys.stderr.flush()
    try:
        answer = input()
    except EOFError:
        return False
    return answer.strip().lower() in ("y", "yes")


def cmd_load(args) -> int:
    targets = tuple(_parse_target(t) for t in args.targets)
    scope = UserScope.from_dict(_read_json(args.scope)) if args.scope else UserScope()
    with _session(args, mutate=False) as (workspace, node):
        requester = workspace.identity(args.identity) if args.identity else None
        while True:
            request = LoadRequest(targets, requester, scope, requester_id=args.identity or "")
            try:
                result = node.load(request)
                break
            except LoadRefused as refusal:
                if refusal.kind != RefusalKind.PERMISSION_EXCEEDED or args.non_interactive:
                    raise
                if not _confirm_escalation(refusal):
                    raise
                scope = scope.widen(refusal.excess_tools, refusal.excess_scopes)
                logger.info(f"[SVL] Scope widened by user for {refusal.skill}")
    _emit(result.to_dict())
    return EXIT_OK


# ============================================
# GOVERNANCE
# ============================================

def cmd_gov_leak(args) -> int:
    with _session(args) as (_, node):
        forfeited = node.report_leak(args.auditor, args.skill, _now(args))
        document = {"auditor": args.auditor, "forfeited": forfeited,
                    "reputation": node.book.auditor(args.auditor).reputation}
    _emit(document)
    return EXIT_OK


def cmd_gov_monitor(args) -> int:
    with _session(args) as (_, node):
        document = node.monitor(args.skill, args.event, _now(args), whistleblower=args.whistleblower).to_dict()
    _emit(document)
    return EXIT_OK


def cmd_gov_challenge(args) -> int:
    with _session(args) as (_, node):
        document = node.open_challenge(args.skill, args.identity, _now(args), fee=args.fee).to_dict()
    _emit(document)
    return EXIT_OK


def cmd_gov_resolve(args) -> int:
    with _session(args) as (_, node):
        document = node.resolve_challenge(args.skill, _now(args)).to_dict()
    _emit(document)
    return EXIT_OK


def cmd_gov_decay(args) -> int:
    with _session(args) as (_, node):
        document = {"reputations": node.decay(_now(args))}
    _emit(document)
    return EXIT_OK


# ============================================
# LEDGER
# ============================================

def cmd_ledger_verify(args) -> int:
    workspace = Workspace(args.workspace)
    workspace.require()
    with workspace.lock():
        result = workspace.verify_log()
    _emit(result.to_dict())
    return EXIT_OK if result.ok else EXIT_CODES["log-corrupt"]


def cmd_ledger_export(args) -> int:
    with _session(args, mutate=False) as (_, node):
        written = export_ledger(node.ledger, Path(args.out), args.format, auditors=node.book.auditors)
    _emit({sheet: str(path) for sheet, path in written.items()})
    return EXIT_OK


def cmd_ledger_mint(args) -> int:
    with _session(args) as (_, node):
        node.mint(args.holder, args.amount, memo=args.memo)
        balance = node.ledger.balance(args.holder)
    _emit({"holder": args.holder, "minted": args.amount, "balance": balance, "balance_tc": to_tc(balance)})
    return EXIT_OK


def cmd_ledger_balance(args) -> int:
    with _session(args, mutate=False) as (_, node):
        wallet = node.ledger.balance(args.holder)
        stake = node.ledger.balance(stake_account(args.holder))
        supply = node.ledger.total_supply
    _emit({
        "holder": args.holder,
        "wallet": wallet,
        "stake": stake,
        "wallet_tc": to_tc(wallet),
        "stake_tc": to_tc(stake),
        "total_supply": supply,
    })
    return EXIT_OK


# ============================================
# SIMULATOR
# ============================================

def _sim_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed_list(args) -> List[int]:
    base = _seed(args)
    return list(range(base, base + args.seeds))


def cmd_sim_run(args) -> int:
    config = load_config(Path(args.config), SimConfig) if args.config else default_economy_config()
    updates = {"seed": _seed(args)}
    if args.rounds is not None:
        updates["rounds"] = args.rounds
    config = config.model_copy(update=updates)
    out = _sim_out(args)
    if args.seeds > 1:
        batch = run_economy_batch(config, _seed_list(args))
        write_frame(batch.finals, out / "economy_finals.csv")
        summary = {
            "kind": "economy_batch",
            "config": config.model_dump(mode="json"),
            "seeds": len(batch.seeds),
            "cohorts": batch.summary().to_dict(orient="records"),
        }
    else:
        result = run_economy(config)
        write_trajectories(result, out / "economy_trajectories.csv")
        summary = result.summary()
    write_summary(summary, out / "economy_summary.json")
    _emit(summary)
    return EXIT_OK


def cmd_sim_collusion(args) -> int:
    config = load_config(Path(args.config), CollusionConfig) if args.config else CollusionConfig()
    updates: Dict[str, Any] = {"seed": _seed(args)}
    if args.fraction is not None:
        updates["malicious_fraction"] = args.fraction
    if args.static:
        updates["dynamic_reputation"] = False
    config = config.model_copy(update=updates)
    out = _sim_out(args)
    if args.seeds > 1:
        batch = run_collusion_batch(config, _seed_list(args))
        summary = {
            "kind": "collusion_batch",
            "config": config.model_dump(mode="json"),
            "seeds": len(batch.seeds),
            "window_means": batch.window_means(),
            "per_round": [float(v) for v in batch.per_round()],
        }
    else:
        result = run_collusion(config)
        write_collusion(result, out / "collusion.csv")
        summary = result.summary()
    write_summary(summary, out / "collusion_summary.json")
    _emit(summary)
    return EXIT_OK


def cmd_sim_nash(args) -> int:
    values = {"R": args.R, "S": args.S, "C_pub": args.cpub, "U_legit": args.ulegit,
              "Bribe": args.bribe, "r_base": args.rbase}
    game = GameMatrix.unchecked(**values) if args.unchecked else GameMatrix(**values)
    losses = deviation_losses(game)
    _emit({
        "game": values,
        "payoffs": {k: list(v) for k, v in game.table().items()},
        "nash": format_profiles(nash_equilibria(game)),
        "pure_equilibria": format_profiles(pure_equilibria(game)),
        "deviation_losses": losses.to_dict(),
    })
    return EXIT_OK


def cmd_sim_sweep_gamma(args) -> int:
    config = load_config(Path(args.config), GammaSweepConfig) if args.config else GammaSweepConfig()
    updates: Dict[str, Any] = {"seed": _seed(args)}
    if args.seeds is not None:
        updates["seeds"] = args.seeds
    if args.rounds is not None:
        updates["rounds"] = args.rounds
    config = config.model_copy(update=updates)
    result = sweep_gamma(**dict(config))
    out = _sim_out(args)
    write_sweep(result, out / "gamma_sweep.csv")
    summary = {**result.summary(), "config": config.model_dump(mode="json")}
    write_summary(summary, out / "gamma_sweep.json")
    _emit(summary)
    return EXIT_OK


def cmd_sim_sweep_r0(args) -> int:
    config = load_config(Path(args.config), R0SweepConfig) if args.config else R0SweepConfig()
    updates: Dict[str, Any] = {"seed": _seed(args)}
    if args.trials is not None:
        updates["trials"] = args.trials
    config = config.model_copy(update=updates)
    result = sweep_r0(**dict(config))
    out = _sim_out(args)
    write_sweep(result, out / "fn_sweep.csv")
    summary = {**result.summary(), "config": config.model_dump(mode="json")}
    write_summary(summary, out / "fn_sweep.json")
    _emit(summary)
    return EXIT_OK


# ============================================
# PARSER
# ============================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sigil", description="SIGIL skill registry, audit market and loader")
    parser.add_argument("--workspace", "-w", default=os.getenv("SIGIL_WORKSPACE", "."),
                        help="workspace root (env SIGIL_WORKSPACE)")
    parser.add_argument("--time", type=int, default=None, help="logical clock in seconds (default: now)")
    parser.add_argument("--verbose", "-v", action="count", default=0)
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    p = commands.add_parser("init", help="create a workspace")
    p.add_argument("--config", help="WorkspaceConfig JSON file")
    p.add_argument("--force", action="store_true")
    p.set_defaults(handler=cmd_init)

    p = commands.add_parser("keygen", help="create an identity keypair")
    p.add_argument("name")
    p.set_defaults(handler=cmd_keygen)

    p = commands.add_parser("publish", help="commit a skill and pay its publication fee")
    p.add_argument("path", help="skill directory (skill.txt, manifest.json, metadata.json) or single file")
    p.add_argument("--type", choices=[t.label for t in PublicationType], help="overrides metadata.json")
    p.add_argument("--as", dest="identity", required=True)
    p.add_argument("--name", help="overrides metadata.json")
    p.add_argument("--manifest")
    p.add_argument("--metadata")
    p.add_argument("--price", type=_amount, default=0, help="licensed price, TC")
    p.add_argument("--prev", help="previous version (id or developer/name)")
    p.add_argument("--tokens", type=int, help="token count override")
    p.set_defaults(handler=cmd_publish)

    auditor = commands.add_parser("auditor", help="auditor accounts").add_subparsers(dest="action", metavar="ACTION")
    auditor.required = True
    p = auditor.add_parser("register")
    p.add_argument("name")
    p.add_argument("--stake", type=_amount, required=True, help="TC moved from wallet to stake")
    p.set_defaults(handler=cmd_auditor_register)

    audit = commands.add_parser("audit", help="audit task flow").add_subparsers(dest="action", metavar="ACTION")
    audit.required = True
    p = audit.add_parser("claim")
    p.add_argument("skill")
    p.add_argument("--as", dest="identity", required=True)
    p.add_argument("--deposit", type=_amount)
    p.add_argument("--bond", type=_amount)
    p.set_defaults(handler=cmd_audit_claim)
    p = audit.add_parser("deliver", help="developer delivers content keys to claimants")
    p.add_argument("skill")
    p.add_argument("--as", dest="identity", required=True)
    p.add_argument("--content", help="plaintext file for Committed skills")
    p.set_defaults(handler=cmd_audit_deliver)
    p = audit.add_parser("fetch-key", help="auditor opens its delivery")
    p.add_argument("skill")
    p.add_argument("--as", dest="identity", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_audit_fetch)
    p = audit.add_parser("verdict")
    p.add_argument("skill")
    p.add_argument("--as", dest="identity", required=True)
    p.add_argument("--vote", required=True, choices=[v.name.lower() for v in Vote])
    p.add_argument("--finding", action="append")
    p.add_argument("--confidence", type=float, default=1.0)
    p.set_defaults(handler=cmd_audit_verdict)
    p = audit.add_parser("tally")
    p.add_argument("skill")
    p.set_defaults(handler=cmd_audit_tally)
    p = audit.add_parser("expire")
    p.add_argument("skill")
    p.set_defaults(handler=cmd_audit_expire)

    license_ = commands.add_parser("license", help="licensed purchases").add_subparsers(dest="action", metavar="ACTION")
    license_.required = True
    p = license_.add_parser("purchase")
    p.add_argument("skill")
    p.add_argument("--as", dest="identity", required=True)
    p.set_defaults(handler=cmd_license_purchase)
    p = license_.add_parser("deliver")
    p.add_argument("skill")
    p.add_argument("--buyer", required=True)
    p.add_argument("--as", dest="identity", required=True)
    p.set_defaults(handler=cmd_license_deliver)
    p = license_.add_parser("expire", help="refund undelivered purchases past their deadline")
    p.set_defaults(handler=cmd_license_expire)

    p = commands.add_parser("load", help="verify and load skills")
    p.add_argument("targets", nargs="+", metavar="REF[=PATH]")
    p.add_argument("--as", dest="identity")
    p.add_argument("--scope", help="JSON file with user tools and scopes")
    p.add_argument("--non-interactive", action="store_true", help="refuse escalation instead of prompting")
    p.set_defaults(handler=cmd_load)

    gov = commands.add_parser("governance", help="post-approval flows").add_subparsers(dest="action", metavar="ACTION")
    gov.required = True
    p = gov.add_parser("leak")
    p.add_argument("auditor")
    p.add_argument("skill")
    p.set_defaults(handler=cmd_gov_leak)
    p = gov.add_parser("monitor")
    p.add_argument("skill")
    p.add_argument("--event", required=True, choices=["clean", "malicious"])
    p.add_argument("--whistleblower")
    p.set_defaults(handler=cmd_gov_monitor)
    p = gov.add_parser("challenge")
    p.add_argument("skill")
    p.add_argument("--as", dest="identity", required=True)
    p.add_argument("--fee", type=_amount)
    p.set_defaults(handler=cmd_gov_challenge)
    p = gov.add_parser("resolve")
    p.add_argument("skill")
    p.set_defaults(handler=cmd_gov_resolve)
    p = gov.add_parser("decay")
    p.set_defaults(handler=cmd_gov_decay)

    ledger = commands.add_parser("ledger", help="log and ledger").add_subparsers(dest="action", metavar="ACTION")
    ledger.required = True
    p = ledger.add_parser("verify")
    p.set_defaults(handler=cmd_ledger_verify)
    p = ledger.add_parser("export")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.set_defaults(handler=cmd_ledger_export)
    p = ledger.add_parser("mint", help="faucet: create TC for a holder")
    p.add_argument("--to", dest="holder", required=True)
    p.add_argument("--amount", type=_amount, required=True)
    p.add_argument("--memo", default="faucet")
    p.set_defaults(handler=cmd_ledger_mint)
    p = ledger.add_parser("balance")
    p.add_argument("holder")
    p.set_defaults(handler=cmd_ledger_balance)

    sim = commands.add_parser("sim", help="simulator experiments").add_subparsers(dest="action", metavar="ACTION")
    sim.required = True
    p = sim.add_parser("run", help="auditor economy")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--rounds", type=int)
    p.add_argument("--out", default="results")
    p.set_defaults(handler=cmd_sim_run)
    p = sim.add_parser("collusion")
    p.add_argument("--config")
    p.add_argument("--fraction", type=float)
    p.add_argument("--static", action="store_true", help="freeze reputations")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--out", default="results")
    p.set_defaults(handler=cmd_sim_collusion)
    p = sim.add_parser("nash", help="one-round incentive game")
    p.add_argument("--R", type=float, default=0.56)
    p.add_argument("--S", type=float, default=1.12)
    p.add_argument("--cpub", type=float, default=2.8)
    p.add_argument("--ulegit", type=float, default=10.0)
    p.add_argument("--bribe", type=float, default=0.5)
    p.add_argument("--rbase", type=float, default=0.56)
    p.add_argument("--unchecked", action="store_true", help="skip the parameter constraints")
    p.set_defaults(handler=cmd_sim_nash)
    p = sim.add_parser("sweep-gamma", help="slash coefficient vs payoff")
    p.add_argument("--config", help="GammaSweepConfig JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--out", default="results")
    p.set_defaults(handler=cmd_sim_sweep_gamma)
    p = sim.add_parser("sweep-r0", help="initial reputation vs false negatives")
    p.add_argument("--config", help="R0SweepConfig JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--out", default="results")
    p.set_defaults(handler=cmd_sim_sweep_r0)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    level = logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING
    configure_logging(level)

    try:
        return args.handler(args)
    except LoadRefused as refusal:
        print(json.dumps(refusal.to_dict(), sort_keys=True), file=sys.stderr)
        return exit_code_for(refusal)
    except SigilError as e:
        print(f"error [{e.code}]: {e}", file=sys.stderr)
        return exit_code_for(e)
    except (ValidationError, ValueError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.debug("Unhandled error", exc_info=True)
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
