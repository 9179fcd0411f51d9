"""
SIGIL CLI - Workspace
On-disk layout of one protocol participant set:

    sigil.json          WorkspaceConfig (economic parameters)
    registry.log        append-only registry log
    state.db            node state documents + recorded log head
    keys/<name>.json    identity keypairs (0600)
    secrets/<id>.json   developer content keys / committed file paths (0600)
    offlog/<id>/<a>.json  off-log audit bundles for Committed skills
    .lock               single-writer advisory lock
"""

import fcntl
import json
import logging
import os
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterator, Optional

import pytz
from pydantic import BaseModel, ConfigDict, Field

from audit.committee import AuditDelivery
from canon_crypto import ContentHash, KeyPair, SigilError
from database import db_path, get_log_head, init_database, save_state
from database.db import load_state
from economics.params import EconomicParams
from protocol import SigilNode
from registry import LogCorrupt, RegistryLog, SkillRegistry, VerifyResult
from registry.models import validate_name

logger = logging.getLogger(__name__)

CONFIG_FILE = "sigil.json"
LOG_FILE = "registry.log"


class WorkspaceError(SigilError):
    code = "workspace"


class WorkspaceMissing(WorkspaceError):
    pass


class IdentityExists(WorkspaceError):
    pass


class IdentityMissing(WorkspaceError):
    pass


class WorkspaceConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    version: int = 1
    params: EconomicParams = Field(default_factory=EconomicParams)

    def dump(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"

    @classmethod
    def parse(cls, text: str) -> "WorkspaceConfig":
        return cls.model_validate(json.loads(text))


def _write_private(path: Path, document: Dict[str, Any]):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")
    os.chmod(path, 0o600)


class Workspace:
    def __init__(self, root: os.PathLike):
        self.root = Path(root)

    # ============================================
    # PATHS
    # ============================================

    @property
    def config_path(self) -> Path:
        return self.root / CONFIG_FILE

    @property
    def log_path(self) -> Path:
        return self.root / LOG_FILE

    @property
    def db_file(self) -> str:
        return db_path(self.root)

    def key_path(self, name: str) -> Path:
        return self.root / "keys" / f"{validate_name(name, 'identity')}.json"

    def secret_path(self, skill_id: ContentHash) -> Path:
        return self.root / "secrets" / f"{skill_id.hex()}.json"

    def bundle_path(self, skill_id: ContentHash, auditor: str) -> Path:
        return self.root / "offlog" / skill_id.hex() / f"{validate_name(auditor, 'auditor')}.json"

    @property
    def exists(self) -> bool:
        return self.config_path.exists()

    def require(self):
        if not self.exists:
            raise WorkspaceMissing(f"No workspace at {self.root}; run `sigil init` first")

    # ============================================
    # LIFECYCLE
    # ============================================

    def init(self, config: Optional[WorkspaceConfig] = None, force: bool = False) -> WorkspaceConfig:
        if self.exists and not force:
            raise WorkspaceError(f"Workspace already initialized at {self.root}")
        config = config or WorkspaceConfig()
        self.root.mkdir(parents=True, exist_ok=True)
        for sub in ("keys", "secrets", "offlog"):
            (self.root / sub).mkdir(exist_ok=True)
        self.config_path.write_text(config.dump(), encoding="utf-8")
        self.log_path.touch()
        init_database(self.db_file)
        with self.lock():
            node = self.open_node()
            node.genesis()
            self.save_node(node)
        logger.info(f"[Workspace] Initialized {self.root}")
        return config

    def load_config(self) -> WorkspaceConfig:
        self.require()
        return WorkspaceConfig.parse(self.config_path.read_text(encoding="utf-8"))

    @contextmanager
    def lock(self) -> Iterator[None]:
        """Exclusive advisory lock held for one CLI invocation."""
        self.root.mkdir(parents=True, exist_ok=True)
        with open(self.root / ".lock", "a+") as handle:
            fcntl.flock(handle.fileno(), fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(handle.fileno(), fcntl.LOCK_UN)

    # ============================================
    # NODE STATE
    # ============================================

    def recorded_head(self):
        head = get_log_head(self.db_file)
        if head is None:
            return None, None
        count, head_hex = head
        return count, ContentHash.from_hex(head_hex) if count else None

    def verify_log(self) -> VerifyResult:
        self.require()
        count, head = self.recorded_head()
        return RegistryLog.verify_file(self.log_path, count, head)

    def open_node(self) -> SigilNode:
        config = self.load_config()
        init_database(self.db_file)
        result = self.verify_log()
        if not result.ok:
            raise LogCorrupt(f"Registry log corrupt at entry {result.corrupt_at}: {result.reason}",
                             index=result.corrupt_at)
        registry = SkillRegistry.from_log(RegistryLog(self.log_path))
        state = load_state(self.db_file, "node")
        if state is None:
            return SigilNode(config.params, registry=registry)
        return SigilNode.from_state(state, registry)

    def save_node(self, node: SigilNode):
        log = node.registry.log
        save_state(self.db_file, {"node": node.to_state()}, head=(len(log), log.head.hex()))

    # ============================================
    # KEYS AND SECRETS
    # ============================================

    def create_identity(self, name: str) -> KeyPair:
        path = self.key_path(name)
        if path.exists():
            raise IdentityExists(f"Identity {name!r} already exists")
        keys = KeyPair.generate()
        _write_private(path, {
            "name": name,
            "secret_key": keys.secret_key.hex(),
            "public_key": keys.public_key.hex(),
            "verify_key": keys.verify_key.hex(),
            "created_at": datetime.now(pytz.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        })
        return keys

    def identity(self, name: str) -> KeyPair:
        path = self.key_path(name)
        if not path.exists():
            raise IdentityMissing(f"No identity {name!r}; run `sigil keygen {name}`")
        document = json.loads(path.read_text(encoding="utf-8"))
        return KeyPair.from_secret(bytes.fromhex(document["secret_key"]))

    def save_secret(self, skill_id: ContentHash, **values):
        document = {"skill_id": skill_id.hex()}
        document.update(values)
        _write_private(self.secret_path(skill_id), document)

    def secret(self, skill_id: ContentHash) -> Dict[str, Any]:
        path = self.secret_path(skill_id)
        return json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}

    def save_bundle(self, skill_id: ContentHash, delivery: AuditDelivery) -> Path:
        path = self.bundle_path(skill_id, delivery.auditor)
        _write_private(path, delivery.to_dict())
        return path

    def bundle(self, skill_id: ContentHash, auditor: str) -> Optional[AuditDelivery]:
        path = self.bundle_path(skill_id, auditor)
        if not path.exists():
            return None
        return AuditDelivery.from_dict(json.loads(path.read_text(encoding="utf-8")))
