"""
Shared fixtures: keypairs, a funded in-memory node and an approved-skill helper.
"""

import pytest

from audit.models import Verdict, Vote
from canon_crypto import KeyPair
from economics import EconomicParams, tc
from protocol import SigilNode
from registry.models import PublicationType

MANIFEST = {"tools": ["read_file", "web_search"], "scopes": ["workspace"], "bounds": ["no_writes"]}
AUDITORS = [f"a{i}" for i in range(1, 6)]


@pytest.fixture
def params():
    return EconomicParams()


@pytest.fixture
def keypairs():
    cache = {}

    def get(name: str) -> KeyPair:
        if name not in cache:
            cache[name] = KeyPair.generate()
        return cache[name]

    return get


@pytest.fixture
def node(keypairs):
    """Genesis node with a funded developer, user and five registered auditors."""
    n = SigilNode()
    n.genesis()
    n.mint("dev", tc(500))
    n.mint("user", tc(100))
    for auditor in AUDITORS:
        n.mint(auditor, tc(100))
        n.register_auditor(auditor, keypairs(auditor), tc(20))
    return n


class Publisher:
    def __init__(self, node: SigilNode, keypairs):
        self.node = node
        self.keypairs = keypairs
        self.clock = 1_700_000_000

    def tick(self) -> int:
        self.clock += 1
        return self.clock

    def publish(self, ptype, content: bytes = b"# helper\nSummarize files.\n", name=None,
                manifest=None, price=0, developer="dev", prev=None):
        ptype = PublicationType.parse(ptype)
        return self.node.publish(
            developer, self.keypairs(developer), name or f"{ptype.label}-skill", ptype, content,
            manifest if manifest is not None else MANIFEST, self.tick(), prev_version=prev, price=price,
        )

    def audit(self, receipt, votes=None, content: bytes = None):
        """Five claims, key delivery where needed, signed verdicts, tally."""
        votes = votes or ["safe"] * len(AUDITORS)
        skill_id = receipt.skill_id
        for auditor in AUDITORS:
            self.node.claim(skill_id, auditor, self.tick())
        record = self.node.skill(skill_id)
        deliveries = {}
        if record.publication_type == PublicationType.LICENSED:
            self.node.deliver_audit_keys(skill_id, self.keypairs(record.developer), receipt.content_key)
        elif record.publication_type == PublicationType.SEALED:
            self.node.deliver_audit_keys(skill_id, self.keypairs(record.developer))
        elif record.publication_type == PublicationType.COMMITTED:
            for d in self.node.deliver_audit_keys(skill_id, self.keypairs(record.developer), plaintext=content):
                deliveries[d.auditor] = d
        for auditor, vote in zip(AUDITORS, votes):
            self.node.fetch_audit_content(skill_id, self.keypairs(auditor), deliveries.get(auditor))
            verdict = Verdict.create(skill_id, auditor, Vote.parse(vote), self.keypairs(auditor))
            self.node.submit_verdict(verdict, self.tick())
        return self.node.tally(skill_id, self.tick())

    def approved(self, ptype, content: bytes = b"# helper\nSummarize files.\n", **kwargs):
        receipt = self.publish(ptype, content, **kwargs)
        report = self.audit(receipt, content=content)
        assert report.outcome.approved
        return receipt


@pytest.fixture
def publisher(node, keypairs):
    return Publisher(node, keypairs)
