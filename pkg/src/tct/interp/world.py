"""World state: accounts, their code and storage."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Union

from ..errors import UnknownAccount
from ..lang.resolve import ResolvedContract, ResolvedProgram
from ..terms import MapVal
from ..words import hex_address

# contract addresses are allocated from this base in creation order
CONTRACT_BASE = 0xC0DE << 144

StorageValue = Union[int, bool, dict]


@dataclass
class Account:
    address: int
    code_hash: Optional[str] = None  # None for externally owned accounts
    contract: Optional[str] = None
    storage: dict[str, StorageValue] = field(default_factory=dict)

    @property
    def is_contract(self) -> bool:
        return self.code_hash is not None


def fresh_storage(rc: ResolvedContract) -> dict[str, StorageValue]:
    out: dict[str, StorageValue] = {}
    for name, t in rc.storage.items():
        out[name] = {} if t.is_map else (False if t.kind == "bool" else 0)
    return out


def address_of_name(name: str) -> int:
    """Deterministic externally-owned address for a symbolic account name."""
    return int.from_bytes(hashlib.sha256(name.encode()).digest()[:20], "big")


@dataclass
class WorldState:
    program: ResolvedProgram = field(default_factory=ResolvedProgram)
    accounts: dict[int, Account] = field(default_factory=dict)
    created: int = 0

    def copy(self) -> "WorldState":
        return WorldState(self.program, copy.deepcopy(self.accounts), self.created)

    # -- accounts

    def account(self, address: int) -> Account:
        try:
            return self.accounts[address]
        except KeyError:
            raise UnknownAccount(f"no account at {hex_address(address)}") from None

    def add_eoa(self, address: int) -> Account:
        acct = self.accounts.get(address)
        if acct is None:
            acct = self.accounts[address] = Account(address)
        return acct

    def next_contract_address(self) -> int:
        return CONTRACT_BASE + self.created + 1

    def code(self, address: int) -> Optional[ResolvedContract]:
        acct = self.accounts.get(address)
        if acct is None or acct.code_hash is None:
            return None
        return self.program.by_code(acct.code_hash)

    # -- storage access (no overlay; the interpreter layers its own)

    def read(self, address: int, slot: str, index: Optional[int] = None):
        value = self.account(address).storage[slot]
        if index is None:
            return value
        return value.get(index, 0)

    def map_value(self, address: int, slot: str) -> MapVal:
        return MapVal(self.account(address).storage[slot])

    def apply(self, delta: "StateDelta") -> None:
        """Commit a delta produced by a successful execution."""
        for acct in delta.created:
            self.accounts[acct.address] = copy.deepcopy(acct)
            self.created += 1
        for (addr, slot, index), (_, after) in delta.writes.items():
            storage = self.accounts[addr].storage
            if index is None:
                storage[slot] = after
            elif after == 0:
                storage[slot].pop(index, None)
            else:
                storage[slot][index] = after

    # -- serialization

    def to_json_obj(self) -> dict:
        accounts = {}
        for addr in sorted(self.accounts):
            acct = self.accounts[addr]
            types = self.program.by_code(acct.code_hash).storage if acct.code_hash in self.program.by_hash else {}
            storage = {}
            for slot, value in acct.storage.items():
                if isinstance(value, dict):
                    storage[slot] = {hex_address(k): str(v) for k, v in sorted(value.items()) if v != 0}
                elif isinstance(value, bool):
                    storage[slot] = value
                elif slot in types and types[slot].kind == "address":
                    storage[slot] = hex_address(value)
                else:
                    storage[slot] = str(value)
            accounts[hex_address(addr)] = {
                "code": acct.code_hash,
                "contract": acct.contract,
                "storage": storage,
            }
        return {"accounts": accounts, "created": self.created}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str, program: ResolvedProgram) -> "WorldState":
        obj = json.loads(text)
        world = cls(program, {}, obj.get("created", 0))
        for a, rec in obj["accounts"].items():
            addr = int(a, 16)
            storage: dict[str, StorageValue] = {}
            for slot, value in rec["storage"].items():
                if isinstance(value, dict):
                    storage[slot] = {int(k, 16): int(v) for k, v in value.items()}
                elif isinstance(value, bool):
                    storage[slot] = value
                else:
                    storage[slot] = int(value, 0)
            world.accounts[addr] = Account(addr, rec["code"], rec["contract"], storage)
        return world


@dataclass
class StateDelta:
    """Slot-level (before, after) pairs plus accounts created by the transaction."""

    writes: dict[tuple, tuple] = field(default_factory=dict)
    created: list[Account] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not self.writes and not self.created

    def lines(self) -> list[str]:
        out = [f"create {hex_address(a.address)} {a.contract}" for a in self.created]
        for (addr, slot, index), (before, after) in self.writes.items():
            where = slot if index is None else f"{slot}[{hex_address(index)}]"
            out.append(f"{hex_address(addr)} {where}: {before} -> {after}")
        return out
