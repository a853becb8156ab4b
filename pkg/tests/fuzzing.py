"""Stateful fuzzer for stored theorems.

Candidates are drawn against an evolving world. A candidate counts when
phi holds concretely and its execution commits along the theorem's path.
Matching transactions are committed, so every visited state is reachable
through theorem-covered transactions only.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache

from tct.interp.machine import COMMITTED, Transaction, execute
from tct.interp.world import WorldState
from tct.protocol import hypothesis_holds
from tct.errors import HypothesisEvalError
from tct.tracepath import path_hash
from tct.vcgen import Hypothesis

EDGES = [0, 1, 2, 2**64 - 1, 2**255 - 1, 2**255, 2**255 + 1, 2**256 - 1]


@dataclass
class FuzzStats:
    theorem: object
    matched: int = 0
    attempts: int = 0
    failures: list = field(default_factory=list)


@lru_cache(maxsize=None)
def divisors(k: int) -> tuple[int, ...]:
    out, i = set(), 1
    while i * i <= k:
        if k % i == 0:
            out.update((i, k // i))
        i += 1
    return tuple(sorted(out))


class Fuzzer:
    def __init__(self, world: WorldState, theorems, seed: int = 0, deploy_keep: float = 0.05,
                 keep: dict | None = None):
        self.world = world.copy()
        self.rng = random.Random(seed)
        self.stats = [FuzzStats(t) for t in theorems]
        self.deploy_keep = deploy_keep
        self.keep = keep or {}
        self._pools: dict[str, list[int]] = {}
        self._hyps = {t.id: Hypothesis.parse(t.hypothesis) for t in theorems}

    # -- value pools

    def _ints_in(self, addr: int) -> list[int]:
        out = []
        for v in self.world.accounts[addr].storage.values():
            if isinstance(v, int):
                out.append(v)
            else:
                out.extend(v.values())
        return out

    def _addresses(self) -> list[int]:
        return sorted(self.world.accounts)

    def _eoas(self) -> list[int]:
        return [a for a, acc in sorted(self.world.accounts.items()) if not acc.is_contract]

    def _uint(self, target) -> int:
        r = self.rng.random()
        if r < 0.45:
            return self.rng.randint(0, 1000)
        if r < 0.65 and target is not None:
            pool = self._ints_in(target)
            if pool:
                v = self.rng.choice(pool)
                if self.rng.random() < 0.5:
                    return self.rng.randint(0, v // 2)
                return min(max(0, v + self.rng.choice([0, 0, -1, 1])), 2**256 - 1)
        if r < 0.8:
            return self.rng.choice(EDGES)
        return self.rng.getrandbits(self.rng.choice([8, 16, 64, 255, 256]))

    def _keys_in(self, addr: int) -> list[int]:
        return sorted({k for v in self.world.accounts[addr].storage.values() if isinstance(v, dict) for k in v})

    def _address(self, target=None) -> int:
        r = self.rng.random()
        if r < 0.1:
            return self.rng.getrandbits(160)
        if r < 0.6 and target is not None:
            keys = self._keys_in(target)
            if keys:
                return self.rng.choice(keys)
        return self.rng.choice(self._addresses())

    def _sender(self, target=None) -> int:
        r = self.rng.random()
        if r < 0.1:
            return self.rng.choice(self._addresses())  # a contract may originate
        if r < 0.5 and target is not None:
            keys = [k for k in self._keys_in(target) if k in self.world.accounts]
            if keys:
                return self.rng.choice(keys)
        return self.rng.choice(self._eoas())

    # -- candidates

    def candidate(self, th) -> Transaction:
        if th.function == "constructor":
            fn = self.world.program.contract(th.contract).function("constructor")
            args = tuple(self._arg(p, None, th) for p in fn.params) if fn else ()
            return Transaction(self._sender(), None, "constructor", args, contract=th.contract)
        targets = [a for a, acc in sorted(self.world.accounts.items()) if acc.code_hash == th.code_hash]
        target = self.rng.choice(targets)
        fn = self.world.code(target).function(th.function)
        hinted = self._hint(th, target)
        if hinted is not None:
            return hinted
        args = tuple(self._arg(p, target, th) for p in fn.params)
        return Transaction(self._sender(target), target, th.function, args)

    def _arg(self, p, target, th):
        if p.type.kind == "address":
            return self._address(target)
        if p.type.kind == "bool":
            return self.rng.random() < 0.5
        if th.function == "constructor" and th.contract == "ConstantProductPair":
            return self.rng.randint(1, 5000)  # keep x * y small enough to factor
        return self._uint(target)

    def _hint(self, th, target):
        """Divisor-aware swaps; random ones almost never satisfy phi."""
        if th.function != "swap" or self.rng.random() < 0.2:
            return None
        pools = self._pools.setdefault(th.code_hash, [a for a, acc in sorted(self.world.accounts.items())
                                                     if acc.code_hash == th.code_hash])
        for _ in range(3):
            while pools:
                pool = self.rng.choice(pools)
                pairs = self._swaps(pool)
                if pairs:
                    sender, dx = self.rng.choice(pairs)
                    return Transaction(sender, pool, "swap", (dx, 0, 1))
                pools.remove(pool)
            self._prime_pool(th.contract, pools)
        return None

    def _swaps(self, pool):
        x, y = self.world.read(pool, "x"), self.world.read(pool, "y")
        if x == 0 or x * y > 10**8:
            return []
        ds = [d - x for d in divisors(x * y) if d > x]
        holders = [(a, v) for a, v in sorted(self.world.read(pool, "balX").items()) if v > 0]
        return [(a, dx) for dx in ds for a, v in holders if v >= dx]

    def _prime_pool(self, contract, pools):
        """Deploy a pool and fund a trader, each under its own stored theorem."""
        lp, trader = self.rng.choice(self._eoas()), self.rng.choice(self._eoas())
        x0, y0 = self.rng.randint(1, 5000), self.rng.randint(1, 5000)
        res = self._covered(Transaction(lp, None, "constructor", (x0, y0), contract=contract))
        if res is None:
            return
        pool = res.created_address
        if self._covered(Transaction(trader, pool, "faucet", (self.rng.randint(1, 10**6), 0))) is not None:
            pools.append(pool)

    def _covered(self, tx):
        for st in self.stats:
            th = st.theorem
            if th.function != tx.function:
                continue
            if tx.is_deployment and th.contract != tx.contract:
                continue
            if not tx.is_deployment and self.world.accounts[tx.target].code_hash != th.code_hash:
                continue
            if not hypothesis_holds(self.world, tx, self._hyps[th.id]):
                continue
            res = execute(self.world, tx, debug_asserts=True)
            if res.status == COMMITTED and path_hash(res.trace) == th.path_hash:
                if res.assert_failures:
                    st.failures.append((tx, res.assert_failures))
                self.world.apply(res.delta)
                return res
        return None

    # -- loop

    def step(self, st: FuzzStats) -> None:
        th = st.theorem
        tx = self.candidate(th)
        st.attempts += 1
        if tx.origin not in self.world.accounts:
            self.world.add_eoa(tx.origin)
        try:
            if not hypothesis_holds(self.world, tx, self._hyps[th.id]):
                return
        except HypothesisEvalError:
            return
        res = execute(self.world, tx, debug_asserts=True)
        if res.status != COMMITTED or path_hash(res.trace) != th.path_hash:
            return
        st.matched += 1
        if res.assert_failures:
            st.failures.append((tx, res.assert_failures))
        keep = self.keep.get(tx.contract, self.deploy_keep)
        if not tx.is_deployment or self.rng.random() < keep:
            self.world.apply(res.delta)

    def run(self, per_theorem: int, max_attempts: int) -> list[FuzzStats]:
        live = [s for s in self.stats]
        while live:
            for st in list(live):
                self.step(st)
                if st.matched >= per_theorem or st.attempts >= max_attempts:
                    live.remove(st)
        return self.stats
