"""Explicit-state solver for two-player recurrence games (GR(1) fragment).

The arena is system-first: in each tick the system picks an action at the
current state, then the environment picks one of that action's successor
states.  A specification lists bad states (system safety), environment
justice sets (recurrence assumptions) and system goal sets (recurrence
guarantees).  Winner condition: every play that stays safe and satisfies all
environment justices infinitely often must visit every goal infinitely often.

Solved with the standard three-nested fixpoint (greatest over the candidate
winning set, least over goal attractors, greatest over justice-stalling
regions), implemented with counter-based worklists so each pass is linear in
the number of edges.  Strategy extraction is deterministic: goal memory
advances at goal states, otherwise the move decreases the attractor rank,
falling back to justice-stalling moves, with the lowest action index as the
final tie-break.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field


@dataclass
class GameStructure:
    """Finite sys-first arena with opaque state/action labels."""

    state_meta: list  # index -> hashable description
    initial: int
    act_owner: list[int]
    act_meta: list
    act_succs: list[tuple[int, ...]]
    state_acts: list[list[int]]

    @property
    def n_states(self) -> int:
        return len(self.state_meta)

    def index_of(self, meta) -> int:
        if not hasattr(self, "_index"):
            self._index = {m: i for i, m in enumerate(self.state_meta)}
        return self._index[meta]

    def validate(self):
        """Deadlock-freedom: every state owns an action, every action a move."""
        for s, acts in enumerate(self.state_acts):
            if not acts:
                raise ValueError(f"state {self.state_meta[s]} has no system action")
            for j in acts:
                if not self.act_succs[j]:
                    raise ValueError(
                        f"action {self.act_meta[j]} at {self.state_meta[s]} has no env response")

    def reverse_index(self) -> list[list[int]]:
        rev = [[] for _ in range(self.n_states)]
        for j, succs in enumerate(self.act_succs):
            for t in succs:
                rev[t].append(j)
        return rev


class GameBuilder:
    """Deterministic construction: states indexed in first-seen order."""

    def __init__(self):
        self.state_meta = []
        self._index = {}
        self.act_owner = []
        self.act_meta = []
        self.act_succs = []
        self.state_acts = []

    def state(self, meta) -> int:
        if meta not in self._index:
            self._index[meta] = len(self.state_meta)
            self.state_meta.append(meta)
            self.state_acts.append([])
        return self._index[meta]

    def has_state(self, meta) -> bool:
        return meta in self._index

    def add_action(self, s: int, meta, successors) -> int:
        succs = tuple(dict.fromkeys(successors))  # dedupe, keep order
        if not succs:
            raise ValueError(f"action {meta} at state {s} has no successors")
        j = len(self.act_owner)
        self.act_owner.append(s)
        self.act_meta.append(meta)
        self.act_succs.append(succs)
        self.state_acts[s].append(j)
        return j

    def build(self, initial_meta) -> GameStructure:
        g = GameStructure(self.state_meta, self._index[initial_meta],
                          self.act_owner, self.act_meta, self.act_succs,
                          self.state_acts)
        g.validate()
        return g


@dataclass
class GR1Spec:
    """State-set form of the specification over a built game."""

    bad: frozenset[int] = frozenset()
    env_justice: list[frozenset[int]] = field(default_factory=list)
    sys_goals: list[frozenset[int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.sys_goals:
            raise ValueError("at least one system goal is required")


@dataclass(frozen=True)
class Unrealizable:
    """Negative synthesis outcome; a value, not an error."""

    reason: str
    winning_states: int = 0


@dataclass
class Strategy:
    """Winning system strategy with goal-cycling memory."""

    game: GameStructure
    n_goals: int
    moves: dict[tuple[int, int], int]  # (state, goal memory) -> action id
    advance: set[tuple[int, int]]  # memory increments when moving from here
    winning: frozenset[int]

    def move(self, state: int, goal_idx: int) -> tuple[int, int]:
        """Action id and next goal memory for the given configuration."""
        j = self.moves[(state, goal_idx)]
        nxt = (goal_idx + 1) % self.n_goals if (state, goal_idx) in self.advance else goal_idx
        return j, nxt

    def export_text(self) -> str:
        lines = [f"# reactive strategy v1 goals={self.n_goals} states={len(self.winning)}"]
        for (s, i), j in sorted(self.moves.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            adv = " >" if (s, i) in self.advance else ""
            lines.append(f"{i}\t{self.game.state_meta[s]}\t->\t{self.game.act_meta[j]}{adv}")
        return "\n".join(lines) + "\n"


class _GoalLayer:
    """One goal's least fixpoint inside a candidate region, with moves.

    Justice-free games reduce to a plain worklist attractor.  With justice
    assumptions the canonical iterate structure is computed: each iterate
    admits the states that can either step into the previous iterate (a
    rank-decreasing progress move) or hold the play inside a justice-starved
    region until the environment yields.  Recording the admitting move per
    state gives a deterministic strategy that always progresses when the
    adversary leaves it a rank-decreasing option.
    """

    def __init__(self, game, rev, region, goal, justices):
        self.game, self.rev = game, rev
        self.region, self.goal, self.justices = region, goal, justices
        n = game.n_states
        self.member = [False] * n
        self.rank = [0] * n
        self.action = {}
        self.advance = {}
        self._solve()

    def _seed(self):
        game = self.game
        seeds = []
        for s in range(game.n_states):
            if self.goal[s] and self.region[s]:
                for j in game.state_acts[s]:
                    if all(self.region[t] for t in game.act_succs[j]):
                        self.member[s] = True
                        self.advance[s] = j
                        seeds.append(s)
                        break
        return seeds

    def _solve(self):
        seeds = self._seed()
        if not self.justices:
            self._attract_worklist(seeds)
            return
        game = self.game
        n = game.n_states
        is_seed = [False] * n
        for s in seeds:
            is_seed[s] = True
        y = self.member[:]
        iterate = 0
        while True:
            iterate += 1
            base = y[:]
            base_action = {}
            for s in range(n):
                if self.region[s] and not y[s]:
                    for j in game.state_acts[s]:
                        if all(y[t] for t in game.act_succs[j]):
                            base[s] = True
                            base_action[s] = j
                            break
            grew = False
            new_y = y[:]
            for js in self.justices:
                x = _gfp_reach_or_stay(game, self.rev, self.region, base, js)
                for s in range(n):
                    if x[s] and not new_y[s]:
                        new_y[s] = True
                        grew = True
                        self.rank[s] = iterate
                        if s in base_action:
                            self.action[s] = base_action[s]
                        elif not is_seed[s]:
                            for j in game.state_acts[s]:
                                if all(x[t] for t in game.act_succs[j]):
                                    self.action[s] = j
                                    break
            if not grew:
                break
            y = new_y
        self.member = y

    def _attract_worklist(self, seeds):
        """Plain backward attractor with counters; ranks are exact."""
        game, rev = self.game, self.rev
        cnt = [len(s) for s in game.act_succs]
        queue = deque(seeds)
        while queue:
            t = queue.popleft()
            for j in rev[t]:
                cnt[j] -= 1
                if cnt[j] == 0:
                    s = game.act_owner[j]
                    if self.region[s] and not self.member[s]:
                        self.member[s] = True
                        self.rank[s] = self.rank[t] + 1
                        self.action[s] = j
                        queue.append(s)


def _gfp_reach_or_stay(game, rev, region, base, justice):
    """Greatest fixpoint of base ∪ (¬justice ∩ CPre(·)) inside region."""
    n = game.n_states
    member = [False] * n
    for s in range(n):
        if region[s] and (base[s] or not justice[s]):
            member[s] = True
    alive = [False] * len(game.act_owner)
    viable = [0] * n
    for j, succs in enumerate(game.act_succs):
        if member[game.act_owner[j]] and all(member[t] for t in succs):
            alive[j] = True
            viable[game.act_owner[j]] += 1
    removal = deque()
    removed = [False] * n
    for s in range(n):
        if member[s] and not base[s] and viable[s] == 0:
            removal.append(s)
            removed[s] = True
    while removal:
        s = removal.popleft()
        member[s] = False
        for j in rev[s]:
            if alive[j]:
                alive[j] = False
                o = game.act_owner[j]
                viable[o] -= 1
                if member[o] and not base[o] and viable[o] == 0 and not removed[o]:
                    removed[o] = True
                    removal.append(o)
    return member


def solve_gr1(game: GameStructure, spec: GR1Spec):
    """Synthesize a winning strategy, or report unrealizability."""
    game.validate()
    n = game.n_states
    rev = game.reverse_index()
    safe = [True] * n
    for s in spec.bad:
        safe[s] = False
    goals = []
    for g in spec.sys_goals:
        gs = set(g)
        goals.append([s in gs and safe[s] for s in range(n)])
    justices = []
    for j in spec.env_justice:
        js = set(j)
        justices.append([s in js for s in range(n)])

    z = safe[:]
    changed = True
    while changed:
        changed = False
        for goal in goals:
            layer = _GoalLayer(game, rev, z, goal, justices)
            if layer.member != z:
                z = [a and b for a, b in zip(z, layer.member)]
                changed = True

    if not z[game.initial]:
        return Unrealizable("initial state outside the winning region", sum(z))

    moves: dict[tuple[int, int], int] = {}
    advance: set[tuple[int, int]] = set()
    for gi, goal in enumerate(goals):
        layer = _GoalLayer(game, rev, z, goal, justices)
        for s, j in layer.action.items():
            moves[(s, gi)] = j
        for s, j in layer.advance.items():
            moves[(s, gi)] = j  # goal hit: continue into the region, bump memory
            advance.add((s, gi))

    winning = frozenset(s for s in range(n) if z[s])
    return Strategy(game, len(goals), moves, advance, winning)


@dataclass
class StrategyReport:
    closure_violations: list
    safety_violations: list
    liveness_violations: list
    states_explored: int

    @property
    def ok(self) -> bool:
        return not (self.closure_violations or self.safety_violations
                    or self.liveness_violations)


def check_strategy(game: GameStructure, spec: GR1Spec, strategy: Strategy,
                   max_lasso: int = 1_000_000) -> StrategyReport:
    """Exhaustive audit of the strategy-restricted play graph.

    Explores every adversarial environment response, checking that the
    strategy is defined everywhere (closure), that no play enters a bad
    state, and that every cycle confined to one goal-memory layer starves
    some environment justice (otherwise a justice-fair play would miss a
    goal forever: a liveness violation).
    """
    bad = set(spec.bad)
    justice_sets = [set(j) for j in spec.env_justice]

    closure, safety = [], []
    seen = set()
    edges = {}  # (s, i) -> list[(t, i')]
    root = (game.initial, 0)
    stack = [root]
    if game.initial in bad:
        safety.append(("initial", game.initial))
    while stack and len(seen) < max_lasso:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        s, i = node
        if (s, i) not in strategy.moves:
            closure.append(node)
            continue
        j, i_next = strategy.move(s, i)
        outs = []
        for t in game.act_succs[j]:
            if t in bad:
                safety.append((node, t))
            nxt = (t, i_next)
            outs.append(nxt)
            if nxt not in seen:
                stack.append(nxt)
        edges[node] = outs

    liveness = _layer_cycle_violations(edges, justice_sets, strategy.advance)
    return StrategyReport(closure, safety, liveness, len(seen))


def _layer_cycle_violations(edges, justice_sets, advance):
    """Cycles that never score a goal must starve a justice.

    Goal memory only moves forward (mod n), so a play visits every goal
    infinitely often iff it passes goal-advance nodes infinitely often.
    Dropping the advance nodes from each memory layer's graph leaves exactly
    the goal-free cycles; a nontrivial SCC there whose states intersect every
    justice admits an assumption-fair play that misses a goal forever.
    """
    by_layer: dict[int, dict] = {}
    for (s, i), outs in edges.items():
        if (s, i) in advance:
            continue
        by_layer.setdefault(i, {})[s] = [t for (t, i2) in outs
                                         if i2 == i and (t, i2) not in advance]
    violations = []
    for layer, graph in sorted(by_layer.items()):
        for scc in _tarjan_sccs(graph):
            nontrivial = len(scc) > 1 or scc[0] in graph.get(scc[0], ())
            if not nontrivial:
                continue
            members = set(scc)
            if justice_sets and not all(members & js for js in justice_sets):
                continue  # some justice starves on every cycle in here
            violations.append((layer, sorted(members)[:8]))
    return violations


def _tarjan_sccs(graph):
    index, low, onstack = {}, {}, set()
    order, sccs = [], []
    counter = [0]

    def strongconnect(v):
        work = [(v, iter(graph.get(v, ())))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        order.append(v)
        onstack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in graph:
                    continue
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    order.append(w)
                    onstack.add(w)
                    work.append((w, iter(graph.get(w, ()))))
                    advanced = True
                    break
                elif w in onstack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                scc = []
                while True:
                    w = order.pop()
                    onstack.discard(w)
                    scc.append(w)
                    if w == node:
                        break
                sccs.append(scc)

    for v in list(graph):
        if v not in index:
            strongconnect(v)
    return sccs
