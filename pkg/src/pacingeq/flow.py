"""Tiny exact max-flow used to decide allocation feasibility in the grid oracle.

Edmonds-Karp over Fraction capacities; lower bounds are handled with the
standard excess/deficit transformation.  Graphs here have a handful of nodes,
so simplicity beats asymptotics.
"""
from __future__ import annotations

from collections import deque
from fractions import Fraction


class MaxFlow:
    def __init__(self):
        self.adj: dict = {}
        # edge storage: list of [to, capacity, index of reverse edge]
        self.edges: list = []

    def add_node(self, u):
        if u not in self.adj:
            self.adj[u] = []

    def add_edge(self, u, v, capacity: Fraction) -> int:
        self.add_node(u)
        self.add_node(v)
        self.adj[u].append(len(self.edges))
        self.edges.append([v, Fraction(capacity), None])
        self.adj[v].append(len(self.edges))
        self.edges.append([u, Fraction(0), None])
        self.edges[-2][2] = len(self.edges) - 1
        self.edges[-1][2] = len(self.edges) - 2
        return len(self.edges) - 2

    def _bfs(self, s, t):
        parent = {s: None}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            if u == t:
                break
            for eid in self.adj[u]:
                v, cap, _ = self.edges[eid]
                if cap > 0 and v not in parent:
                    parent[v] = eid
                    queue.append(v)
        if t not in parent:
            return None
        path = []
        node = t
        while parent[node] is not None:
            eid = parent[node]
            path.append(eid)
            node = self.edges[self.edges[eid][2]][0]
        return path

    def max_flow(self, s, t) -> Fraction:
        self.add_node(s)
        self.add_node(t)
        total = Fraction(0)
        while True:
            path = self._bfs(s, t)
            if path is None:
                return total
            bottleneck = min(self.edges[eid][1] for eid in path)
            for eid in path:
                self.edges[eid][1] -= bottleneck
                rev = self.edges[eid][2]
                self.edges[rev][1] += bottleneck
            total += bottleneck

    def flow_on(self, eid: int) -> Fraction:
        # flow pushed along edge eid equals the residual on its reverse edge
        return self.edges[self.edges[eid][2]][1]


def feasible_flow(edges: list, source, sink):
    """Feasible source->sink flow respecting [lower, upper] edge bounds.

    ``edges`` is a list of (u, v, lower, upper).  Returns a dict mapping edge
    position -> flow, or None when no feasible flow exists.  The flow value
    itself is unconstrained (a closing sink->source arc makes it a circulation).
    """
    net = MaxFlow()
    excess: dict = {}
    ids = []
    for (u, v, lo, hi) in edges:
        if lo > hi:
            return None
        ids.append(net.add_edge(u, v, hi - lo))
        excess[v] = excess.get(v, Fraction(0)) + lo
        excess[u] = excess.get(u, Fraction(0)) - lo
    net.add_edge(sink, source, Fraction(10 ** 9) + sum(hi for (_, _, _, hi) in edges))
    super_s, super_t = ("__super_s__",), ("__super_t__",)
    needed = Fraction(0)
    for node, e in sorted(excess.items(), key=str):
        if e > 0:
            net.add_edge(super_s, node, e)
            needed += e
        elif e < 0:
            net.add_edge(node, super_t, -e)
    pushed = net.max_flow(super_s, super_t)
    if pushed != needed:
        return None
    return {k: net.flow_on(eid) + edges[k][2] for k, eid in enumerate(ids)}
