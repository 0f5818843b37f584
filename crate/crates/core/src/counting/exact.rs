//! Exact model counting over a component's constraints.
//!
//! Binary CSP with three-valued variables. The counter branches on a central
//! variable of the constraint graph, keeps arc consistency after every choice, drops
//! variables that became fixed (arc consistency already guarantees their
//! constraints) and multiplies the counts of the independent pieces the rest
//! falls apart into. Subproblems are memoised on their variable set and
//! domains, so conditioned counts of one component share work.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::interdep::ConstraintSet;
use crate::paths::{RelSet, Relationship};

const VALUES: [Relationship; 3] = Relationship::INFERABLE;

/// Support tables of one binary constraint: `support[a]` is the bit mask of
/// values of the other variable compatible with value index `a`.
#[derive(Debug, Clone, Copy)]
struct Edge {
    other: usize,
    support: [u8; 3],
}

#[derive(Debug, Clone)]
pub struct Csp {
    domains: Vec<u8>,
    edges: Vec<Vec<Edge>>,
}

fn bit(i: usize) -> u8 {
    1 << i
}

impl Csp {
    pub fn compile(cs: &ConstraintSet) -> Csp {
        let n = cs.base.len();
        let domains = cs.domains().into_iter().map(RelSet::bits).collect();
        // allowed[(i, j)][a][b] for i < j
        let mut pairs: HashMap<(usize, usize), [[bool; 3]; 3]> = HashMap::new();
        for adj in &cs.adjacency {
            let (i, j) = adj.arc();
            let entry = pairs.entry((i, j)).or_insert([[true; 3]; 3]);
            for (a, ra) in VALUES.iter().enumerate() {
                for (b, rb) in VALUES.iter().enumerate() {
                    let ok = if adj.first == i { adj.allows(*ra, *rb) } else { adj.allows(*rb, *ra) };
                    entry[a][b] &= ok;
                }
            }
        }
        let mut edges = vec![Vec::new(); n];
        let mut keys: Vec<_> = pairs.keys().copied().collect();
        keys.sort_unstable();
        for (i, j) in keys {
            let m = pairs[&(i, j)];
            let mut fwd = [0u8; 3];
            let mut back = [0u8; 3];
            for a in 0..3 {
                for b in 0..3 {
                    if m[a][b] {
                        fwd[a] |= bit(b);
                        back[b] |= bit(a);
                    }
                }
            }
            edges[i].push(Edge { other: j, support: fwd });
            edges[j].push(Edge { other: i, support: back });
        }
        Csp { domains, edges }
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }
}

fn supported(values: u8, edge: &Edge, other_dom: u8) -> u8 {
    let mut keep = 0;
    for a in 0..3 {
        if values & bit(a) != 0 && edge.support[a] & other_dom != 0 {
            keep |= bit(a);
        }
    }
    keep
}

/// Memoising counter bound to one compiled component.
pub struct Counter<'a> {
    csp: &'a Csp,
    memo: HashMap<Vec<(u32, u8)>, BigUint>,
}

impl<'a> Counter<'a> {
    pub fn new(csp: &'a Csp) -> Counter<'a> {
        Counter { csp, memo: HashMap::new() }
    }

    /// Number of satisfying assignments.
    pub fn count(&mut self) -> BigUint {
        let doms = self.csp.domains.clone();
        self.count_from(doms)
    }

    /// Number of satisfying assignments with `node` fixed to `rel`.
    pub fn count_with(&mut self, node: usize, rel: Relationship) -> BigUint {
        let mut doms = self.csp.domains.clone();
        doms[node] &= RelSet::only(rel).bits();
        self.count_from(doms)
    }

    fn count_from(&mut self, mut doms: Vec<u8>) -> BigUint {
        let all: Vec<usize> = (0..doms.len()).collect();
        if !self.propagate(&mut doms, all.iter().copied()) {
            return BigUint::zero();
        }
        self.count_pieces(&doms, &all)
    }

    /// Arc consistency seeded from `changed`; false on a wiped-out domain.
    fn propagate(&self, doms: &mut [u8], changed: impl Iterator<Item = usize>) -> bool {
        let mut queue: VecDeque<usize> = changed.collect();
        let mut queued = vec![false; doms.len()];
        for &v in &queue {
            queued[v] = true;
        }
        while let Some(j) = queue.pop_front() {
            queued[j] = false;
            if doms[j] == 0 {
                return false;
            }
            for e in &self.csp.edges[j] {
                let i = e.other;
                let back = self.csp.edges[i].iter().find(|b| b.other == j).expect("symmetric edges");
                let kept = supported(doms[i], back, doms[j]);
                if kept != doms[i] {
                    if kept == 0 {
                        return false;
                    }
                    doms[i] = kept;
                    if !queued[i] {
                        queued[i] = true;
                        queue.push_back(i);
                    }
                }
            }
        }
        true
    }

    /// Product of counts of the connected pieces among the still-open
    /// variables in `vars`. Fixed variables contribute a factor of one.
    fn count_pieces(&mut self, doms: &[u8], vars: &[usize]) -> BigUint {
        let open: Vec<usize> = vars.iter().copied().filter(|&v| doms[v].count_ones() > 1).collect();
        let mut seen: HashMap<usize, bool> = open.iter().map(|&v| (v, false)).collect();
        let mut total = BigUint::one();
        for &start in &open {
            if seen[&start] {
                continue;
            }
            let mut piece = vec![start];
            seen.insert(start, true);
            let mut k = 0;
            while k < piece.len() {
                let v = piece[k];
                k += 1;
                for e in &self.csp.edges[v] {
                    if let Some(s) = seen.get_mut(&e.other) {
                        if !*s {
                            *s = true;
                            piece.push(e.other);
                        }
                    }
                }
            }
            piece.sort_unstable();
            let c = self.count_piece(doms, &piece);
            if c.is_zero() {
                return c;
            }
            total *= c;
        }
        total
    }

    /// Middle vertex of a longest BFS path through the piece. Fixing it
    /// tends to split chain- and tree-like constraint graphs in half.
    fn center(&self, piece: &[usize]) -> usize {
        let bfs = |start: usize| -> (usize, HashMap<usize, usize>) {
            let mut parent = HashMap::from([(start, start)]);
            let mut queue = VecDeque::from([start]);
            let mut last = start;
            while let Some(v) = queue.pop_front() {
                last = v;
                for e in &self.csp.edges[v] {
                    if piece.binary_search(&e.other).is_ok() && !parent.contains_key(&e.other) {
                        parent.insert(e.other, v);
                        queue.push_back(e.other);
                    }
                }
            }
            (last, parent)
        };
        let (far, _) = bfs(piece[0]);
        let (other_end, parent) = bfs(far);
        let mut path = vec![other_end];
        while let Some(&p) = parent.get(path.last().unwrap()) {
            if p == *path.last().unwrap() {
                break;
            }
            path.push(p);
        }
        path[path.len() / 2]
    }

    fn count_piece(&mut self, doms: &[u8], piece: &[usize]) -> BigUint {
        if piece.len() == 1 {
            return BigUint::from(doms[piece[0]].count_ones());
        }
        let key: Vec<(u32, u8)> = piece.iter().map(|&v| (v as u32, doms[v])).collect();
        if let Some(c) = self.memo.get(&key) {
            return c.clone();
        }

        let branch = self.center(piece);

        let mut total = BigUint::zero();
        for a in 0..3 {
            if doms[branch] & bit(a) == 0 {
                continue;
            }
            let mut sub = doms.to_vec();
            sub[branch] = bit(a);
            if self.propagate(&mut sub, std::iter::once(branch)) {
                total += self.count_pieces(&sub, piece);
            }
        }
        self.memo.insert(key, total.clone());
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interdep::{AdjacencyConstraint, UnaryConstraint};
    use std::collections::BTreeSet;

    fn chain(n: usize) -> ConstraintSet {
        ConstraintSet {
            base: vec![RelSet::ALL; n],
            unary: vec![],
            adjacency: (0..n.saturating_sub(1))
                .map(|i| AdjacencyConstraint {
                    first: i,
                    first_forward: true,
                    second: i + 1,
                    second_forward: true,
                    paths: BTreeSet::from([0]),
                })
                .collect(),
        }
    }

    #[test]
    fn single_free_node() {
        let cs = ConstraintSet { base: vec![RelSet::ALL], ..Default::default() };
        let csp = Csp::compile(&cs);
        assert_eq!(Counter::new(&csp).count(), BigUint::from(3u32));
    }

    #[test]
    fn valley_free_chains() {
        // valley-free words of length n: c2p^i p2c^j (n+1 ways) or c2p^i p2p p2c^j (n ways)
        for n in 1..12usize {
            let csp = Csp::compile(&chain(n));
            let expect = 2 * n + 1;
            assert_eq!(Counter::new(&csp).count(), BigUint::from(expect), "n={n}");
        }
    }

    #[test]
    fn two_node_conditioned() {
        let csp = Csp::compile(&chain(2));
        let mut c = Counter::new(&csp);
        assert_eq!(c.count(), BigUint::from(5u32));
        assert_eq!(c.count_with(1, Relationship::P2C), BigUint::from(3u32));
        assert_eq!(c.count_with(0, Relationship::C2P), BigUint::from(3u32));
        assert_eq!(c.count_with(0, Relationship::P2P), BigUint::from(1u32));
    }

    #[test]
    fn empty_domain_counts_zero() {
        let mut cs = chain(2);
        cs.unary.push(UnaryConstraint { node: 0, allowed: RelSet::only(Relationship::P2C), paths: BTreeSet::new() });
        cs.unary.push(UnaryConstraint { node: 0, allowed: RelSet::only(Relationship::C2P), paths: BTreeSet::new() });
        let csp = Csp::compile(&cs);
        assert!(Counter::new(&csp).count().is_zero());
    }

    #[test]
    fn disconnected_pieces_multiply() {
        let mut cs = chain(2);
        cs.base.push(RelSet::TRANSIT);
        let csp = Csp::compile(&cs);
        assert_eq!(Counter::new(&csp).count(), BigUint::from(10u32));
    }

    #[test]
    fn long_chain_is_fast_and_exact() {
        let n = 3000;
        let csp = Csp::compile(&chain(n));
        let expect = 2 * n + 1;
        assert_eq!(Counter::new(&csp).count(), BigUint::from(expect));
    }
}
