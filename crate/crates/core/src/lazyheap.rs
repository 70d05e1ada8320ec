//! Lazy upper-bound max-heap selector for nonprivate training.
//!
//! A pairing heap keyed by priority magnitude. Priority increases are
//! applied eagerly (amortized O(1) cut-and-meld); decreases are ignored, so
//! every stored key upper-bounds the latest reported priority. get_next pops
//! until the top stored bound falls below the best verified true priority,
//! then re-inserts everything it popped keyed by true values. Ties break
//! toward the lowest index.

use rand::RngCore;

use crate::selector::CoordinateSelector;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    prio: f64,
    child: u32,
    sibling: u32,
    // parent if first child, left sibling otherwise
    prev: u32,
}

#[derive(Debug, Clone)]
pub struct LazyMaxHeap {
    nodes: Vec<Node>,
    root: u32,
    len: usize,
    pops: u64,
}

impl LazyMaxHeap {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity < NONE as usize);
        LazyMaxHeap {
            nodes: Vec::with_capacity(capacity),
            root: NONE,
            len: 0,
            pops: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Stored (possibly stale) priority of index `i`.
    pub fn stored_priority(&self, i: usize) -> f64 {
        self.nodes[i].prio
    }

    pub fn peek_priority(&self) -> Option<f64> {
        (self.root != NONE).then(|| self.nodes[self.root as usize].prio)
    }

    #[inline]
    fn beats(&self, a: u32, b: u32) -> bool {
        let (pa, pb) = (self.nodes[a as usize].prio, self.nodes[b as usize].prio);
        pa > pb || (pa == pb && a < b)
    }

    /// Make `c` the first child of `p`.
    fn attach(&mut self, p: u32, c: u32) {
        let old = self.nodes[p as usize].child;
        self.nodes[c as usize].sibling = old;
        if old != NONE {
            self.nodes[old as usize].prev = c;
        }
        self.nodes[c as usize].prev = p;
        self.nodes[p as usize].child = c;
    }

    fn meld(&mut self, a: u32, b: u32) -> u32 {
        if a == NONE {
            return b;
        }
        if b == NONE {
            return a;
        }
        if self.beats(a, b) {
            self.attach(a, b);
            a
        } else {
            self.attach(b, a);
            b
        }
    }

    /// Unlink a non-root node from its parent/sibling chain.
    fn detach(&mut self, i: u32) {
        let prev = self.nodes[i as usize].prev;
        let sib = self.nodes[i as usize].sibling;
        debug_assert!(prev != NONE);
        if self.nodes[prev as usize].child == i {
            self.nodes[prev as usize].child = sib;
        } else {
            self.nodes[prev as usize].sibling = sib;
        }
        if sib != NONE {
            self.nodes[sib as usize].prev = prev;
        }
        self.nodes[i as usize].prev = NONE;
        self.nodes[i as usize].sibling = NONE;
    }

    fn insert_node(&mut self, i: u32) {
        self.root = self.meld(self.root, i);
        self.len += 1;
    }

    /// Remove and return the max node, restructuring via two-pass pairing.
    fn pop_top(&mut self) -> Option<u32> {
        if self.root == NONE {
            return None;
        }
        let top = self.root;
        let mut kids = Vec::new();
        let mut c = self.nodes[top as usize].child;
        while c != NONE {
            let next = self.nodes[c as usize].sibling;
            self.nodes[c as usize].prev = NONE;
            self.nodes[c as usize].sibling = NONE;
            kids.push(c);
            c = next;
        }
        self.nodes[top as usize].child = NONE;
        // left-to-right pairing pass, then fold right-to-left
        let mut paired = Vec::with_capacity(kids.len().div_ceil(2));
        let mut it = kids.chunks_exact(2);
        for pair in &mut it {
            paired.push(self.meld(pair[0], pair[1]));
        }
        if let [last] = it.remainder() {
            paired.push(*last);
        }
        let mut new_root = NONE;
        for &h in paired.iter().rev() {
            new_root = self.meld(new_root, h);
        }
        self.root = new_root;
        self.len -= 1;
        Some(top)
    }
}

impl CoordinateSelector for LazyMaxHeap {
    fn add(&mut self, i: usize, priority: f64) {
        assert_eq!(i, self.nodes.len(), "indices must be added in order");
        self.nodes.push(Node {
            prio: priority,
            child: NONE,
            sibling: NONE,
            prev: NONE,
        });
        self.insert_node(i as u32);
    }

    fn update(&mut self, i: usize, priority: f64) {
        let i = i as u32;
        if priority <= self.nodes[i as usize].prio {
            // decreases keep the stale upper bound
            return;
        }
        self.nodes[i as usize].prio = priority;
        if i != self.root {
            self.detach(i);
            self.len -= 1;
            self.insert_node(i);
        }
    }

    fn get_next(
        &mut self,
        true_priority: &mut dyn FnMut(usize) -> f64,
        _rng: &mut dyn RngCore,
    ) -> usize {
        assert!(self.root != NONE, "get_next on empty heap");
        let mut popped: Vec<(u32, f64)> = Vec::new();
        let mut best: Option<(u32, f64)> = None;
        while self.root != NONE {
            if let Some((_, bv)) = best {
                // stored keys are upper bounds: nothing left can beat bv
                if self.nodes[self.root as usize].prio < bv {
                    break;
                }
            }
            let c = self.pop_top().unwrap();
            self.pops += 1;
            let tv = true_priority(c as usize);
            popped.push((c, tv));
            match best {
                Some((bj, bv)) if tv < bv || (tv == bv && c > bj) => {}
                _ => best = Some((c, tv)),
            }
        }
        for &(i, tv) in &popped {
            self.nodes[i as usize].prio = tv;
            self.insert_node(i);
        }
        best.expect("non-empty heap yields a candidate").0 as usize
    }

    fn pops(&self) -> u64 {
        self.pops
    }
}
