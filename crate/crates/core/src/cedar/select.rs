//! Ordering and prefix selection over grounded constraints, with every
//! comparison counted as one logic operation.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::cost::{Cost, CostOverflow};
use crate::model::{by_cost_desc, ConstraintId, GroundedConstraint};

/// Sorts by cost descending, then id ascending. Returns the number of
/// comparisons performed.
pub fn sort_desc_counted(list: &mut [GroundedConstraint]) -> u64 {
    let count = Cell::new(0u64);
    list.sort_by(|a, b| {
        count.set(count.get() + 1);
        by_cost_desc(a, b)
    });
    count.get()
}

/// Outcome of accumulating constraints until a threshold is met.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prefix {
    pub chosen: Vec<GroundedConstraint>,
    pub reached: bool,
    /// Threshold comparisons performed.
    pub checks: u64,
}

/// Takes constraints from `source` in order, skipping ids already taken,
/// until their summed cost reaches `threshold` or the source runs dry. The
/// threshold is tested before each addition, so a zero threshold takes
/// nothing.
pub fn take_prefix<I>(source: I, threshold: Cost) -> Result<Prefix, CostOverflow>
where
    I: IntoIterator<Item = GroundedConstraint>,
{
    let mut source = source.into_iter();
    let mut seen: BTreeSet<ConstraintId> = BTreeSet::new();
    let mut chosen = Vec::new();
    let mut sum = Cost::ZERO;
    let mut checks = 0;
    loop {
        checks += 1;
        if sum >= threshold {
            return Ok(Prefix { chosen, reached: true, checks });
        }
        let next = loop {
            match source.next() {
                Some(g) if seen.contains(&g.constraint_id) => continue,
                other => break other,
            }
        };
        let Some(g) = next else {
            return Ok(Prefix { chosen, reached: false, checks });
        };
        seen.insert(g.constraint_id);
        sum = sum.checked_add(g.cost)?;
        chosen.push(g);
    }
}

/// Binary max-heap that counts one operation per comparison and one per
/// insert or extract.
pub struct CountingHeap<T> {
    items: Vec<T>,
    ops: u64,
}

impl<T: Ord> CountingHeap<T> {
    pub fn new() -> Self {
        Self { items: Vec::new(), ops: 0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ops(&self) -> u64 {
        self.ops
    }

    fn greater(&mut self, i: usize, j: usize) -> bool {
        self.ops += 1;
        self.items[i].cmp(&self.items[j]) == Ordering::Greater
    }

    pub fn push(&mut self, item: T) {
        self.ops += 1;
        self.items.push(item);
        let mut i = self.items.len() - 1;
        while i > 0 {
            let parent = (i - 1) / 2;
            if !self.greater(i, parent) {
                break;
            }
            self.items.swap(i, parent);
            i = parent;
        }
    }

    pub fn pop(&mut self) -> Option<T> {
        let last = self.items.len().checked_sub(1)?;
        self.ops += 1;
        self.items.swap(0, last);
        let top = self.items.pop();
        let n = self.items.len();
        let mut i = 0;
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut largest = i;
            if l < n && self.greater(l, largest) {
                largest = l;
            }
            if r < n && self.greater(r, largest) {
                largest = r;
            }
            if largest == i {
                break;
            }
            self.items.swap(i, largest);
            i = largest;
        }
        top
    }
}

impl<T: Ord> Default for CountingHeap<T> {
    fn default() -> Self {
        Self::new()
    }
}

struct Head {
    item: GroundedConstraint,
    stream: usize,
}

impl PartialEq for Head {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Head {}

impl PartialOrd for Head {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Head {
    // Greater = extracted first: higher cost, then smaller id, then earlier stream.
    fn cmp(&self, other: &Self) -> Ordering {
        by_cost_desc(&other.item, &self.item).then_with(|| other.stream.cmp(&self.stream))
    }
}

/// k-way merge of lists each sorted by [`by_cost_desc`], through a
/// [`CountingHeap`] holding one head per list.
pub struct HeapMerge {
    streams: Vec<std::vec::IntoIter<GroundedConstraint>>,
    heap: CountingHeap<Head>,
}

impl HeapMerge {
    pub fn new(lists: Vec<Vec<GroundedConstraint>>) -> Self {
        let mut streams: Vec<_> = lists.into_iter().map(Vec::into_iter).collect();
        let mut heap = CountingHeap::new();
        for (stream, s) in streams.iter_mut().enumerate() {
            if let Some(item) = s.next() {
                heap.push(Head { item, stream });
            }
        }
        Self { streams, heap }
    }

    pub fn ops(&self) -> u64 {
        self.heap.ops()
    }
}

impl Iterator for HeapMerge {
    type Item = GroundedConstraint;

    fn next(&mut self) -> Option<GroundedConstraint> {
        let Head { item, stream } = self.heap.pop()?;
        if let Some(next) = self.streams[stream].next() {
            self.heap.push(Head { item: next, stream });
        }
        Some(item)
    }
}

/// Round-robin interleaving: first elements of every list, then second
/// elements, and so on.
pub fn interleave(lists: &[Vec<GroundedConstraint>]) -> Vec<GroundedConstraint> {
    let longest = lists.iter().map(Vec::len).max().unwrap_or(0);
    (0..longest)
        .flat_map(|rank| lists.iter().filter_map(move |l| l.get(rank).cloned()))
        .collect()
}
