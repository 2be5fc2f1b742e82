use std::sync::atomic::{AtomicU64, Ordering};

use super::Graph;

/// Shared tally of adjacency reads.
///
/// `probes` counts every adjacency-list entry read, `distinct_edges` the
/// number of distinct undirected edges ever touched and `walks` the number of
/// random walks started. All three only grow. Concurrent walkers may share one
/// counter.
#[derive(Debug)]
pub struct AccessCounter {
    probes: AtomicU64,
    walks: AtomicU64,
    distinct: AtomicU64,
    touched: Vec<AtomicU64>,
    edge_count: usize,
}

impl AccessCounter {
    pub fn new(graph: &Graph) -> Self {
        let words = graph.edge_count().div_ceil(64);
        Self {
            probes: AtomicU64::new(0),
            walks: AtomicU64::new(0),
            distinct: AtomicU64::new(0),
            touched: (0..words).map(|_| AtomicU64::new(0)).collect(),
            edge_count: graph.edge_count(),
        }
    }

    pub fn probes(&self) -> u64 {
        self.probes.load(Ordering::Relaxed)
    }

    pub fn distinct_edges(&self) -> u64 {
        self.distinct.load(Ordering::Relaxed)
    }

    pub fn walks(&self) -> u64 {
        self.walks.load(Ordering::Relaxed)
    }

    /// Number of edges in the graph this counter was created for.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub(crate) fn record(&self, edge: u32) {
        self.probes.fetch_add(1, Ordering::Relaxed);
        self.mark(edge);
    }

    #[inline]
    fn mark(&self, edge: u32) {
        let word = &self.touched[edge as usize / 64];
        let bit = 1u64 << (edge % 64);
        if word.load(Ordering::Relaxed) & bit == 0 && word.fetch_or(bit, Ordering::Relaxed) & bit == 0 {
            self.distinct.fetch_add(1, Ordering::Relaxed);
        }
    }

    /// Local accumulator whose probe and walk totals are added on drop.
    pub fn tally(&self) -> Tally<'_> {
        Tally {
            counter: self,
            probes: 0,
            walks: 0,
        }
    }
}

/// Per-task batch of counts; edge marks go straight to the shared bitset.
#[derive(Debug)]
pub struct Tally<'c> {
    counter: &'c AccessCounter,
    probes: u64,
    walks: u64,
}

impl Tally<'_> {
    #[inline]
    pub(crate) fn record(&mut self, edge: u32) {
        self.probes += 1;
        self.counter.mark(edge);
    }

    #[inline]
    pub(crate) fn start_walk(&mut self) {
        self.walks += 1;
    }
}

impl Drop for Tally<'_> {
    fn drop(&mut self) {
        self.counter.probes.fetch_add(self.probes, Ordering::Relaxed);
        self.counter.walks.fetch_add(self.walks, Ordering::Relaxed);
    }
}
