//! Bounded-degree simple graphs with counted adjacency access.
//!
//! A [`Graph`] is immutable once built. Algorithms that are meant to run in
//! sublinear time read it only through [`Graph::neighbor`], which charges
//! every adjacency-list read to an [`AccessCounter`]. Verification code may
//! use the uncounted accessors ([`Graph::neighbors`], [`Graph::edges`]).

mod conductance;
mod counter;
mod io;
mod perturb;
mod sbm;

pub use conductance::{
    graph_conductance_exact, inner_conductance_exact, outer_conductance, DEFAULT_BRUTE_FORCE_CAP,
};
pub use counter::{AccessCounter, Tally};
pub use io::{read_graph, read_partition, write_graph, write_partition};
pub use perturb::{delete_edges, PerturbationMode, PerturbationSpec, Perturbed};
pub use sbm::{equal_sizes, generate_sbm, SbmSpec};

use crate::error::{Error, Result};

/// Simple undirected graph stored as sorted CSR adjacency with a degree bound `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    d: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    // canonical edge id of every adjacency slot; both directions share an id
    slot_edge: Vec<u32>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from an undirected edge list.
    ///
    /// Self-edges and duplicate edges are rejected. When `degree_bound` is
    /// `None` the bound is the maximum observed degree.
    pub fn from_edges<I>(n: usize, edges: I, degree_bound: Option<usize>) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n > u32::MAX as usize {
            return Err(Error::InvalidGraph(format!("{n} vertices exceed the u32 id space")));
        }
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) outside 0..{n}")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-edge at vertex {u}")));
            }
            lists[u].push(v as u32);
            lists[v].push(u as u32);
        }
        for (x, list) in lists.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidGraph(format!("duplicate edge at vertex {x}")));
            }
        }
        let max_degree = lists.iter().map(Vec::len).max().unwrap_or(0);
        let d = match degree_bound {
            Some(d) if d < max_degree => {
                return Err(Error::InvalidGraph(format!(
                    "degree bound {d} below maximum degree {max_degree}"
                )))
            }
            Some(d) => d,
            None => max_degree,
        };
        Ok(Self::from_sorted_lists(lists, d))
    }

    fn from_sorted_lists(lists: Vec<Vec<u32>>, d: usize) -> Self {
        let n = lists.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for list in &lists {
            offsets.push(offsets.last().unwrap() + list.len());
        }
        let targets: Vec<u32> = lists.into_iter().flatten().collect();
        let mut slot_edge = vec![u32::MAX; targets.len()];
        let mut next_id = 0u32;
        for u in 0..n {
            for slot in offsets[u]..offsets[u + 1] {
                let v = targets[slot] as usize;
                if v > u {
                    slot_edge[slot] = next_id;
                    next_id += 1;
                } else {
                    // v < u: the edge already has an id from v's list.
                    let row = &targets[offsets[v]..offsets[v + 1]];
                    let pos = row.binary_search(&(u as u32)).expect("adjacency is symmetric");
                    slot_edge[slot] = slot_edge[offsets[v] + pos];
                }
            }
        }
        Self {
            n,
            d,
            offsets,
            edge_count: next_id as usize,
            targets,
            slot_edge,
        }
    }

    /// Returns a copy with a larger degree bound.
    pub fn with_degree_bound(&self, d: usize) -> Result<Self> {
        if d < self.max_degree() {
            return Err(Error::InvalidGraph(format!(
                "degree bound {d} below maximum degree {}",
                self.max_degree()
            )));
        }
        let mut g = self.clone();
        g.d = d;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Degree bound used by every conductance and walk formula.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, x: usize) -> usize {
        self.offsets[x + 1] - self.offsets[x]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|x| self.degree(x)).max().unwrap_or(0)
    }

    /// Uncounted view of the sorted neighbor list of `x`.
    pub fn neighbors(&self, x: usize) -> &[u32] {
        &self.targets[self.offsets[x]..self.offsets[x + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// The `i`-th neighbor of `x` (0-based, in increasing id order).
    ///
    /// Charges one probe to `counter` and marks the edge as touched.
    pub fn neighbor(&self, x: usize, i: usize, counter: &AccessCounter) -> Result<usize> {
        let degree = self.degree(x);
        if i >= degree {
            return Err(Error::NeighborOutOfRange {
                vertex: x,
                index: i,
                degree,
            });
        }
        let slot = self.offsets[x] + i;
        counter.record(self.slot_edge[slot]);
        Ok(self.targets[slot] as usize)
    }

    /// Counted lookup for the walk engine; `i` must be below `degree(x)`.
    #[inline]
    pub(crate) fn neighbor_tallied(&self, x: usize, i: usize, tally: &mut Tally<'_>) -> usize {
        debug_assert!(i < self.degree(x));
        let slot = self.offsets[x] + i;
        tally.record(self.slot_edge[slot]);
        self.targets[slot] as usize
    }

    /// All edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Subgraph induced by `vertices`, relabelled `0..vertices.len()` in the
    /// given order. The degree bound is inherited.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Self {
        let mut local = vec![u32::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i as u32;
        }
        let lists = vertices
            .iter()
            .map(|&v| {
                let mut row: Vec<u32> = self
                    .neighbors(v)
                    .iter()
                    .filter_map(|&w| {
                        let l = local[w as usize];
                        (l != u32::MAX).then_some(l)
                    })
                    .collect();
                row.sort_unstable();
                row
            })
            .collect();
        Self::from_sorted_lists(lists, self.d)
    }

    /// Full scan of the structural invariants: symmetry, no self-edges,
    /// no duplicates, degrees within the bound.
    pub fn check_invariants(&self) -> Result<()> {
        for x in 0..self.n {
            let row = self.neighbors(x);
            if row.len() > self.d {
                return Err(Error::InvalidGraph(format!("vertex {x} exceeds degree bound")));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGraph(format!("row {x} not strictly sorted")));
            }
            for &y in row {
                let y = y as usize;
                if y == x {
                    return Err(Error::InvalidGraph(format!("self-edge at {x}")));
                }
                if !self.has_edge(y, x) {
                    return Err(Error::InvalidGraph(format!("edge ({x}, {y}) not symmetric")));
                }
            }
        }
        Ok(())
    }
}

/// The lazy-walk view of a `d`-bounded graph: every vertex carries
/// `d - deg(x)` half-weight self-loops, making the walk `d`-regular.
#[derive(Clone, Copy, Debug)]
pub struct RegularView<'g> {
    graph: &'g Graph,
    two_d: f64,
}

impl<'g> RegularView<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        Self {
            graph,
            two_d: 2.0 * graph.d() as f64,
        }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn d(&self) -> usize {
        self.graph.d()
    }

    /// Total self-loop weight `(d - deg(x)) / 2`.
    pub fn w_self(&self, x: usize) -> f64 {
        (self.graph.d() - self.graph.degree(x)) as f64 * 0.5
    }

    /// Probability of moving to one particular neighbor: `1 / (2d)`.
    pub fn neighbor_probability(&self) -> f64 {
        1.0 / self.two_d
    }

    /// Probability that a lazy step stays put: `1 - deg(x) / (2d)`.
    pub fn stay_probability(&self, x: usize) -> f64 {
        1.0 - self.graph.degree(x) as f64 / self.two_d
    }

    /// One lazy step from `x` driven by a single uniform draw `u` in `[0, 1)`.
    ///
    /// Moves to neighbor `floor(u * 2d)` when that index is below `deg(x)`,
    /// which happens with probability exactly `deg(x) / (2d)`.
    #[inline]
    pub(crate) fn step(&self, x: usize, u: f64, tally: &mut Tally<'_>) -> usize {
        let scaled = u * self.two_d;
        let degree = self.graph.degree(x);
        if scaled < degree as f64 {
            self.graph.neighbor_tallied(x, scaled as usize, tally)
        } else {
            x
        }
    }
}

/// Assignment of every vertex to one of `k` clusters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    k: usize,
    assign: Vec<usize>,
}

impl Partition {
    /// Labels must lie in `0..k`. Empty clusters are allowed here; use
    /// [`Partition::require_nonempty`] for ground-truth checks.
    pub fn new(k: usize, assign: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("partition needs k >= 1".into()));
        }
        if let Some(&label) = assign.iter().find(|&&l| l >= k) {
            return Err(Error::LabelOutOfRange { label, k });
        }
        Ok(Self { k, assign })
    }

    /// Contiguous blocks of the given sizes.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let assign = sizes
            .iter()
            .enumerate()
            .flat_map(|(i, &s)| std::iter::repeat_n(i, s))
            .collect();
        Self::new(sizes.len(), assign)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.assign.len()
    }

    pub fn label(&self, x: usize) -> usize {
        self.assign[x]
    }

    pub fn labels(&self) -> &[usize] {
        &self.assign
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.assign {
            sizes[l] += 1;
        }
        sizes
    }

    /// Members of each cluster in increasing vertex order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut clusters = vec![Vec::new(); self.k];
        for (x, &l) in self.assign.iter().enumerate() {
            clusters[l].push(x);
        }
        clusters
    }

    pub fn require_nonempty(&self) -> Result<()> {
        match self.sizes().iter().position(|&s| s == 0) {
            Some(i) => Err(Error::EmptyCluster(i)),
            None => Ok(()),
        }
    }
}
