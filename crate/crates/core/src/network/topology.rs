use std::collections::VecDeque;
use std::fmt::Write as _;

use super::NetworkError;
use crate::rng::SeededStream;

/// Undirected connected graph with closed neighborhoods: every node is its
/// own neighbor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    adjacency: Vec<bool>,
    seed: u64,
}

impl Topology {
    /// Build from an undirected edge list. Self-loops are ignored (they are
    /// always implied) and duplicate edges collapse.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], seed: u64) -> Result<Self, NetworkError> {
        if n == 0 {
            return Err(NetworkError::InvalidTopology(
                "graph must have at least one node".into(),
            ));
        }
        let mut adjacency = vec![false; n * n];
        for k in 0..n {
            adjacency[k * n + k] = true;
        }
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(NetworkError::InvalidTopology(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            adjacency[u * n + v] = true;
            adjacency[v * n + u] = true;
        }
        let topo = Self { n, adjacency, seed };
        if !topo.is_connected() {
            return Err(NetworkError::InvalidTopology("graph is not connected".into()));
        }
        Ok(topo)
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Whether `l` is in the closed neighborhood of `k`.
    pub fn is_neighbor(&self, l: usize, k: usize) -> bool {
        self.adjacency[l * self.n + k]
    }

    /// Closed neighborhood of `k`, ascending.
    pub fn neighborhood(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&l| self.is_neighbor(l, k))
    }

    /// `n_k = |N_k|`, counting the node itself.
    pub fn closed_degree(&self, k: usize) -> usize {
        self.neighborhood(k).count()
    }

    /// Undirected edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.is_neighbor(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Average number of neighbors excluding self.
    pub fn average_degree(&self) -> f64 {
        2.0 * self.edges().len() as f64 / self.n as f64
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(k) = queue.pop_front() {
            for l in self.neighborhood(k).collect::<Vec<_>>() {
                if !seen[l] {
                    seen[l] = true;
                    count += 1;
                    queue.push_back(l);
                }
            }
        }
        count == self.n
    }

    /// Plain-text edge list: `N <count>` then one `u v` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("N {}\n", self.n);
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self, NetworkError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| NetworkError::Parse("empty edge list".into()))?;
        let mut parts = header.split_whitespace();
        let n = match (parts.next(), parts.next(), parts.next()) {
            (Some("N"), Some(count), None) => count
                .parse::<usize>()
                .map_err(|e| NetworkError::Parse(format!("bad node count {count:?}: {e}")))?,
            _ => return Err(NetworkError::Parse(format!("expected `N <count>`, got {header:?}"))),
        };
        let mut edges = Vec::new();
        for line in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(NetworkError::Parse(format!("expected `u v`, got {line:?}")));
            }
            let parse = |f: &str| {
                f.parse::<usize>()
                    .map_err(|e| NetworkError::Parse(format!("bad node index {f:?}: {e}")))
            };
            edges.push((parse(fields[0])?, parse(fields[1])?));
        }
        Self::from_edges(n, &edges, 0)
    }
}

/// Random connected graph: a uniformly random spanning tree (decoded from a
/// random Prüfer sequence) plus distinct uniformly random extra edges until
/// the average open degree reaches the target.
pub fn generate_topology(n: usize, target_avg_degree: f64, seed: u64) -> Result<Topology, NetworkError> {
    if n < 2 {
        return Err(NetworkError::DegreeRequest {
            n,
            target: target_avg_degree,
            reason: "need at least two nodes",
        });
    }
    if !(target_avg_degree >= 1.0 && target_avg_degree < n as f64) {
        return Err(NetworkError::DegreeRequest {
            n,
            target: target_avg_degree,
            reason: "average degree must lie in [1, n)",
        });
    }
    let tree_degree = 2.0 * (n - 1) as f64 / n as f64;
    if tree_degree > target_avg_degree + 0.5 {
        return Err(NetworkError::DegreeRequest {
            n,
            target: target_avg_degree,
            reason: "a connected graph on n nodes has a higher average degree",
        });
    }
    let max_edges = n * (n - 1) / 2;
    let wanted = ((target_avg_degree * n as f64 / 2.0).ceil() as usize).clamp(n - 1, max_edges);

    let mut rng = SeededStream::new(seed);
    let mut present = vec![false; n * n];
    let mut edges = random_spanning_tree(n, &mut rng);
    for &(u, v) in &edges {
        present[u * n + v] = true;
        present[v * n + u] = true;
    }
    while edges.len() < wanted {
        let u = rng.index(n);
        let v = rng.index(n);
        if u == v || present[u * n + v] {
            continue;
        }
        present[u * n + v] = true;
        present[v * n + u] = true;
        edges.push((u.min(v), u.max(v)));
    }
    Topology::from_edges(n, &edges, seed)
}

fn random_spanning_tree(n: usize, rng: &mut SeededStream) -> Vec<(usize, usize)> {
    if n == 2 {
        return vec![(0, 1)];
    }
    let prufer: Vec<usize> = (0..n - 2).map(|_| rng.index(n)).collect();
    let mut degree = vec![1usize; n];
    for &p in &prufer {
        degree[p] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &p in &prufer {
        let leaf = (0..n).find(|&i| degree[i] == 1).expect("a leaf always exists");
        edges.push((leaf.min(p), leaf.max(p)));
        degree[leaf] -= 1;
        degree[p] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}
