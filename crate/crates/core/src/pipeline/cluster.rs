//! Proximity clustering (step three): connected components of the graph
//! linking candidate centroids closer than a distance threshold.

use super::CandidateDetection;

pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// One cluster: member candidate indices plus the graph edges among them
/// (distances kept as diagnostic weights; only connectivity matters).
#[derive(Debug, Clone)]
pub struct Cluster {
    pub members: Vec<usize>,
    pub edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

/// Clusters candidates whose centroids lie strictly closer than `max_dist_mm`
/// and discards connected components smaller than `min_size`.
pub fn cluster_candidates(
    candidates: &[CandidateDetection],
    max_dist_mm: f64,
    min_size: usize,
) -> ClusterSet {
    let centroids: Vec<(f64, f64)> = candidates.iter().map(|c| c.centroid_mm).collect();
    cluster_points(&centroids, max_dist_mm, min_size)
}

/// Point-level implementation shared with ground-truth cluster construction.
pub fn cluster_points(centroids: &[(f64, f64)], max_dist_mm: f64, min_size: usize) -> ClusterSet {
    let n = centroids.len();
    let mut uf = UnionFind::new(n);
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = (centroids[i].0 - centroids[j].0).hypot(centroids[i].1 - centroids[j].1);
            if d < max_dist_mm {
                edges.push((i, j, d));
                uf.union(i, j);
            }
        }
    }

    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = uf.find(i);
        groups.entry(root).or_default().push(i);
    }
    let mut clusters = Vec::new();
    // BTreeMap iteration keeps clusters ordered by their smallest member.
    for (_, members) in groups {
        if members.len() < min_size {
            continue;
        }
        let member_set: std::collections::BTreeSet<usize> = members.iter().copied().collect();
        let cluster_edges: Vec<(usize, usize, f64)> = edges
            .iter()
            .filter(|(a, b, _)| member_set.contains(a) && member_set.contains(b))
            .copied()
            .collect();
        clusters.push(Cluster { members, edges: cluster_edges });
    }
    ClusterSet { clusters }
}
