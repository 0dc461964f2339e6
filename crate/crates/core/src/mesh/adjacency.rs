use super::TriMesh;

/// Vertex-to-vertex adjacency in compressed row form; each neighbour list is sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Adjacency {
    pub fn new(mesh: &TriMesh) -> Self {
        let n = mesh.vertex_count();
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &[a, b, c] in mesh.triangles() {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                lists[u as usize].push(v);
                lists[v as usize].push(u);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut list in lists {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(&list);
            offsets.push(neighbors.len());
        }
        Self { offsets, neighbors }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Each undirected edge once, as `(low, high)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.vertex_count()).flat_map(move |a| {
            self.neighbors(a)
                .iter()
                .map(|&b| b as usize)
                .filter(move |&b| b > a)
                .map(move |b| (a, b))
        })
    }
}
