//! Common component of a state-output pair: deterministic maps c1, c2 onto
//! the connected components of the support graph of P(S,Y).

use crate::error::{Error, Result};
use crate::prob::{Alphabet, JointDist};
use serde::Serialize;

/// Probability below which a support cell is treated as an artifact of float
/// noise rather than a graph edge.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Deterministic maps `c1: S -> K` and `c2: Y -> K` with shared codomain `K`.
#[derive(Debug, Clone, Serialize)]
pub struct CommonPart {
    /// Component index per state symbol.
    pub c1: Vec<usize>,
    /// Component index per output symbol.
    pub c2: Vec<usize>,
    pub k: Alphabet,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb.max(ra)] = rb.min(ra);
        }
    }
}

/// Extracts the common component of a two-variable joint distribution.
///
/// The bipartite graph has an edge (s, y) wherever P(s,y) exceeds
/// [`SUPPORT_THRESHOLD`]. `K` collects the connected components that carry
/// probability, ordered by their smallest state-symbol index. Symbols with
/// zero marginal probability are mapped to component 0.
pub fn extract_common_part(p_sy: &JointDist) -> Result<CommonPart> {
    if p_sy.num_vars() != 2 {
        return Err(Error::InvalidConfig(format!(
            "expected a two-variable state-output distribution, got {} variables",
            p_sy.num_vars()
        )));
    }
    let s_size = p_sy.dims()[0];
    let y_size = p_sy.dims()[1];
    let mut uf = UnionFind::new(s_size + y_size);
    let mut touched = vec![false; s_size + y_size];
    for s in 0..s_size {
        for y in 0..y_size {
            if p_sy.prob_at(&[s, y]) > SUPPORT_THRESHOLD {
                uf.union(s, s_size + y);
                touched[s] = true;
                touched[s_size + y] = true;
            }
        }
    }

    // Components ordered by smallest member state index; every component
    // with probability mass contains at least one state symbol.
    let mut component_of_root: Vec<(usize, usize)> = Vec::new(); // (root, k index)
    let mut c1 = vec![0usize; s_size];
    let mut c2 = vec![0usize; y_size];
    for s in 0..s_size {
        if !touched[s] {
            continue;
        }
        let root = uf.find(s);
        let k = match component_of_root.iter().find(|(r, _)| *r == root) {
            Some(&(_, k)) => k,
            None => {
                let k = component_of_root.len();
                component_of_root.push((root, k));
                k
            }
        };
        c1[s] = k;
    }
    for y in 0..y_size {
        if !touched[s_size + y] {
            continue;
        }
        let root = uf.find(s_size + y);
        if let Some(&(_, k)) = component_of_root.iter().find(|(r, _)| *r == root) {
            c2[y] = k;
        }
    }
    let count = component_of_root.len().max(1);
    Ok(CommonPart {
        c1,
        c2,
        k: Alphabet::indexed("K", count),
    })
}

/// True iff the support graph of `p_sy` splits into two or more components.
pub fn is_decomposable(p_sy: &JointDist) -> Result<bool> {
    Ok(extract_common_part(p_sy)?.k.size() >= 2)
}
