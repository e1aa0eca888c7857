//! Sign matrices and the directed graphs attached to square matrices.
//!
//! Edge convention: `(m, n)` is an edge exactly when entry `(n, m)` is
//! nonzero and `m != n`, i.e. columns are sources and rows are targets.
//! Every consumer goes through [`graph_of`] so the orientation is decided in
//! one place.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("the feedback edge needs a controlled species other than the actuated one")]
    EllEqualsOne,
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("sign matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

/// Element of `{0, +, -}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn of<T: Scalar>(x: &T) -> Sign {
        if x.is_zero() {
            Sign::Zero
        } else if x.is_positive() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn value<T: Scalar>(self) -> T {
        match self {
            Sign::Zero => T::zero(),
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }

    /// Sign of a sum, `None` when `+` meets `-`.
    pub fn add(self, other: Sign) -> Option<Sign> {
        match (self, other) {
            (Sign::Zero, s) | (s, Sign::Zero) => Some(s),
            (a, b) if a == b => Some(a),
            _ => None,
        }
    }

    pub fn mul(self, other: Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Plus,
            _ => Sign::Minus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Zero => '0',
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Square matrix over `{0, +, -}`.
pub type SignMatrix = Matrix<Sign>;

impl Matrix<Sign> {
    pub fn sign_pattern<T: Scalar>(m: &Matrix<T>) -> SignMatrix {
        m.map(Sign::of)
    }

    /// The representative `sgn(Σ)` with entries in `{-1, 0, 1}`.
    pub fn sgn<T: Scalar>(&self) -> Matrix<T> {
        self.map(|s| s.value())
    }

    /// Off-diagonal entries in `{0, +}`.
    pub fn is_metzler_pattern(&self) -> bool {
        (0..self.rows()).all(|i| (0..self.cols()).all(|j| i == j || self[(i, j)] != Sign::Minus))
    }

    pub fn has_negative_diagonal(&self) -> bool {
        (0..self.rows()).all(|i| self[(i, i)] == Sign::Minus)
    }

    /// Indices of diagonal entries that are not `-`.
    pub fn non_negative_diagonal(&self) -> Vec<usize> {
        (0..self.rows()).filter(|&i| self[(i, i)] != Sign::Minus).collect()
    }
}

/// Anything whose nonzero pattern defines a digraph.
pub trait Pattern {
    fn dim(&self) -> (usize, usize);
    fn is_nonzero(&self, row: usize, col: usize) -> bool;
}

impl<T: Scalar> Pattern for Matrix<T> {
    fn dim(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    fn is_nonzero(&self, row: usize, col: usize) -> bool {
        !self[(row, col)].is_zero()
    }
}

impl Pattern for Matrix<Sign> {
    fn dim(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    fn is_nonzero(&self, row: usize, col: usize) -> bool {
        self[(row, col)] != Sign::Zero
    }
}

/// Simple digraph on `0..n` without self-loops.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Self { n, edges: BTreeSet::new() }
    }

    /// Adds `from -> to`; self-loops are ignored.
    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<(), GraphError> {
        for v in [from, to] {
            if v >= self.n {
                return Err(GraphError::VertexOutOfRange { vertex: v, n: self.n });
            }
        }
        if from != to {
            self.edges.insert((from, to));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Out-neighbours in increasing order.
    pub fn successors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((v, 0)..(v + 1, 0)).map(|&(_, to)| to)
    }

    /// `Ok(order)` with a topological order, or `Err(cycle)` where the cycle
    /// is a vertex sequence whose first and last entries coincide.
    pub fn acyclicity(&self) -> Result<Vec<usize>, Vec<usize>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let mut mark = vec![Mark::White; self.n];
        let mut parent = vec![usize::MAX; self.n];
        let mut post = Vec::with_capacity(self.n);
        let adj: Vec<Vec<usize>> = (0..self.n).map(|v| self.successors(v).collect()).collect();

        for root in 0..self.n {
            if mark[root] != Mark::White {
                continue;
            }
            // (vertex, next successor position)
            let mut stack = vec![(root, 0usize)];
            mark[root] = Mark::Grey;
            while let Some(&mut (v, ref mut pos)) = stack.last_mut() {
                if let Some(&w) = adj[v].get(*pos) {
                    *pos += 1;
                    match mark[w] {
                        Mark::White => {
                            mark[w] = Mark::Grey;
                            parent[w] = v;
                            stack.push((w, 0));
                        }
                        Mark::Grey => {
                            // back edge v -> w closes a cycle w ... v w
                            let mut cycle = vec![v];
                            let mut u = v;
                            while u != w {
                                u = parent[u];
                                cycle.push(u);
                            }
                            cycle.reverse();
                            cycle.push(w);
                            return Err(cycle);
                        }
                        Mark::Black => {}
                    }
                } else {
                    mark[v] = Mark::Black;
                    post.push(v);
                    stack.pop();
                }
            }
        }
        post.reverse();
        Ok(post)
    }

    pub fn is_acyclic(&self) -> bool {
        self.acyclicity().is_ok()
    }

    /// Shortest path `from -> to` by breadth-first search; `[from]` when
    /// the endpoints coincide.
    pub fn shortest_path(&self, from: usize, to: usize) -> Result<Option<Vec<usize>>, GraphError> {
        for v in [from, to] {
            if v >= self.n {
                return Err(GraphError::VertexOutOfRange { vertex: v, n: self.n });
            }
        }
        if from == to {
            return Ok(Some(vec![from]));
        }
        let mut prev = vec![usize::MAX; self.n];
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(v) = queue.pop_front() {
            for w in self.successors(v) {
                if seen[w] {
                    continue;
                }
                seen[w] = true;
                prev[w] = v;
                if w == to {
                    let mut path = vec![to];
                    let mut u = to;
                    while u != from {
                        u = prev[u];
                        path.push(u);
                    }
                    path.reverse();
                    return Ok(Some(path));
                }
                queue.push_back(w);
            }
        }
        Ok(None)
    }

    /// Vertices reachable from `from`, including itself.
    pub fn reachable(&self, from: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(v) = stack.pop() {
            for w in self.successors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        (0..self.n).filter(|&v| seen[v]).collect()
    }
}

/// Digraph of a square matrix or sign matrix: edge `m -> n` iff entry
/// `(n, m)` is nonzero, `m != n`.
pub fn graph_of<P: Pattern>(m: &P) -> Digraph {
    let (rows, cols) = m.dim();
    debug_assert_eq!(rows, cols);
    let mut g = Digraph::new(rows);
    for target in 0..rows {
        for source in 0..cols {
            if source != target && m.is_nonzero(target, source) {
                g.edges.insert((source, target));
            }
        }
    }
    g
}

/// `S_C`: the sign matrix whose graph is that of `S_A` plus the edge
/// `ell -> 0` (entry `(0, ell)` set to `+`).
pub fn augment_with_feedback_edge(s_a: &SignMatrix, ell: usize) -> Result<SignMatrix, GraphError> {
    if !s_a.is_square() {
        return Err(GraphError::NotSquare { rows: s_a.rows(), cols: s_a.cols() });
    }
    if ell >= s_a.rows() {
        return Err(GraphError::VertexOutOfRange { vertex: ell, n: s_a.rows() });
    }
    if ell == 0 {
        return Err(GraphError::EllEqualsOne);
    }
    let mut s_c = s_a.clone();
    // sgn(sgn(S_A) + e_1 e_ell^T) on a Metzler pattern: 0 or + both become +
    s_c[(0, ell)] = Sign::Plus;
    Ok(s_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Sign::{Minus as M, Plus as P, Zero as Z};

    fn sm(rows: &[&[Sign]]) -> SignMatrix {
        Matrix::from_rows(rows)
    }

    #[test]
    fn edges_follow_column_to_row() {
        let s_a = sm(&[&[M, Z], &[P, M]]);
        let g = graph_of(&s_a);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        let s_c = sm(&[&[M, P], &[P, M]]);
        assert_eq!(graph_of(&s_c).edges().collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
        let diag = Matrix::from_rows(&[[-1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, -3.0]]);
        assert_eq!(graph_of(&diag).edge_count(), 0);
    }

    #[test]
    fn point_and_sign_graphs_coincide() {
        let a = Matrix::from_rows(&[[-1.0, 0.0, 0.3], [2.0, -3.0, 0.0], [0.0, 5.0, -1.0]]);
        assert_eq!(graph_of(&a), graph_of(&SignMatrix::sign_pattern(&a)));
    }

    #[test]
    fn acyclicity_examples() {
        let mut g = Digraph::new(2);
        g.add_edge(0, 1).unwrap();
        assert!(g.is_acyclic());
        g.add_edge(1, 0).unwrap();
        assert_eq!(g.acyclicity(), Err(vec![0, 1, 0]));
        assert!(Digraph::new(0).is_acyclic());
        assert!(Digraph::new(4).is_acyclic());
    }

    #[test]
    fn cycle_witness_is_a_real_cycle() {
        let mut g = Digraph::new(5);
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 1), (3, 4)] {
            g.add_edge(a, b).unwrap();
        }
        let cycle = g.acyclicity().unwrap_err();
        assert_eq!(cycle.first(), cycle.last());
        for w in cycle.windows(2) {
            assert!(g.has_edge(w[0], w[1]));
        }
    }

    #[test]
    fn path_examples() {
        let mut g = Digraph::new(2);
        g.add_edge(0, 1).unwrap();
        assert_eq!(g.shortest_path(0, 1).unwrap(), Some(vec![0, 1]));
        assert_eq!(g.shortest_path(1, 0).unwrap(), None);
        assert_eq!(g.shortest_path(1, 1).unwrap(), Some(vec![1]));
        assert!(g.shortest_path(0, 7).is_err());
    }

    #[test]
    fn feedback_augmentation() {
        let s_a = sm(&[&[M, Z], &[P, M]]);
        let s_c = augment_with_feedback_edge(&s_a, 1).unwrap();
        assert_eq!(s_c, sm(&[&[M, P], &[P, M]]));
        assert_eq!(augment_with_feedback_edge(&s_c, 1).unwrap(), s_c);
        assert_eq!(augment_with_feedback_edge(&s_a, 0), Err(GraphError::EllEqualsOne));
    }

    #[test]
    fn only_the_row_one_variant_reproduces_the_worked_example() {
        // adding the unit matrix with its 1 at (ell, 1) instead leaves S_A unchanged
        let s_a = sm(&[&[M, Z], &[P, M]]);
        let mut other = s_a.clone();
        other[(1, 0)] = other[(1, 0)].add(P).unwrap();
        assert_eq!(other, s_a);
        assert_ne!(other, sm(&[&[M, P], &[P, M]]));
    }

    #[test]
    fn sign_arithmetic() {
        assert_eq!(P.add(M), None);
        assert_eq!(Z.add(M), Some(M));
        assert_eq!(M.mul(M), P);
        assert_eq!(Sign::of(&-0.5), M);
        assert_eq!(M.value::<f64>(), -1.0);
    }
}
