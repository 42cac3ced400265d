//! Filtered simplicial complexes of dimension at most 2.

use crate::error::{Error, Result};
use std::collections::HashMap;

/// A simplex of dimension 0, 1 or 2 with a filtration value.
///
/// Vertices are stored sorted, so two simplices on the same vertex set
/// compare equal regardless of construction order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplex {
    verts: [usize; 3],
    dim: u8,
    pub value: f64,
}

impl Simplex {
    pub fn vertex(v: usize, value: f64) -> Self {
        Self {
            verts: [v, usize::MAX, usize::MAX],
            dim: 0,
            value,
        }
    }

    pub fn edge(u: usize, v: usize, value: f64) -> Self {
        debug_assert_ne!(u, v);
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        Self {
            verts: [a, b, usize::MAX],
            dim: 1,
            value,
        }
    }

    pub fn triangle(u: usize, v: usize, w: usize, value: f64) -> Self {
        let mut vs = [u, v, w];
        vs.sort_unstable();
        debug_assert!(vs[0] < vs[1] && vs[1] < vs[2]);
        Self {
            verts: vs,
            dim: 2,
            value,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn vertices(&self) -> &[usize] {
        &self.verts[..=self.dim as usize]
    }

    /// Key usable in hash maps: the padded sorted vertex tuple.
    fn key(&self) -> [usize; 3] {
        self.verts
    }

    /// The boundary faces (one dimension lower), sorted-vertex form.
    fn faces(&self) -> Vec<[usize; 3]> {
        match self.dim {
            0 => Vec::new(),
            1 => vec![
                [self.verts[0], usize::MAX, usize::MAX],
                [self.verts[1], usize::MAX, usize::MAX],
            ],
            _ => vec![
                [self.verts[0], self.verts[1], usize::MAX],
                [self.verts[0], self.verts[2], usize::MAX],
                [self.verts[1], self.verts[2], usize::MAX],
            ],
        }
    }
}

/// An ordered filtration: simplices sorted by (value, dimension, vertices),
/// which guarantees faces precede cofaces whenever values are monotone.
#[derive(Debug, Clone, Default)]
pub struct Filtration {
    pub simplices: Vec<Simplex>,
}

impl Filtration {
    /// Sort simplices into filtration order. Values must be finite.
    pub fn new(mut simplices: Vec<Simplex>) -> Result<Self> {
        for s in &simplices {
            if !s.value.is_finite() {
                return Err(Error::DegenerateInput("non-finite filtration value"));
            }
        }
        simplices.sort_by(|a, b| {
            a.value
                .partial_cmp(&b.value)
                .unwrap()
                .then(a.dim.cmp(&b.dim))
                .then(a.verts.cmp(&b.verts))
        });
        Ok(Self { simplices })
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Boundary columns (indices of faces) in filtration order.
    ///
    /// Fails with [`Error::NonMonotoneFiltration`] if some face is missing or
    /// appears after (or with a greater value than) one of its cofaces.
    pub fn boundary_columns(&self) -> Result<Vec<(u8, Vec<usize>)>> {
        let mut index: HashMap<[usize; 3], usize> = HashMap::with_capacity(self.len());
        for (i, s) in self.simplices.iter().enumerate() {
            index.insert(s.key(), i);
        }
        let mut columns = Vec::with_capacity(self.len());
        for (i, s) in self.simplices.iter().enumerate() {
            let mut col = Vec::with_capacity(3);
            for face in s.faces() {
                let &j = index.get(&face).ok_or(Error::NonMonotoneFiltration {
                    child: i,
                    child_value: s.value,
                    face_value: f64::NAN,
                })?;
                if j >= i || self.simplices[j].value > s.value {
                    return Err(Error::NonMonotoneFiltration {
                        child: i,
                        child_value: s.value,
                        face_value: self.simplices[j].value,
                    });
                }
                col.push(j);
            }
            col.sort_unstable();
            columns.push((s.dim, col));
        }
        Ok(columns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorts_value_then_dim_then_vertices() {
        let f = Filtration::new(vec![
            Simplex::triangle(0, 1, 2, 1.0),
            Simplex::edge(1, 2, 1.0),
            Simplex::edge(0, 1, 0.5),
            Simplex::vertex(2, 0.0),
            Simplex::vertex(0, 0.0),
            Simplex::vertex(1, 0.0),
            Simplex::edge(0, 2, 1.0),
        ])
        .unwrap();
        let dims: Vec<usize> = f.simplices.iter().map(|s| s.dim()).collect();
        assert_eq!(dims, vec![0, 0, 0, 1, 1, 1, 2]);
        // At equal value 1.0, edges precede the triangle.
        assert_eq!(f.simplices[6].dim(), 2);
        assert!(f.boundary_columns().is_ok());
    }

    #[test]
    fn rejects_non_monotone() {
        let f = Filtration::new(vec![
            Simplex::vertex(0, 0.0),
            Simplex::vertex(1, 2.0),
            Simplex::edge(0, 1, 1.0), // below the value of vertex 1
        ])
        .unwrap();
        assert!(matches!(
            f.boundary_columns(),
            Err(Error::NonMonotoneFiltration { .. })
        ));
    }

    #[test]
    fn rejects_missing_face() {
        let f = Filtration::new(vec![
            Simplex::vertex(0, 0.0),
            Simplex::edge(0, 1, 1.0), // vertex 1 never enters
        ])
        .unwrap();
        assert!(f.boundary_columns().is_err());
    }
}
