use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{herm_eig, random_matrix, ComplexMatrix, EIG_TOL};

/// Completeness tolerance on `Σ M†M = I`, max-entry.
pub const POVM_TOL: f64 = 1e-8;

/// JSON form of a measurement: `"computational"`, `{"groups": [[..]]}` or `{"ops": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PovmSpec {
    Named(NamedPovm),
    Groups { groups: Vec<Vec<usize>> },
    Ops { ops: Vec<ComplexMatrix> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedPovm {
    Computational,
}

impl Default for PovmSpec {
    fn default() -> Self {
        PovmSpec::Named(NamedPovm::Computational)
    }
}

impl PovmSpec {
    pub fn build(&self, dim: usize) -> Result<Povm> {
        match self {
            PovmSpec::Named(NamedPovm::Computational) => Ok(Povm::computational(dim)),
            PovmSpec::Groups { groups } => Povm::grouped(dim, groups),
            PovmSpec::Ops { ops } => Povm::new(ops.clone(), None),
        }
    }

    /// Contiguous coarse-graining of `dim` basis states into `classes` groups.
    pub fn contiguous(dim: usize, classes: usize) -> Self {
        PovmSpec::Groups {
            groups: contiguous_groups(dim, classes),
        }
    }
}

/// Splits `0..dim` into `classes` contiguous runs whose sizes differ by at most one.
pub fn contiguous_groups(dim: usize, classes: usize) -> Vec<Vec<usize>> {
    let classes = classes.clamp(1, dim.max(1));
    let base = dim / classes;
    let extra = dim % classes;
    let mut start = 0;
    (0..classes)
        .map(|c| {
            let len = base + usize::from(c < extra);
            let g: Vec<usize> = (start..start + len).collect();
            start += len;
            g
        })
        .collect()
}

/// Measurement operators `{M_i}` with `Σ M_i† M_i = I`.
#[derive(Debug, Clone)]
pub struct Povm {
    ops: Vec<ComplexMatrix>,
    labels: Vec<String>,
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(ops: Vec<ComplexMatrix>, labels: Option<Vec<String>>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidPovm("no measurement operators".into()))?;
        let dim = first.rows();
        if ops.iter().any(|m| m.rows() != dim || m.cols() != dim) {
            return Err(Error::InvalidPovm("operators must share one square shape".into()));
        }
        let labels = labels.unwrap_or_else(|| (0..ops.len()).map(|i| i.to_string()).collect());
        if labels.len() != ops.len() {
            return Err(Error::InvalidPovm("one label per operator".into()));
        }
        let effects: Vec<ComplexMatrix> = ops.iter().map(|m| &m.adjoint() * m).collect();
        let mut total = ComplexMatrix::zeros(dim, dim);
        for e in &effects {
            total = &total + e;
        }
        let defect = (&total - &ComplexMatrix::identity(dim)).max_abs();
        if defect > POVM_TOL {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {defect:.3e}"
            )));
        }
        Ok(Self {
            ops,
            labels,
            effects,
        })
    }

    /// Projectors onto every computational basis state.
    pub fn computational(dim: usize) -> Self {
        let groups: Vec<Vec<usize>> = (0..dim).map(|i| vec![i]).collect();
        Self::grouped(dim, &groups).expect("singleton groups always partition the basis")
    }

    /// Sums of computational projectors over each group of basis indices.
    pub fn grouped(dim: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let mut seen = vec![false; dim];
        for &k in groups.iter().flatten() {
            if k >= dim {
                return Err(Error::InvalidPovm(format!("basis index {k} out of range {dim}")));
            }
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidPovm(format!("basis index {k} in two groups")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidPovm("groups do not cover every basis state".into()));
        }
        let ops = groups
            .iter()
            .map(|g| {
                let mut p = ComplexMatrix::zeros(dim, dim);
                for &k in g {
                    p[(k, k)] = Complex64::new(1.0, 0.0);
                }
                p
            })
            .collect();
        let labels = groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|k| format!("{k:0w$b}", w = dim.trailing_zeros() as usize))
                    .collect::<Vec<_>>()
                    .join("|")
            })
            .collect();
        Self::new(ops, Some(labels))
    }

    /// Random non-projective POVM: `M_i = G_i S^{-1/2}` with `S = Σ G_i† G_i`.
    pub fn random(dim: usize, outcomes: usize, seed: u64) -> Self {
        let gs: Vec<ComplexMatrix> = (0..outcomes)
            .map(|i| random_matrix(dim, dim, seed.wrapping_mul(7919).wrapping_add(i as u64)))
            .collect();
        let mut s = ComplexMatrix::zeros(dim, dim);
        for g in &gs {
            s = &s + &(&g.adjoint() * g);
        }
        let inv_sqrt = herm_eig(&s.hermitian_part(), EIG_TOL)
            .expect("Gram sums are Hermitian")
            .reconstruct_with(|l| 1.0 / l.sqrt());
        let ops = gs.iter().map(|g| g * &inv_sqrt).collect();
        Self::new(ops, None).expect("normalized random POVM is complete")
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    /// `M_i† M_i` for each outcome.
    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].rows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contiguous_grouping() {
        assert_eq!(contiguous_groups(8, 3), vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7]]);
        assert_eq!(contiguous_groups(4, 4), vec![vec![0], vec![1], vec![2], vec![3]]);
        assert_eq!(contiguous_groups(2, 1), vec![vec![0, 1]]);
    }

    #[test]
    fn rejects_incomplete_measurements() {
        let half = ComplexMatrix::identity(2).scale(0.5);
        assert!(matches!(Povm::new(vec![half], None), Err(Error::InvalidPovm(_))));
        assert!(Povm::grouped(4, &[vec![0, 1], vec![2]]).is_err());
        assert!(Povm::grouped(4, &[vec![0, 1], vec![1, 2, 3]]).is_err());
        assert!(Povm::grouped(2, &[vec![0, 1, 2]]).is_err());
        assert!(Povm::new(vec![], None).is_err());
    }

    #[test]
    fn random_povm_is_complete() {
        for seed in 0..10 {
            let p = Povm::random(4, 3, seed);
            assert_eq!(p.len(), 3);
        }
    }

    #[test]
    fn spec_json_forms() {
        let c: PovmSpec = serde_json::from_str("\"computational\"").unwrap();
        assert_eq!(c, PovmSpec::default());
        let g: PovmSpec = serde_json::from_str(r#"{"groups": [[0,1],[2,3]]}"#).unwrap();
        assert_eq!(g.build(4).unwrap().len(), 2);
        let o: PovmSpec =
            serde_json::from_str(r#"{"ops": [[[[1,0],[0,0]],[[0,0],[1,0]]]]}"#).unwrap();
        assert_eq!(o.build(2).unwrap().len(), 1);
    }
}
