//! Convex feasible sets, used as indicator functions whose proximal operator
//! is the Euclidean projection.

use ndarray::{s, Array1, ArrayView1, Zip};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Free,
    Simplex,
    HalfspacePair,
    NonnegBall,
}

/// The slab `{ v : |normal^T v_block| <= bound }` acting on the block of
/// coordinates starting at `offset`; other coordinates are unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfspacePair {
    normal: Array1<f64>,
    bound: f64,
    offset: usize,
    normal_sq: f64,
}

impl HalfspacePair {
    pub fn new(normal: Array1<f64>, bound: f64) -> Result<Self> {
        HalfspacePair::with_offset(normal, bound, 0)
    }

    pub fn with_offset(normal: Array1<f64>, bound: f64, offset: usize) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return invalid(format!("halfspace bound must be positive, got {bound}"));
        }
        let normal_sq = normal.dot(&normal);
        if normal_sq <= 0.0 || !normal_sq.is_finite() {
            return invalid("halfspace normal must be non-zero and finite");
        }
        Ok(HalfspacePair { normal, bound, offset, normal_sq })
    }

    pub fn normal(&self) -> ArrayView1<'_, f64> {
        self.normal.view()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    fn block_end(&self) -> usize {
        self.offset + self.normal.len()
    }

    fn activity(&self, w: ArrayView1<f64>) -> f64 {
        self.normal.dot(&w.slice(s![self.offset..self.block_end()]))
    }
}

/// Feasible region `C` of the indicator `h = delta_C`.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// No constraint, `h = 0`.
    Free,
    /// Probability simplex `{ w >= 0, sum w = 1 }`. With `augmented`, the set
    /// is `{ w >= 0, sum w <= 1 }`: the simplex over `w` plus an implicit
    /// slack coordinate `1 - sum w`.
    Simplex {
        augmented: bool,
    },
    HalfspacePair(HalfspacePair),
    /// `{ w >= 0, ||w||_2 <= 1 }`.
    NonnegBall,
}

impl Constraint {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            Constraint::Free => ConstraintKind::Free,
            Constraint::Simplex { .. } => ConstraintKind::Simplex,
            Constraint::HalfspacePair(_) => ConstraintKind::HalfspacePair,
            Constraint::NonnegBall => ConstraintKind::NonnegBall,
        }
    }

    /// Whether vectors of dimension `dim` are valid inputs.
    pub fn accepts_dim(&self, dim: usize) -> bool {
        match self {
            Constraint::HalfspacePair(hp) => hp.block_end() <= dim,
            Constraint::Simplex { augmented: false } => dim >= 1,
            _ => true,
        }
    }

    fn check(&self, w: ArrayView1<f64>) -> Result<()> {
        if self.accepts_dim(w.len()) {
            Ok(())
        } else {
            let expected = match self {
                Constraint::HalfspacePair(hp) => hp.block_end(),
                _ => 1,
            };
            Err(Error::DimensionMismatch { expected, got: w.len() })
        }
    }

    /// Euclidean projection onto the feasible set.
    pub fn project(&self, w: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check(w)?;
        Ok(match self {
            Constraint::Free => w.to_owned(),
            Constraint::Simplex { augmented } => {
                if *augmented {
                    let clipped = w.mapv(|x| x.max(0.0));
                    if clipped.sum() <= 1.0 {
                        clipped
                    } else {
                        project_simplex(w)
                    }
                } else {
                    project_simplex(w)
                }
            }
            Constraint::HalfspacePair(hp) => {
                let t = hp.activity(w);
                let mut out = w.to_owned();
                let shift = if t > hp.bound {
                    (t - hp.bound) / hp.normal_sq
                } else if -t > hp.bound {
                    (t + hp.bound) / hp.normal_sq
                } else {
                    return Ok(out);
                };
                out.slice_mut(s![hp.offset..hp.block_end()]).scaled_add(-shift, &hp.normal);
                out
            }
            Constraint::NonnegBall => {
                let mut out = w.mapv(|x| x.max(0.0));
                let norm = out.dot(&out).sqrt();
                if norm > 1.0 {
                    out /= norm;
                }
                out
            }
        })
    }

    /// True iff no defining inequality is violated by more than `tol`.
    pub fn is_feasible(&self, w: ArrayView1<f64>, tol: f64) -> bool {
        if !self.accepts_dim(w.len()) {
            return false;
        }
        let nonneg = || w.iter().all(|&x| x >= -tol);
        match self {
            Constraint::Free => true,
            Constraint::Simplex { augmented: false } => nonneg() && (w.sum() - 1.0).abs() <= tol,
            Constraint::Simplex { augmented: true } => nonneg() && w.sum() <= 1.0 + tol,
            Constraint::HalfspacePair(hp) => hp.activity(w).abs() <= hp.bound + tol,
            Constraint::NonnegBall => nonneg() && w.dot(&w).sqrt() <= 1.0 + tol,
        }
    }

    /// Default starting point: the projection of the origin.
    pub fn feasible_origin(&self, dim: usize) -> Result<Array1<f64>> {
        self.project(Array1::zeros(dim).view())
    }
}

/// Sort-and-threshold projection onto `{ x >= 0, sum x = 1 }`.
fn project_simplex(v: ArrayView1<f64>) -> Array1<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    let mut out = Array1::zeros(v.len());
    Zip::from(&mut out).and(&v).for_each(|o, &x| *o = (x - tau).max(0.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn nonneg_ball_examples() {
        let c = Constraint::NonnegBall;
        assert_eq!(c.project(array![-1.0, -1.0].view()).unwrap(), array![0.0, 0.0]);
        let p = c.project(array![3.0, 4.0].view()).unwrap();
        assert_relative_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.8, epsilon = 1e-15);
        assert!(!c.is_feasible(array![0.8, 0.8].view(), 0.0));
        assert!(c.is_feasible(array![0.6, 0.8].view(), 1e-15));
    }

    #[test]
    fn simplex_examples() {
        let c = Constraint::Simplex { augmented: false };
        assert_eq!(c.project(array![2.0, 0.0].view()).unwrap(), array![1.0, 0.0]);
        assert!(c.is_feasible(array![0.5, 0.5].view(), 0.0));
        assert!(!c.is_feasible(array![0.2, 0.2].view(), 0.0));
        let p = c.project(array![0.2, 0.2].view()).unwrap();
        assert_relative_eq!(p, array![0.5, 0.5], epsilon = 1e-15);

        let capped = Constraint::Simplex { augmented: true };
        assert!(capped.is_feasible(array![0.2, 0.2].view(), 0.0));
        assert_eq!(capped.project(array![0.2, -0.3].view()).unwrap(), array![0.2, 0.0]);
        assert_eq!(capped.project(array![2.0, 0.0].view()).unwrap(), array![1.0, 0.0]);
        assert!(c.project(Array1::zeros(0).view()).is_err());
    }

    #[test]
    fn halfspace_pair_examples() {
        let c = Constraint::HalfspacePair(HalfspacePair::new(array![1.0, 0.0], 1.0).unwrap());
        assert_eq!(c.project(array![2.0, 0.0].view()).unwrap(), array![1.0, 0.0]);
        assert_eq!(c.project(array![-3.0, 2.0].view()).unwrap(), array![-1.0, 2.0]);
        assert_eq!(c.project(array![0.5, 9.0].view()).unwrap(), array![0.5, 9.0]);
        assert!(c.is_feasible(array![1.0, 5.0].view(), 0.0));
        assert!(!c.is_feasible(array![1.1, 5.0].view(), 0.0));
    }

    #[test]
    fn halfspace_pair_matches_constrained_least_squares() {
        // closed form against a 1-D search over the scalar multiplier along
        // the normal: the nearest point is v - t * normal for some t
        let normal = array![1.0, -2.0, 0.5];
        let c = HalfspacePair::new(normal.clone(), 0.7).unwrap();
        let v = array![3.0, -1.0, 2.0];
        let p = Constraint::HalfspacePair(c).project(v.view()).unwrap();
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=2_000_000 {
            let t = -2.0 + 4.0 * i as f64 / 2_000_000.0;
            let u = &v - &(&normal * t);
            if normal.dot(&u).abs() <= 0.7 + 1e-12 {
                let d = (&u - &v).mapv(|x| x * x).sum();
                if d < best.0 {
                    best = (d, t);
                }
            }
        }
        let expected = &v - &(&normal * best.1);
        assert_relative_eq!(p, expected, epsilon = 1e-5);
    }

    #[test]
    fn halfspace_pair_on_a_block() {
        let hp = HalfspacePair::with_offset(array![1.0, 1.0], 1.0, 1).unwrap();
        let c = Constraint::HalfspacePair(hp);
        assert!(!c.accepts_dim(2));
        assert!(c.project(array![1.0, 1.0].view()).is_err());
        let p = c.project(array![5.0, 1.0, 1.0, 5.0].view()).unwrap();
        assert_relative_eq!(p, array![5.0, 0.5, 0.5, 5.0], epsilon = 1e-15);
    }

    #[test]
    fn halfspace_pair_validation() {
        assert!(HalfspacePair::new(array![0.0, 0.0], 1.0).is_err());
        assert!(HalfspacePair::new(array![1.0, 0.0], 0.0).is_err());
        assert!(HalfspacePair::new(array![1.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn free_is_identity() {
        let w = array![1.0, -2.0, 3.5];
        assert_eq!(Constraint::Free.project(w.view()).unwrap(), w);
        assert!(Constraint::Free.is_feasible(w.view(), 0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn constraint() -> impl Strategy<Value = Constraint> {
            prop_oneof![
                Just(Constraint::Free),
                Just(Constraint::Simplex { augmented: false }),
                Just(Constraint::Simplex { augmented: true }),
                Just(Constraint::NonnegBall),
                (proptest::collection::vec(-3.0f64..3.0, 4), 0.1f64..3.0)
                    .prop_filter("non-zero normal", |(n, _)| n.iter().any(|x| x.abs() > 1e-3))
                    .prop_map(|(n, c)| Constraint::HalfspacePair(HalfspacePair::new(Array1::from(n), c).unwrap())),
            ]
        }

        proptest! {
            #[test]
            fn projection_is_feasible_idempotent_nonexpansive(
                c in constraint(),
                u in proptest::collection::vec(-10.0f64..10.0, 4),
                v in proptest::collection::vec(-10.0f64..10.0, 4),
            ) {
                let (u, v) = (Array1::from(u), Array1::from(v));
                let pu = c.project(u.view()).unwrap();
                let pv = c.project(v.view()).unwrap();
                prop_assert!(c.is_feasible(pu.view(), 1e-10));
                let ppu = c.project(pu.view()).unwrap();
                prop_assert!((&ppu - &pu).iter().all(|x| x.abs() <= 1e-12));
                let dp = (&pu - &pv).mapv(|x| x * x).sum().sqrt();
                let d = (&u - &v).mapv(|x| x * x).sum().sqrt();
                prop_assert!(dp <= d * (1.0 + 1e-12) + 1e-12);
            }
        }
    }
}
